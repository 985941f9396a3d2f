from dataclasses import dataclass, field

from apps.geometry.models import ElementCategory

# подписи категорий в отчётах: AP_Lane, AP_Stop, AP_Cross
CATEGORY_LABELS = {
    ElementCategory.LANE_DIVIDER: "Lane",
    ElementCategory.STOP_LINE: "Stop",
    ElementCategory.CROSSWALK: "Cross",
}


@dataclass
class CategoryResult:
    category: ElementCategory
    ap_by_threshold: dict[float, float]
    n_gt: int = 0
    n_predictions: int = 0
    true_positives: dict[float, int] = field(default_factory=dict)
    # пустой эталон и пустые предсказания: AP = 1, в среднее не входит
    absent: bool = False

    @property
    def ap(self) -> float:
        return sum(self.ap_by_threshold.values()) / len(self.ap_by_threshold)

    @property
    def label(self) -> str:
        return CATEGORY_LABELS[self.category]


@dataclass
class EvalReport:
    thresholds: tuple[float, ...]
    categories: dict[ElementCategory, CategoryResult]

    @property
    def excluded(self) -> list[str]:
        return [r.label for r in self.categories.values() if r.absent]

    @property
    def mAP(self) -> float:  # noqa: N802
        """Среднее AP по категориям; категории без эталона и предсказаний не учитываются."""
        counted = [r.ap for r in self.categories.values() if not r.absent]
        if not counted:
            return 1.0
        return sum(counted) / len(counted)

    def ap(self, category: ElementCategory) -> float:
        return self.categories[category].ap

    @property
    def ap_lane(self) -> float:
        return self.ap(ElementCategory.LANE_DIVIDER)

    @property
    def ap_stop(self) -> float:
        return self.ap(ElementCategory.STOP_LINE)

    @property
    def ap_cross(self) -> float:
        return self.ap(ElementCategory.CROSSWALK)
