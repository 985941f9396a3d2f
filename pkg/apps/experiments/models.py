from dataclasses import dataclass, field


@dataclass
class ExperimentTable:
    """Таблица тренда: строки — варианты, значения — mAP, усреднённые по сидам."""
    title: str
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    seeds: tuple[int, ...] = ()

    def column(self, name: str) -> list:
        return [row[name] for row in self.rows]

    def row(self, key_column: str, value) -> dict:
        for row in self.rows:
            if row[key_column] == value:
                return row
        raise KeyError(value)

    def format(self) -> str:
        widths = {c: max(len(c), *(len(self._cell(r[c])) for r in self.rows)) if self.rows else len(c)
                  for c in self.columns}
        lines = [self.title, "seeds: " + ", ".join(str(s) for s in self.seeds)]
        lines.append("  ".join(c.ljust(widths[c]) for c in self.columns))
        lines.append("  ".join("-" * widths[c] for c in self.columns))
        for row in self.rows:
            lines.append("  ".join(self._cell(row[c]).ljust(widths[c]) for c in self.columns))
        return "\n".join(lines) + "\n"

    @staticmethod
    def _cell(value) -> str:
        if isinstance(value, float):
            return f"{value:.4f}"
        return str(value)
