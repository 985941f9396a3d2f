import torch
import torch.nn.functional as F

from apps.geometry.models import BACKGROUND

FOCAL_ALPHA = 0.25
FOCAL_GAMMA = 2.0


def focal_loss(logits: torch.Tensor, target: torch.Tensor,
               alpha: float = FOCAL_ALPHA, gamma: float = FOCAL_GAMMA) -> torch.Tensor:
    """
    FL = −α_t · (1 − p_t)^γ · log(p_t), p_t — softmax-вероятность целевого класса.
    α_t = alpha для объектов, 1 − alpha для фона. Без редукции: форма target.
    """
    target = torch.as_tensor(target, dtype=torch.long, device=logits.device)
    log_p = F.log_softmax(logits, dim=-1)
    log_pt = log_p.gather(-1, target.unsqueeze(-1)).squeeze(-1)
    pt = log_pt.exp()
    alpha_t = torch.where(target == BACKGROUND,
                          torch.full_like(pt, 1.0 - alpha), torch.full_like(pt, alpha))
    return -alpha_t * (1.0 - pt).pow(gamma) * log_pt
