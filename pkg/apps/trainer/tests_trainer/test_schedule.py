import numpy as np
import pytest
import torch
from hypothesis import given, settings, strategies as st

from apps.fusion.services import build_model
from apps.trainer.models import ADAM_BETAS, ADAM_EPS
from apps.trainer.services import build_optimizer, clip_gradients, learning_rate_at, parameter_groups
from apps.trainer.tasks import batch_indices


def test_cosine_schedule(train_config):
    config = train_config(learning_rate=2e-4, total_steps=100)
    assert learning_rate_at(0, config) == pytest.approx(2e-4)
    assert learning_rate_at(50, config) == pytest.approx(1e-4)
    assert learning_rate_at(100, config) == pytest.approx(0.0, abs=1e-18)
    values = [learning_rate_at(s, config) for s in range(101)]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_zero_steps_keeps_base_rate(train_config):
    assert learning_rate_at(0, train_config(total_steps=0)) == 1e-3


def test_parameter_groups_split_by_rank(tiny_model_config):
    model = build_model(tiny_model_config, seed=0)
    decay, no_decay = parameter_groups(model, 0.01)
    assert decay["weight_decay"] == 0.01 and no_decay["weight_decay"] == 0.0
    assert all(p.ndim >= 2 for p in decay["params"])
    assert all(p.ndim < 2 for p in no_decay["params"])
    assert len(decay["params"]) + len(no_decay["params"]) == len(list(model.parameters()))


def test_optimizer_hyperparameters(tiny_model_config, train_config):
    optimizer = build_optimizer(build_model(tiny_model_config, seed=0), train_config())
    for group in optimizer.param_groups:
        assert group["betas"] == ADAM_BETAS
        assert group["eps"] == ADAM_EPS


def test_decoupled_decay_with_zero_gradients(tiny_model_config, train_config):
    """Нулевые градиенты: шаг AdamW сводится к p ← p·(1 − lr·wd) только для весов ndim ≥ 2."""
    config = train_config(learning_rate=1e-2, weight_decay=0.1)
    model = build_model(tiny_model_config, seed=0).double()
    before = {name: p.detach().clone() for name, p in model.named_parameters()}
    optimizer = build_optimizer(model, config)
    for p in model.parameters():
        p.grad = torch.zeros_like(p)
    optimizer.step()
    factor = 1.0 - 1e-2 * 0.1
    for name, p in model.named_parameters():
        expected = before[name] * factor if p.ndim >= 2 else before[name]
        assert torch.allclose(p.detach(), expected, rtol=1e-14, atol=0.0), name


def test_batches_cover_epoch_once():
    n, bs, seed = 7, 3, 5
    seen = np.concatenate([batch_indices(step, n, bs, seed) for step in range(3)])
    assert sorted(seen.tolist()) == list(range(n))
    assert len(batch_indices(2, n, bs, seed)) == 1
    assert np.array_equal(batch_indices(4, n, bs, seed), batch_indices(4, n, bs, seed))
    assert not np.array_equal(
        np.concatenate([batch_indices(s, n, bs, seed) for s in range(3)]),
        np.concatenate([batch_indices(s, n, bs, seed) for s in range(3, 6)]),
    )


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), scale=st.floats(1e-3, 1e3), max_norm=st.floats(1e-2, 10.0))
def test_global_norm_after_clip_is_bounded(seed, scale, max_norm):
    generator = torch.Generator().manual_seed(seed)
    params = [torch.zeros(shape, dtype=torch.float64, requires_grad=True) for shape in [(3, 4), (4,), (2, 2, 2)]]
    for p in params:
        p.grad = torch.randn(p.shape, generator=generator, dtype=torch.float64) * scale
    before = float(torch.linalg.vector_norm(torch.cat([p.grad.flatten() for p in params])))
    reported = clip_gradients(params, max_norm)
    after = float(torch.linalg.vector_norm(torch.cat([p.grad.flatten() for p in params])))
    assert reported == pytest.approx(before)
    assert after <= max_norm
    if before <= max_norm:
        assert after == pytest.approx(before)
