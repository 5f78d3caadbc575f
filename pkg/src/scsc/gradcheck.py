"""Randomized full-block gradient batteries.

Draws block configurations across the supported design space (branch
count, gate groups, kernel sizes, stride), then finite-difference-checks
every parameter tensor plus the input through the recorded forward.  Small
shapes keep the central-difference probes cheap; float64 throughout.
"""

from __future__ import annotations

import numpy as np

from .block import ScscConfig, ScscParams, init_scsc_params, round_to_multiple, scsc_block_forward
from .tape import GradCheckReport, grad_check

ODD_KERNELS = (3, 5, 7, 9, 11, 13)


def random_block_config(rng: np.random.Generator) -> ScscConfig:
    m = int(rng.integers(1, 4))
    g = int(rng.choice([1, 2, 4]))
    kernels = tuple(int(k) for k in rng.choice(ODD_KERNELS, size=m, replace=False))
    c_in = int(rng.integers(2, 7))
    c_out = int(rng.integers(2, 7))
    stride = int(rng.choice([1, 2]))
    hidden = round_to_multiple(float(rng.integers(2, 9)), g)
    return ScscConfig(c_in=c_in, c_out=c_out, kernels=kernels, hidden=hidden, g=g, stride=stride)


def block_case(cfg: ScscConfig, rng: np.random.Generator, n: int = 1, hw: int = 7):
    """Parameter dict (block tensors plus the input) and the scalar loss fn."""
    p = init_scsc_params(cfg, rng)
    params = dict(p.named(cfg))
    # start from non-degenerate weights: zero biases would hide bias gradients
    for k in params:
        params[k] = params[k] + 0.05 * rng.normal(size=params[k].shape)
    params["input"] = rng.normal(size=(n, cfg.c_in, hw, hw))

    def f(ops, prm):
        pp = ScscParams.from_mapping(cfg, prm)
        y = scsc_block_forward(prm["input"], pp, cfg, ops)
        return ops.sum_all(ops.mul(y, y))

    return params, f


def block_gradient_cases(
    seed: int = 0, count: int = 3, h: float = 1e-5, tol: float = 1e-4
) -> list[tuple[str, ScscConfig, GradCheckReport]]:
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        cfg = random_block_config(rng)
        params, f = block_case(cfg, rng)
        rep = grad_check(f, params, h=h, tol=tol)
        name = (
            f"case{i}: m={cfg.m} g={cfg.g} kernels={list(cfg.kernels)} "
            f"stride={cfg.stride} c={cfg.c_in}->{cfg.c_out} hidden={cfg.hidden}"
        )
        out.append((name, cfg, rep))
    return out
