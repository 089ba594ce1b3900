"""Adam with bias correction, operating on lists of numpy arrays."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class AdamState:
    m: List[np.ndarray]
    v: List[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params):
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], 0)


def adam_step(params, grads, state: AdamState, cfg: AdamConfig = AdamConfig()):
    """One Adam update.  Returns ``(new_params, new_state)``; inputs are untouched."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params, grads and moments must have matching lengths")
    t = state.t + 1
    b1, b2 = cfg.beta1, cfg.beta2
    corr1 = 1.0 - b1 ** t
    corr2 = 1.0 - b2 ** t
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if m.shape != g.shape:
            raise ValueError(f"moment shape {m.shape} does not match gradient {g.shape}")
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        new_p.append(p - cfg.lr * (m / corr1) / (np.sqrt(v / corr2) + cfg.eps))
        new_m.append(m)
        new_v.append(v)
    return new_p, AdamState(new_m, new_v, t)
