"""Adam with bias-corrected first and second moments.

Update: t += 1; m <- b1 m + (1-b1) g; v <- b2 v + (1-b2) g^2;
theta <- theta - lr * m_hat / (sqrt(v_hat) + eps), eps added after the sqrt.
Parameters are updated in place so layer objects and the registry stay aliased.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericError


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_adam(params: dict[str, np.ndarray], lr: float = 0.001, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    return AdamState(
        m={k: np.zeros_like(p) for k, p in params.items()},
        v={k: np.zeros_like(p) for k, p in params.items()},
        lr=lr, beta1=beta1, beta2=beta2, eps=eps,
    )


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState) -> None:
    """One optimizer step over every registered parameter, in place."""
    if set(grads) != set(params):
        missing = set(params) ^ set(grads)
        raise ValueError(f"gradient registry does not match parameters: {sorted(missing)}")
    for name, g in grads.items():
        if g.shape != params[name].shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape "
                             f"{params[name].shape} for '{name}'")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for parameter '{name}' at step {state.t + 1}")
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for name, g in grads.items():
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        params[name] -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
