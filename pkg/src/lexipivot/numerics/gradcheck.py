"""Central finite-difference verification of the analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import DeterminismError
from .params import ParamStore
from .tensor import Tensor

# Relative error denominator floor: keeps near-zero analytic/numeric pairs
# from amplifying finite-difference round-off into spurious failures.
REL_FLOOR = 1e-5


@dataclass
class GradCheckReport:
    eps: float
    tol: float
    per_param: dict[str, float] = field(default_factory=dict)

    @property
    def max_rel_err(self) -> float:
        return max(self.per_param.values()) if self.per_param else 0.0

    @property
    def failures(self) -> list[str]:
        return [n for n, e in sorted(self.per_param.items()) if e > self.tol]

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        status = "OK" if self.passed else f"FAIL ({len(self.failures)} params)"
        return f"grad check {status}: max rel err {self.max_rel_err:.3e} (tol {self.tol:.1e})"


def grad_check(closure: Callable[[ParamStore], Tensor], params: ParamStore,
               eps: float = 1e-5, tol: float = 1e-4) -> GradCheckReport:
    """Compare closure's analytic gradients against central differences.

    The closure must rebuild the loss from the live parameter tensors on
    every call and be deterministic; the baseline is evaluated twice to
    detect hidden randomness. Runs at the parameters' stored precision
    (use float64 stores; single precision is unreliable here).
    """
    base = float(closure(params).item())
    again = float(closure(params).item())
    if base != again:
        raise DeterminismError(
            f"closure is not deterministic: {base!r} != {again!r}")

    params.zero_grads()
    loss = closure(params)
    loss.backward()
    analytic = {name: (np.zeros_like(p.data) if p.grad is None else p.grad.copy())
                for name, p in params.items()}
    params.zero_grads()

    report = GradCheckReport(eps=eps, tol=tol)
    for name, p in params.items():
        flat = p.data.reshape(-1)
        worst = 0.0
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = float(closure(params).item())
            flat[i] = orig - eps
            f_minus = float(closure(params).item())
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * eps)
            a = float(analytic[name].reshape(-1)[i])
            denom = max(abs(a), abs(numeric), REL_FLOOR)
            worst = max(worst, abs(a - numeric) / denom)
        report.per_param[name] = worst
    params.zero_grads()
    return report
