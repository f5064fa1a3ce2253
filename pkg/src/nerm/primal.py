"""Subgradient method for the neutral SVM primal."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .core import Dataset, DimensionError, Hyperparams, LinearModel, hinge

StepRule = Literal["constant", "sqrt", "inv", "polyak"]


@dataclass(frozen=True)
class SubgradConfig:
    """Step schedule and stopping rule for :func:`solve_primal`.

    ``step_constant=None`` means ``1/lam``. ``tol`` is the improvement of the
    best objective, relative to ``max(1, |best|)``, that resets the patience
    counter.
    """

    max_iters: int = 20_000
    step_rule: StepRule = "polyak"
    step_constant: float | None = None
    tol: float = 1e-9
    patience: int = 2000
    tie_alpha: float = 0.5

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.step_constant is not None and not self.step_constant > 0:
            raise ValueError("step_constant must be positive")
        if self.step_rule not in ("constant", "sqrt", "inv", "polyak"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")
        if not 0.0 <= self.tie_alpha <= 1.0:
            raise ValueError("tie_alpha must lie in [0, 1]")
        if self.tol < 0 or self.patience < 1:
            raise ValueError("tol must be >= 0 and patience >= 1")


@dataclass
class SolveReport:
    best_objective: float
    objective_trace: list[float] = field(default_factory=list)
    iterations: int = 0
    termination: str = "max_iters"
    converged: bool = False
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "best_objective": self.best_objective,
            "iterations": self.iterations,
            "termination": self.termination,
            "converged": self.converged,
            **self.extra,
        }


def _branch_weights(margins: np.ndarray, alpha: float) -> np.ndarray:
    # d/dm hinge(m) = -weight: 1 left of the knee, 0 right of it, alpha at it
    return np.where(margins < 1.0, 1.0, np.where(margins > 1.0, 0.0, alpha))


def _objective_and_subgradient(w, b, X, y, v, lam, eta, alpha):
    f = X @ w + b
    my = y * f
    mv = v * f
    cp = hinge(mv).sum()
    cm = hinge(-mv).sum()
    obj = hinge(my).sum() + 0.5 * lam * (w @ w) + eta * max(cp, cm)

    r = -_branch_weights(my, alpha) * y
    if eta > 0:
        if cp > cm:
            theta = 1.0
        elif cp < cm:
            theta = 0.0
        else:
            theta = alpha
        r = r + eta * v * (
            (1.0 - theta) * _branch_weights(-mv, alpha) - theta * _branch_weights(mv, alpha)
        )
    gw = X.T @ r + lam * w
    gb = r.sum()
    return float(obj), gw, float(gb)


def subgradient(model: LinearModel, data: Dataset, hp: Hyperparams, tie_alpha: float = 0.5):
    """One element (gw, gb) of the subdifferential of the primal objective.

    Samples exactly at a hinge knee take weight ``tie_alpha`` on their linear
    branch; when the two neutrality sums tie, the neutrality subgradient is
    ``tie_alpha * dC+ + (1 - tie_alpha) * dC-``.
    """
    if model.d != data.d:
        raise DimensionError(f"model has d={model.d}, data has d={data.d}")
    _, gw, gb = _objective_and_subgradient(
        model.w, model.b, data.X, data.y, data.v, hp.lam, hp.eta, tie_alpha
    )
    return gw, gb


def _step(rule, c, t, lam):
    if rule == "constant":
        return c
    if rule == "sqrt":
        return c / np.sqrt(t)
    return c / (lam * t)


def solve_primal(
    data: Dataset,
    hp: Hyperparams,
    cfg: SubgradConfig = SubgradConfig(),
    record_trace: bool = True,
    level_window: int = 50,
    init: LinearModel | None = None,
) -> tuple[LinearModel, SolveReport]:
    """Minimize the neutral SVM primal from the zero model, returning the best iterate.

    The ``polyak`` rule steps ``1.5 (Psi - target) / ||g||^2`` towards a
    target level below the best value found so far; the gap to the target
    grows by 1.2 after each descent halfway to the target and shrinks by 0.7
    whenever ``level_window`` steps pass without one.
    """
    X, y, v = data.X, data.y, data.v
    lam, eta = hp.lam, hp.eta
    c = cfg.step_constant if cfg.step_constant is not None else 1.0 / lam

    if init is None:
        w, b = np.zeros(data.d), 0.0
    else:
        if init.d != data.d:
            raise DimensionError(f"init has d={init.d}, data has d={data.d}")
        w, b = init.w.copy(), init.b

    best = np.inf
    best_w, best_b = w.copy(), b
    trace: list[float] = []
    stall = 0
    termination = "max_iters"
    # polyak target level: aim `gap` below the reference value `ref`; shrink
    # the gap after `level_window` steps without sufficient descent
    gap = ref = None
    since_level = 0

    it = 0
    for it in range(1, cfg.max_iters + 1):
        obj, gw, gb = _objective_and_subgradient(w, b, X, y, v, lam, eta, cfg.tie_alpha)
        if record_trace:
            trace.append(obj)
        if np.isfinite(best) and obj >= best - cfg.tol * max(1.0, abs(best)):
            stall += 1
        else:
            stall = 0
        if obj < best:
            best, best_w, best_b = obj, w.copy(), b

        gnorm2 = gw @ gw + gb * gb
        if gnorm2 == 0.0 or stall >= cfg.patience:
            termination = "tol_reached"
            break

        if cfg.step_rule == "polyak":
            if gap is None:
                gap, ref = 0.1 * max(obj, 1e-12), obj
            if best <= ref - 0.5 * gap:
                ref, since_level = best, 0
                gap *= 1.2
            else:
                since_level += 1
                if since_level >= level_window:
                    gap *= 0.7
                    ref, since_level = best, 0
            step = 1.5 * (obj - (ref - gap)) / gnorm2
        else:
            step = _step(cfg.step_rule, c, it, lam)
        w = w - step * gw
        b = b - step * gb

    report = SolveReport(
        best_objective=float(best),
        objective_trace=trace,
        iterations=it,
        termination=termination,
        converged=termination == "tol_reached",
        extra={"step_rule": cfg.step_rule},
    )
    return LinearModel(best_w, best_b), report
