"""Empirical checks of the uniform neutrality bound and the optimal-hypothesis bound."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .core import Dataset, Hyperparams, empirical_risk, hinge, relaxed_neutrality

LIPSCHITZ_HINGE = 1.0


@dataclass(frozen=True)
class BoundReport:
    """Uniform bound on the expected relaxed neutrality risk.

    ``total_bound = empirical_neutrality + 2 * lipschitz * rademacher_term
    + confidence_term``. ``c_cap`` is the range cap used for the hinge;
    ``holds_on_holdout`` is ``None`` when no held-out sample was given.
    """

    empirical_neutrality: float
    rademacher_term: float
    confidence_term: float
    total_bound: float
    delta: float
    c_cap: float
    radius: float
    lipschitz: float = LIPSCHITZ_HINGE
    holdout_neutrality: float | None = None
    holds_on_holdout: bool | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _features(X: np.ndarray, with_bias: bool) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))]) if with_bias else X


def rademacher_linear(
    data: Dataset,
    viewpoint=None,
    radius: float = 1.0,
    num_draws: int = 200,
    seed: int = 0,
    with_bias: bool = False,
) -> float:
    """Monte-Carlo Rademacher complexity of {v * (w.x) : ||w|| <= radius}.

    The supremum over the ball is (radius/n) ||sum_i s_i v_i x_i||, so only
    the expectation over the signs s is sampled. ``with_bias`` appends a
    constant feature, i.e. the class {v * (w.x + b) : ||(w, b)|| <= radius}.
    """
    if num_draws < 1:
        raise ValueError("num_draws must be >= 1")
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    v = data.v if viewpoint is None else np.asarray(viewpoint, dtype=float)
    Z = v[:, None] * _features(data.X, with_bias)
    sigma = np.random.default_rng(seed).choice([-1.0, 1.0], size=(num_draws, data.n))
    norms = np.linalg.norm(sigma @ Z, axis=1)
    return float(radius * norms.mean() / data.n)


def confidence_term(c: float, delta: float, n: int) -> float:
    """c sqrt(ln(2/delta) / 2n)."""
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    return c * math.sqrt(math.log(2.0 / delta) / (2 * n))


def _capped_neutrality(f, v, cap) -> float:
    m = v * f
    return max(np.minimum(hinge(m), cap).mean(), np.minimum(hinge(-m), cap).mean())


def _linear_params(model) -> np.ndarray:
    if hasattr(model, "w"):
        return np.append(model.w, model.b)
    if hasattr(model, "weights"):
        return np.append(model.weights(), model.bias)
    raise TypeError("the closed-form complexity needs a linear model")


def neutrality_bound(
    model,
    train: Dataset,
    viewpoint=None,
    delta: float = 0.05,
    radius: float | None = None,
    c_cap: float | None = None,
    holdout: Dataset | None = None,
    holdout_viewpoint=None,
    num_draws: int = 200,
    seed: int = 0,
) -> BoundReport:
    """Assemble the uniform bound for the class of linear functions containing ``model``.

    The class is the ball ||(w, b)|| <= radius, with radius defaulting to the
    norm of the model's own parameters. The hinge is unbounded, so it is
    capped at ``c_cap``; by default the largest hinge value seen on the
    training and held-out samples, which leaves those values unchanged.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    v = train.v if viewpoint is None else np.asarray(viewpoint, dtype=float)
    f = model.decision_function(train.X)
    if radius is None:
        radius = float(np.linalg.norm(_linear_params(model)))
    f_hold = v_hold = None
    if holdout is not None:
        v_hold = holdout.v if holdout_viewpoint is None else np.asarray(holdout_viewpoint, dtype=float)
        f_hold = model.decision_function(holdout.X)
    if c_cap is None:
        seen = [np.abs(v * f)]
        if f_hold is not None:
            seen.append(np.abs(v_hold * f_hold))
        c_cap = 1.0 + float(np.concatenate(seen).max())

    emp = _capped_neutrality(f, v, c_cap)
    rad = rademacher_linear(train, v, radius, num_draws, seed, with_bias=True)
    conf = confidence_term(c_cap, delta, train.n)
    total = emp + 2.0 * LIPSCHITZ_HINGE * rad + conf
    hold = holds = None
    if f_hold is not None:
        hold = _capped_neutrality(f_hold, v_hold, c_cap)
        holds = bool(hold <= total)
    return BoundReport(emp, rad, conf, total, delta, float(c_cap), float(radius),
                       LIPSCHITZ_HINGE, hold, holds)


def corollary_bound(hp: Hyperparams | float) -> float:
    """Bound 1 + 1/eta on the normalized relaxed neutrality risk of the NERM solution."""
    eta = hp.eta if isinstance(hp, Hyperparams) else float(hp)
    if eta <= 0:
        raise ValueError("the bound is infinite for eta = 0")
    return 1.0 + 1.0 / eta


class Gaps(NamedTuple):
    risk_gap: float
    neutrality_gap: float


def generalization_gap(model, train: Dataset, test: Dataset, viewpoint_train=None,
                       viewpoint_test=None) -> Gaps:
    """(test - train) differences of the normalized hinge risk and relaxed neutrality."""
    if test is None or test.n == 0:
        raise ValueError("test set is empty")
    r = empirical_risk(model, test) - empirical_risk(model, train)
    c = (relaxed_neutrality(model, test, viewpoint_test).c_max
         - relaxed_neutrality(model, train, viewpoint_train).c_max)
    return Gaps(float(r), float(c))


def loglog_slope(ns, values) -> float:
    """Least-squares slope of log(values) against log(ns)."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])
