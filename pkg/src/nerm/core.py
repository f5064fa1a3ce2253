"""Domain types, hinge losses and the neutrality risks of a classifier.

Every model exposes ``decision_function(X)`` and ``norm_sq()``; the risk
functions below only touch models through those two methods so linear and
kernel models are interchangeable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np


class DimensionError(ValueError):
    """Model, data and viewpoint shapes disagree."""


@dataclass(frozen=True)
class Sample:
    x: np.ndarray
    y: int
    v: int

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 1 or not np.all(np.isfinite(x)):
            raise ValueError("x must be a finite 1-D vector")
        if self.y not in (-1, 1) or self.v not in (-1, 1):
            raise ValueError("y and v must be -1 or +1")
        object.__setattr__(self, "x", x)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Inputs ``X`` (n, d), targets ``y`` and viewpoint labels ``v`` in {-1, +1}."""

    X: np.ndarray
    y: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        v = np.asarray(self.v, dtype=float).ravel()
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("dataset needs n >= 1 and d >= 1")
        if y.shape[0] != X.shape[0] or v.shape[0] != X.shape[0]:
            raise DimensionError("X, y and v must have the same number of rows")
        if not np.all(np.isfinite(X)):
            raise ValueError("inputs must be finite")
        if not (np.all(np.abs(y) == 1) and np.all(np.abs(v) == 1)):
            raise ValueError("y and v must take values in {-1, +1}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def samples(self) -> list[Sample]:
        return [Sample(x, int(y), int(v)) for x, y, v in zip(self.X, self.y, self.v)]

    @classmethod
    def from_samples(cls, samples: Sequence[Sample]) -> "Dataset":
        if not samples:
            raise ValueError("dataset needs n >= 1")
        dims = {s.x.shape[0] for s in samples}
        if len(dims) != 1:
            raise DimensionError("samples must share one dimension")
        return cls(
            np.stack([s.x for s in samples]),
            np.array([s.y for s in samples]),
            np.array([s.v for s in samples]),
        )

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.y[idx], self.v[idx])

    def with_viewpoint(self, v) -> "Dataset":
        return Dataset(self.X, self.y, v)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.X.shape == other.X.shape
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.v, other.v)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Linear classifier f(x) = w.x + b."""

    w: np.ndarray
    b: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).ravel()
        if not (np.all(np.isfinite(w)) and np.isfinite(self.b)):
            raise ValueError("model parameters must be finite")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", float(self.b))

    @classmethod
    def zeros(cls, d: int) -> "LinearModel":
        return cls(np.zeros(d), 0.0)

    @property
    def d(self) -> int:
        return self.w.shape[0]

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.d:
            raise DimensionError(f"model has d={self.d}, inputs have d={X.shape[1]}")
        return X @ self.w + self.b

    def norm_sq(self) -> float:
        return float(self.w @ self.w)

    def params(self) -> np.ndarray:
        return np.append(self.w, self.b)

    @classmethod
    def from_params(cls, p) -> "LinearModel":
        p = np.asarray(p, dtype=float)
        return cls(p[:-1], p[-1])


@dataclass(frozen=True)
class Hyperparams:
    """Regularization weight ``lam`` (> 0) and neutralization weight ``eta`` (>= 0)."""

    lam: float = 1.0
    eta: float = 0.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not self.eta >= 0:
            raise ValueError(f"eta must be nonnegative, got {self.eta}")


class SignNeutrality(NamedTuple):
    risk: float
    agree: float  # fraction with sgn(f v) = +1
    disagree: float


class RelaxedNeutrality(NamedTuple):
    c_plus: float
    c_minus: float
    c_max: float


def hinge(margin):
    """max(0, 1 - margin), elementwise."""
    return np.maximum(0.0, 1.0 - np.asarray(margin, dtype=float))


def sgn(a):
    """Sign with sgn(0) = +1."""
    return np.where(np.asarray(a) >= 0, 1.0, -1.0)


def decision_values(model, data: Dataset) -> np.ndarray:
    return model.decision_function(data.X)


def _viewpoint(data: Dataset, viewpoint) -> np.ndarray:
    if viewpoint is None:
        return data.v
    v = np.asarray(viewpoint, dtype=float).ravel()
    if v.shape[0] != data.n:
        raise DimensionError(f"viewpoint has {v.shape[0]} entries for n={data.n}")
    return v


def _reduce(values: np.ndarray, normalized: bool) -> float:
    return float(values.mean() if normalized else values.sum())


def empirical_risk(model, data: Dataset, normalized: bool = True) -> float:
    f = decision_values(model, data)
    return _reduce(hinge(data.y * f), normalized)


def sign_neutrality(model, data: Dataset, viewpoint=None) -> SignNeutrality:
    """(1/n)|sum sgn(f(x_i) v_i)| with its agreement/disagreement fractions."""
    v = _viewpoint(data, viewpoint)
    f = decision_values(model, data)
    return sign_neutrality_from_values(f, v)


def sign_neutrality_from_values(f, v) -> SignNeutrality:
    s = sgn(np.asarray(f) * np.asarray(v))
    n = s.shape[0]
    k = int(np.count_nonzero(s > 0))
    return SignNeutrality(abs(2 * k - n) / n, k / n, (n - k) / n)


def relaxed_neutrality(model, data: Dataset, viewpoint=None, normalized: bool = True) -> RelaxedNeutrality:
    v = _viewpoint(data, viewpoint)
    f = decision_values(model, data)
    return relaxed_neutrality_from_values(f, v, normalized)


def relaxed_neutrality_from_values(f, v, normalized: bool = True) -> RelaxedNeutrality:
    m = np.asarray(v) * np.asarray(f)
    cp = _reduce(hinge(m), normalized)
    cm = _reduce(hinge(-m), normalized)
    return RelaxedNeutrality(cp, cm, max(cp, cm))


def nerm_objective(model, data: Dataset, hp: Hyperparams) -> float:
    """Neutral SVM primal: sum hinge(y f) + lam/2 ||w||^2 + eta max(C+, C-), sums throughout."""
    f = decision_values(model, data)
    loss = hinge(data.y * f).sum()
    neut = relaxed_neutrality_from_values(f, data.v, normalized=False).c_max
    return float(loss + 0.5 * hp.lam * model.norm_sq() + hp.eta * neut)
