"""Kernel functions and the signed Gram matrix Q of the neutral SVM dual."""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import asdict, dataclass
from typing import Literal

import numpy as np

from .core import Dataset


@dataclass(frozen=True)
class KernelSpec:
    kind: Literal["linear", "rbf", "poly"] = "linear"
    gamma: float = 1.0
    degree: int = 3
    coef0: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "rbf", "poly"):
            raise ValueError(f"unknown kernel {self.kind!r}")
        if self.kind == "rbf" and not self.gamma > 0:
            raise ValueError("rbf gamma must be positive")
        if self.kind == "poly" and (int(self.degree) != self.degree or self.degree < 1):
            raise ValueError("polynomial degree must be a positive integer")

    def __call__(self, A, B) -> np.ndarray:
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        if self.kind == "linear":
            return A @ B.T
        if self.kind == "poly":
            return (A @ B.T + self.coef0) ** int(self.degree)
        sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * (A @ B.T)
        return np.exp(-self.gamma * np.maximum(sq, 0.0))

    def diag(self, A) -> np.ndarray:
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if self.kind == "rbf":
            return np.ones(A.shape[0])
        sq = (A * A).sum(1)
        if self.kind == "linear":
            return sq
        return (sq + self.coef0) ** int(self.degree)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "rbf":
            out["gamma"] = self.gamma
        elif self.kind == "poly":
            out.update(degree=int(self.degree), coef0=self.coef0)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(**{k: d[k] for k in asdict(cls()) if k in d})


class QMatrix:
    """Row access to Q = S K S^T for the 3n dual variables (alpha, beta+, beta-).

    Entry (a, b) equals t_a t_b k(x_{a mod n}, x_{b mod n}) with the sign
    vector t = (y, v, -v). Only n distinct kernel rows exist; they are
    computed on demand and kept in an LRU cache bounded by ``cache_bytes``.
    When the full 3n x 3n matrix fits in the budget it is built once and rows
    are returned as views.
    """

    def __init__(self, data: Dataset, kernel: KernelSpec, cache_bytes: int = 64 << 20):
        self.X = data.X
        self.n = data.n
        self.kernel = kernel
        self.t = np.concatenate([data.y, data.v, -data.v])
        self.diag = np.tile(kernel.diag(self.X), 3)
        self.max_rows = max(2, cache_bytes // (8 * self.n))
        self._rows: OrderedDict[int, np.ndarray] = OrderedDict()
        self.hits = 0
        self.misses = 0
        self._dense = self.dense() if 72 * self.n * self.n <= cache_bytes else None

    def kernel_row(self, k: int) -> np.ndarray:
        row = self._rows.get(k)
        if row is not None:
            self._rows.move_to_end(k)
            self.hits += 1
            return row
        self.misses += 1
        row = self.kernel(self.X[k : k + 1], self.X)[0]
        self._rows[k] = row
        if len(self._rows) > self.max_rows:
            self._rows.popitem(last=False)
        return row

    def row(self, a: int) -> np.ndarray:
        if self._dense is not None:
            return self._dense[a]
        return self.t[a] * self.t * np.tile(self.kernel_row(a % self.n), 3)

    def dense(self) -> np.ndarray:
        K = self.kernel(self.X, self.X)
        return np.outer(self.t, self.t) * np.tile(K, (3, 3))


def build_q(data: Dataset, kernel: KernelSpec = KernelSpec(), cache_bytes: int = 64 << 20) -> QMatrix:
    return QMatrix(data, kernel, cache_bytes)
