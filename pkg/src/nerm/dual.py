"""SMO solver for the kernelized neutral SVM dual.

Dual variables are gamma = (alpha, beta+, beta-) in R^{3n} with sign vector
t = (y, v, -v).  In minimization form the problem reads

    min  1/2 gamma^T Q gamma - lam 1^T gamma
    s.t. t^T gamma = 0,  0 <= alpha <= 1,  beta+, beta- >= 0, plus caps on beta.

Two cap structures are supported:

``split`` (default)
    The exact dual of the max-of-sums neutrality penalty. Writing
    eta max(C+, C-) = max_s eta (s C+ + (1 - s) C-) over s in [0, 1] gives,
    for fixed s, static box caps beta+ <= eta s and beta- <= eta (1 - s).
    The inner box QP is solved by SMO and the split s by a bounded 1-D
    search on the (concave) inner optimum.
``per_sample``
    Caps beta+_i + beta-_i <= eta for each sample, with the pair
    (beta+_i, beta-_i) updated jointly. This is a relaxation of the exact
    dual; it is the dual of the per-sample penalty
    eta sum_i max(hinge(v_i f_i), hinge(-v_i f_i)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .core import Dataset, DimensionError, Hyperparams, hinge, nerm_objective
from .kernels import KernelSpec, QMatrix, build_q
from .primal import SolveReport

Coupling = Literal["split", "per_sample"]

TAU = 1e-12


@dataclass
class DualState:
    gamma: np.ndarray
    t: np.ndarray
    grad: np.ndarray
    q: QMatrix
    lam: float
    eta: float
    coupling: Coupling = "split"
    split: float = 0.5
    m: float = math.nan
    M: float = math.nan

    @classmethod
    def zeros(cls, q: QMatrix, hp: Hyperparams, coupling: Coupling = "split", split: float = 0.5):
        n3 = 3 * q.n
        return cls(
            gamma=np.zeros(n3),
            t=q.t.copy(),
            grad=np.full(n3, -hp.lam),
            q=q,
            lam=hp.lam,
            eta=hp.eta,
            coupling=coupling,
            split=split,
        )

    @property
    def n(self) -> int:
        return self.q.n

    @property
    def alpha(self):
        return self.gamma[: self.n]

    @property
    def beta_plus(self):
        return self.gamma[self.n : 2 * self.n]

    @property
    def beta_minus(self):
        return self.gamma[2 * self.n :]

    def caps(self) -> np.ndarray:
        n, eta = self.n, self.eta
        if self.coupling == "split":
            cached = self.__dict__.get("_caps")
            if cached is None or cached[0] != self.split:
                u = np.concatenate(
                    [np.ones(n), np.full(n, eta * self.split), np.full(n, eta * (1.0 - self.split))]
                )
                self.__dict__["_caps"] = cached = (self.split, u)
            return cached[1]
        # a beta coordinate may grow until its sample's pair sum reaches eta
        return np.concatenate([np.ones(n), eta - self.beta_minus, eta - self.beta_plus])

    def cap(self, a: int) -> float:
        n = self.n
        if a < n:
            return 1.0
        if self.coupling == "split":
            return self.eta * (self.split if a < 2 * n else 1.0 - self.split)
        return self.eta - self.gamma[a + n if a < 2 * n else a - n]

    def coefficients(self) -> np.ndarray:
        """a_i = alpha_i y_i + (beta+_i - beta-_i) v_i."""
        n = self.n
        return self.t[:n] * self.alpha + self.t[n : 2 * n] * (self.beta_plus - self.beta_minus)

    def objective(self) -> float:
        """1/2 gamma^T Q gamma - lam 1^T gamma, from the cached gradient."""
        return float(0.5 * self.gamma @ (self.grad - self.lam))

    def dual_value(self) -> float:
        """Lagrange dual value in the units of the primal objective."""
        return -self.objective() / self.lam

    def scores(self) -> np.ndarray:
        return -self.t * self.grad

    @property
    def snap(self) -> float:
        return 1e-14 * max(1.0, self.eta)

    def index_sets(self):
        g, t, u = self.gamma, self.t, self.caps()
        below, above = g < u - self.snap, g > self.snap
        up = (below & (t > 0)) | (above & (t < 0))
        low = (below & (t < 0)) | (above & (t > 0))
        return up, low

    def violation(self) -> float:
        """m(gamma) - M(gamma); nonpositive at a KKT point."""
        up, low = self.index_sets()
        if not up.any() or not low.any():
            return -math.inf
        s = self.scores()
        return float(s[up].max() - s[low].min())

    def recompute_grad(self):
        g = np.full(3 * self.n, -self.lam)
        for a in np.flatnonzero(self.gamma):
            g += self.gamma[a] * self.q.row(a)
        return g

    def copy(self) -> "DualState":
        return DualState(
            self.gamma.copy(), self.t, self.grad.copy(), self.q, self.lam, self.eta,
            self.coupling, self.split, self.m, self.M,
        )


def _pair_partner(state: DualState, i: int) -> int | None:
    n = state.n
    if n <= i < 2 * n:
        return i + n
    if 2 * n <= i:
        return i - n
    return None


def select_working_set(state: DualState, eps: float = 1e-3):
    """Second-order (WSS2) pair selection; ``None`` once m - M <= eps."""
    up, low = state.index_sets()
    if not up.any() or not low.any():
        state.m = state.M = math.nan
        return None
    s = state.scores()
    up_idx = np.flatnonzero(up)
    i = int(up_idx[np.argmax(s[up_idx])])
    m = s[i]
    M = s[low].min()
    state.m, state.M = float(m), float(M)
    if m - M <= eps:
        return None

    cand = low & (s < m)
    Qi = state.q.row(i)
    a = state.q.diag[i] + state.q.diag - 2.0 * state.t[i] * state.t * Qi
    a = np.where(a > TAU, a, TAU)
    b = m - s
    gain = np.where(cand, -(b * b) / a, np.inf)
    j = int(np.argmin(gain))
    return i, j


def _interval(state: DualState, i: int, j: int, tau: float):
    """Feasible range of the new gamma_i when gamma_j moves by -tau * delta_i."""
    g = state.gamma
    gi, gj = g[i], g[j]
    if state.coupling == "per_sample" and _pair_partner(state, i) == j:
        # beta+_k and beta-_k of one sample: t_i = -t_j, so tau = -1 and both
        # coordinates move together under the joint cap eta
        a11 = 0.5 * gi - 0.5 * gj + 0.5 * state.eta
        a12 = gi - gj
        return max(0.0, a12), a11
    ui, uj = state.cap(i), state.cap(j)
    a21 = gi + tau * gj - tau * uj
    a22 = gi + tau * gj
    if tau >= 0:
        return max(0.0, a21), min(ui, a22)
    return max(0.0, a22), min(ui, a21)


def update_pair(state: DualState, i: int, j: int) -> bool:
    """Analytic two-variable step with clipping; returns False when nothing moved."""
    if i == j:
        raise ValueError("working set needs two distinct indices")
    t, g, G = state.t, state.gamma, state.grad
    tau = t[i] * t[j]
    Qi = state.q.row(i)
    Qj = state.q.row(j)
    A = Qi[i] - 2.0 * tau * Qi[j] + Qj[j]
    B = -G[i] + tau * G[j]
    if A > 0:
        step = B / A
    else:
        step = math.copysign(math.inf, B) if B != 0 else 0.0

    lo, hi = _interval(state, i, j, tau)
    if hi <= lo:
        return False
    new_i = min(max(g[i] + step, lo), hi)
    di = new_i - g[i]
    if di == 0.0:
        return False
    new_j = g[j] - tau * di
    # rounding leaves residues of a few ulps next to a bound; pin them to it
    snap = state.snap
    ui, uj = state.cap(i), state.cap(j)
    if abs(new_j) <= snap:
        new_j = 0.0
    elif abs(new_j - uj) <= snap:
        new_j = uj
    if abs(new_i) <= snap:
        new_i = 0.0
    elif abs(new_i - ui) <= snap:
        new_i = ui
    di, dj = new_i - g[i], new_j - g[j]
    g[i] = new_i
    g[j] = new_j
    G += di * Qi + dj * Qj
    return True


@dataclass
class InnerResult:
    iterations: int
    converged: bool
    trace: list[float] = field(default_factory=list)


def smo_loop(
    state: DualState,
    eps: float,
    max_iters: int,
    record_trace: bool = False,
    callback: Callable[[DualState], None] | None = None,
) -> InnerResult:
    trace = [state.objective()] if record_trace else []
    it = 0
    while it < max_iters:
        pair = select_working_set(state, eps)
        if pair is None:
            return InnerResult(it, True, trace)
        moved = update_pair(state, *pair)
        it += 1
        if record_trace:
            trace.append(state.objective())
        if callback is not None:
            callback(state)
        if not moved:
            break
    return InnerResult(it, select_working_set(state, eps) is None, trace)


def recover_bias(state: DualState) -> float:
    """Bias from the KKT conditions: average over free coordinates, else mid of [M, m]."""
    u = state.caps()
    g = state.gamma
    slack = 1e-12 * max(1.0, state.eta)
    free = (g > slack) & (g < u - slack)
    s = state.scores()
    if free.any():
        return float(s[free].mean() / state.lam)
    up, low = state.index_sets()
    ends = []
    if up.any():
        ends.append(s[up].max())
    if low.any():
        ends.append(s[low].min())
    if not ends:
        return 0.0
    return float(np.mean(ends) / state.lam)


def _hinge_sums(f, y, v):
    return hinge(y * f).sum(), hinge(v * f).sum(), hinge(-v * f).sum()


def best_bias(scores_wo_bias: np.ndarray, data: Dataset, eta: float, chunk: int = 1 << 20) -> float:
    """Exact minimizer of the primal objective over the bias, decision values fixed.

    The objective is convex and piecewise linear in the bias, so the minimum
    is attained at a hinge breakpoint or where C+ and C- cross; the midpoint
    of the minimizing interval is returned.
    """
    g = np.asarray(scores_wo_bias, dtype=float)
    y, v = data.y, data.v
    cands = np.unique(np.concatenate([y - g, v - g, -v - g]))

    def diff(bs):
        f = g[None, :] + bs[:, None]
        return hinge(v * f).sum(1) - hinge(-v * f).sum(1)

    def objective(bs):
        f = g[None, :] + bs[:, None]
        cp = hinge(v * f).sum(1)
        cm = hinge(-v * f).sum(1)
        return hinge(y * f).sum(1) + eta * np.maximum(cp, cm)

    rows = max(1, chunk // g.shape[0])
    dvals = np.concatenate([diff(cands[k : k + rows]) for k in range(0, len(cands), rows)])
    cross = np.flatnonzero(np.sign(dvals[:-1]) * np.sign(dvals[1:]) < 0)
    if cross.size:
        b0, b1 = cands[cross], cands[cross + 1]
        d0, d1 = dvals[cross], dvals[cross + 1]
        cands = np.unique(np.concatenate([cands, b0 - d0 * (b1 - b0) / (d1 - d0)]))
    vals = np.concatenate([objective(cands[k : k + rows]) for k in range(0, len(cands), rows)])
    best = vals.min()
    at_min = cands[vals <= best + 1e-12 * max(1.0, abs(best))]
    return float(0.5 * (at_min.min() + at_min.max()))


@dataclass(frozen=True, eq=False)
class KernelModel:
    """f(x) = (1/lam) sum_i a_i k(x_i, x) + bias over the retained support inputs."""

    coefficients: np.ndarray
    support: np.ndarray
    bias: float
    kernel: KernelSpec
    lam: float

    @classmethod
    def from_state(cls, state: DualState, data: Dataset, kernel: KernelSpec, bias: float) -> "KernelModel":
        a = state.coefficients()
        keep = a != 0
        return cls(a[keep], data.X[keep], float(bias), kernel, state.lam)

    @property
    def d(self) -> int:
        return self.support.shape[1]

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.d:
            raise DimensionError(f"model has d={self.d}, inputs have d={X.shape[1]}")
        if self.coefficients.size == 0:
            return np.full(X.shape[0], self.bias)
        return self.kernel(X, self.support) @ self.coefficients / self.lam + self.bias

    def norm_sq(self) -> float:
        """Squared RKHS norm of the weight function, a^T K a / lam^2."""
        if self.coefficients.size == 0:
            return 0.0
        K = self.kernel(self.support, self.support)
        return float(self.coefficients @ K @ self.coefficients) / self.lam**2

    def weights(self) -> np.ndarray:
        if self.kernel.kind != "linear":
            raise ValueError("explicit weights exist only for the linear kernel")
        return self.support.T @ self.coefficients / self.lam


def predict(model: KernelModel, x) -> np.ndarray | float:
    x = np.asarray(x, dtype=float)
    out = model.decision_function(x)
    return float(out[0]) if x.ndim == 1 else out


def _fit_caps(state: DualState):
    """Scale gamma down so it respects the current caps (keeps t^T gamma = 0)."""
    u = state.caps()
    over = state.gamma > u
    if not over.any():
        return
    theta = float(np.min(u[over] / state.gamma[over]))
    state.gamma *= theta
    state.grad = theta * (state.grad + state.lam) - state.lam
    # scaling lands within an ulp of the binding caps; put them exactly there
    near = np.abs(state.gamma - u) <= state.snap
    state.gamma[near] = u[near]
    np.minimum(state.gamma, u, out=state.gamma)


def inner_decision(state: DualState) -> np.ndarray:
    """Decision values without bias, read off the cached gradient.

    For the alpha block, (Q gamma)_i = y_i (K a)_i, so f_i - b = (K a)_i / lam.
    """
    n = state.n
    return state.t[:n] * (state.grad[:n] + state.lam) / state.lam


def _split_slope(state: DualState, data: Dataset) -> tuple[float, float]:
    """(C+ - C-, primal objective) of the inner minimizer with the KKT bias."""
    f = inner_decision(state) + recover_bias(state)
    m = data.v * f
    cp, cm = hinge(m).sum(), hinge(-m).sum()
    norm_sq = float(state.coefficients() @ (inner_decision(state))) / state.lam
    primal = hinge(data.y * f).sum() + 0.5 * state.lam * norm_sq + state.eta * max(cp, cm)
    return float(cp - cm), float(primal)


def _search_split(data, q, hp, run, evaluations, split_tol, gap_tol):
    """Maximize the concave inner optimum h(s) over s in [0, 1].

    h'(s) = eta (C+ - C-) at the inner minimizer, so the endpoints are
    checked first and an interior maximizer is located by safeguarded false
    position on C+ - C-. The search also stops once the primal objective of some
    evaluated state is within ``gap_tol`` (relative) of the best dual value.
    """
    states: dict[float, tuple[DualState, InnerResult]] = {}
    best_primal = [math.inf]
    slope_at: dict[float, float] = {}

    def evaluate(s: float, start: DualState) -> float:
        st = start.copy()
        st.split = s
        _fit_caps(st)
        res = run(st)
        slope, primal = _split_slope(st, data)
        best_primal[0] = min(best_primal[0], primal)
        states[s] = (st, res)
        slope_at[s] = slope
        evaluations.append((s, st.dual_value()))
        return slope

    def done() -> bool:
        dual = max(st.dual_value() for st, _ in states.values())
        return best_primal[0] - dual <= gap_tol * max(1.0, abs(dual))

    def best():
        return states[max(states, key=lambda s: states[s][0].dual_value())]

    zero = DualState.zeros(q, hp, "split", split=1.0)
    if evaluate(1.0, zero) >= 0 or done():
        return states[1.0]
    if evaluate(0.0, states[1.0][0]) <= 0 or done():
        return best()
    # Illinois-style false position on the decreasing slope, falling back to
    # bisection whenever the interpolated point would hug a bracket end
    lo, hi = 0.0, 1.0
    f_lo, f_hi = slope_at[lo], slope_at[hi]
    side = 0
    while hi - lo > split_tol:
        mid = (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
        width = hi - lo
        if not lo + 0.01 * width < mid < hi - 0.01 * width:
            mid = 0.5 * (lo + hi)
        near = lo if mid - lo <= hi - mid else hi
        slope = evaluate(mid, states[near][0])
        if slope > 0:
            lo, f_lo = mid, slope
            if side == 1:
                f_hi *= 0.5
            side = 1
        elif slope < 0:
            hi, f_hi = mid, slope
            if side == -1:
                f_lo *= 0.5
            side = -1
        else:
            break
        if done():
            break
    return best()


def solve_smo(
    data: Dataset,
    kernel: KernelSpec = KernelSpec(),
    hp: Hyperparams = Hyperparams(),
    eps: float = 1e-3,
    max_iters: int = 10_000_000,
    coupling: Coupling = "split",
    refine_bias: bool = True,
    split_tol: float = 1e-7,
    gap_tol: float = 1e-7,
    cache_bytes: int = 64 << 20,
    callback: Callable[[DualState], None] | None = None,
    record_trace: bool = True,
) -> tuple[KernelModel, SolveReport, DualState]:
    """Solve the dual from gamma = 0 and build the kernel model.

    Returns the model, a report and the final dual state. The report's
    ``best_objective`` is the dual value in primal units and
    ``extra['primal_objective']`` the primal objective of the returned model.
    """
    if coupling not in ("split", "per_sample"):
        raise ValueError(f"unknown coupling {coupling!r}")
    q = build_q(data, kernel, cache_bytes)
    budget = [max_iters]
    evaluations: list[tuple[float, float]] = []

    def run(state: DualState) -> InnerResult:
        res = smo_loop(state, eps, budget[0], record_trace, callback)
        budget[0] -= res.iterations
        return res

    if coupling == "per_sample" or hp.eta == 0:
        state = DualState.zeros(q, hp, coupling, split=0.5)
        final_res = run(state)
    else:
        state, final_res = _search_split(data, q, hp, run, evaluations, split_tol, gap_tol)

    decision = inner_decision(state)
    bias = recover_bias(state)
    kkt_bias = bias
    if refine_bias and hp.eta > 0:
        bias = best_bias(decision, data, hp.eta)
        kkt_obj = nerm_objective(KernelModel.from_state(state, data, kernel, kkt_bias), data, hp)
        ref_obj = nerm_objective(KernelModel.from_state(state, data, kernel, bias), data, hp)
        if kkt_obj <= ref_obj:
            bias = kkt_bias
    model = KernelModel.from_state(state, data, kernel, bias)
    primal = nerm_objective(model, data, hp)
    dual = state.dual_value()
    converged = final_res.converged and budget[0] > 0 if coupling == "split" else final_res.converged
    report = SolveReport(
        best_objective=dual,
        objective_trace=final_res.trace,
        iterations=max_iters - budget[0],
        termination="tol_reached" if converged else "max_iters",
        converged=bool(converged),
        extra={
            "coupling": coupling,
            "split": state.split,
            "violation": state.violation(),
            "primal_objective": primal,
            "duality_gap": primal - dual,
            "kkt_bias": kkt_bias,
            "outer_evaluations": len(evaluations),
        },
    )
    return model, report, state
