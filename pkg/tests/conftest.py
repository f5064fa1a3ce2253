import numpy as np
import pytest
from hypothesis import settings

from nerm.core import Dataset, Hyperparams

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


def random_dataset(rng, n, d, flip=0.2):
    X = rng.normal(size=(n, d))
    y = np.where(X @ rng.normal(size=d) + flip * rng.normal(size=n) >= 0, 1.0, -1.0)
    v = np.where(X[:, 0] + rng.normal(size=n) >= 0, 1.0, -1.0)
    return Dataset(X, y, v)


def random_instances(count, seed=0, n_range=(5, 50), d_range=(2, 10)):
    """(data, hp) pairs in the mixed regime used by the duality checks."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        d = int(rng.integers(d_range[0], d_range[1] + 1))
        data = random_dataset(rng, n, d, flip=0.5)
        hp = Hyperparams(lam=float(rng.choice([0.1, 1.0])), eta=float(rng.choice([0.1, 1.0, 10.0])))
        out.append((data, hp))
    return out


def cvx_primal_optimum(data, hp):
    cp = pytest.importorskip("cvxpy")
    X, y, v = data.X, data.y, data.v
    w, b = cp.Variable(data.d), cp.Variable()
    f = X @ w + b
    obj = (cp.sum(cp.pos(1 - cp.multiply(y, f))) + hp.lam / 2 * cp.sum_squares(w)
           + hp.eta * cp.maximum(cp.sum(cp.pos(1 - cp.multiply(v, f))),
                                 cp.sum(cp.pos(1 + cp.multiply(v, f)))))
    prob = cp.Problem(cp.Minimize(obj))
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10)
    return float(prob.value), np.asarray(w.value), float(b.value)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
