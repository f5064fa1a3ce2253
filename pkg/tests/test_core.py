import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from nerm.core import (
    Dataset,
    DimensionError,
    Hyperparams,
    LinearModel,
    Sample,
    empirical_risk,
    hinge,
    nerm_objective,
    relaxed_neutrality,
    sgn,
    sign_neutrality,
    sign_neutrality_from_values,
)

from conftest import random_dataset

finite = st.floats(-1e3, 1e3, allow_nan=False)


def values_model(f):
    """A 1-D dataset whose decision values under w=1, b=0 are exactly f."""
    return LinearModel(np.array([1.0]), 0.0), np.asarray(f, dtype=float)[:, None]


@pytest.mark.parametrize("margin, expected", [(1.0, 0.0), (0.0, 1.0), (-2.0, 3.0), (3.0, 0.0)])
def test_hinge_values(margin, expected):
    assert hinge(margin) == expected


@given(a=finite, b=finite, t=st.floats(0, 1))
def test_hinge_convex_and_lipschitz(a, b, t):
    assert hinge(t * a + (1 - t) * b) <= t * hinge(a) + (1 - t) * hinge(b) + 1e-9
    assert abs(hinge(a) - hinge(b)) <= abs(a - b) + 1e-9


def test_sgn_zero_is_positive():
    np.testing.assert_array_equal(sgn([-1.0, 0.0, 2.0]), [-1.0, 1.0, 1.0])


def test_sample_and_dataset_validation():
    with pytest.raises(ValueError):
        Sample(np.array([1.0]), 0, 1)
    with pytest.raises(ValueError):
        Sample(np.array([np.nan]), 1, 1)
    with pytest.raises(DimensionError):
        Dataset(np.zeros((3, 2)), np.ones(2), np.ones(3))
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 2)), np.array([1, 2]), np.ones(2))
    with pytest.raises(DimensionError):
        Dataset.from_samples([Sample(np.zeros(2), 1, 1), Sample(np.zeros(3), 1, 1)])
    d = Dataset.from_samples([Sample(np.zeros(2), 1, -1), Sample(np.ones(2), -1, 1)])
    assert (d.n, d.d) == (2, 2)
    assert Dataset.from_samples(d.samples) == d


def test_hyperparams_validation():
    with pytest.raises(ValueError):
        Hyperparams(lam=0.0)
    with pytest.raises(ValueError):
        Hyperparams(lam=1.0, eta=-0.1)


def test_empirical_risk_examples(rng):
    data = random_dataset(rng, 7, 3)
    assert empirical_risk(LinearModel.zeros(3), data) == 1.0
    # margins (0.5, 2.0)
    m, X = values_model([0.5, 2.0])
    two = Dataset(X, [1, 1], [1, 1])
    assert empirical_risk(m, two) == pytest.approx(0.25)
    assert empirical_risk(m, two, normalized=False) == pytest.approx(0.5)
    big = LinearModel(np.zeros(3), 5.0)
    assert empirical_risk(big, data.subset(np.flatnonzero(data.y > 0))) == 0.0


def test_dimension_mismatch(rng):
    data = random_dataset(rng, 5, 3)
    with pytest.raises(DimensionError):
        empirical_risk(LinearModel.zeros(2), data)
    with pytest.raises(DimensionError):
        sign_neutrality(LinearModel.zeros(3), data, viewpoint=np.ones(4))


@pytest.mark.parametrize("f, v, expected", [
    ([1.0] * 8, [1.0] * 8, 1.0),
    ([1.0, 1.0, -1.0, -1.0], [1.0, 1.0, 1.0, 1.0], 0.0),
    ([1.0, 1.0, 1.0, -1.0], [1.0, 1.0, 1.0, 1.0], 0.5),
])
def test_sign_neutrality_examples(f, v, expected):
    assert sign_neutrality_from_values(np.array(f), np.array(v)).risk == expected


@given(
    f=arrays(float, st.integers(1, 40), elements=st.floats(-5, 5, allow_nan=False)),
    seed=st.integers(0, 2**32 - 1),
)
def test_sign_split_identities(f, seed):
    v = np.random.default_rng(seed).choice([-1.0, 1.0], f.shape[0])
    s = sign_neutrality_from_values(f, v)
    assert s.agree + s.disagree == 1.0
    assert s.risk == pytest.approx(abs(2 * s.agree - 1), abs=1e-15)


def test_relaxed_neutrality_examples(rng):
    data = random_dataset(rng, 6, 2)
    assert tuple(relaxed_neutrality(LinearModel.zeros(2), data)) == (1.0, 1.0, 1.0)
    m, X = values_model([0.5])
    assert tuple(relaxed_neutrality(m, Dataset(X, [1], [1]))) == pytest.approx((0.5, 1.5, 1.5))
    # every v f >= 1: the plus branch vanishes and the minus branch is 1 + mean(v f)
    m, X = values_model([1.5, -2.0, 3.0])
    v = np.array([1.0, -1.0, 1.0])
    r = relaxed_neutrality(m, Dataset(X, [1, 1, 1], v))
    assert r.c_plus == 0.0
    assert r.c_minus == pytest.approx(1 + np.mean([1.5, 2.0, 3.0]))
    assert r.c_max == r.c_minus


@given(
    f=arrays(float, st.integers(1, 30), elements=st.floats(-4, 4, allow_nan=False)),
    seed=st.integers(0, 2**32 - 1),
)
def test_relaxed_dominates_sign_branches(f, seed):
    # hinge(t) >= 1[t <= 0], so each relaxed branch bounds the matching sign fraction
    v = np.random.default_rng(seed).choice([-1.0, 1.0], f.shape[0])
    m, X = values_model(f)
    data = Dataset(X, np.ones_like(v), v)
    r = relaxed_neutrality(m, data)
    prod = f * v
    assert r.c_plus >= np.mean(prod <= 0) - 1e-12
    assert r.c_minus >= np.mean(prod >= 0) - 1e-12


def test_objective_zero_model(rng):
    data = random_dataset(rng, 9, 4)
    hp = Hyperparams(lam=0.3, eta=2.5)
    assert nerm_objective(LinearModel.zeros(4), data, hp) == pytest.approx(9 * (1 + 2.5))


def test_objective_matches_termwise_loop(rng):
    data = random_dataset(rng, 25, 5)
    hp = Hyperparams(lam=0.7, eta=1.3)
    for _ in range(20):
        w, b = rng.normal(size=5), rng.normal()
        loss = cp = cm = 0.0
        for x, y, v in zip(data.X, data.y, data.v):
            f = sum(wi * xi for wi, xi in zip(w, x)) + b
            loss += max(0.0, 1 - y * f)
            cp += max(0.0, 1 - v * f)
            cm += max(0.0, 1 + v * f)
        expected = loss + 0.5 * hp.lam * sum(wi * wi for wi in w) + hp.eta * max(cp, cm)
        assert nerm_objective(LinearModel(w, b), data, hp) == pytest.approx(expected, rel=1e-12)


def test_eta_zero_is_plain_svm(rng):
    data = random_dataset(rng, 12, 3)
    m = LinearModel(rng.normal(size=3), 0.2)
    plain = empirical_risk(m, data, normalized=False) + 0.5 * m.norm_sq()
    assert nerm_objective(m, data, Hyperparams(1.0, 0.0)) == pytest.approx(plain)


@given(seed=st.integers(0, 2**32 - 1), t=st.floats(0.01, 0.99))
def test_objective_convex(seed, t):
    rng = np.random.default_rng(seed)
    data = random_dataset(rng, 15, 3)
    hp = Hyperparams(lam=float(rng.uniform(0.1, 2)), eta=float(rng.uniform(0, 10)))
    p, q = rng.normal(size=4) * 3, rng.normal(size=4) * 3
    mix = LinearModel.from_params(t * p + (1 - t) * q)
    lhs = nerm_objective(mix, data, hp)
    rhs = t * nerm_objective(LinearModel.from_params(p), data, hp) + (1 - t) * nerm_objective(
        LinearModel.from_params(q), data, hp)
    assert lhs <= rhs + 1e-9


def test_prop1_sign_risk_bound(rng):
    # if both sign fractions are at most e in [0.5, 1] the sign risk is at most 2e - 1
    for _ in range(200):
        data = random_dataset(rng, int(rng.integers(1, 30)), 3)
        m = LinearModel(rng.normal(size=3), rng.normal())
        s = sign_neutrality(m, data)
        e = max(s.agree, s.disagree)
        assert s.risk <= 2 * e - 1 + 1e-12


@given(seed=st.integers(0, 2**32 - 1))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    data = random_dataset(rng, 10, 3)
    m = LinearModel(rng.normal(size=3), rng.normal())
    hp = Hyperparams(0.5, 2.0)
    perm = data.subset(rng.permutation(10))
    assert nerm_objective(m, perm, hp) == pytest.approx(nerm_objective(m, data, hp), rel=1e-12)
    assert sign_neutrality(m, perm) == sign_neutrality(m, data)
    np.testing.assert_allclose(relaxed_neutrality(m, perm), relaxed_neutrality(m, data), rtol=1e-12)
