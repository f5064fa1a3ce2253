import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import chi2

from nerm.data import (
    BENCHMARKS,
    EmptyFileError,
    IngestError,
    IngestSchema,
    MissingColumnError,
    SynthConfig,
    UnmappableLabelError,
    draw_synthetic,
    equal_frequency_bins,
    flip_probability,
    gen_synthetic,
    ingest_csv,
    ingest_csv_named,
    kfold,
    load_schema,
    repeated_kfold,
    synthetic_schema,
    write_dataset_csv,
)
from pathlib import Path

SCHEMAS = Path(__file__).resolve().parent.parent / "schemas"


def test_synthetic_is_deterministic():
    a = gen_synthetic(SynthConfig(n=100, seed=4))
    assert a == gen_synthetic(SynthConfig(n=100, seed=4))
    assert a != gen_synthetic(SynthConfig(n=100, seed=5))


def test_synthetic_shape_and_range():
    draw = draw_synthetic(SynthConfig(n=500, d=6, seed=1))
    assert (draw.data.n, draw.data.d) == (500, 6)
    assert np.abs(draw.data.X).max() <= 1.0
    assert draw.w_v[0] == draw.w_y[0]
    # labels before noise are exact thresholds
    np.testing.assert_array_equal(draw.y_clean, np.where(draw.data.X @ draw.w_y >= 0, 1.0, -1.0))
    np.testing.assert_array_equal(draw.v_clean, np.where(draw.data.X @ draw.w_v >= 0, 1.0, -1.0))


def test_config_validation():
    with pytest.raises(ValueError):
        SynthConfig(n=0)
    with pytest.raises(ValueError):
        SynthConfig(n=5, d=0)


def test_targets_and_viewpoints_correlate():
    # the shared first weight correlates y and v only on average over weight
    # draws (a single draw can anticorrelate), so pool one sample per seed
    m = 40_000
    agree = sum(
        float(d.y[0] == d.v[0]) for d in (gen_synthetic(SynthConfig(n=1, seed=s)) for s in range(m))
    )
    p = agree / m
    assert p - 0.5 >= 5 * np.sqrt(0.25 / m)
    assert p == pytest.approx(0.5 + np.arcsin(0.1) / np.pi, abs=5 * np.sqrt(0.25 / m))


def test_flip_probability_values():
    assert flip_probability(0.0) == 0.5
    assert flip_probability(0.1) == pytest.approx(1 / (1 + np.exp(10)))
    assert flip_probability(1e6) == 0.0


def test_far_points_rarely_flip():
    draw = draw_synthetic(SynthConfig(n=100_000, seed=2))
    far = np.abs(draw.data.X @ draw.w_y) > 0.1
    flipped = draw.data.y != draw.y_clean
    assert flipped[far].mean() < 1e-4


def test_flip_frequencies_follow_sigmoid():
    draw = draw_synthetic(SynthConfig(n=100_000, seed=3))
    p = draw.flip_prob_y
    flipped = (draw.data.y != draw.y_clean).astype(float)
    # chi-square over probability bins with enough expected flips in each
    edges = np.quantile(p[p > 1e-3], np.linspace(0, 1, 6))
    stat, dof = 0.0, 0
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (p >= lo) & (p <= hi)
        exp_flip, obs_flip = p[sel].sum(), flipped[sel].sum()
        exp_keep, obs_keep = sel.sum() - exp_flip, sel.sum() - obs_flip
        stat += (obs_flip - exp_flip) ** 2 / exp_flip + (obs_keep - exp_keep) ** 2 / exp_keep
        dof += 1
    assert chi2.sf(stat, dof) > 0.01


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_toy_categorical_csv(tmp_path):
    p = write(tmp_path, "color,label,group\nred,yes,a\nblue,no,b\nred,no,a\nblue,yes,b\n")
    enc = ingest_csv_named(p, IngestSchema("label", "group", "yes", "a"))
    assert enc.feature_names == ["color=blue", "color=red"]
    np.testing.assert_array_equal(enc.data.X, [[0, 1], [1, 0], [0, 1], [1, 0]])
    np.testing.assert_array_equal(enc.data.y, [1, -1, -1, 1])
    np.testing.assert_array_equal(enc.data.v, [1, -1, 1, -1])


def test_equal_frequency_binning():
    codes = equal_frequency_bins(np.array([3.0, 1.0, 2.0, 6.0, 5.0, 4.0]), 3)
    np.testing.assert_array_equal(codes, [1, 0, 0, 2, 2, 1])
    counts = np.bincount(codes, minlength=3)
    assert counts.max() - counts.min() <= 1


@given(values=st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=60, unique=True),
       k=st.integers(1, 8))
def test_binning_occupancy(values, k):
    codes = equal_frequency_bins(np.array(values), k)
    assert codes.min() >= 0 and codes.max() < k
    if k <= len(values):
        counts = np.bincount(codes, minlength=k)
        assert counts.max() - counts.min() <= 1
    order = np.argsort(values)
    assert np.all(np.diff(codes[order]) >= 0)


def test_numeric_column_binned_and_one_hot(tmp_path):
    rows = "\n".join(f"{x},{'p' if i % 2 else 'n'},{'u' if i < 3 else 'w'}" for i, x in enumerate([3, 1, 2, 6, 5, 4]))
    p = write(tmp_path, "age,t,g\n" + rows + "\n")
    enc = ingest_csv_named(p, IngestSchema("t", "g", "p", "u", numeric_bins={"age": 3}))
    assert enc.feature_names == ["age=bin0", "age=bin1", "age=bin2"]
    np.testing.assert_array_equal(enc.data.X.sum(axis=1), np.ones(6))
    np.testing.assert_array_equal(enc.data.X.sum(axis=0), [2, 2, 2])


def test_ingest_errors(tmp_path):
    schema = IngestSchema("t", "g", "1", "1")
    with pytest.raises(EmptyFileError):
        ingest_csv(write(tmp_path, ""), schema)
    with pytest.raises(EmptyFileError):
        ingest_csv(write(tmp_path, "x,t,g\n"), schema)
    with pytest.raises(MissingColumnError) as e:
        ingest_csv(write(tmp_path, "x,t\n1,1\n"), schema)
    assert e.value.column == "g"
    with pytest.raises(UnmappableLabelError) as e:
        ingest_csv(write(tmp_path, "x,t,g\n1,1,1\n2,0,1\n3,2,1\n"), schema)
    assert (e.value.row, e.value.column) == (4, "t")
    with pytest.raises(IngestError) as e:
        ingest_csv(write(tmp_path, "x,t,g\n1,1,1\n2,0\n"), schema)
    assert e.value.row == 3
    assert not issubclass(MissingColumnError, UnmappableLabelError)


def test_schema_validation_and_json(tmp_path):
    with pytest.raises(ValueError):
        IngestSchema("a", "a")
    with pytest.raises(ValueError):
        IngestSchema("a", "b", numeric_bins=-1)
    s = IngestSchema("a", "b", "yes", "f", {"age": 4}, ("id",))
    p = tmp_path / "s.json"
    p.write_text(json.dumps(s.to_dict()))
    assert load_schema(p) == s
    assert s.bins_for("age") == 4 and s.bins_for("other") == 0


def test_shipped_schemas_load():
    for name, info in BENCHMARKS.items():
        schema = load_schema(SCHEMAS / f"{name}.json")
        meta = json.loads((SCHEMAS / f"{name}.json").read_text())["meta"]
        assert (meta["rows"], meta["attributes"]) == (info.rows, info.attributes)
        assert schema.target_column != schema.viewpoint_column
    adult = BENCHMARKS["adult"]
    assert (adult.rows, adult.attributes, adult.viewpoint, adult.target) == (16281, 13, "gender", "income")
    assert load_schema(SCHEMAS / "synthetic.json") == synthetic_schema()


def test_round_trip(tmp_path):
    data = gen_synthetic(SynthConfig(n=50, d=4, seed=9))
    p = tmp_path / "s.csv"
    write_dataset_csv(data, p)
    assert ingest_csv(p, synthetic_schema()) == data


def test_kfold_partition():
    folds = kfold(10, 5, seed=1)
    assert len(folds) == 5
    tests = [te for _, te in folds]
    assert all(len(te) == 2 for te in tests)
    np.testing.assert_array_equal(np.sort(np.concatenate(tests)), np.arange(10))
    for tr, te in folds:
        assert not set(tr) & set(te)
        assert len(tr) + len(te) == 10
    assert [t.tolist() for _, t in kfold(10, 5, seed=1)] == [t.tolist() for t in tests]


@given(n=st.integers(2, 200), k=st.integers(2, 20), seed=st.integers(0, 1000))
def test_kfold_sizes(n, k, seed):
    if k > n:
        with pytest.raises(ValueError):
            kfold(n, k, seed)
        return
    sizes = [len(te) for _, te in kfold(n, k, seed)]
    assert max(sizes) - min(sizes) <= 1 and sum(sizes) == n


def test_kfold_rejects_bad_k():
    with pytest.raises(ValueError):
        kfold(5, 1)


def test_repeated_kfold_reshuffles():
    runs = repeated_kfold(20, 5, 3, seed=0)
    assert len(runs) == 3
    assert runs[0][0][1].tolist() != runs[1][0][1].tolist()
    assert [r[0][1].tolist() for r in runs] == [r[0][1].tolist() for r in repeated_kfold(20, 5, 3, seed=0)]
