"""Synthetic data, CSV ingestion with 1-of-K coding, and fold splitting."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .core import Dataset, sgn


@dataclass(frozen=True)
class SynthConfig:
    """Linear-threshold targets and viewpoints on the cube [-1, 1]^d.

    Labels are flipped with probability 1 / (1 + exp(noise_scale |w.x|)),
    so only points close to a decision plane get noisy labels.
    """

    n: int
    d: int = 10
    seed: int = 0
    noise_scale: float = 100.0

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("need n >= 1 and d >= 1")
        if not self.noise_scale >= 0:
            raise ValueError("noise_scale must be nonnegative")


class SynthDraw(NamedTuple):
    data: Dataset
    w_y: np.ndarray
    w_v: np.ndarray
    y_clean: np.ndarray
    v_clean: np.ndarray
    flip_prob_y: np.ndarray
    flip_prob_v: np.ndarray


def flip_probability(score, noise_scale: float = 100.0) -> np.ndarray:
    z = noise_scale * np.abs(np.asarray(score, dtype=float))
    # 1 / (1 + e^z) written to stay finite for large z
    return np.exp(-np.logaddexp(0.0, z))


def draw_synthetic(cfg: SynthConfig) -> SynthDraw:
    rng = np.random.default_rng(cfg.seed)
    w_y = rng.uniform(-1.0, 1.0, cfg.d)
    w_v = np.concatenate([w_y[:1], rng.uniform(-1.0, 1.0, cfg.d - 1)])
    X = rng.uniform(-1.0, 1.0, (cfg.n, cfg.d))
    sy, sv = X @ w_y, X @ w_v
    y0, v0 = sgn(sy), sgn(sv)
    py, pv = flip_probability(sy, cfg.noise_scale), flip_probability(sv, cfg.noise_scale)
    y = np.where(rng.random(cfg.n) < py, -y0, y0)
    v = np.where(rng.random(cfg.n) < pv, -v0, v0)
    return SynthDraw(Dataset(X, y, v), w_y, w_v, y0, v0, py, pv)


def gen_synthetic(cfg: SynthConfig) -> Dataset:
    return draw_synthetic(cfg).data


# ---------------------------------------------------------------- ingestion


class IngestError(ValueError):
    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.row = row
        self.column = column


class MissingColumnError(IngestError):
    pass


class UnmappableLabelError(IngestError):
    pass


class EmptyFileError(IngestError):
    pass


@dataclass(frozen=True)
class IngestSchema:
    """How to read a CSV into a Dataset.

    ``numeric_bins`` is either one bin count for every numeric column or a
    mapping from column name to bin count; 0 passes the raw value through
    as a single feature. Non-numeric columns are always one-hot coded.
    """

    target_column: str
    viewpoint_column: str
    positive_target_value: str = "1"
    positive_viewpoint_value: str = "1"
    numeric_bins: int | dict[str, int] = 0
    drop_columns: tuple[str, ...] = ()

    def __post_init__(self):
        if self.target_column == self.viewpoint_column:
            raise ValueError("target and viewpoint columns must differ")
        bins = self.numeric_bins.values() if isinstance(self.numeric_bins, dict) else [self.numeric_bins]
        if any(int(b) != b or b < 0 for b in bins):
            raise ValueError("bin counts must be nonnegative integers")
        object.__setattr__(self, "drop_columns", tuple(self.drop_columns))

    def bins_for(self, column: str) -> int:
        if isinstance(self.numeric_bins, dict):
            return int(self.numeric_bins.get(column, 0))
        return int(self.numeric_bins)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["drop_columns"] = list(self.drop_columns)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "IngestSchema":
        keys = ("target_column", "viewpoint_column", "positive_target_value",
                "positive_viewpoint_value", "numeric_bins", "drop_columns")
        missing = [k for k in keys[:2] if k not in d]
        if missing:
            raise ValueError(f"schema lacks {', '.join(missing)}")
        kw = {k: d[k] for k in keys if k in d}
        for k in ("positive_target_value", "positive_viewpoint_value"):
            if k in kw:
                kw[k] = str(kw[k])
        return cls(**kw)


def load_schema(path) -> IngestSchema:
    with open(path, encoding="utf-8") as fh:
        return IngestSchema.from_dict(json.load(fh))


def synthetic_schema() -> IngestSchema:
    """Schema matching :func:`write_dataset_csv` output (raw numeric features)."""
    return IngestSchema("y", "v", "1", "1", 0)


@dataclass(frozen=True)
class DatasetInfo:
    rows: int
    attributes: int
    viewpoint: str
    target: str


# published sizes of the four benchmark tables; files are not bundled
BENCHMARKS = {
    "adult": DatasetInfo(16281, 13, "gender", "income"),
    "dutch": DatasetInfo(60420, 10, "gender", "income"),
    "bank": DatasetInfo(45211, 17, "loan", "term deposit"),
    "german": DatasetInfo(1000, 20, "foreign worker", "credit risk"),
}


def equal_frequency_bins(values: np.ndarray, k: int) -> np.ndarray:
    """Bin index in [0, k) per value; equal values share a bin."""
    order = np.sort(values)
    n = order.shape[0]
    cuts = order[[min(-(-j * n // k), n - 1) for j in range(1, k)]] if k > 1 else np.empty(0)
    return np.searchsorted(cuts, values, side="right")


def _as_float(s: str):
    try:
        x = float(s)
    except ValueError:
        return None
    return x if np.isfinite(x) else None


def _label(values: list[str], positive: str, column: str) -> np.ndarray:
    # the first non-positive value seen is the negative class; a third value is an error
    negative = None
    for i, s in enumerate(values):
        if s == positive:
            continue
        if negative is None:
            negative = s
        elif s != negative:
            raise UnmappableLabelError(
                f"value {s!r} is neither {positive!r} nor {negative!r}",
                row=i + 2, column=column,
            )
    return np.where(np.array(values) == positive, 1.0, -1.0)


class Encoded(NamedTuple):
    data: Dataset
    feature_names: list[str]


def encode_rows(header: list[str], rows: list[list[str]], schema: IngestSchema) -> Encoded:
    for col in (schema.target_column, schema.viewpoint_column, *schema.drop_columns):
        if col not in header:
            raise MissingColumnError("column not found in header", column=col)
    if not rows:
        raise EmptyFileError("no data rows")
    cols = {name: [r[k] for r in rows] for k, name in enumerate(header)}
    y = _label(cols[schema.target_column], schema.positive_target_value, schema.target_column)
    v = _label(cols[schema.viewpoint_column], schema.positive_viewpoint_value, schema.viewpoint_column)

    skip = {schema.target_column, schema.viewpoint_column, *schema.drop_columns}
    blocks, names = [], []
    for name in header:
        if name in skip:
            continue
        raw = cols[name]
        nums = [_as_float(s) for s in raw]
        if all(x is not None for x in nums):
            arr = np.array(nums)
            k = schema.bins_for(name)
            if k == 0:
                blocks.append(arr[:, None])
                names.append(name)
                continue
            codes = equal_frequency_bins(arr, k)
            labels = [f"{name}=bin{j}" for j in range(k)]
        else:
            cats = sorted(set(raw))
            index = {c: j for j, c in enumerate(cats)}
            codes = np.array([index[s] for s in raw])
            labels = [f"{name}={c}" for c in cats]
        onehot = np.zeros((len(raw), len(labels)))
        onehot[np.arange(len(raw)), codes] = 1.0
        blocks.append(onehot)
        names.extend(labels)
    if not blocks:
        raise IngestError("no feature columns left after removing target and viewpoint")
    return Encoded(Dataset(np.hstack(blocks), y, v), names)


def read_csv_rows(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not any(h.strip() for h in header):
            raise EmptyFileError(f"{path}: no header row")
        header = [h.strip() for h in header]
        rows = []
        for r in reader:
            if not r:
                continue
            if len(r) != len(header):
                raise IngestError(
                    f"expected {len(header)} fields, found {len(r)}", row=reader.line_num
                )
            rows.append([s.strip() for s in r])
    return header, rows


def ingest_csv(path, schema: IngestSchema) -> Dataset:
    return ingest_csv_named(path, schema).data


def ingest_csv_named(path, schema: IngestSchema) -> Encoded:
    header, rows = read_csv_rows(path)
    if not rows:
        raise EmptyFileError(f"{path}: no data rows")
    return encode_rows(header, rows, schema)


def write_dataset_csv(data: Dataset, path) -> None:
    """Columns x1..xd, y, v; floats written with repr so they read back exactly."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j + 1}" for j in range(data.d)] + ["y", "v"])
        for x, y, v in zip(data.X, data.y, data.v):
            w.writerow([repr(float(a)) for a in x] + [int(y), int(v)])


# ---------------------------------------------------------------- folds


def kfold(n_or_data, k: int, seed: int | None = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Shuffled k-fold split; test folds partition range(n) with sizes differing by <= 1."""
    n = n_or_data.n if isinstance(n_or_data, Dataset) else int(n_or_data)
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > n:
        raise ValueError(f"k={k} exceeds n={n}")
    perm = np.random.default_rng(seed).permutation(n) if seed is not None else np.arange(n)
    folds = np.array_split(perm, k)
    out = []
    for j, test in enumerate(folds):
        train = np.concatenate([f for i, f in enumerate(folds) if i != j])
        out.append((np.sort(train), np.sort(test)))
    return out


def repeated_kfold(n_or_data, k: int, repeats: int, seed: int = 0):
    """``repeats`` reshuffled k-fold runs with seeds derived from ``seed``."""
    seeds = np.random.SeedSequence(seed).generate_state(repeats)
    return [kfold(n_or_data, k, int(s)) for s in seeds]
