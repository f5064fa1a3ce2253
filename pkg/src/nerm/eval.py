"""Cross-validated evaluation: AUC, sign neutrality, eta sweeps and sample-size curves."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Literal, Sequence

import numpy as np
from scipy.stats import rankdata

from .core import Dataset, Hyperparams, relaxed_neutrality, sign_neutrality
from .data import SynthConfig, gen_synthetic, repeated_kfold
from .dual import solve_smo
from .kernels import KernelSpec
from .primal import SolveReport, SubgradConfig, solve_primal
from .theory import corollary_bound, generalization_gap, loglog_slope

Solver = Literal["primal", "dual"]

DEFAULT_ETA_GRID = (0.0, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0)
AUDIT_SLACK = 1e-2


def auc(scores, labels) -> float:
    """P(score of a positive > score of a negative), ties counted half."""
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    pos = y > 0
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes")
    ranks = rankdata(s)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def fit_model(
    data: Dataset,
    hp: Hyperparams,
    solver: Solver = "primal",
    kernel: KernelSpec = KernelSpec(),
    eps: float = 1e-3,
    subgrad: SubgradConfig = SubgradConfig(),
) -> tuple[object, SolveReport]:
    if solver == "primal":
        if kernel.kind != "linear":
            raise ValueError("the primal solver handles the linear kernel only")
        return solve_primal(data, hp, subgrad, record_trace=False)
    if solver == "dual":
        model, report, _ = solve_smo(data, kernel, hp, eps=eps, record_trace=False)
        return model, report
    raise ValueError(f"unknown solver {solver!r}")


@dataclass
class SweepCell:
    eta: float
    repeat: int
    fold: int
    auc: float = math.nan
    neutrality: float = math.nan
    train_relaxed_neutrality: float = math.nan
    risk_gap: float = math.nan
    neutrality_gap: float = math.nan
    converged: bool = False
    audit_ok: bool = True
    error: str = ""


@dataclass
class SweepRow:
    eta: float
    lam: float
    mean_auc: float
    std_auc: float
    mean_neutrality: float
    std_neutrality: float
    mean_risk_gap: float
    mean_neutrality_gap: float
    mean_train_relaxed_neutrality: float
    audit_violations: int
    failures: int


ROW_COLUMNS = [f.name for f in fields(SweepRow)]


@dataclass
class SweepResult:
    rows: list[SweepRow]
    cells: list[SweepCell] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "rows": [asdict(r) for r in self.rows],
            "cells": [asdict(c) for c in self.cells],
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(ROW_COLUMNS)
            for r in self.rows:
                w.writerow([fmt9(getattr(r, c)) for c in ROW_COLUMNS])

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(round9(self.to_dict()), fh, indent=2, sort_keys=True)
            fh.write("\n")


def fmt9(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".9g")
    return str(x)


def round9(obj):
    """Round every float to 9 significant digits; NaN and inf become strings."""
    if isinstance(obj, dict):
        return {k: round9(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round9(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(format(x, ".9g")) if math.isfinite(x) else str(x)
    if isinstance(obj, np.ndarray):
        return round9(obj.tolist())
    return obj


def _nanstat(values, fn) -> float:
    arr = np.asarray(values, dtype=float)
    arr = arr[~np.isnan(arr)]
    return float(fn(arr)) if arr.size else math.nan


def evaluate_fold(data: Dataset, train_idx, test_idx, hp: Hyperparams, solver: Solver,
                  kernel: KernelSpec, eps: float, subgrad: SubgradConfig, cell: SweepCell) -> SweepCell:
    train, test = data.subset(train_idx), data.subset(test_idx)
    try:
        model, report = fit_model(train, hp, solver, kernel, eps, subgrad)
    except Exception as exc:  # recorded per cell, the sweep carries on
        cell.error = f"{type(exc).__name__}: {exc}"
        return cell
    cell.converged = bool(report.converged)
    f_test = model.decision_function(test.X)
    try:
        cell.auc = auc(f_test, test.y)
    except ValueError:
        pass  # single-class test fold
    cell.neutrality = sign_neutrality(model, test).risk
    cell.train_relaxed_neutrality = relaxed_neutrality(model, train).c_max
    cell.risk_gap, cell.neutrality_gap = generalization_gap(model, train, test)
    if hp.eta > 0:
        cell.audit_ok = cell.train_relaxed_neutrality <= corollary_bound(hp) + AUDIT_SLACK
    return cell


def run_sweep(
    data: Dataset,
    eta_grid: Sequence[float] = DEFAULT_ETA_GRID,
    hp_base: Hyperparams = Hyperparams(),
    solver: Solver = "primal",
    k: int = 5,
    repeats: int = 10,
    seed: int = 0,
    kernel: KernelSpec = KernelSpec(),
    eps: float = 1e-3,
    subgrad: SubgradConfig = SubgradConfig(),
) -> SweepResult:
    """Repeated k-fold evaluation of the neutral SVM along an eta grid, lam fixed."""
    if len(eta_grid) == 0:
        raise ValueError("eta grid is empty")
    splits = repeated_kfold(data, k, repeats, seed)
    rows, cells = [], []
    for eta in eta_grid:
        hp = Hyperparams(hp_base.lam, float(eta))
        block = [
            evaluate_fold(data, tr, te, hp, solver, kernel, eps, subgrad, SweepCell(float(eta), r, j))
            for r, folds in enumerate(splits)
            for j, (tr, te) in enumerate(folds)
        ]
        cells.extend(block)
        rows.append(SweepRow(
            eta=float(eta),
            lam=hp.lam,
            mean_auc=_nanstat([c.auc for c in block], np.mean),
            std_auc=_nanstat([c.auc for c in block], np.std),
            mean_neutrality=_nanstat([c.neutrality for c in block], np.mean),
            std_neutrality=_nanstat([c.neutrality for c in block], np.std),
            mean_risk_gap=_nanstat([c.risk_gap for c in block], np.mean),
            mean_neutrality_gap=_nanstat([c.neutrality_gap for c in block], np.mean),
            mean_train_relaxed_neutrality=_nanstat([c.train_relaxed_neutrality for c in block], np.mean),
            audit_violations=sum(not c.audit_ok for c in block),
            failures=sum(bool(c.error) for c in block),
        ))
    config = {
        "eta_grid": [float(e) for e in eta_grid], "lambda": hp_base.lam, "solver": solver,
        "folds": k, "repeats": repeats, "seed": seed, "kernel": kernel.to_dict(), "eps": eps,
        "fold_statistic": "mean over folds",
    }
    return SweepResult(rows, cells, config)


def pareto_filter(rows: Sequence[SweepRow]) -> list[SweepRow]:
    """Rows not dominated in (higher mean AUC, lower mean neutrality)."""
    ok = [r for r in rows if not (math.isnan(r.mean_auc) or math.isnan(r.mean_neutrality))]

    def dominates(a, b):
        return (a.mean_auc >= b.mean_auc and a.mean_neutrality <= b.mean_neutrality
                and (a.mean_auc > b.mean_auc or a.mean_neutrality < b.mean_neutrality))

    return [r for r in ok if not any(dominates(o, r) for o in ok)]


def scatter_svg(rows: Sequence[SweepRow], keep: Sequence[SweepRow] = (), width=480, height=360) -> str:
    """Static scatter of (mean neutrality, mean AUC); kept rows filled, dominated ones hollow."""
    pts = [r for r in rows if not (math.isnan(r.mean_auc) or math.isnan(r.mean_neutrality))]
    kept = {id(r) for r in keep}
    pad = 50
    xs = [r.mean_neutrality for r in pts] or [0.0]
    ys = [r.mean_auc for r in pts] or [0.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    x1, y1 = (x1 if x1 > x0 else x0 + 1.0), (y1 if y1 > y0 else y0 + 1.0)

    def px(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def py(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle">neutrality C_sgn</text>',
        f'<text x="14" y="{height / 2:.1f}" transform="rotate(-90 14 {height / 2:.1f})" '
        f'text-anchor="middle">AUC</text>',
        f'<text x="{pad}" y="{height - pad + 16}" text-anchor="middle">{x0:.3g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 16}" text-anchor="middle">{x1:.3g}</text>',
        f'<text x="{pad - 6}" y="{height - pad}" text-anchor="end">{y0:.3g}</text>',
        f'<text x="{pad - 6}" y="{pad}" text-anchor="end">{y1:.3g}</text>',
    ]
    for r in pts:
        fill = "black" if id(r) in kept else "none"
        out.append(
            f'<circle cx="{px(r.mean_neutrality):.2f}" cy="{py(r.mean_auc):.2f}" r="4" '
            f'stroke="black" fill="{fill}"><title>eta={r.eta:.9g}</title></circle>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- sample-size curves


@dataclass
class GapRow:
    n: int
    eta: float
    lam: float
    mean_abs_risk_gap: float
    std_abs_risk_gap: float
    mean_abs_neutrality_gap: float
    std_abs_neutrality_gap: float


GAP_COLUMNS = [f.name for f in fields(GapRow)]


def gap_curve(
    ns: Sequence[int],
    etas: Sequence[float] = (0.1, 1.0, 10.0),
    k: int = 5,
    repeats: int = 10,
    seed: int = 0,
    lam_per_sample: float = 0.05,
    d: int = 10,
    subgrad: SubgradConfig = SubgradConfig(),
) -> list[GapRow]:
    """Train/test gaps of risk and relaxed neutrality on synthetic data of growing size.

    lam = lam_per_sample * n. Each cell averages |gap| over the test folds
    of ``repeats`` reshuffled k-fold runs.
    """
    rows = []
    for n in ns:
        data = gen_synthetic(SynthConfig(n=int(n), d=d, seed=seed))
        splits = repeated_kfold(data, k, repeats, seed)
        hp0 = Hyperparams(lam_per_sample * n)
        for eta in etas:
            hp = Hyperparams(hp0.lam, float(eta))
            rg, ng = [], []
            for folds in splits:
                for tr, te in folds:
                    train, test = data.subset(tr), data.subset(te)
                    model, _ = solve_primal(train, hp, subgrad, record_trace=False)
                    g = generalization_gap(model, train, test)
                    rg.append(abs(g.risk_gap))
                    ng.append(abs(g.neutrality_gap))
            rows.append(GapRow(int(n), float(eta), hp.lam, float(np.mean(rg)), float(np.std(rg)),
                               float(np.mean(ng)), float(np.std(ng))))
    return rows


def gap_slopes(rows: Sequence[GapRow]) -> dict[float, dict[str, float]]:
    """Per-eta log-log slopes of the mean |gaps| against n."""
    out = {}
    for eta in sorted({r.eta for r in rows}):
        sel = sorted((r for r in rows if r.eta == eta), key=lambda r: r.n)
        ns = [r.n for r in sel]
        out[eta] = {
            "risk": loglog_slope(ns, [r.mean_abs_risk_gap for r in sel]),
            "neutrality": loglog_slope(ns, [r.mean_abs_neutrality_gap for r in sel]),
        }
    return out
