"""Command-line entry point: ``nerm {gen-synth,train,predict,sweep,bound-check}``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .core import (
    Dataset,
    Hyperparams,
    LinearModel,
    empirical_risk,
    nerm_objective,
    relaxed_neutrality,
    sign_neutrality,
)
from .data import (
    IngestError,
    SynthConfig,
    gen_synthetic,
    ingest_csv,
    load_schema,
    repeated_kfold,
    synthetic_schema,
    write_dataset_csv,
)
from .dual import KernelModel
from .eval import (
    DEFAULT_ETA_GRID,
    GAP_COLUMNS,
    fmt9,
    round9,
    fit_model,
    gap_curve,
    gap_slopes,
    pareto_filter,
    run_sweep,
    scatter_svg,
)
from .kernels import KernelSpec
from .primal import SubgradConfig, solve_primal
from .theory import corollary_bound, neutrality_bound

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGED = 0, 1, 2
GAP_CURVE_NS = (125, 250, 500, 1000, 2000, 4000, 8000)


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _float_list(s: str) -> list[float]:
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {s!r}") from None


def _int_list(s: str) -> list[int]:
    return [_positive_int(x) for x in s.split(",") if x.strip()]


def _dump_json(obj, path=None) -> None:
    text = json.dumps(round9(obj), indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _write_out_path(path) -> Path:
    p = Path(path)
    if not p.parent.exists():
        raise UsageError(f"{p}: output directory does not exist")
    return p


def _load_data(args) -> Dataset:
    path = Path(args.data)
    if not path.is_file():
        raise UsageError(f"{path}: no such file")
    schema = load_schema(args.schema) if args.schema else synthetic_schema()
    return ingest_csv(path, schema)


def _kernel(args) -> KernelSpec:
    return KernelSpec(args.kernel, gamma=args.gamma, degree=args.degree, coef0=args.coef0)


def _subgrad(args) -> SubgradConfig:
    return SubgradConfig(max_iters=args.max_iters)


# ---------------------------------------------------------------- model files


def model_to_dict(model, hp: Hyperparams) -> dict:
    # parameters are stored at full precision so predictions replay exactly
    base = {"lambda": hp.lam, "eta": hp.eta}
    if isinstance(model, LinearModel):
        return {"type": "linear", "w": model.w.tolist(), "b": model.b, **base}
    return {
        "type": "kernel",
        "kernel": model.kernel.to_dict(),
        "coefficients": model.coefficients.tolist(),
        "support": model.support.tolist(),
        "bias": model.bias,
        **base,
    }


def model_from_dict(d: dict):
    if d.get("type") == "linear":
        return LinearModel(np.array(d["w"], dtype=float), d["b"])
    if d.get("type") == "kernel":
        support = np.array(d["support"], dtype=float).reshape(len(d["coefficients"]), -1)
        return KernelModel(np.array(d["coefficients"], dtype=float), support, float(d["bias"]),
                           KernelSpec.from_dict(d["kernel"]), float(d["lambda"]))
    raise ValueError("unknown model type")


def _training_summary(model, data: Dataset, hp: Hyperparams) -> dict:
    rel = relaxed_neutrality(model, data)
    sgn = sign_neutrality(model, data)
    out = {
        "objective": nerm_objective(model, data, hp),
        "risk": empirical_risk(model, data),
        "sign_neutrality": sgn.risk,
        "relaxed_neutrality": {"c_plus": rel.c_plus, "c_minus": rel.c_minus, "c_max": rel.c_max},
    }
    if hp.eta > 0:
        bound = corollary_bound(hp)
        out["corollary_audit"] = {"bound": bound, "value": rel.c_max, "holds": bool(rel.c_max <= bound)}
    return out


# ---------------------------------------------------------------- commands


def cmd_gen_synth(args) -> int:
    out = _write_out_path(args.out)
    cfg = SynthConfig(n=args.n, d=args.d, seed=args.seed, noise_scale=args.noise_scale)
    write_dataset_csv(gen_synthetic(cfg), out)
    meta = {"command": "gen-synth", "config": {"n": cfg.n, "d": cfg.d, "seed": cfg.seed,
                                              "noise_scale": cfg.noise_scale}}
    _dump_json(meta, out.with_name(out.name + ".json"))
    return EXIT_OK


def cmd_train(args) -> int:
    out = _write_out_path(args.out)
    data = _load_data(args)
    hp = Hyperparams(args.lam, args.eta)
    model, report = fit_model(data, hp, args.solver, _kernel(args), args.eps, _subgrad(args))
    Path(out).write_text(json.dumps(model_to_dict(model, hp), indent=2, sort_keys=True) + "\n",
                         encoding="utf-8")
    summary = {
        "command": "train",
        "config": {
            "data": str(args.data), "schema": args.schema, "solver": args.solver,
            "kernel": _kernel(args).to_dict(), "lambda": hp.lam, "eta": hp.eta, "eps": args.eps,
            "max_iters": args.max_iters, "seed": args.seed,
        },
        "report": report.to_dict(),
        "training": _training_summary(model, data, hp),
    }
    report_path = Path(args.report) if args.report else out.with_name(out.stem + ".report.json")
    _dump_json(summary, report_path)
    _dump_json({"objective": summary["training"]["objective"], "converged": report.converged})
    return EXIT_OK if report.converged else EXIT_NONCONVERGED


def cmd_predict(args) -> int:
    path = Path(args.model)
    if not path.is_file():
        raise UsageError(f"{path}: no such file")
    spec = json.loads(path.read_text(encoding="utf-8"))
    model = model_from_dict(spec)
    data = _load_data(args)
    f = model.decision_function(data.X)
    if args.out:
        out = _write_out_path(args.out)
        with open(out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["decision", "label"])
            for x in f:
                w.writerow([fmt9(float(x)), 1 if x >= 0 else -1])
    hp = Hyperparams(spec["lambda"], spec["eta"])
    _dump_json({"command": "predict", "config": {"model": str(path), "data": str(args.data),
                                                 "seed": args.seed},
                "metrics": _training_summary(model, data, hp)})
    return EXIT_OK


def cmd_sweep(args) -> int:
    out = _write_out_path(args.out)
    if args.data:
        data = _load_data(args)
    else:
        data = gen_synthetic(SynthConfig(n=args.n, d=args.d, seed=args.seed))
    grid = args.etas if args.etas is not None else list(DEFAULT_ETA_GRID)
    res = run_sweep(data, grid, Hyperparams(args.lam), args.solver, args.folds, args.repeats,
                    args.seed, _kernel(args), args.eps, _subgrad(args))
    res.config["data"] = str(args.data) if args.data else {"synthetic_n": args.n, "d": args.d}
    kept = pareto_filter(res.rows)
    if args.pareto:
        res.rows = kept
    res.write_csv(out)
    res.write_json(out.with_suffix(".json"))
    if args.svg:
        Path(args.svg).write_text(scatter_svg(res.rows, kept), encoding="utf-8")
    return EXIT_OK if all(r.failures == 0 for r in res.rows) else EXIT_NONCONVERGED


def cmd_bound_check(args) -> int:
    out = _write_out_path(args.out)
    etas = args.etas if args.etas is not None else [0.1, 1.0, 10.0]
    ns = args.ns if args.ns is not None else list(GAP_CURVE_NS)
    subgrad = _subgrad(args)
    rows = gap_curve(ns, etas, args.folds, args.repeats, args.seed, args.lam_per_sample,
                     args.d, subgrad)
    table = []
    for r in rows:
        # bound terms from the first fold of the first shuffle, its test fold as holdout
        data = gen_synthetic(SynthConfig(n=r.n, d=args.d, seed=args.seed))
        tr, te = repeated_kfold(data, args.folds, 1, args.seed)[0][0]
        train, test = data.subset(tr), data.subset(te)
        model, _ = solve_primal(train, Hyperparams(r.lam, r.eta), subgrad, record_trace=False)
        b = neutrality_bound(model, train, delta=args.delta, holdout=test, seed=args.seed)
        table.append({**{c: getattr(r, c) for c in GAP_COLUMNS}, **b.to_dict()})
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        cols = list(table[0])
        w.writerow(cols)
        for row in table:
            w.writerow([fmt9(row[c]) if row[c] is not None else "" for c in cols])
    summary = {
        "command": "bound-check",
        "config": {"ns": ns, "etas": etas, "lam_per_sample": args.lam_per_sample, "d": args.d,
                   "folds": args.folds, "repeats": args.repeats, "delta": args.delta,
                   "seed": args.seed, "max_iters": args.max_iters},
        "rows": table,
        "slopes": {format(k, ".9g"): v for k, v in gap_slopes(rows).items()} if len(ns) > 1 else {},
        "reference_slope": -0.5,
    }
    _dump_json(summary, out.with_suffix(".json"))
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> Parser:
    p = Parser(prog="nerm", description="Neutral SVM training, evaluation and bound checks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=Parser)

    def common(sp, data=True, out_required=True):
        sp.add_argument("--out", required=out_required)
        sp.add_argument("--seed", type=int, default=0)
        if data:
            sp.add_argument("--data")
            sp.add_argument("--schema")

    def solver_flags(sp):
        sp.add_argument("--solver", choices=["primal", "dual"], default="primal")
        sp.add_argument("--kernel", choices=["linear", "rbf", "poly"], default="linear")
        sp.add_argument("--gamma", type=float, default=1.0)
        sp.add_argument("--degree", type=int, default=3)
        sp.add_argument("--coef0", type=float, default=1.0)
        sp.add_argument("--lambda", dest="lam", type=float, default=1.0)
        sp.add_argument("--eta", type=float, default=0.0)
        sp.add_argument("--eps", type=float, default=1e-3)
        sp.add_argument("--max-iters", type=_positive_int, default=20_000,
                        help="subgradient iterations (primal solver)")

    g = sub.add_parser("gen-synth", help="write a synthetic dataset CSV")
    common(g, data=False)
    g.add_argument("--n", type=_positive_int, required=True)
    g.add_argument("--d", type=_positive_int, default=10)
    g.add_argument("--noise-scale", type=float, default=100.0)
    g.set_defaults(func=cmd_gen_synth)

    t = sub.add_parser("train", help="fit a neutral SVM")
    common(t)
    solver_flags(t)
    t.add_argument("--report")
    t.set_defaults(func=cmd_train)

    pr = sub.add_parser("predict", help="apply a model file to a dataset")
    common(pr, out_required=False)
    pr.add_argument("--model", required=True)
    pr.set_defaults(func=cmd_predict)

    s = sub.add_parser("sweep", help="cross-validated eta sweep")
    common(s)
    solver_flags(s)
    s.add_argument("--n", type=_positive_int, default=1000, help="synthetic size when --data is absent")
    s.add_argument("--d", type=_positive_int, default=10)
    s.add_argument("--etas", type=_float_list)
    s.add_argument("--folds", type=_positive_int, default=5)
    s.add_argument("--repeats", type=_positive_int, default=10)
    s.add_argument("--svg")
    s.add_argument("--pareto", action="store_true")
    s.set_defaults(func=cmd_sweep)

    b = sub.add_parser("bound-check", help="sample-size sweep of generalization gaps and bounds")
    common(b, data=False)
    b.add_argument("--ns", type=_int_list)
    b.add_argument("--etas", type=_float_list)
    b.add_argument("--d", type=_positive_int, default=10)
    b.add_argument("--lam-per-sample", type=float, default=0.05)
    b.add_argument("--folds", type=_positive_int, default=5)
    b.add_argument("--repeats", type=_positive_int, default=10)
    b.add_argument("--delta", type=float, default=0.05)
    b.add_argument("--max-iters", type=_positive_int, default=20_000)
    b.set_defaults(func=cmd_bound_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "folds", 2) < 2:
        parser.error("--folds must be at least 2")
    try:
        if getattr(args, "command", None) in ("train", "predict") and not args.data:
            raise UsageError("--data is required")
        return args.func(args)
    except (UsageError, IngestError, OSError, ValueError) as exc:
        print(f"nerm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
