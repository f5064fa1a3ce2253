"""Primal subgradient vs dual SMO on random small instances, with the duality gap of each solve."""

import argparse
import time

import numpy as np

from nerm.core import Dataset, Hyperparams, nerm_objective
from nerm.dual import solve_smo
from nerm.primal import solve_primal


def instances(count, seed):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n, d = int(rng.integers(5, 51)), int(rng.integers(2, 11))
        X = rng.normal(size=(n, d))
        y = np.where(X @ rng.normal(size=d) + 0.2 * rng.normal(size=n) >= 0, 1.0, -1.0)
        v = np.where(X[:, 0] + rng.normal(size=n) >= 0, 1.0, -1.0)
        yield Dataset(X, y, v), Hyperparams(float(rng.choice([0.1, 1.0])), float(rng.choice([0.1, 1.0, 10.0])))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--eps", type=float, default=1e-4)
    args = ap.parse_args()

    t0, worst = time.perf_counter(), 0.0
    for data, hp in instances(args.count, args.seed):
        primal, _ = solve_primal(data, hp, record_trace=False)
        dual, rep, _ = solve_smo(data, hp=hp, eps=args.eps, record_trace=False)
        a, b = nerm_objective(primal, data, hp), nerm_objective(dual, data, hp)
        rel = abs(a - b) / max(abs(a), abs(b))
        worst = max(worst, rel)
        print(f"n={data.n:2d} d={data.d:2d} lam={hp.lam:<4g} eta={hp.eta:<4g} primal {a:.6f} "
              f"dual-model {b:.6f} rel {rel:.1e} gap {rep.extra['duality_gap']:.1e} split {rep.extra['split']:.4f}")
    print(f"max relative difference {worst:.2e} in {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
