"""Compare the numba and numpy tree kernels.

Times single Gini and Newton tree fits, batch prediction, and a full GBDT fit
on synthetic MDR features, and checks that both backends build identical trees.

    python3 benchmarks/bench_kernels.py --n 4000 --repeat 3
"""
import argparse
import time

import numpy as np

from mdrml import classifiers
from mdrml.data_model import clean_csv, load_schema
from mdrml.features import encode_dataset, load_family_map
from mdrml.synth import SynthConfig, generate
from mdrml.trees import TreeParams, bin_features, fit_gini_tree, fit_newton_tree, kernels


def dataset(n, seed):
    schema = load_schema()
    raw, _ = generate(SynthConfig(n_records=n, seed=seed, noise_rate=0.05), schema)
    records, _ = clean_csv(raw, schema)
    return encode_dataset(records, load_family_map(), schema)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ds = dataset(args.n, args.seed)
    X, y = ds.X, ds.y.astype(np.float64)
    w = np.ones_like(y)
    binned = bin_features(X)
    p = np.full_like(y, y.mean())
    g, h = p - y, p * (1 - p)
    deep = TreeParams(max_depth=None)
    newton = TreeParams(max_depth=6, reg_lambda=1.0)
    gbdt = classifiers.ClassifierSpec("gbdt_level_wise", {"n_rounds": 50}, args.seed)

    if kernels.numba_backend is None:
        raise SystemExit("numba is not installed; nothing to compare")
    # warm up the JIT so compile time is not charged to the numba column
    fit_gini_tree(X[:50], y[:50], w[:50], deep, backend="numba").predict(X[:5], backend="numba")
    fit_newton_tree(X[:50], g[:50], h[:50], newton, backend="numba")

    rows = []
    trees = {}
    for name in ("numba", "numpy"):
        t_gini, tree = best_of(lambda: fit_gini_tree(X, y, w, deep, binned=binned, backend=name),
                               args.repeat)
        t_newton, _ = best_of(lambda: fit_newton_tree(X, g, h, newton, binned=binned,
                                                      backend=name), args.repeat)
        t_pred, _ = best_of(lambda: tree.predict(X, backend=name), args.repeat)
        saved = kernels.BACKEND
        kernels.BACKEND = kernels.get_backend(name)
        try:
            t_gbdt, _ = best_of(lambda: classifiers.fit(gbdt, X, y), 1)
        finally:
            kernels.BACKEND = saved
        trees[name] = tree
        rows.append((name, t_gini, t_newton, t_pred, t_gbdt))

    same = trees["numba"].to_dict() == trees["numpy"].to_dict()
    print(f"n={args.n} d={X.shape[1]} repeat={args.repeat} identical_trees={same}")
    print(f"{'backend':<8}{'gini_fit':>12}{'newton_fit':>12}{'predict':>12}{'gbdt_50':>12}")
    for name, *ts in rows:
        print(f"{name:<8}" + "".join(f"{t * 1e3:>10.1f}ms" for t in ts))
    (_, *a), (_, *b) = rows
    print("speedup " + "".join(f"{y_ / x_:>11.1f}x" for x_, y_ in zip(a, b)))


if __name__ == "__main__":
    main()
