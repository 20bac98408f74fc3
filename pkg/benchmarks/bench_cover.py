"""Compiled vs pure-Python cover kernel on the instances the exponent series produces.

Run ``python benchmarks/bench_cover.py`` after building the extension.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from gaugechain import cover
from gaugechain.interaction import GeneratorH, gauge_ising
from gaugechain.testing import _classical_vectors


def gauge_ising_instance(n: int):
    gen = GeneratorH.normalize(np.diag([1.0, -1.0]))
    v = _classical_vectors(gauge_ising(), gen, n, 2)
    p, w, c = cover.group_items(v["omega"], v["phi"])
    return p, w, c, 0.9


def random_instance(m: int, seed: int):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(m))
    w = rng.dirichlet(np.ones(m))
    c = rng.integers(1, 6, m)
    return p, w, c, 0.9 * float(p @ c)


def correlated_instances(m: int, count: int = 5):
    """Strongly correlated items (``p = w + const``): the classic hard family for branch and bound."""
    out = []
    for s in range(count):
        rng = np.random.default_rng(100 * m + s)
        w = rng.uniform(1.0, 1000.0, m)
        p = w + 100.0
        out.append((p, w, np.ones(m, dtype=np.int64), 0.5 * float(p.sum())))
    return out


def timed(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=1)
    args = ap.parse_args(argv)
    if cover.BACKEND != "cython":
        print("compiled kernel not built; only the Python timings are meaningful")
    cases = [(f"gauge_ising n={n}", [gauge_ising_instance(n)]) for n in (8, 10, 12)]
    cases += [(f"random m={m}", [random_instance(m, m)]) for m in (20, 40)]
    cases += [(f"correlated m={m} x5", correlated_instances(m)) for m in (40, 50, 60)]
    print(f"{'instance':20s} {'python [s]':>12s} {'cython [s]':>12s} {'speedup':>8s}  value")
    for name, group in cases:
        vals, times = {}, {}
        for be in ("python", "cython"):
            if be == "cython" and cover.BACKEND != "cython":
                continue
            vals[be] = sum(cover.min_weight_cover(*inst, backend=be)[0] for inst in group)
            times[be] = sum(timed(lambda: cover.min_weight_cover(*inst, backend=be), args.repeat)
                            for inst in group)
        if "cython" in times:
            assert abs(vals["python"] - vals["cython"]) <= 1e-12 * max(1.0, abs(vals["python"]))
            print(f"{name:20s} {times['python']:12.4f} {times['cython']:12.4f} "
                  f"{times['python'] / times['cython']:8.1f}  {vals['cython']:.12g}")
        else:
            print(f"{name:20s} {times['python']:12.4f} {'-':>12s} {'-':>8s}  {vals['python']:.12g}")


if __name__ == "__main__":
    main()
