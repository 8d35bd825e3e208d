"""Time the compiled and numpy kernels on the same workloads.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""
import argparse
import json
import sys
import timeit

import numpy as np

from vfnn import _backend
from vfnn.core import init_params
from vfnn.data import GenSpec, generate

# (label, S, N, h, m, epochs)
CASES = [
    ("paper default S=2 N=1 m=200", 2, 1, 1.0, 200, 500),
    ("deeper flow S=4 N=8 m=200", 4, 8, 0.125, 200, 200),
    ("large batch S=8 N=2 m=2000", 8, 2, 0.5, 2000, 50),
]


def _args(S, N, h, m):
    ds = generate(GenSpec("circles", m, 0.1, 0))
    theta, head = init_params(2, S, 0)
    X, y = ds.points, ds.labels.astype(np.float64)
    return X, y, theta.centers, theta.directions, head.weights, head.bias, h, N


def bench(repeat: int):
    names = _backend.available_backends()
    rows = []
    for label, S, N, h, m, epochs in CASES:
        args = _args(S, N, h, m)
        row = {"case": label, "epochs": epochs}
        for name in names:
            k = _backend.get_kernels(name)
            t = min(timeit.repeat(lambda: k.train_loop(*args, 0.0005, 0.3, epochs), number=1, repeat=repeat))
            row[name] = t / epochs * 1e6
        rows.append(row)
    return names, rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--json", default=None)
    a = p.parse_args(argv)
    names, rows = bench(a.repeat)
    print(f"{'case':32s}" + "".join(f"{n + ' us/epoch':>20s}" for n in names) + ("   speedup" if len(names) > 1 else ""))
    for r in rows:
        line = f"{r['case']:32s}" + "".join(f"{r[n]:20.1f}" for n in names)
        if "cython" in names and "python" in names:
            line += f"   {r['python'] / r['cython']:7.1f}x"
        print(line)
    if a.json:
        with open(a.json, "w") as fh:
            json.dump(rows, fh, indent=1)
    if "cython" not in names:
        print("compiled extension not built; only the numpy fallback was timed", file=sys.stderr)


if __name__ == "__main__":
    main()
