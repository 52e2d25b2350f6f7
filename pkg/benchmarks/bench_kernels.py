"""Time the stencil kernels on both backends and a short model run.

    python3 benchmarks/bench_kernels.py [--repeat 50]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from nlthermo import _kernels
from nlthermo import cahn_hilliard as ch
from nlthermo.fields import Grid, div, grad, laplacian


def _time(fn, repeat):
    fn()  # warm-up (triggers compilation on the numba path)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def cases():
    rng = np.random.default_rng(0)
    g1 = Grid.regular(4096)
    g2 = Grid.regular(256, dims=2)
    f1 = rng.standard_normal(g1.shape)
    f2 = rng.standard_normal(g2.shape)
    v2 = rng.standard_normal(g2.field_shape(1))
    p = ch.ChParams(0.01, 1.0, 1.0, 0.5)
    s = ch.random_state(Grid.regular(128, dims=2), 0.01, 0)
    dt = ch.stable_dt(p, s.grid)
    return {
        "grad 1D n=4096": lambda: grad(f1, g1),
        "grad 2D 256^2": lambda: grad(f2, g2),
        "div 2D 256^2": lambda: div(v2, g2),
        "laplacian 2D 256^2": lambda: laplacian(f2, g2),
        "CH step 2D 128^2": lambda: ch.ch_step(s, p, dt),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args(argv)
    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    table = {}
    for name in backends:
        _kernels.set_backend(name)
        for label, fn in cases().items():
            table.setdefault(label, {})[name] = _time(fn, args.repeat)
    print(f"{'case':24s}" + "".join(f"{b:>14s}" for b in backends) + ("   speed-up" if len(backends) > 1 else ""))
    for label, row in table.items():
        line = f"{label:24s}" + "".join(f"{row[b] * 1e3:12.3f}ms" for b in backends)
        if len(backends) > 1:
            line += f"   {row['numpy'] / row['numba']:8.2f}x"
        print(line)


if __name__ == "__main__":
    main()
