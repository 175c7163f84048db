"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Each case is run once untimed (numba compiles on first call), then timed
``--repeat`` times; the best time is reported. Outputs of the two backends are
compared so a speedup is never reported for a kernel that disagrees.
"""
import argparse
import json
import time

import numpy as np

from dprem.kernels import available_backends, backend


def _cases():
    rng = np.random.default_rng(0)
    codes = rng.integers(0, 4, size=(3000, 12)).astype(np.int64)
    return [
        ("field_grid d=2 N=40", lambda k: k.field_grid(7, 0, 0, 2, 40)),
        ("energies_range d=1 N=20 (2^20 paths)",
         lambda k: k.energies_range(backend("numpy").field_grid(7, 0, 0, 1, 20), 1, 20, 0, 1 << 20)),
        ("energies_range d=2 N=9 (4^9 paths)",
         lambda k: k.energies_range(backend("numpy").field_grid(7, 0, 0, 2, 9), 2, 9, 0, 4**9)),
        ("coincidence_histogram 3000x12", lambda k: k.coincidence_histogram(codes)),
        ("walk_returns d=2 N=100 horizon=1000 (2e4 walks)", lambda k: k.walk_returns(3, 2, 100, 1000, 0, 20000)),
        ("visit_histogram d=1 horizon=20", lambda k: k.visit_histogram(1, 20, 0, 2**20)),
    ]


def _best(fn, repeat):
    out = fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(np.asarray(a), np.asarray(b), rtol=1e-12, atol=1e-12)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", default=None)
    args = ap.parse_args(argv)

    names = available_backends()
    rows = []
    for label, case in _cases():
        row = {"case": label}
        outs = {}
        for name in names:
            t, outs[name] = _best(lambda: case(backend(name)), args.repeat)
            row[name] = t
        if len(outs) == 2:
            row["agree"] = bool(_same(outs["numba"], outs["numpy"]))
            row["speedup"] = row["numpy"] / row["numba"]
        rows.append(row)

    print(f"{'case':48s} " + " ".join(f"{n:>10s}" for n in names) + "   speedup  agree")
    for r in rows:
        cells = " ".join(f"{r[n]:10.4f}" for n in names)
        extra = f"  {r['speedup']:8.1f}x  {r['agree']}" if "speedup" in r else ""
        print(f"{r['case']:48s} {cells}{extra}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
