"""Compare the compiled and pure-Python jet kernels.

Usage: python3 benchmarks/bench_jetcore.py [--repeat 5] [--json out.json]

Each kernel is timed on the same random inputs under both backends, and the
results are checked to agree before any timing is reported.  The last row
times an end-to-end identity suite (``validate toda-physical-3``).
"""

from __future__ import annotations

import argparse
import json
import timeit

import numpy as np

from pnalgebroid import jets, toda
from pnalgebroid.validation import validate_example


def _cases(rng):
    out = []
    for n, K, r in ((5, 2, 6), (6, 3, 6), (4, 4, 8)):
        sp = jets.space(n, K)
        a = jets.Jet(sp, rng.standard_normal((64, sp.size)))
        b = jets.Jet(sp, rng.standard_normal((64, sp.size)))
        M = jets.Jet(sp, rng.standard_normal((r, r, sp.size)) + 4 * np.eye(r)[..., None] * (np.arange(sp.size) == 0))
        B = jets.Jet(sp, rng.standard_normal((r, r, sp.size)))
        tag = f"n={n} K={K} r={r}"
        out.append((f"mul x64    {tag}", lambda a=a, b=b: a * b))
        out.append((f"matmul     {tag}", lambda M=M, B=B: jets.matmul(M, B)))
        out.append((f"solve      {tag}", lambda M=M, B=B: jets.jet_linear_solve(M, B)))
        out.append((f"reciprocal {tag}", lambda a=a: 1.0 / (a + 10.0)))
    return out


def _run(fn, repeat):
    number = max(1, int(0.05 / max(timeit.timeit(fn, number=1), 1e-7)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", dest="json_path")
    ap.add_argument("--skip-suite", action="store_true", help="Skip the end-to-end row.")
    args = ap.parse_args(argv)

    try:
        jets.use_backend("cython")
    except ImportError:
        print("compiled backend unavailable; build it with `pip install -e . --no-build-isolation`")
        return 1

    rng = np.random.default_rng(0)
    rows = []
    for name, fn in _cases(rng):
        res, times = {}, {}
        for backend in ("cython", "python"):
            jets.use_backend(backend)
            res[backend] = fn().c
            times[backend] = _run(fn, args.repeat)
        err = float(np.max(np.abs(res["cython"] - res["python"])))
        if err > 1e-9 * max(1.0, float(np.max(np.abs(res["python"])))):
            raise SystemExit(f"backends disagree on {name}: {err:.3e}")
        rows.append({"case": name, "cython_s": times["cython"], "python_s": times["python"], "max_diff": err})

    if not args.skip_suite:
        times = {}
        for backend in ("cython", "python"):
            jets.use_backend(backend)
            ex = toda.example("toda-physical-3")
            t = timeit.default_timer()
            ok = validate_example(ex, points=10).passed
            times[backend] = timeit.default_timer() - t
            if not ok:
                raise SystemExit(f"validate failed under the {backend} backend")
        rows.append({"case": "validate toda-physical-3 (10 points)", "cython_s": times["cython"],
                     "python_s": times["python"], "max_diff": 0.0})
    jets.use_backend("cython")

    width = max(len(r["case"]) for r in rows)
    print(f"{'case':<{width}}  {'cython':>11}  {'python':>11}  {'speedup':>8}")
    for r in rows:
        print(f"{r['case']:<{width}}  {r['cython_s'] * 1e3:9.3f}ms  {r['python_s'] * 1e3:9.3f}ms  "
              f"{r['python_s'] / r['cython_s']:7.1f}x")
    if args.json_path:
        with open(args.json_path, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
