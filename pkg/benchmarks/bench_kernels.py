"""Compiled vs pure-Python kernels.

Times the general Ricci contraction, the diagonal closed-form right-hand
sides and complete flow integrations under each available backend.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""
import argparse
import json
import timeit

import numpy as np

from nilflow import kernels
from nilflow.algebra import heisenberg, unitriangular
from nilflow.curvature import ricci_general
from nilflow.experiments import random_diag_metric, random_full_metric
from nilflow.flow import FlowProblem, integrate


def _best(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def ricci_cases():
    for name, spec in [("heisenberg(1)", heisenberg(1)), ("heisenberg(3)", heisenberg(3)),
                       ("heisenberg(7)", heisenberg(7)), ("unitriangular(4)", unitriangular(4)),
                       ("unitriangular(6)", unitriangular(6)), ("unitriangular(10)", unitriangular(10))]:
        yield name, "diagonal", spec, random_diag_metric(spec.dim, 1)
        yield name, "full", spec, random_full_metric(spec.dim, 1)


def bench_ricci(repeat):
    rows = []
    for name, kind, spec, g in ricci_cases():
        number = 200 if spec.dim <= 15 else 10
        row = {"case": f"ricci {name} {kind}", "dim": spec.dim}
        for b in sorted(kernels.AVAILABLE):
            row[b] = _best(lambda: ricci_general(spec, g, b), repeat, number)
        rows.append(row)
    return rows


def bench_diag_rhs(repeat):
    rows = []
    for n in (2, 8, 32):
        g = np.asarray(random_diag_metric(2 * n + 1, 2).diag)
        row = {"case": f"heisenberg_diag n={n}", "dim": 2 * n + 1}
        for b, mod in sorted(kernels.AVAILABLE.items()):
            row[b] = _best(lambda: kernels.heisenberg_ricci_diag(n, g, mod), repeat, 2000)
        rows.append(row)
    for n in (4, 10, 20):
        g = np.asarray(random_diag_metric(n * (n - 1) // 2, 3).diag)
        row = {"case": f"unitriangular_diag n={n}", "dim": n * (n - 1) // 2}
        for b, mod in sorted(kernels.AVAILABLE.items()):
            row[b] = _best(lambda: kernels.unitriangular_ricci_diag(n, g, mod), repeat, 500)
        rows.append(row)
    return rows


def bench_integrate(repeat):
    problems = [
        ("general heisenberg(2) t<=10", FlowProblem(heisenberg(2), random_full_metric(5, 4), (0.0, 10.0))),
        ("general unitriangular(4) t<=10", FlowProblem(unitriangular(4), random_full_metric(6, 5), (0.0, 10.0))),
        ("unitriangular_diag n=10 t<=100", FlowProblem(unitriangular(10), np.ones(45), (0.0, 100.0),
                                                        rhs_mode="unitriangular_diag")),
    ]
    rows = []
    for name, prob in problems:
        row = {"case": f"integrate {name}", "dim": prob.algebra.dim}
        for b in sorted(kernels.AVAILABLE):
            with kernels.use_backend(b):
                row[b] = _best(lambda: integrate(prob), max(1, repeat // 2), 1)
        rows.append(row)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write the table as JSON")
    args = ap.parse_args(argv)

    backends = sorted(kernels.AVAILABLE)
    rows = bench_ricci(args.repeat) + bench_diag_rhs(args.repeat) + bench_integrate(args.repeat)
    head = f"{'case':44s} {'dim':>4s} " + " ".join(f"{b:>12s}" for b in backends)
    if "cython" in backends:
        head += f" {'speedup':>8s}"
    print(f"default backend: {kernels.BACKEND}")
    print(head)
    for r in rows:
        line = f"{r['case']:44s} {r['dim']:4d} " + " ".join(f"{r[b] * 1e6:10.1f}us" for b in backends)
        if "cython" in backends:
            line += f" {r['python'] / r['cython']:7.2f}x"
        print(line)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
