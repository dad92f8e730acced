#!/usr/bin/env python3
"""Benchmark the compiled integration kernels against the pure-Python ones.

Runs the same workloads through both backends and reports wall time,
accepted steps, and the speedup. The compiled extension must be built
(``python setup.py build_ext --inplace``) for the comparison column.
"""

import dataclasses
import time

import numpy as np

import flocsim as fs
from flocsim.backend import compiled_available, simulate
from flocsim.numerics import IntegratorConfig, integrate


def _time(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def workloads():
    parva = fs.FullModel(D=1.0, S_in=0.9, D0=1.0, D1=0.5,
                         f=fs.Monod(2.0, 1.0), g=fs.Monod(1.5, 0.8),
                         kinetics=fs.TotalDensity(4.0, 1.0))
    multi = fs.MultiSpeciesModel(
        D=1.0, S_in=0.9,
        f=(fs.Monod(2.0, 0.3), fs.Monod(2.0, 0.4), fs.Monod(2.0, 0.5)),
        g=(fs.Monod(1.5, 2.0), fs.Monod(1.5, 3.0), fs.Monod(1.5, 2.6)),
        D0=(1.0, 1.0, 1.0), D1=(0.5, 0.5, 0.5),
        A=np.diag([4.0, 4.0, 4.0]), B=np.array([1.0, 1.0, 1.0]))
    reduced = fs.reduce(parva)
    yield ("full 3-compartment, eps=1e-2, T=20",
           dataclasses.replace(parva, epsilon=1e-2).system(),
           np.array([0.9, 0.1, 0.5]), (0.0, 20.0))
    yield ("full 3-compartment, eps=1e-3, T=20 (stiff sweep point)",
           dataclasses.replace(parva, epsilon=1e-3).system(),
           np.array([0.9, 0.1, 0.5]), (0.0, 20.0))
    yield ("reduced 2-d, T=500 (basin sampling run)",
           reduced.system(1.0, 0.9), np.array([0.9, 0.2]), (0.0, 500.0))
    yield ("3-species full, eps=1e-2, T=20",
           dataclasses.replace(multi, epsilon=1e-2).system(),
           np.array([0.9, 0.1, 0.1, 0.1, 0.2, 0.2, 0.2]), (0.0, 20.0))


def main():
    cfg = IntegratorConfig()
    print(f"compiled extension available: {compiled_available()}")
    header = f"{'workload':55s} {'pure':>9s} {'compiled':>9s} {'speedup':>8s} {'steps':>8s}"
    print(header)
    print("-" * len(header))
    for name, system, y0, t_span in workloads():
        t_pure, tr_pure = _time(lambda: integrate(system.rhs, y0, t_span, cfg))
        if compiled_available():
            t_comp, tr_comp = _time(lambda: simulate(system, y0, t_span, cfg))
            grid = np.linspace(t_span[0], t_span[1], 200)
            drift = float(np.max(np.abs(tr_comp.sample(grid) - tr_pure.sample(grid))))
            speed = f"{t_pure / t_comp:7.1f}x"
            comp = f"{t_comp * 1e3:7.1f}ms"
            assert drift < 1e-8, f"backend drift {drift}"
        else:
            comp, speed = "-", "-"
        print(f"{name:55s} {t_pure * 1e3:7.1f}ms {comp:>9s} {speed:>8s} "
              f"{tr_pure.naccept:8d}")


if __name__ == "__main__":
    main()
