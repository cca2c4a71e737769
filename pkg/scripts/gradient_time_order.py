"""Temporal order of the gradient error at fixed fine h.

The proven gradient bound is first order in k. This measures what the scheme
actually does on smooth data: the H1 error against k with a P3 mesh fine
enough that the spatial part is negligible.
"""
import argparse

import numpy as np

from nlsfem.mesh import FeSpace, build_uniform_mesh
from nlsfem.timestepper import TimeGrid, advance
from nlsfem.verification import builtin_case, eoc, error_h1, error_l2


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--case", default="ms1")
    parser.add_argument("--m", type=int, default=128)
    parser.add_argument("--jitter", type=float, default=0.0)
    args = parser.parse_args()

    case = builtin_case(args.case)
    space = FeSpace(build_uniform_mesh(0, 1, args.m), 3)
    ks, e0, e1 = [], [], []
    for N in (8, 16, 32, 64, 128):
        grid = TimeGrid.perturbed(case.problem.T, N, args.jitter, seed=N)
        U, _ = advance(space, case.problem, grid)
        ks.append(grid.k)
        e0.append(error_l2(space, U, case.problem.exact, case.problem.T))
        e1.append(error_h1(space, U, case.problem.exact, case.problem.T))
    print(f"{'k':>10} {'err_l2':>12} {'err_h1':>12}")
    for k, a, b in zip(ks, e0, e1):
        print(f"{k:10.5f} {a:12.4e} {b:12.4e}")
    print("L2 rates in k:", np.round(eoc(ks, e0), 3))
    print("H1 rates in k:", np.round(eoc(ks, e1), 3))


if __name__ == "__main__":
    main()
