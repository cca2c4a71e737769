"""Print L2/H1 EOC tables for the manufactured cubic case at P1, P2 and P3."""
import argparse

from nlsfem.verification import builtin_case, convergence_study


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--case", default="ms1")
    parser.add_argument("--levels", type=int, default=4)
    parser.add_argument("--jitter", type=float, default=0.0)
    args = parser.parse_args()

    case = builtin_case(args.case)
    for degree in (1, 2, 3):
        coupling = "h" if degree == 1 else "h^r/2"
        rep = convergence_study(case, degree, args.levels, coupling=coupling, jitter=args.jitter)
        print(f"\n{case.name}  P{degree}  k ~ {coupling}")
        print(f"{'m':>5} {'N':>6} {'err_l2':>12} {'rate':>6} {'err_h1':>12} {'rate':>6}")
        for row in rep.rows():
            r2 = "" if row["rate_l2"] is None else f"{row['rate_l2']:.2f}"
            r1 = "" if row["rate_h1"] is None else f"{row['rate_h1']:.2f}"
            print(f"{row['m']:>5} {row['N']:>6} {row['err_l2']:12.4e} {r2:>6} "
                  f"{row['err_h1']:12.4e} {r1:>6}")
        print(f"median rates: L2 {rep.rate_l2:.3f}  H1 {rep.rate_h1:.3f}")


if __name__ == "__main__":
    main()
