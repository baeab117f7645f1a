"""Gap at a fixed iteration count for several caps m on sum(alpha)."""

import argparse

from pdprox import LossSpec, SolverConfig, SquaredL2Half, build_erm_problem, gen_synthetic, solve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--d", type=int, default=20)
    ap.add_argument("--iters", type=int, default=2000)
    ap.add_argument("--caps", default="10,50,200,500")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ds = gen_synthetic("classification", args.n, args.d, seed=args.seed)
    lam = 1.0 / args.n
    print(f"{'m':>8}{'primal':>14}{'gap':>12}{'dual zeros':>12}")
    for m in (float(x) for x in args.caps.split(",")):
        p = build_erm_problem(LossSpec("hinge"), ds, SquaredL2Half(), lam, dual_cap=m)
        sol, trace = solve(p, SolverConfig(max_iter=args.iters, stride=args.iters))
        print(f"{m:>8g}{sol.primal_obj:>14.8f}{sol.gap:>12.3e}{trace[-1].dual_sparsity:>12.3f}")


if __name__ == "__main__":
    main()
