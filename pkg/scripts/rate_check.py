"""Print the duality gap and gap*T along a run on a synthetic SVM.

A roughly constant gap*T column indicates the O(1/T) certificate decay.
"""

import argparse

from pdprox import LossSpec, SolverConfig, SquaredL2Half, build_erm_problem, gen_synthetic, solve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--d", type=int, default=20)
    ap.add_argument("--lam", type=float, default=0.01)
    ap.add_argument("--iters", type=int, default=10_000)
    ap.add_argument("--variant", default="dual", choices=("dual", "dual-fast", "primal"))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ds = gen_synthetic("classification", args.n, args.d, seed=args.seed)
    p = build_erm_problem(LossSpec("hinge"), ds, SquaredL2Half(), args.lam)
    marks = sorted({int(10 ** (k / 4)) for k in range(4, 4 * 6)} | {args.iters})
    marks = [t for t in marks if t <= args.iters]
    _, trace = solve(p, SolverConfig(variant=args.variant, max_iter=args.iters,
                                     stride=args.iters, log_at=marks))
    print(f"{'T':>8}{'primal':>14}{'gap':>12}{'gap*T':>10}")
    for r in trace:
        print(f"{r.iteration:>8}{r.primal_obj:>14.8f}{r.gap:>12.3e}{r.gap * r.iteration:>10.3f}")


if __name__ == "__main__":
    main()
