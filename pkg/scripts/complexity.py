"""Per-level wall time of the multigrid scheme in 3D.

Prints level, elements, dofs, seconds, seconds per dof and the ratio of the
cumulative time to the finest level's time.
"""
import argparse

from gpe_multigrid import MultigridConfig, ProblemParams, SolverConfig, run_multigrid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, default=4)
    ap.add_argument("--levels", type=int, default=4)
    ap.add_argument("--direct-max-dofs", type=int, default=SolverConfig().direct_max_dofs)
    ap.add_argument("--example", type=int, choices=(1, 2), default=1)
    args = ap.parse_args()

    params = ProblemParams.example1() if args.example == 1 else ProblemParams.example2()
    cfg = MultigridConfig(solver=SolverConfig(direct_max_dofs=args.direct_max_dofs))
    run = run_multigrid(params, args.cells, args.levels, cfg)
    print("level,elements,dofs,seconds,seconds_per_dof")
    for r in run.levels:
        print(f"{r.level},{r.elements},{r.dofs},{r.seconds:.4f},{r.seconds / r.dofs:.3e}")
    print(f"# total / finest = {run.total_seconds / run.final.seconds:.3f}")


if __name__ == "__main__":
    main()
