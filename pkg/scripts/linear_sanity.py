"""Convergence study for zeta = 0 on the unit interval or square, where the
ground state sqrt(2)^d prod sin(pi x_i) and the eigenvalue d pi^2 are known."""
import argparse
import math

from gpe_multigrid import BoxDomain, ProblemParams, run_multigrid
from gpe_multigrid.diagnostics import error_vs_exact, errors_csv


def sine_mode(dim):
    import numpy as np

    def u(p):
        return np.prod(np.sqrt(2.0) * np.sin(np.pi * p), axis=-1)

    def grad(p):
        s = np.sqrt(2.0) * np.sin(np.pi * p)
        c = np.sqrt(2.0) * np.pi * np.cos(np.pi * p)
        out = np.empty_like(p)
        for i in range(dim):
            out[..., i] = c[..., i] * np.prod(np.delete(s, i, axis=-1), axis=-1)
        return out

    return u, grad


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dim", type=int, default=2, choices=(1, 2, 3))
    ap.add_argument("--cells", type=int, default=4)
    ap.add_argument("--levels", type=int, default=5)
    args = ap.parse_args()

    run = run_multigrid(ProblemParams(BoxDomain.unit(args.dim), 0.0), args.cells, args.levels)
    u, g = sine_mode(args.dim)
    errors = error_vs_exact([r.pair for r in run.levels], run.operators, u, g, args.dim * math.pi**2)
    print(errors_csv(errors), end="")


if __name__ == "__main__":
    main()
