"""
Error against grid size
=======================

Halving the step shrinks the error polynomially, faster for the smoother
prior. On coarse grids with nu=1 the logistic solve can lock onto a
spurious stationary point near y = 0; the sweep shows where that stops.
"""

from paraode import IWPPrior, eks_solve, para_ieks
from paraode.problems import logistic, rmse

problem = logistic()
print(f"{'N':>6} {'nu':>3} {'paraieks':>10} {'eks':>10} {'iters':>6}")
for nu in (1, 2):
    for n in (16, 32, 64, 128, 256, 512):
        grid = problem.grid(n)
        r = para_ieks(problem.ivp, IWPPrior(nu, 1), grid)
        e = eks_solve(problem.ivp, IWPPrior(nu, 1), grid)
        print(f"{n:6d} {nu:3d} {rmse(r.mean, problem.reference, grid):10.2e} "
              f"{rmse(e.mean, problem.reference, grid):10.2e} {r.iterations:6d}")
