# %% [markdown]
# A thin layer at x = 0
#
# eps u'' + u' + u = 0 on [0, 1], u(0) = 1, u(1) = 2, eps = 1e-3.  The solution
# drops from about 5.4 to 1 within a few thousandths of the left end.  This
# walkthrough compares a classical two-term expansion, a fine-mesh solver and a
# small composite network trained for a couple of thousand steps.

# %%
import numpy as np

from pvdonet import TrainConfig, bl_pinns_eval, build_eval_grid, evaluate, fdm_solve, make_problem, train
from pvdonet.problems import analytic_solution_constant, leading_asymptotic_oracle_constant

prob = make_problem("constant")
grid = build_eval_grid(prob)
exact = analytic_solution_constant(prob.eps, prob.alpha, prob.beta, grid.x)
print(f"{len(grid)} evaluation points, junction at x = {grid.junction:g}")

# %% [markdown]
# The leading-order expansion is already within O(eps) everywhere.

# %%
oracle = leading_asymptotic_oracle_constant(prob.eps, prob.alpha, prob.beta, grid.x)
print("expansion sup error:", np.max(np.abs(oracle - exact)))

# %% [markdown]
# The Shishkin-mesh solver is the ground truth when no closed form exists.
# Doubling N should shrink the error.

# %%
for n in (1024, 4096, 16384):
    u = fdm_solve(prob, n)(grid.x)
    print(f"N={n:6d}  rel L2 {np.linalg.norm(u - exact) / np.linalg.norm(exact):.2e}")

# %% [markdown]
# Two networks: one in x for the outer region, one in the stretched variable
# xi = x / eps for the layer.  Short run and narrow nets, so the error sits a
# few times above what the default 100 000-step run reaches.

# %%
cfg = TrainConfig(iterations=2000, width=30, depth=3, checkpoint_every=250)
model = train("leading", prob, cfg, progress=lambda row: print(f"  iter {row.iteration:5d}  loss {row.total:.3e}"))

report = evaluate(model, prob, grid=grid, method="pvdnet-leading")
for (region, metric), value in report.metrics.items():
    print(f"{region:9s} {metric:10s} {value:.3e}")

# %% [markdown]
# Same nets, stitched at the junction instead of blended.  The blend carries
# the outer slope into the layer, the stitch does not.

# %%
xj = prob.junction
truth_j = analytic_solution_constant(prob.eps, prob.alpha, prob.beta, xj)
print("composite junction error:", abs(model(xj) - truth_j))
print("piecewise junction error:", abs(bl_pinns_eval(model, xj) - truth_j))
