# %% [markdown]
# Learning the map (alpha, beta) -> u
#
# Each operator is a DeepONet whose branch reads the boundary pair and whose
# trunk reads x (or xi).  Trained once over a box of pairs, it answers new
# pairs with a single forward pass.  The run below is small and short; the
# `desk` preset of the CLI is the realistic setting.

# %%
import numpy as np

from pvdonet import TrainConfig, evaluate_operator, make_problem, sample_bc_family, train_operator, truth_function
from pvdonet.evaluation import build_eval_grid

prob = make_problem("constant")
family = sample_bc_family(n_train=40, n_test=8, seed=0)
print("train pairs", family.train.shape, "test pairs", family.test.shape)

cfg = TrainConfig(iterations=1500, width=30, depth=3, p=30, checkpoint_every=250)
op = train_operator("leading", prob, family, cfg)
print(f"best checkpoint at iteration {op.best_iteration}, {op.seconds:.0f}s")

# %%
report = evaluate_operator(op, prob, family.test, build_eval_grid(prob))
print("mean test rel L2:", report[("global", "rel_l2")])
print("mean test Linf:  ", report[("global", "linf")])

# %% [markdown]
# Query a pair the operator never saw and compare with the reference solver.

# %%
pair = np.array([[0.9, 2.1]])
x = np.linspace(0.0, 0.05, 6)
pred = op(pair, x)[0]
ref = truth_function(prob.with_bc(*pair[0]))(x)
for xi, p, r in zip(x, pred, ref):
    print(f"x={xi:.3f}  onet {p:8.4f}  reference {r:8.4f}")

# %% [markdown]
# Pairs outside the training box still evaluate, with a warning.

# %%
import warnings

with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    op(np.array([[3.0, 0.0]]), x)
print([str(w.message) for w in caught])
