# %% [markdown]
# Runs as directories
#
# `pvdonet.runner.run` turns a config into a directory of artifacts: the
# resolved INI config, a training log, a binary weight bundle, the error
# report and the prediction curve.  The `pvdonet` command wraps the same calls
# (`pvdonet run --config my.ini`, `pvdonet eval DIR`, `pvdonet infer DIR pairs.txt`).

# %%
import tempfile
from pathlib import Path

from pvdonet import ExperimentConfig
from pvdonet.runner import evaluate_run, load_run, run
from pvdonet.weights import load_weights

root = Path(tempfile.mkdtemp())
# 300 steps is far too few for accuracy; this is about the artifacts
cfg = ExperimentConfig(method="pvdnet-high", iterations=300, width=12, depth=3, checkpoint_every=100, seed=7)

first = run(cfg, root / "a", plot=False)
print(sorted(p.name for p in first.directory.iterdir()))
print((root / "a" / "report.csv").read_text())

# %% [markdown]
# Same seed, same bytes.

# %%
run(cfg, root / "b", plot=False)
for name in ("report.csv", "weights.pvdw"):
    same = (root / "a" / name).read_bytes() == (root / "b" / name).read_bytes()
    print(f"{name}: identical={same}")

# %% [markdown]
# Reload and rescore without retraining.

# %%
bundle = load_weights(root / "a" / "weights.pvdw")
print(bundle.method, list(zip(bundle.names, bundle.widths)))
cfg_back, model = load_run(root / "a")
print("config round trip:", cfg_back == cfg)
print("rescored report matches:", evaluate_run(root / "a").metrics == first.report.metrics)
