# %% [markdown]
# # Static versus adaptive forests under workload shift
#
# A forest is trained offline on the Low profile and then streamed over four
# shifted workloads, once without retraining and once with each detector.
# This is the full 20,000-sample matrix; it takes about a minute.

# %%
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from agewatch import MODES, MatrixConfig, default_scenarios, initial_model, run_matrix
from agewatch.harness import scenario_stream
from agewatch.report import table_csv

FIG = Path(__file__).with_name("figures")
FIG.mkdir(exist_ok=True)

cfg = MatrixConfig(rng_seed=0)
scenarios = default_scenarios(cfg.total_samples, cfg.rng_seed)
model = initial_model(cfg)
reports = run_matrix(scenarios, MODES, cfg, model)
print(table_csv(reports))

# %% [markdown]
# Shifted profiles sit above the memory range the model saw in training, so
# the static forest calls almost everything Aging. Precision drops and F1
# follows. Each retrain on the last 2000 samples pulls the adaptive models
# back.

# %%
for r in reports:
    if r.mode != "Static":
        continue
    seg = ", ".join(f"{k}: F1 {v['metrics']['f1']:.3f}" for k, v in sorted(r.segments.items()))
    print(f"{r.name:24s} {seg}")

# %%
shift = scenarios[3]
stream = scenario_stream(shift, cfg)
fig, ax = plt.subplots(figsize=(10, 3.5))
ax.plot(stream.index, stream.X[:, 0], lw=0.5, color="0.3")
for r in reports:
    if r.name == shift.name and r.mode == "AdaptiveADWIN":
        for e in r.events:
            ax.axvline(stream.index[e["step"]], color="tab:blue", lw=0.6)
ax.set_title(f"{shift.name}: memory and ADWIN retrains")
fig.tight_layout()
fig.savefig(FIG / "recurring_retrains.png", dpi=110)
