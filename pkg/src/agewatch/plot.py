"""Static SVG chart of a run: memory, true Aging spans and retrain events.

Needs matplotlib, which is an optional dependency (``pip install agewatch[plot]``).
"""

from __future__ import annotations

import numpy as np


def write_svg(path, stream, report) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # fixed ids and no timestamp, so reruns give identical files
    matplotlib.rcParams["svg.hashsalt"] = "agewatch"
    fig, ax = plt.subplots(figsize=(10, 3.5))
    idx = np.asarray(stream.index)
    mem = stream.X[:, 0]
    ax.plot(idx, mem, lw=0.6, color="0.2", label="memory_used")
    lo, hi = float(mem.min()), float(mem.max())
    ax.fill_between(idx, lo, hi, where=np.asarray(report.truths) == 1, color="tab:orange",
                    alpha=0.15, step="mid", label="Aging (truth)")
    wrong = np.asarray(report.predictions) != np.asarray(report.truths)
    ax.plot(idx[wrong], mem[wrong], ",", color="tab:red", label="misclassified")
    for e in report.events:
        ax.axvline(idx[e["step"]], color="tab:blue" if e["action"] == "Retrained" else "0.6",
                   lw=0.6)
    ax.set_xlabel("sample")
    ax.set_ylabel("memory")
    ax.set_title(f"{report.name} / {report.mode}  F1={report.f1:.4f}")
    ax.legend(loc="upper left", fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
