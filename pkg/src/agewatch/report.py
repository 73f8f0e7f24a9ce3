"""Run reports: what was run, how it scored, and when the model was rebuilt."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .metrics import ConfusionMatrix, Metrics, derive, score

TABLE_COLUMNS = ("scenario", "mode", "accuracy", "precision", "recall", "f1", "retrains",
                 "skipped")


@dataclass
class RunReport:
    name: str
    mode: str
    config: dict
    confusion: ConfusionMatrix
    metrics: Metrics
    events: list = field(default_factory=list)
    segments: dict = field(default_factory=dict)
    predictions: np.ndarray | None = field(default=None, repr=False)
    truths: np.ndarray | None = field(default=None, repr=False)
    model_versions: np.ndarray | None = field(default=None, repr=False)

    @property
    def f1(self) -> float:
        return self.metrics.f1

    def count(self, action: str) -> int:
        return sum(1 for e in self.events if e["action"] == action)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "mode": self.mode,
            "config": self.config,
            "confusion": self.confusion.to_dict(),
            "metrics": self.metrics.to_dict(),
            "events": self.events,
            "segments": self.segments,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        d = json.loads(text)
        m = d["metrics"]
        return cls(
            name=d["name"],
            mode=d["mode"],
            config=d["config"],
            confusion=ConfusionMatrix(**d["confusion"]),
            metrics=Metrics(m["accuracy"], m["precision"], m["recall"], m["f1"],
                            tuple(m.get("undefined", ()))),
            events=d.get("events", []),
            segments=d.get("segments", {}),
        )

    def table_row(self) -> dict:
        m = self.metrics
        return {
            "scenario": self.name,
            "mode": self.mode,
            "accuracy": m.accuracy,
            "precision": m.precision,
            "recall": m.recall,
            "f1": m.f1,
            "retrains": self.count("Retrained"),
            "skipped": self.count("SkippedSingleClass"),
        }


def segment_breakdown(predictions, truths, source) -> dict:
    """Metrics per workload profile, for streams that record their source."""
    out = {}
    src = np.asarray(source, dtype=object)
    for name in sorted(set(source)):
        mask = src == name
        cm = score(np.asarray(predictions)[mask], np.asarray(truths)[mask])
        out[name] = {"confusion": cm.to_dict(), "metrics": derive(cm).to_dict()}
    return out


def table_csv(reports) -> str:
    """Aggregate CSV in the layout of a scenario x model comparison table."""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=TABLE_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        row = r.table_row()
        for key in ("accuracy", "precision", "recall", "f1"):
            row[key] = f"{row[key]:.4f}"
        w.writerow(row)
    return buf.getvalue()
