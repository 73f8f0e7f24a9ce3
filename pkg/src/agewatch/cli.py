"""Command-line interface.

Subcommands::

    agewatch label     memory.csv  --out labeled.csv
    agewatch train     labeled.csv --model model.json
    agewatch simulate  scenario.ini --out scenario.csv
    agewatch run       scenario.csv --model model.json --mode AdaptiveADWIN --out-dir runs/x
    agewatch matrix    --out-dir runs/matrix
    agewatch report    runs/matrix/*.json --out table.csv

Settings come from an optional INI file (``--config``); flags override it.
The random seed is ``--seed`` if given, else ``$AGEWATCH_SEED``, else the
config file, else 0. Every JSON output carries the effective configuration;
CSV outputs get a ``.config.json`` sidecar.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

from .decomposition import StlConfig
from .errors import AgewatchError, EmptyTrainingSet
from .features import extract_features
from .forest import ForestConfig, ForestModel, kfold_evaluate, train
from .harness import (MODES, HarnessConfig, MatrixConfig, RunTrace, detector_log_csv,
                      initial_model, plotdata_csv, run_matrix, run_prequential,
                      scenario_stream)
from .ingest import load_csv
from .labeling import (LabelingConfig, label_series, labeled_to_csv, parse_labeled_csv)
from .report import RunReport, table_csv
from .scenarios import build_scenario, default_scenarios, parse_scenario_config

SEED_ENV = "AGEWATCH_SEED"

CONFIG_HELP = """\
config file (INI). Recognised sections and keys:
  [labeling] window_size, stride, slope_threshold, warmup_seconds
  [stl]      period, seasonal_span, trend_span, lowpass_span,
             inner_iterations, outer_iterations
  [forest]   n_trees, max_depth, min_samples_leaf, features_per_split, seed
  [harness]  retrain_window, feature_window, samples
  [ddm]      min_num_instances, warning_level, drift_level
  [adwin]    delta, max_buckets
"""


class Settings:
    """Merged view of the config file and command-line flags."""

    def __init__(self, path: str | None):
        self.cp = configparser.ConfigParser()
        if path:
            with open(path, encoding="utf-8") as fh:
                self.cp.read_file(fh)

    def section(self, name: str, types: dict) -> dict:
        if not self.cp.has_section(name):
            return {}
        out = {}
        for key, raw in self.cp[name].items():
            if key not in types:
                raise AgewatchError(f"unknown key {key!r} in [{name}]")
            out[key] = types[key](raw)
        return out


def _fps(raw):
    return raw if raw in ("sqrt", "all") else int(raw)


LABELING_KEYS = {"window_size": int, "stride": int, "slope_threshold": float,
                 "warmup_seconds": float}
STL_KEYS = {"period": int, "seasonal_span": int, "trend_span": int, "lowpass_span": int,
            "inner_iterations": int, "outer_iterations": int}
FOREST_KEYS = {"n_trees": int, "max_depth": int, "min_samples_leaf": int,
               "features_per_split": _fps, "seed": int}
HARNESS_KEYS = {"retrain_window": int, "feature_window": int, "samples": int}
DDM_KEYS = {"min_num_instances": int, "warning_level": float, "drift_level": float}
ADWIN_KEYS = {"delta": float, "max_buckets": int}


def resolve_seed(args, settings: Settings) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise AgewatchError(f"{SEED_ENV}={env!r} is not an integer") from None
    return settings.section("forest", FOREST_KEYS).get("seed", 0)


def forest_config(args, settings: Settings) -> ForestConfig:
    f = settings.section("forest", FOREST_KEYS)
    f.pop("seed", None)
    for key in ("n_trees", "max_depth"):
        if getattr(args, key, None) is not None:
            f[key] = getattr(args, key)
    return ForestConfig(**f, rng_seed=resolve_seed(args, settings))


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _write_json(path: Path, doc) -> None:
    _write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _sidecar(path: Path, doc: dict) -> None:
    _write_json(path.with_name(path.name + ".config.json"), doc)


def cmd_label(args) -> int:
    settings = Settings(args.config)
    lab = settings.section("labeling", LABELING_KEYS)
    if args.warmup_seconds is not None:
        lab["warmup_seconds"] = args.warmup_seconds
    if args.window_size is not None:
        lab["window_size"] = args.window_size
    if args.slope_threshold is not None:
        lab["slope_threshold"] = args.slope_threshold
    stl = settings.section("stl", STL_KEYS)
    if args.period is not None:
        stl["period"] = args.period
    lcfg, scfg = LabelingConfig(**lab), StlConfig(**stl)
    series = load_csv(args.input, profile=args.profile)
    result = label_series(series, lcfg, scfg)
    out = Path(args.out)
    _write(out, labeled_to_csv(result.labeled))
    deco = Path(args.decomposition) if args.decomposition else out.with_name(out.stem + ".stl.csv")
    _write(deco, result.decomposition.to_csv())
    effective = {"command": "label", "input": str(args.input), "labeling": asdict(lcfg),
                 "stl": asdict(scfg.resolved()), "warmup_samples": result.warmup_len}
    _sidecar(out, effective)
    _sidecar(deco, effective)
    return 0


def cmd_train(args) -> int:
    settings = Settings(args.config)
    cfg = forest_config(args, settings)
    labeled = parse_labeled_csv(Path(args.input).read_text(encoding="utf-8"))
    fm = extract_features(labeled, args.feature_window)
    if len(set(fm.y.tolist())) < 2:
        raise EmptyTrainingSet("training file holds a single class; refusing to train")
    report = kfold_evaluate(fm.X, fm.y, cfg, k=args.k)
    report.config.update({"command": "train", "input": str(args.input),
                          "feature_window": args.feature_window})
    model = train(fm.X, fm.y, cfg)
    _write(Path(args.model), model.to_json())
    rpath = Path(args.report) if args.report else Path(args.model).with_suffix(".kfold.json")
    _write(rpath, report.to_json())
    print(f"k-fold F1 {report.f1:.4f} (k={args.k}, {len(fm)} rows)")
    return 0


def cmd_simulate(args) -> int:
    settings = Settings(args.config)
    shift, profiles = parse_scenario_config(Path(args.spec).read_text(encoding="utf-8"))
    seed = getattr(args, "seed", None)
    if seed is None and os.environ.get(SEED_ENV):
        seed = resolve_seed(args, settings)
    if seed is not None:
        shift = replace(shift, rng_seed=seed)
    if args.samples is not None:
        shift = replace(shift, total_samples=args.samples)
    stream = build_scenario(shift, profiles)
    out = Path(args.out)
    _write(out, labeled_to_csv(stream, provenance=False))
    _sidecar(out, {"command": "simulate", "scenario": shift.to_dict(),
                   "profiles": {k: v.to_dict() for k, v in sorted(profiles.items())}})
    return 0


def _harness_config(args, settings: Settings, mode: str) -> tuple[HarnessConfig, int]:
    h = settings.section("harness", HARNESS_KEYS)
    window = args.retrain_window or h.get("retrain_window", 2000)
    params = {"AdaptiveDDM": settings.section("ddm", DDM_KEYS),
              "AdaptiveADWIN": settings.section("adwin", ADWIN_KEYS)}.get(mode, {})
    if mode == "AdaptiveADWIN" and args.delta is not None:
        params["delta"] = args.delta
    cfg = HarnessConfig(mode, window, forest_config(args, settings), params)
    return cfg, h.get("feature_window", 12)


def _emit_run(out_dir: Path, stem: str, stream, report: RunReport, trace: RunTrace, svg: bool):
    _write(out_dir / f"{stem}.json", report.to_json())
    _write(out_dir / f"{stem}.events.csv", detector_log_csv(trace.detector_log))
    _write(out_dir / f"{stem}.plotdata.csv", plotdata_csv(stream, report))
    if svg:
        from .plot import write_svg
        write_svg(out_dir / f"{stem}.svg", stream, report)


def cmd_run(args) -> int:
    settings = Settings(args.config)
    cfg, fwin = _harness_config(args, settings, args.mode)
    if args.feature_window is not None:
        fwin = args.feature_window
    labeled = parse_labeled_csv(Path(args.input).read_text(encoding="utf-8"))
    stream = extract_features(labeled, fwin)
    model = ForestModel.load(args.model, expected_width=stream.width)
    trace = RunTrace()
    name = args.name or Path(args.input).stem
    report = run_prequential(stream, model, cfg, name=name, trace=trace)
    report.config.update({"command": "run", "input": str(args.input), "model": str(args.model),
                          "feature_window": fwin})
    _emit_run(Path(args.out_dir), f"{name}_{args.mode}", stream, report, trace, args.svg)
    print(f"{name} {args.mode}: F1 {report.f1:.4f}, {report.count('Retrained')} retrains")
    return 0


def cmd_matrix(args) -> int:
    settings = Settings(args.config)
    h = settings.section("harness", HARNESS_KEYS)
    seed = resolve_seed(args, settings)
    fcfg = forest_config(args, settings)
    adwin = settings.section("adwin", ADWIN_KEYS)
    if args.delta is not None:
        adwin["delta"] = args.delta
    cfg = MatrixConfig(forest=fcfg,
                       retrain_window=args.retrain_window or h.get("retrain_window", 2000),
                       feature_window=h.get("feature_window", 12),
                       total_samples=args.samples or h.get("samples", 20000),
                       rng_seed=seed,
                       ddm_params=settings.section("ddm", DDM_KEYS),
                       adwin_params=adwin)
    scenarios = default_scenarios(cfg.total_samples, seed)
    out_dir = Path(args.out_dir)
    model = initial_model(cfg)
    _write(out_dir / "initial_model.json", model.to_json())
    traces = {}
    reports = run_matrix(scenarios, MODES, cfg, model, traces=traces)
    streams = {s.name: scenario_stream(s, cfg) for s in scenarios}
    for rep in reports:
        stream = streams[rep.name]
        trace = traces[(rep.name, rep.mode)]
        rep.config.update({"command": "matrix", "matrix": _matrix_doc(cfg)})
        _emit_run(out_dir, f"{rep.name}_{rep.mode}", stream, rep, trace, args.svg)
    _write(out_dir / "table.csv", table_csv(reports))
    _sidecar(out_dir / "table.csv", {"command": "matrix", "matrix": _matrix_doc(cfg)})
    print(table_csv(reports), end="")
    return 0


def _matrix_doc(cfg: MatrixConfig) -> dict:
    d = asdict(cfg)
    d["forest"] = cfg.forest.to_dict()
    return d


def cmd_report(args) -> int:
    reports = [RunReport.from_json(Path(p).read_text(encoding="utf-8")) for p in args.reports]
    text = table_csv(reports)
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="agewatch", description="Software aging detection under "
                                "workload shift.", formatter_class=argparse.RawTextHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--config", help=CONFIG_HELP)
        if seed:
            sp.add_argument("--seed", type=int, help=f"random seed (overrides ${SEED_ENV})")

    sp = sub.add_parser("label", help="label a memory CSV as Normal/Aging",
                        formatter_class=argparse.RawTextHelpFormatter)
    sp.add_argument("input", help="CSV with elapsed_seconds,memory_used")
    sp.add_argument("--out", required=True, help="labeled CSV to write")
    sp.add_argument("--decomposition", help="STL CSV to write (default: <out>.stl.csv)")
    sp.add_argument("--warmup-seconds", type=float)
    sp.add_argument("--window-size", type=int)
    sp.add_argument("--slope-threshold", type=float)
    sp.add_argument("--period", type=int, help="STL period in samples")
    sp.add_argument("--profile", default="Synthetic", help="profile name recorded on the series")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_label)

    sp = sub.add_parser("train", help="fit a forest and report k-fold metrics",
                        formatter_class=argparse.RawTextHelpFormatter)
    sp.add_argument("input", help="labeled CSV")
    sp.add_argument("--model", required=True, help="model JSON to write")
    sp.add_argument("--report", help="k-fold report JSON (default: <model>.kfold.json)")
    sp.add_argument("--k", type=int, default=5)
    sp.add_argument("--n-trees", type=int)
    sp.add_argument("--max-depth", type=int)
    sp.add_argument("--feature-window", type=int, default=12)
    common(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("simulate", help="synthesize a shift scenario",
                        formatter_class=argparse.RawTextHelpFormatter)
    sp.add_argument("spec", help="scenario INI file")
    sp.add_argument("--out", required=True, help="scenario CSV to write")
    sp.add_argument("--samples", type=int, help="override total_samples")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    def harness_flags(sp):
        sp.add_argument("--retrain-window", type=int)
        sp.add_argument("--delta", type=float, help="ADWIN confidence")
        sp.add_argument("--n-trees", type=int)
        sp.add_argument("--max-depth", type=int)
        sp.add_argument("--svg", action="store_true", help="also write an SVG chart")

    sp = sub.add_parser("run", help="prequential run of one mode over one stream",
                        formatter_class=argparse.RawTextHelpFormatter)
    sp.add_argument("input", help="labeled or scenario CSV")
    sp.add_argument("--model", required=True, help="initial model JSON")
    sp.add_argument("--mode", choices=MODES, default="AdaptiveADWIN")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--name", help="run name (default: input file stem)")
    sp.add_argument("--feature-window", type=int)
    harness_flags(sp)
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("matrix", help="all default scenarios under all modes",
                        formatter_class=argparse.RawTextHelpFormatter)
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--samples", type=int, help="samples per scenario (default 20000)")
    harness_flags(sp)
    common(sp)
    sp.set_defaults(func=cmd_matrix)

    sp = sub.add_parser("report", help="aggregate report JSON files into a CSV table")
    sp.add_argument("reports", nargs="+")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (AgewatchError, ValueError, OSError, configparser.Error) as exc:
        print(f"agewatch {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
