"""Command line harness: evaluate metric suites, sweep a parameter, render reports.

Exit codes: 0 success, 2 invalid configuration or input, 3 some metric failed
(the report is still written with the failed entries marked).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from xplain import __version__
from xplain.core import InvalidInputError, MetricReport, XplainError, _jsonable, as_vector
from xplain.fixtures.specs import load_model, model_from_spec
from xplain.io import REPORT_SCHEMA_VERSION, dump_json, load_dataset_csv, load_report, write_text
from xplain.registry import (
    EXPLAINERS,
    METRICS,
    EvalContext,
    default_suite,
    make_explainer,
    resolve_params,
)

EXIT_OK, EXIT_INVALID, EXIT_METRIC_FAILED = 0, 2, 3
INT_PARAMS = {"size", "n", "k", "steps", "n_subsets", "n_directions", "rows", "i", "j", "layer"}
ZERO_TIME = "1970-01-01T00:00:00Z"


class ConfigError(InvalidInputError):
    pass


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def load_config(path) -> tuple[dict, Path]:
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    for key in ("dataset", "model", "explainer", "metrics"):
        if key not in cfg:
            raise ConfigError(f"config is missing {key!r}")
    env_seed = os.environ.get("XPLAIN_SEED")
    if env_seed is not None:
        try:
            cfg["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"XPLAIN_SEED must be an integer, got {env_seed!r}") from None
    if not isinstance(cfg.get("seed"), int) or isinstance(cfg.get("seed"), bool):
        raise ConfigError("config needs an integer 'seed'")
    return cfg, path.resolve().parent


def _metric_specs(cfg) -> list[tuple[str, dict]]:
    metrics = cfg["metrics"]
    if metrics == "default":
        return []
    if not isinstance(metrics, list) or not metrics:
        raise ConfigError("'metrics' must be a non-empty list or \"default\"")
    out = []
    for m in metrics:
        if isinstance(m, str):
            name, params = m, {}
        elif isinstance(m, dict) and "name" in m:
            name, params = m["name"], m.get("params", {})
        else:
            raise ConfigError(f"cannot read metric entry {m!r}")
        if name not in METRICS:
            raise ConfigError(f"unknown metric {name!r}")
        if not isinstance(params, dict):
            raise ConfigError(f"parameters of {name!r} must be an object")
        resolve_params(METRICS[name], params, cfg["seed"])
        out.append((name, params))
    return out


def build_context(cfg: dict, base: Path) -> EvalContext:
    def rel(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    dataset = load_dataset_csv(rel(cfg["dataset"]), cfg.get("protected", ()))
    model = model_from_spec(cfg["model"]) if isinstance(cfg["model"], dict) else load_model(rel(cfg["model"]))
    if model.dim != dataset.dim:
        raise ConfigError(f"model expects {model.dim} features, dataset has {dataset.dim}")
    if "x" in cfg:
        x = as_vector(cfg["x"], model.dim)
    else:
        row = int(cfg.get("row", 0))
        if not 0 <= row < len(dataset):
            raise ConfigError(f"row {row} is not in the dataset")
        x = dataset.rows[row].copy()
    spec = cfg["explainer"]
    if isinstance(spec, str):
        spec = {"name": spec}
    if not isinstance(spec, dict) or "name" not in spec:
        raise ConfigError("'explainer' needs a name")
    name = spec["name"]
    if name not in EXPLAINERS:
        raise ConfigError(f"unknown explainer {name!r}")
    if EXPLAINERS[name].needs_gradient and not model.has("gradient"):
        raise ConfigError(f"explainer {name!r} needs model gradients")
    fn, params = make_explainer(name, spec.get("params", {}), cfg["seed"], dataset, model.dim)
    return EvalContext(model, dataset, x, fn, name, params, cfg["seed"], base)


def run_metric(ctx: EvalContext, name: str, given: dict) -> MetricReport:
    entry = METRICS[name]
    params = resolve_params(entry, given, ctx.seed)
    report = MetricReport(name, params, seed=params.get("seed") if entry.stochastic else None)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            out = entry.fn(ctx, **params)
        except (XplainError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            report.status = "failed"
            report.error = f"{type(exc).__name__}: {exc}"
            out = None
    report.warnings = sorted({str(w.message) for w in caught})
    if out is not None:
        report.value = out.value
        report.details = out.details
        report.n_samples = out.n_samples
        report.estimator = out.estimator
        if entry.stochastic and report.seed is None:
            report.seed = ctx.seed
    return report


def run_suite(ctx: EvalContext, specs) -> list[MetricReport]:
    if not specs:
        specs = [(n, {}) for n in default_suite(ctx)]
    return [run_metric(ctx, name, params) for name, params in specs]


def cmd_evaluate(args) -> int:
    cfg, base = load_config(args.config)
    specs = _metric_specs(cfg)
    ctx = build_context(cfg, base)
    started = ZERO_TIME if args.reproducible else _now()
    results = run_suite(ctx, specs)
    finished = ZERO_TIME if args.reproducible else _now()
    report = {
        "meta": {
            "seed": ctx.seed,
            "version": __version__,
            "schema_version": REPORT_SCHEMA_VERSION,
            "timestamps": {"started": started, "finished": finished},
            "model": type(ctx.model).__name__,
            "explainer": {"name": ctx.explainer_name, "params": _jsonable(ctx.explainer_params)},
        },
        "results": [r.to_dict() for r in results],
    }
    out = args.out or cfg.get("output")
    if out is None:
        raise ConfigError("no output path: pass --out or set 'output' in the config")
    write_text(out, dump_json(report))
    failed = [r.name for r in results if r.status != "ok"]
    for name in failed:
        print(f"metric {name} failed", file=sys.stderr)
    return EXIT_METRIC_FAILED if failed else EXIT_OK


def parse_grid(text: str) -> list[float]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ConfigError("sweep grid is empty")
    try:
        return [float(t) for t in items]
    except ValueError:
        raise ConfigError(f"sweep grid must be numeric, got {text!r}") from None


def _axis_value(axis: str, v: float):
    return int(v) if axis in INT_PARAMS and float(v).is_integer() else v


def cmd_sweep(args) -> int:
    cfg, base = load_config(args.config)
    grid = parse_grid(args.grid)
    specs = _metric_specs(cfg)
    if not specs:
        raise ConfigError("sweep needs an explicit metric list")
    axis = args.axis
    exp = cfg["explainer"] if isinstance(cfg["explainer"], dict) else {"name": cfg["explainer"]}
    exp_name = exp.get("name")
    on_explainer = exp_name in EXPLAINERS and axis in EXPLAINERS[exp_name].params
    on_metrics = [i for i, (n, _) in enumerate(specs) if axis in METRICS[n].params]
    if not on_explainer and not on_metrics:
        raise ConfigError(f"{axis!r} is not a parameter of the explainer or of any configured metric")
    rows, failed = [], False
    for v in grid:
        value = _axis_value(axis, v)
        cfg_v = dict(cfg)
        cur = [(n, dict(p)) for n, p in specs]
        if on_explainer:
            cfg_v["explainer"] = {"name": exp_name, "params": {**exp.get("params", {}), axis: value}}
        else:
            for i in on_metrics:
                cur[i][1][axis] = value
        ctx = build_context(cfg_v, base)
        results = run_suite(ctx, cur)
        row = [value]
        for r in results:
            if r.status != "ok":
                failed = True
                row.append("")
            else:
                row.append(r.value)
        rows.append(row)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([axis] + [n for n, _ in specs])
    for row in rows:
        w.writerow([_cell(c) for c in row])
    write_text(args.out, buf.getvalue())
    return EXIT_METRIC_FAILED if failed else EXIT_OK


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else v


def render_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "value", "status", "seed", "n_samples", "estimator", "warnings", "params"])
    for r in report["results"]:
        value = r.get("value")
        w.writerow([r["name"], "" if value is None else json.dumps(value), r["status"],
                    "" if r.get("seed") is None else r["seed"],
                    "" if r.get("n_samples") is None else r["n_samples"],
                    r.get("estimator", ""), "; ".join(r.get("warnings", [])),
                    json.dumps(r.get("params", {}), sort_keys=True)])
    return buf.getvalue()


def render_summary(report: dict) -> str:
    meta = report["meta"]
    lines = [f"xplain report  version={meta.get('version')}  seed={meta.get('seed')}", ""]
    header = f"{'metric':34} {'value':>14} {'seed':>6} {'samples':>8}  status"
    lines += [header, "-" * len(header)]
    for r in report["results"]:
        v = r.get("value")
        if isinstance(v, float):
            shown = f"{v:.6g}"
        elif v is None:
            shown = "-"
        else:
            shown = json.dumps(v)[:14]
        seed = "-" if r.get("seed") is None else str(r["seed"])
        n = "-" if r.get("n_samples") is None else str(r["n_samples"])
        status = r["status"] if r["status"] == "ok" else f"{r['status']}: {r.get('error')}"
        lines.append(f"{r['name']:34} {shown:>14} {seed:>6} {n:>8}  {status}")
        for msg in r.get("warnings", []):
            lines.append(f"{'':34}   warning: {msg}")
    return "\n".join(lines) + "\n"


def cmd_report(args) -> int:
    report = load_report(args.input)
    text = render_csv(report) if args.format == "csv" else render_summary(report)
    if args.out:
        write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_list(args) -> int:
    print("explainers:")
    for name, e in EXPLAINERS.items():
        print(f"  {name:24} params: {', '.join(e.params) or '-'}")
    print("metrics:")
    for name, m in METRICS.items():
        tag = " (stochastic)" if m.stochastic else ""
        print(f"  {name:34} params: {', '.join(m.params) or '-'}{tag}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xplain", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"xplain {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="run a metric suite and write a JSON report")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--reproducible", action="store_true",
                   help="zero the timestamps so identical runs give identical bytes")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="vary one parameter over a grid and write a CSV curve")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", required=True)
    p.add_argument("--grid", required=True, help="comma-separated numeric values")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="render a JSON report as text or CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--format", choices=("summary-text", "csv"), default="summary-text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("list", help="list registered explainers and metrics")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except XplainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
