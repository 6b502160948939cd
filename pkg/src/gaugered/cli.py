"""Command-line front end.

    gaugered verify {jacobi,bianchi,minimal-coupling,reduction,all} [--config F] [--out D] [--seed N]
    gaugered simulate {particle,maxwell} [--config F] [--out D] [--seed N]
    gaugered report PATH [PATH ...] [--out D]

Exit status: 0 when every check passes, 1 on a verification failure (the JSON
report lists the failed checks), 2 on usage, configuration or artifact errors.
Log verbosity comes from the ``GAUGERED_LOG`` environment variable (e.g. ``INFO``).
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import maxwell as mx
from . import plotting
from .config import ConfigError, build, load_file
from .scenarios import ScenarioResult, run

log = logging.getLogger("gaugered")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
LOG_ENV = "GAUGERED_LOG"

# built-in campaign: (name, mode, config overrides)
CAMPAIGN = [
    ("jacobi-abelian", "verify-jacobi",
     {"algebra": {"preset": "abelian"}, "potential": {"count": 5}, "sampling": {"points": 10}}),
    ("jacobi-so3", "verify-jacobi",
     {"algebra": {"preset": "so3"}, "potential": {"count": 2}, "sampling": {"points": 10}}),
    ("bianchi-abelian", "verify-bianchi",
     {"algebra": {"preset": "abelian"}, "potential": {"count": 5}, "sampling": {"points": 10}}),
    ("bianchi-so3", "verify-bianchi",
     {"algebra": {"preset": "so3"}, "potential": {"count": 2}, "sampling": {"points": 5}}),
    ("minimal-coupling-so3", "verify-minimal-coupling",
     {"algebra": {"preset": "so3"}, "potential": {"count": 3}, "sampling": {"points": 10}}),
    ("reduction-abelian", "verify-reduction",
     {"algebra": {"preset": "abelian", "dim": 2}, "potential": {"count": 3}, "sampling": {"points": 10},
      "reduction": {"xi": [0.5, -1.0]}}),
    ("reduction-so3", "verify-reduction",
     {"algebra": {"preset": "so3"}, "potential": {"count": 1}, "sampling": {"points": 5},
      "reduction": {"xi": [0.0, 0.0, 0.0]}}),
    ("particle-larmor", "simulate-particle",
     {"potential": {"preset": "uniform-b"}}),
    ("particle-so3", "simulate-particle",
     {"algebra": {"preset": "so3"}, "potential": {"preset": "zero"},
      "particle": {"bracket": "extended_ym", "u0": [0.1, 0.2, 0.3], "y0": [0.0, 0.0, 2.0], "T": 1.0, "h": 1e-2}}),
    ("maxwell-beltrami", "simulate-maxwell",
     {"maxwell": {"N": 16, "T": 0.1, "h": 1e-3, "initial": "beltrami"}}),
]
# sections a campaign config may set; they apply on top of every scenario
CAMPAIGN_SECTIONS = ("tolerances", "perturbation", "output")


class ArtifactError(ValueError):
    pass


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(path, data) -> Path:
    path = Path(path)
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def write_rows(path, columns, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])
    return Path(path)


def write_artifacts(result: ScenarioResult, cfg, out_dir: Path, name: str) -> dict:
    """Write ``<name>.json``, ``<name>.csv`` and ``<name>.png`` (plus a field snapshot for Maxwell runs)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts = [f"{name}.csv", f"{name}.png"]
    csv_path, png_path = out_dir / artifacts[0], out_dir / artifacts[1]
    if result.mode == "simulate-particle":
        traj = result.payload
        traj.to_csv(csv_path)
        plotting.trajectory(traj, png_path, title=name)
    elif result.mode == "simulate-maxwell":
        grid, run_ = result.payload
        run_.to_csv(csv_path)
        plotting.maxwell_diagnostics(run_, png_path, title=name)
        mx.write_snapshot(out_dir / f"{name}_final.f64", grid, run_.final, float(run_.times[-1]))
        plotting.field_slice(grid, run_.final, out_dir / f"{name}_final.png", title=f"{name}: final Bz, z = 0")
        artifacts += [f"{name}_final.f64", f"{name}_final.f64.json", f"{name}_final.png"]
    else:
        write_rows(csv_path, result.columns, result.rows)
        metric = result.columns[5]
        tol = result.checks[0].tolerance
        values = [r[5] for r in result.rows]
        plotting.residuals(values, tol, png_path, title=name, ylabel=metric)
    report = {
        "scenario": name,
        "mode": result.mode,
        "seed": cfg.seed,
        "status": result.status,
        "failed": result.failed,
        "checks": [c.as_dict() for c in result.checks],
        "info": result.info,
        "config": cfg.as_dict(),
        "artifacts": sorted(artifacts + [f"{name}.json"]),
        "version": __version__,
    }
    write_json(out_dir / f"{name}.json", report)
    return report


def _print_checks(report: dict, stream=sys.stdout) -> None:
    for c in report["checks"]:
        value = "-" if c["value"] is None else f"{c['value']:.3e}"
        print(f"  {c['status']:7s} {c['name']:34s} {value:>10s} {c['comparison']} {c['tolerance']:.1e}", file=stream)


def run_single(mode: str, args) -> int:
    data = load_file(args.config) if args.config else {}
    if args.config and not data:
        raise ConfigError("configuration is empty", key=str(args.config))
    cfg = build(data, mode=mode, seed=args.seed, out=args.out, source=args.config)
    result = run(cfg)
    report = write_artifacts(result, cfg, cfg.out_dir, mode)
    print(f"{mode}: {report['status']}")
    _print_checks(report)
    return EXIT_OK if report["status"] == "pass" else EXIT_FAIL


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict):
            out[k] = {**out.get(k, {}), **v}
        else:
            out[k] = v
    return out


def run_campaign(args) -> int:
    """Every built-in scenario, each in its own subdirectory, plus ``campaign.json`` and a summary."""
    data = load_file(args.config) if args.config else {}
    if args.config and not data:
        raise ConfigError("configuration is empty", key=str(args.config))
    data = dict(data)
    if "mode" in data:
        raise ConfigError("a campaign config must not set a mode", key="mode")
    seed = args.seed if args.seed is not None else data.pop("seed", None)
    data.pop("seed", None)
    for key in data:
        if key not in CAMPAIGN_SECTIONS:
            raise ConfigError(f"campaign configs may only set {list(CAMPAIGN_SECTIONS)}", key=key)
    out_root = Path(args.out or data.get("output", {}).get("dir", "out"))
    # validate every scenario before running anything
    configs = []
    for name, mode, overrides in CAMPAIGN:
        extra = {k: v for k, v in data.items() if k != "output"}
        if not mode.startswith("verify-"):
            extra.pop("perturbation", None)
        cfg = build(_merge(overrides, extra), mode=mode, seed=seed, out=str(out_root / name))
        configs.append((name, cfg))
    summary = []
    for name, cfg in configs:
        report = write_artifacts(run(cfg), cfg, cfg.out_dir, name)
        print(f"{name}: {report['status']}")
        _print_checks(report)
        summary.append({"scenario": name, "mode": cfg.mode, "status": report["status"], "failed": report["failed"],
                        "report": f"{name}/{name}.json"})
    status = "fail" if any(s["status"] == "fail" for s in summary) else "pass"
    write_json(out_root / "campaign.json", {"seed": seed, "status": status, "scenarios": summary,
                                           "version": __version__})
    render_report([out_root], out_root, quiet=True)
    return EXIT_OK if status == "pass" else EXIT_FAIL


# -- report ------------------------------------------------------------------------------------

REQUIRED_KEYS = ("scenario", "mode", "status", "checks")


def _load_report(path: Path) -> dict:
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ArtifactError(f"{path}: cannot parse artifact ({exc})") from exc
    if not isinstance(data, dict) or any(k not in data for k in REQUIRED_KEYS):
        raise ArtifactError(f"{path}: not a scenario report (needs keys {list(REQUIRED_KEYS)})")
    for c in data["checks"]:
        if not isinstance(c, dict) or any(k not in c for k in ("name", "value", "tolerance", "status")):
            raise ArtifactError(f"{path}: malformed check entry {c!r}")
    return data


def collect_reports(paths) -> list:
    """Scenario reports from files or directories (searched recursively)."""
    reports = []
    for p in map(Path, paths):
        if p.is_dir():
            for f in sorted(p.rglob("*.json")):
                if f.name == "campaign.json" or f.name.endswith(".f64.json") or f.name == "summary.json":
                    continue
                reports.append(_load_report(f))
        elif p.is_file():
            reports.append(_load_report(p))
        else:
            raise ArtifactError(f"{p}: no such file or directory")
    if not reports:
        raise ArtifactError("no scenario reports found")
    return reports


def summary_rows(reports) -> list:
    rows = []
    for r in reports:
        for c in r["checks"]:
            rows.append({"scenario": r["scenario"], "check": c["name"], "label": f"{r['scenario']}: {c['name']}",
                         "value": c["value"], "tolerance": c["tolerance"],
                         "comparison": c.get("comparison", "<="), "status": c["status"]})
    return rows


def render_report(paths, out_dir=None, quiet=False) -> int:
    rows = summary_rows(collect_reports(paths))
    if out_dir is None:
        first = Path(paths[0])
        out_dir = first if first.is_dir() else first.parent
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_rows(out_dir / "summary.csv", ["scenario", "check", "value", "tolerance", "comparison", "status"],
               [[r["scenario"], r["check"], "" if r["value"] is None else float(r["value"]), float(r["tolerance"]),
                 r["comparison"], r["status"]] for r in rows])
    plotting.summary(rows, out_dir / "summary.png")
    if not quiet:
        width = max(len(r["label"]) for r in rows)
        print(f"{'check':{width}s}  {'value':>10s}     {'tolerance':>9s}  status")
        for r in rows:
            value = "-" if r["value"] is None else f"{r['value']:.3e}"
            print(f"{r['label']:{width}s}  {value:>10s}  {r['comparison']:2s} {r['tolerance']:9.1e}  {r['status'].upper()}")
        n_fail = sum(r["status"] == "fail" for r in rows)
        print(f"{len(rows) - n_fail} of {len(rows)} checks without failure; summary in {out_dir}")
    return EXIT_FAIL if any(r["status"] == "fail" for r in rows) else EXIT_OK


# -- entry point -------------------------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaugered", description="Gauge-field bracket checks and field simulations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="random seed (overrides the config)")

    v = sub.add_parser("verify", help="run a verification scenario")
    v.add_argument("kind", choices=["jacobi", "bianchi", "minimal-coupling", "reduction", "all"])
    common(v)
    s = sub.add_parser("simulate", help="run a simulation")
    s.add_argument("kind", choices=["particle", "maxwell"])
    common(s)
    r = sub.add_parser("report", help="summarize scenario reports")
    r.add_argument("paths", nargs="+")
    r.add_argument("--out", help="directory for summary.csv and summary.png")
    return parser


def _setup_logging():
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None) -> int:
    _setup_logging()
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if args.command == "report":
            return render_report(args.paths, args.out)
        if args.command == "verify" and args.kind == "all":
            return run_campaign(args)
        return run_single(f"{args.command}-{args.kind}", args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        if exc.key:
            print(f"offending key: {exc.key}", file=sys.stderr)
        return EXIT_USAGE
    except ArtifactError as exc:
        print(f"artifact error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
