"""
Command line front end.

    dwadmm run <config> --out <dir>       config.json, metrics.csv, summary.json
    dwadmm compare <config> --out <dir>   both algorithms side by side
    dwadmm validate <config>              assumption report only

``--seed``, ``--max-iter`` and ``--tol`` override the config file.
"""

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

from .config import parse_scenario, scenario_to_config
from .diagnostics import CSV_COLUMNS
from .engine import run
from .errors import DWADMMError, ScenarioError, SolverError

log = logging.getLogger("dwadmm")


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(float(value))
    return str(value)


def write_metrics_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(v) for v in row.csv_values()])


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_run(record, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", scenario_to_config(record.scenario))
    write_metrics_csv(out / "metrics.csv", record.rows)
    _write_json(out / "summary.json", record.summary)


def run_command(scenario, out_dir):
    """Run one scenario and write its artifacts; returns an exit status."""
    try:
        record = run(scenario)
    except SolverError as exc:
        log.error("engine failure: %s", exc)
        return 2
    except DWADMMError as exc:
        log.error("%s", exc)
        return 2
    try:
        write_run(record, out_dir)
    except OSError as exc:
        log.error("cannot write outputs: %s", exc)
        return 3
    s = record.summary
    log.info(
        "%s: %d iterations, converged=%s, dist_to_opt=%.3e",
        s["algorithm"], s["iterations"], s["converged"], s["dist_to_opt"] or 0.0,
    )
    return 0


# errors this close count as equal; the ratio of two tiny errors is mostly round-off
ERROR_MATCH_TOL = 1e-12


def compare_records(conventional, dw):
    """Final honest errors of both runs and their ratio (conventional / DW-ADMM)."""
    conv_err = conventional.summary["dist_to_honest_opt"]
    dw_err = dw.summary["dist_to_honest_opt"]
    if abs(conv_err - dw_err) <= ERROR_MATCH_TOL:
        ratio = 1.0
    elif dw_err == 0.0:
        ratio = math.inf
    else:
        ratio = conv_err / dw_err
    return {
        "conventional_honest_error": conv_err,
        "dw_admm_honest_error": dw_err,
        "honest_error_ratio": ratio,
        "conventional_iterations": conventional.summary["iterations"],
        "dw_admm_iterations": dw.summary["iterations"],
        "dw_admm_detection_iteration": dw.summary["detection_iteration"],
    }


def compare_command(scenario, out_dir):
    """Run conventional ADMM and DW-ADMM on one scenario; returns an exit status."""
    records = {}
    try:
        for alg in ("conventional_admm", "dw_admm"):
            records[alg] = run(scenario.with_algorithm(alg))
    except DWADMMError as exc:
        log.error("engine failure: %s", exc)
        return 2
    out = Path(out_dir)
    try:
        for alg, rec in records.items():
            write_run(rec, out / alg)
        _write_json(
            out / "comparison.json",
            compare_records(records["conventional_admm"], records["dw_admm"]),
        )
    except OSError as exc:
        log.error("cannot write outputs: %s", exc)
        return 3
    return 0


def validate_command(source, overrides=None):
    scenario = parse_scenario(source, overrides, strict=False)
    report = scenario.validation.to_dict()
    report["error_free"] = scenario.error_free
    report["nodes"] = scenario.graph.node_count
    report["dim"] = scenario.objectives.dim
    json.dump(report, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0 if report["ok"] or not scenario.error_free else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="dwadmm", description=__doc__.split("\n\n")[0].strip())
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "compare", "validate"):
        p = sub.add_parser(name)
        p.add_argument("config", help="scenario JSON file")
        if name != "validate":
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--max-iter", type=int, dest="max_iter")
        p.add_argument("--tol", type=float)
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    overrides = {"seed": args.seed, "max_iter": args.max_iter, "tol": args.tol}
    try:
        if args.command == "validate":
            return validate_command(args.config, overrides)
        scenario = parse_scenario(args.config, overrides)
    except ScenarioError as exc:
        log.error("invalid scenario: %s", exc)
        return 1
    if args.command == "run":
        return run_command(scenario, args.out)
    return compare_command(scenario, args.out)


if __name__ == "__main__":
    sys.exit(main())
