#!/usr/bin/env python3
"""
hetcell 統合CLIツール

Wi-Fi / LTE 統合セルのシミュレーションをサブコマンド方式で実行する。
Results go to stdout (CSV or JSON); diagnostics go to stderr.

使い方:
    python scripts/hetcell_cli.py run scenarios/reference.json
    python scripts/hetcell_cli.py run scenarios/reference.json --format json --seed 7
    python scripts/hetcell_cli.py sweep scenarios/reference.json --axis n_clients --values 1,2,5,10,20,50
    python scripts/hetcell_cli.py oracle --n-range 1..50 --cw-min 31
    python scripts/hetcell_cli.py coverage scenarios/coverage_budgets.json
    python scripts/hetcell_cli.py validate scenarios/reference.json
    python scripts/hetcell_cli.py validate scenarios/reference.json --key mac.cw_min
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import pandas as pd

from hetcell.coverage import DEFAULT_BUDGETS, coverage_report, load_budgets, parse_budgets
from hetcell.mac import MacParams
from hetcell.metrics import emit
from hetcell.oracle import OracleError, oracle_table
from hetcell.scenario import ScenarioError, get, scenario_from_dict
from hetcell.simulation import Simulation
from hetcell.sweep import SweepError, parse_axis_values, sweep

log = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'

TRACE_LOGGER = "hetcell.kernel.trace"


# ============================================================================
# ユーティリティ関数
# ============================================================================

def print_error(message):
    """エラーメッセージ (stderr)"""
    print(f"[ERROR] {message}", file=sys.stderr)


def print_info(message):
    """情報メッセージ (stderr)"""
    print(f"[INFO] {message}", file=sys.stderr)


def fail(errors) -> int:
    for e in errors:
        print_error(e)
    return 1


def read_json(path: str) -> dict:
    with open(Path(path), 'r', encoding='utf-8') as f:
        return json.load(f)


def attach_trace_handler() -> logging.Handler:
    """Send kernel trace lines (time_us station event) to stderr regardless of -v / -q."""
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    trace_log = logging.getLogger(TRACE_LOGGER)
    trace_log.addHandler(handler)
    trace_log.setLevel(logging.DEBUG)
    trace_log.propagate = False
    return handler


def detach_trace_handler(handler: logging.Handler) -> None:
    trace_log = logging.getLogger(TRACE_LOGGER)
    trace_log.removeHandler(handler)
    trace_log.setLevel(logging.NOTSET)
    trace_log.propagate = True


def write_output(text: str, output: str | None) -> None:
    if output:
        with open(output, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text)
        print_info(f"wrote {output}")
    else:
        sys.stdout.write(text)


def frame_to_text(df: pd.DataFrame, fmt: str) -> str:
    if fmt == "json":
        return df.to_json(orient="records", indent=2) + "\n"
    return df.to_csv(index=False, float_format="%.6f", lineterminator="\n")


# ============================================================================
# サブコマンド
# ============================================================================

def cmd_run(args) -> int:
    """1シナリオを実行"""
    data = read_json(args.scenario)
    if args.seed is not None:
        data["seed"] = args.seed
    if args.trace or args.trace_file:
        data["trace"] = True
    if args.duration is not None:
        data["duration_s"] = args.duration
    config = scenario_from_dict(data)

    sim = Simulation(config)
    handler = attach_trace_handler() if args.trace else None
    try:
        report = sim.run()
    finally:
        if handler is not None:
            detach_trace_handler(handler)
    write_output(emit(report, args.format), args.output)

    if args.trace_file:
        trace = pd.DataFrame([(r.time_us, r.station, r.name) for r in sim.kernel.trace],
                             columns=["time_us", "station", "event"])
        trace.to_csv(args.trace_file, index=False, lineterminator="\n")
        print_info(f"trace: {len(trace)} events -> {args.trace_file}")
    return 0


def cmd_sweep(args) -> int:
    """1軸のパラメータスイープ"""
    data = read_json(args.scenario)
    values = parse_axis_values(args.axis, args.values)
    table = sweep(data, args.axis, values, jobs=args.jobs)
    write_output(emit(table, args.format), args.output)
    return 0


def cmd_oracle(args) -> int:
    """解析モデルによる飽和スループット"""
    n_values = parse_axis_values("n_clients", args.n_range)
    if not n_values or min(n_values) < 1:
        return fail(["--n-range must list station counts >= 1"])
    try:
        mac = MacParams(cw_min=args.cw_min, cw_max=args.cw_max)
    except ValueError as e:
        return fail([str(e)])
    table = oracle_table(n_values, mac, payload_bytes=args.payload)
    write_output(frame_to_text(table, args.format), args.output)
    return 0


def cmd_coverage(args) -> int:
    """リンクバジェットからの到達距離と面積"""
    if args.budgets:
        budgets, model = load_budgets(args.budgets)
    else:
        budgets, model = parse_budgets(DEFAULT_BUDGETS)
    write_output(frame_to_text(coverage_report(budgets, model), args.format), args.output)
    return 0


def cmd_validate(args) -> int:
    """シナリオファイルの検証"""
    normalized = scenario_from_dict(read_json(args.scenario)).to_dict()
    print_info(f"{args.scenario}: OK ({len(get(normalized, 'clients'))} clients, mode {get(normalized, 'mode')})")
    if args.key:
        missing = object()
        value = get(normalized, args.key, missing)
        if value is missing:
            return fail([f"{args.key}: not a scenario key"])
        write_output(json.dumps(value) + "\n", args.output)
        return 0
    write_output(json.dumps(normalized, indent=2) + "\n", args.output)
    return 0


# ============================================================================
# メイン
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetcell",
        description="Wi-Fi / LTE integrated cell simulator",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=(
            "使用例:\n"
            "  hetcell run scenarios/reference.json --format json\n"
            "  hetcell sweep scenarios/reference.json --axis cw_min --values 15,31,63\n"
            "  hetcell oracle --n-range 1..50\n"
        ),
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")

    subparsers = parser.add_subparsers(dest="command", title="サブコマンド")

    def add_output(sp, formats=("csv", "json")):
        sp.add_argument("--format", "-f", choices=formats, default="csv", help="output format (default csv)")
        sp.add_argument("--output", "-o", type=str, default=None, help="write to file instead of stdout")

    # --- run ---
    sp_run = subparsers.add_parser("run", help="run one scenario")
    sp_run.add_argument("scenario", help="scenario JSON file")
    sp_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    sp_run.add_argument("--duration", type=float, default=None, help="override duration_s")
    sp_run.add_argument("--trace", action="store_true", help="print one line per fired event (time_us station event) on stderr")
    sp_run.add_argument("--trace-file", type=str, default=None, help="write the event trace as CSV")
    add_output(sp_run)
    sp_run.set_defaults(func=cmd_run)

    # --- sweep ---
    sp_sweep = subparsers.add_parser("sweep", help="sweep one axis")
    sp_sweep.add_argument("scenario", help="base scenario JSON file")
    sp_sweep.add_argument("--axis", required=True,
                          choices=["n_clients", "cw_min", "retry_limit", "mode", "ul_fraction"])
    sp_sweep.add_argument("--values", required=True, help="comma list, integer ranges as a..b")
    sp_sweep.add_argument("--jobs", "-j", type=int, default=1, help="parallel worker processes")
    add_output(sp_sweep)
    sp_sweep.set_defaults(func=cmd_sweep)

    # --- oracle ---
    sp_oracle = subparsers.add_parser("oracle", help="analytic DCF saturation throughput")
    sp_oracle.add_argument("--n-range", default="1..50", help="station counts, e.g. 1..50 or 1,5,10")
    sp_oracle.add_argument("--cw-min", type=int, default=15)
    sp_oracle.add_argument("--cw-max", type=int, default=1023)
    sp_oracle.add_argument("--payload", type=int, default=1500, help="payload bytes above the MAC header")
    add_output(sp_oracle)
    sp_oracle.set_defaults(func=cmd_oracle)

    # --- coverage ---
    sp_cov = subparsers.add_parser("coverage", help="range / area table for link budgets")
    sp_cov.add_argument("budgets", nargs="?", default=None, help="budgets JSON file (default: 4 W vs 40 mW)")
    add_output(sp_cov)
    sp_cov.set_defaults(func=cmd_coverage)

    # --- validate ---
    sp_val = subparsers.add_parser("validate", help="validate a scenario and print it normalized")
    sp_val.add_argument("scenario", help="scenario JSON file")
    sp_val.add_argument("--key", "-k", default=None, help="print one normalized value, e.g. mac.cw_min")
    sp_val.add_argument("--output", "-o", type=str, default=None)
    sp_val.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)

    if not args.command:
        parser.print_help(sys.stderr)
        return 0

    try:
        return args.func(args)
    except (ScenarioError, SweepError) as e:
        errors = e.errors if isinstance(e, ScenarioError) else [str(e)]
        return fail(errors)
    except FileNotFoundError as e:
        return fail([f"file not found: {e.filename}"])
    except json.JSONDecodeError as e:
        return fail([f"invalid JSON: {e}"])
    except OracleError as e:
        return fail([str(e)])


if __name__ == "__main__":
    sys.exit(main())
