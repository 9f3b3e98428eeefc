"""
asvar-lab command line.

Subcommands:
    toy       exact three-state sweeps over a in [1/2, 1)
    verify    randomized Peskun-ordering and identity checks
    simulate  run one sampler and write its path CSV
    compare   run several samplers over seeds against the exact values
    asvar     estimate the asymptotic variance from a path CSV
    validate  check a model config or kernel document against its schema

Usage:
    python scripts/asvar_lab.py toy --case da-better --proposal rw --a-grid 0.5:0.95:0.05 --out rows.csv
    python scripts/asvar_lab.py verify --seed 0 --instances 1000 --out report.json
    python scripts/asvar_lab.py simulate --config two-coin --algo isj-single --n 100000 --seed 1 --f theta --out path.csv
    python scripts/asvar_lab.py compare --config two-coin --n 100000 --seeds 20
    python scripts/asvar_lab.py asvar path.csv --config two-coin --f theta --mode isj-single --replicates 8
    python scripts/asvar_lab.py validate data/config/two_coin.json

Exit code is 1 when any verdict fails.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

# Add parent to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

import pandas as pd
from rich.console import Console
from rich.table import Table

from scripts.chains.serialize import FINITE_OBJECT_SCHEMA, validation_errors
from scripts.errors import AsvarLabError, ConfigError
from scripts.experiments.compare import ESTIMATOR_KIND, clt_study, compare_run
from scripts.experiments.toy import CASES, DEFAULT_A_GRID, PROPOSALS, sweep_report
from scripts.experiments.verify_suite import verify_suite
from scripts.models.pm_core import resolve_function
from scripts.models.presets import MODEL_SCHEMA, load_model
from scripts.processors.asvar import batch_means_asvar, initial_sequence_asvar
from scripts.processors.is_variance import is_asvar_plugin
from scripts.samplers.base_sampler import ALGORITHMS, ChainPath
from scripts.samplers.estimators import estimate
from scripts.samplers.pm_samplers import IS_MODES, simulate_batch

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
logger = logging.getLogger("asvar_lab")

DEFAULT_CONFIG = "two-coin"
DEFAULT_FUNCTION = "theta"


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _format(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def print_table(title: str, rows: Sequence[Dict[str, Any]]) -> None:
    """Rich table on a terminal, plain banner layout otherwise."""
    if not rows:
        return
    columns = list(rows[0])
    if sys.stdout.isatty():
        table = Table(title=title)
        for column in columns:
            table.add_column(column)
        for row in rows:
            table.add_row(*(_format(row.get(c)) for c in columns))
        Console().print(table)
        return
    print(f"\n{'=' * 60}")
    print(title)
    print(f"{'=' * 60}")
    print("  ".join(columns))
    for row in rows:
        print("  ".join(_format(row.get(c)) for c in columns))


def print_verdicts(title: str, verdicts: Dict[str, bool]) -> None:
    print_table(title, [{"check": key, "passed": ok} for key, ok in verdicts.items()])


def write_json(document: Dict[str, Any], path: Optional[Path]) -> None:
    text = json.dumps(document, indent=2, default=str)
    if path is None:
        print(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info(f"Wrote {path}")


def write_csv(frame: pd.DataFrame, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {len(frame):,} rows to {path}")


def parse_grid(text: str) -> List[float]:
    """LO:HI:STEP, both ends inclusive."""
    try:
        lo, hi, step = (float(part) for part in text.split(":"))
    except ValueError:
        raise SystemExit(f"--a-grid must look like LO:HI:STEP, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise SystemExit(f"--a-grid needs STEP > 0 and HI >= LO, got {text!r}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    grid = [round(lo + k * step, 10) for k in range(count)]
    if grid[0] < 0.5 or grid[-1] >= 1.0:
        raise SystemExit(f"--a-grid must stay within [0.5, 1), got {grid[0]}..{grid[-1]}")
    return grid


def _model(config: str):
    try:
        return load_model(config)
    except AsvarLabError as exc:
        logger.error(str(exc))
        raise SystemExit(f"Invalid model config: {exc}") from exc


def _function(name: str):
    try:
        return resolve_function(name)
    except ConfigError as exc:
        raise SystemExit(str(exc)) from exc


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_toy(args: argparse.Namespace) -> int:
    grid = parse_grid(args.a_grid) if args.a_grid else list(DEFAULT_A_GRID)
    cases = CASES if args.case == "all" else (args.case,)
    proposals = PROPOSALS if args.proposal == "all" else (args.proposal,)

    frames, reports = [], []
    for case in cases:
        for proposal in proposals:
            report = sweep_report(case, proposal, grid)
            reports.append(report)
            frame = pd.DataFrame([row.to_dict() for row in report.rows])
            frame.insert(0, "proposal", proposal)
            frame.insert(0, "case", case)
            frames.append(frame)
            print_verdicts(f"{case} / {proposal}", report.verdicts)
            if report.matched_variant:
                print(f"  matched sign variant: {report.matched_variant}")

    rows = pd.concat(frames, ignore_index=True)
    if args.out:
        write_csv(rows, args.out)
        if args.gnuplot:
            dat = args.out.with_suffix(".dat")
            numeric = rows.drop(columns=["case", "proposal"])
            with dat.open("w", encoding="utf-8") as fh:
                for (case, proposal), block in rows.groupby(["case", "proposal"], sort=False):
                    fh.write(f"# {case} {proposal}\n# {' '.join(numeric.columns)}\n")
                    fh.write(numeric.loc[block.index].to_string(header=False, index=False))
                    fh.write("\n\n\n")
            logger.info(f"Wrote {dat}")
    else:
        print(rows.to_string(index=False))
    if args.report:
        write_json({"sweeps": [r.to_dict() for r in reports]}, args.report)
    return 0 if all(r.passed for r in reports) else 1


def cmd_verify(args: argparse.Namespace) -> int:
    report = verify_suite(seed=args.seed, instance_count=args.instances, progress=not args.quiet)
    rows = [{"check": name, **tally.to_dict()} for name, tally in report.checks.items()]
    print_table(f"verify: seed {args.seed}, {args.instances} instances", rows)
    if args.out:
        write_json(report.to_dict(), args.out)
    return 0 if report.passed else 1


def cmd_simulate(args: argparse.Namespace) -> int:
    model = _model(args.config)
    fn = _function(args.f)
    path = simulate_batch(args.algo, model, None, args.n, args.seed, 1, (fn,))[0]
    kind = ESTIMATOR_KIND[args.algo]
    if kind == "SNIS" and fn.depends_on_z:
        logger.warning(f"{fn.name!r} depends on z; the base chain path carries no estimate for it")
    else:
        result = estimate(path, kind, fn, model=model if model.is_enumerable else None)
        print_table(f"{args.algo} on {model.name}", [{**result.to_dict(), **path.meta.get("cost", {})}])
    if args.out:
        write_csv(path.to_frame(fn.name), args.out)
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    model = _model(args.config)
    fn = _function(args.f)
    algos = args.algos or [a for a in ALGORITHMS if a != "base" or not fn.depends_on_z]
    seeds = range(args.seed, args.seed + args.seeds)
    report = compare_run(model, algos, args.n, seeds, fn, progress=not args.quiet)
    frame = report.to_frame()
    print_table(f"compare {model.name} / {fn.name}, n={args.n}", frame.to_dict("records"))
    print_verdicts("verdicts", report.verdicts)
    if report.trivial_weight:
        print("  w == 1: the IS and PM estimators coincide in law")
    document = report.to_dict()
    passed = report.passed

    if args.clt_replicates:
        clt = clt_study(model, algos, args.n, args.clt_replicates, args.seed, fn, progress=not args.quiet)
        print_table("replicate study", clt.to_frame().to_dict("records"))
        document["clt"] = clt.to_dict()
        passed = passed and clt.passed

    if args.csv:
        write_csv(frame, args.csv)
    if args.out:
        write_json(document, args.out)
    return 0 if passed else 1


def cmd_asvar(args: argparse.Namespace) -> int:
    if not args.path.exists():
        raise SystemExit(f"File not found: {args.path}")
    fn = _function(args.f)
    frame = pd.read_csv(args.path)
    model = _model(args.config)
    try:
        path = ChainPath.from_frame(
            frame, fn.name, model.theta_labels, model.u_labels, meta={"algorithm": args.mode},
        )
    except (AsvarLabError, KeyError) as exc:
        raise SystemExit(f"Invalid path CSV {args.path}: {exc}") from exc

    if path.xi1 is not None:
        result = is_asvar_plugin(path, model, fn, args.replicates, args.seed, args.batch_count)
        document = result.to_dict()
    else:
        if fn.name not in path.zetahat:
            raise SystemExit(f"{args.path} has neither xi nor zetahat_f values")
        series = path.zetahat[fn.name]
        bm = batch_means_asvar(series, args.batch_count)
        ise = initial_sequence_asvar(series)
        chosen = bm if args.estimator == "batch-means" else ise
        document = {
            "value": chosen.value,
            "se": chosen.standard_error,
            "method": chosen.method,
            "components": {"batch_means": bm.value, "initial_sequence": ise.value},
        }
    write_json(document, args.out)
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    if not args.document.exists():
        raise SystemExit(f"File not found: {args.document}")
    try:
        document = json.loads(args.document.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SystemExit(f"JSON parse error in {args.document}: {exc}") from exc

    schema = args.schema or (FINITE_OBJECT_SCHEMA if "kind" in document else MODEL_SCHEMA)
    errors = validation_errors(document, schema)
    if errors:
        for message in errors:
            print(message)
        raise SystemExit(f"Validation failed with {len(errors)} error(s).")
    if schema == MODEL_SCHEMA:
        _model(str(args.document))
    print(f"Validation passed: {args.document} ({Path(schema).name})")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asvar-lab",
        description="Exact and simulated asymptotic variances of IS-corrected, pseudo-marginal and DA MCMC",
    )
    noise = parser.add_mutually_exclusive_group()
    noise.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    noise.add_argument("--quiet", "-q", action="store_true", help="Warnings only, no progress bars")
    sub = parser.add_subparsers(dest="command", required=True)

    toy = sub.add_parser("toy", help="Three-state exact sweeps")
    toy.add_argument("--case", choices=CASES + ("all",), default="all", help="Mass allocation (default: all)")
    toy.add_argument("--proposal", choices=PROPOSALS + ("all",), default="all", help="Proposal (default: all)")
    toy.add_argument("--a-grid", help="LO:HI:STEP within [0.5, 1) (default: 0.50:0.95:0.05)")
    toy.add_argument("--out", type=Path, help="Rows CSV (default: print)")
    toy.add_argument("--gnuplot", action="store_true", help="Also write a whitespace-separated .dat next to --out")
    toy.add_argument("--report", type=Path, help="Verdict report JSON")
    toy.set_defaults(handler=cmd_toy)

    verify = sub.add_parser("verify", help="Randomized ordering checks")
    verify.add_argument("--seed", type=int, default=0, help="Root seed (default: 0)")
    verify.add_argument("--instances", type=int, default=1000, help="Random instances (default: 1000)")
    verify.add_argument("--out", type=Path, help="Report JSON")
    verify.set_defaults(handler=cmd_verify)

    simulate = sub.add_parser("simulate", help="Run one sampler")
    simulate.add_argument("--config", default=DEFAULT_CONFIG, help=f"Preset name or model JSON (default: {DEFAULT_CONFIG})")
    simulate.add_argument("--algo", choices=ALGORITHMS, required=True, help="Sampler")
    simulate.add_argument("--n", type=int, default=10_000, help="Base steps (default: 10000)")
    simulate.add_argument("--seed", type=int, default=0, help="Seed (default: 0)")
    simulate.add_argument("--f", default=DEFAULT_FUNCTION, help=f"Test function (default: {DEFAULT_FUNCTION})")
    simulate.add_argument("--out", type=Path, help="Path CSV")
    simulate.set_defaults(handler=cmd_simulate)

    compare = sub.add_parser("compare", help="Compare samplers over seeds")
    compare.add_argument("--config", default=DEFAULT_CONFIG, help=f"Preset name or model JSON (default: {DEFAULT_CONFIG})")
    compare.add_argument("--algos", nargs="+", choices=ALGORITHMS, help="Samplers (default: all that apply)")
    compare.add_argument("--n", type=int, default=100_000, help="Base steps per run (default: 100000)")
    compare.add_argument("--seeds", type=int, default=20, help="Number of seeds (default: 20)")
    compare.add_argument("--seed", type=int, default=0, help="First seed (default: 0)")
    compare.add_argument("--f", default=DEFAULT_FUNCTION, help=f"Test function (default: {DEFAULT_FUNCTION})")
    compare.add_argument("--clt-replicates", type=int, default=0, help="Also run the replicate study with R runs (default: off)")
    compare.add_argument("--csv", type=Path, help="Per-algorithm summary CSV")
    compare.add_argument("--out", type=Path, help="Report JSON")
    compare.set_defaults(handler=cmd_compare)

    asvar = sub.add_parser("asvar", help="Asymptotic variance from a path CSV")
    asvar.add_argument("path", type=Path, help="Path CSV written by simulate")
    asvar.add_argument("--config", default=DEFAULT_CONFIG, help=f"Preset name or model JSON (default: {DEFAULT_CONFIG})")
    asvar.add_argument("--f", default=DEFAULT_FUNCTION, help=f"Test function (default: {DEFAULT_FUNCTION})")
    asvar.add_argument("--mode", choices=IS_MODES, default="is0", help="IS mode of the path (default: is0)")
    asvar.add_argument("--replicates", type=int, help="Fresh V draws per state for the component split")
    asvar.add_argument("--seed", type=int, default=0, help="Seed for the fresh V draws (default: 0)")
    asvar.add_argument("--batch-count", type=int, help="Batches (default: floor(n^(1/3)))")
    asvar.add_argument("--estimator", choices=("batch-means", "initial-sequence"), default="batch-means",
                       help="Estimator reported as value for PM and DA paths (default: batch-means)")
    asvar.add_argument("--out", type=Path, help="Estimate JSON (default: print)")
    asvar.set_defaults(handler=cmd_asvar)

    validate = sub.add_parser("validate", help="Validate a model config or kernel document")
    validate.add_argument("document", type=Path, help="JSON document")
    validate.add_argument("--schema", type=Path, help="Schema (default: chosen from the document)")
    validate.set_defaults(handler=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)
    try:
        return args.handler(args)
    except AsvarLabError as exc:
        logger.error(str(exc))
        raise SystemExit(f"{type(exc).__name__}: {exc}") from exc


if __name__ == "__main__":
    raise SystemExit(main())
