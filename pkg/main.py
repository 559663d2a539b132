"""
🔬 logspec-lab - command line

    python main.py run configs/theorem1.json [--out-dir DIR] [--seed S] [--threads T]
    python main.py validate configs/theorem1.json
    python main.py suite acceptance [--quick]
    python main.py report output/theorem1

Exit code 0 when the run (or every acceptance criterion) passed, 1 when a
check failed, 2 for invalid configs.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv
from rich import box
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent))

from acceptance_suite import AcceptanceSuite  # noqa: E402
from experiment_runner import ExperimentRunner  # noqa: E402
from lab_config import EnvSettings, validate_files  # noqa: E402
from lab_errors import ConfigError, LabError  # noqa: E402
from results_store import RunReport, generate_report, load_manifest  # noqa: E402

# Load environment variables
load_dotenv()

console = Console()
logger = logging.getLogger("logspec")


def setup_logging(level: str) -> None:
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, rich_tracebacks=True, show_path=False)],
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="logspec", description="Spectral laboratory for log-decaying symbols")
    parser.add_argument("--out-dir", help="output root (default: LOGSPEC_OUTPUT_DIR or ./output)")
    parser.add_argument("--seed", type=int, help="seed for randomized checks")
    parser.add_argument("--threads", type=int, help="worker threads for moments and assembly")
    parser.add_argument("--log-level", help="logging level (default: LOGSPEC_LOG_LEVEL or INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment config")
    run.add_argument("config", help="path to a config, or the name of a bundled config")

    validate = sub.add_parser("validate", help="validate configs without computing")
    validate.add_argument("configs", nargs="+", help="config files")

    suite = sub.add_parser("suite", help="run a bundled battery")
    suite.add_argument("battery", choices=["acceptance"])
    suite.add_argument("--quick", action="store_true", help="skip configs tagged 'heavy'")

    report = sub.add_parser("report", help="print the summary of a finished run")
    report.add_argument("run_dir", help="run directory holding manifest.json")
    return parser


def print_report(report: RunReport) -> None:
    table = Table(title=f"{report.name} [{report.kind}]", box=box.ROUNDED)
    table.add_column("check", style="cyan")
    table.add_column("pass")
    for verdict in report.verdicts:
        ok = verdict.get("pass")
        table.add_row(str(verdict.get("check")), "[green]yes[/green]" if ok else "[red]no[/red]")
    console.print(table)

    summary = Table(box=box.SIMPLE, show_header=False)
    summary.add_column("key", style="blue")
    summary.add_column("value", style="yellow")
    for key, value in sorted(report.summary.items()):
        if isinstance(value, float):
            value = f"{value:.6g}"
        summary.add_row(key, str(value))
    for stage, seconds in report.timings.items():
        summary.add_row(f"time: {stage}", f"{seconds:.2f}s")
    console.print(summary)
    for error in report.errors:
        console.print(f"[red]❌ {error}[/red]")
    console.print(f"[green]📁 {report.run_dir}[/green]")


def cmd_run(args: argparse.Namespace) -> int:
    runner = ExperimentRunner(output_root=args.out_dir, threads=args.threads, seed=args.seed)
    report = runner.run(args.config)
    print_report(report)
    return 0 if report.passed else 1


def cmd_validate(args: argparse.Namespace) -> int:
    results = validate_files([Path(p) for p in args.configs])
    table = Table(title="Config validation", box=box.ROUNDED)
    table.add_column("config", style="cyan")
    table.add_column("status")
    table.add_column("problems", style="yellow")
    for path, problems in results.items():
        status = "[green]valid[/green]" if not problems else "[red]invalid[/red]"
        table.add_row(path, status, "\n".join(problems))
    console.print(table)
    return 0 if all(not p for p in results.values()) else 2


def cmd_suite(args: argparse.Namespace) -> int:
    runner = ExperimentRunner(output_root=args.out_dir, threads=args.threads, seed=args.seed)
    suite = AcceptanceSuite(runner)
    result = suite.run(quick=args.quick)

    table = Table(title="Acceptance", box=box.ROUNDED)
    table.add_column("criterion", style="cyan")
    table.add_column("result")
    table.add_column("failed checks", style="yellow")
    for c in result["criteria"]:
        if c.get("skipped"):
            mark = "[dim]skipped[/dim]"
        else:
            mark = "[green]pass[/green]" if c["pass"] else "[red]fail[/red]"
        table.add_row(c["criterion"], mark, ", ".join(c.get("failed_checks", [])))
    console.print(table)
    for error in result["errors"]:
        console.print(f"[red]❌ {error}[/red]")

    out_root = Path(args.out_dir or runner.env.output_dir)
    path = suite.save_result(result, out_root / "acceptance_result.json")
    console.print(f"[green]💾 {path}[/green]")
    if result["failed_stage"] == "validate":
        return 2
    return 0 if result["status"] == "OK" else 1


def cmd_report(args: argparse.Namespace) -> int:
    manifest = load_manifest(Path(args.run_dir))
    console.print(generate_report(manifest), markup=False, highlight=False)
    return 0 if manifest.get("pass") else 1


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        env = EnvSettings.from_env()
    except ConfigError as exc:
        console.print(f"[red]❌ {exc}[/red]")
        return 2
    setup_logging(args.log_level or env.log_level)

    commands = {"run": cmd_run, "validate": cmd_validate, "suite": cmd_suite, "report": cmd_report}
    try:
        return commands[args.command](args)
    except ConfigError as exc:
        for problem in exc.problems:
            console.print(f"[red]❌ {problem}[/red]")
        return 2
    except LabError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
