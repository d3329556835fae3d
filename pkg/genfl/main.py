"""
Command-line entry point for the GenFL simulator.

    python -m genfl run --config exp.cfg [--seed N] [--rounds N] [--out DIR]
    python -m genfl sweep --config exp.cfg --axis alpha --values 0.1,0.3,1.0
    python -m genfl plot --inputs a/metrics.csv,b/metrics.csv --out plot.svg
    python -m genfl history [--limit N] [--mode M] [--stats]
    python -m genfl export-data --config exp.cfg --out train.txt [--split train|test|pool]

Errors print one line, `error: <category>: <message>`, and exit nonzero.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from genfl.config import DEFAULT_WORKERS, setup_logging
from genfl.errors import GenFLError

logger = logging.getLogger(__name__)


def _split_list(text: str) -> List[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genfl", description="GenFL federated learning simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment")
    run_p.add_argument("--config", required=True, help="key=value config file")
    run_p.add_argument("--seed", type=int, help="override the config seed")
    run_p.add_argument("--rounds", type=int, help="override the number of rounds")
    run_p.add_argument("--out", help="override output_dir")
    run_p.add_argument("--no-history", action="store_true", help="do not record the run in the registry")

    sweep_p = sub.add_parser("sweep", help="one run per value of a config key")
    sweep_p.add_argument("--config", required=True)
    sweep_p.add_argument("--axis", required=True, help="config key to vary")
    sweep_p.add_argument("--values", required=True, help="comma-separated values")
    sweep_p.add_argument("--out", help="override output_dir")
    sweep_p.add_argument("--paired", action="store_true", help="give every member the base seed")
    sweep_p.add_argument("--workers", type=int, default=1, help=f"parallel members (0 = {DEFAULT_WORKERS})")
    sweep_p.add_argument("--no-history", action="store_true")

    plot_p = sub.add_parser("plot", help="accuracy-vs-round SVG from metrics CSVs")
    plot_p.add_argument("--inputs", required=True, help="comma-separated metrics.csv paths")
    plot_p.add_argument("--out", required=True, help="SVG output path")
    plot_p.add_argument("--title")

    hist_p = sub.add_parser("history", help="list recorded runs")
    hist_p.add_argument("--limit", type=int, default=20)
    hist_p.add_argument("--mode")
    hist_p.add_argument("--stats", action="store_true", help="print registry statistics")

    export_p = sub.add_parser("export-data", help="write a dataset split as text")
    export_p.add_argument("--config", required=True)
    export_p.add_argument("--out", required=True)
    export_p.add_argument("--split", choices=("train", "test", "pool"), default="train")

    return parser


def _cmd_run(args) -> int:
    from genfl.services.experiment_service import experiment_service

    config = experiment_service.load_config(
        args.config, {"seed": args.seed, "rounds": args.rounds, "output_dir": args.out}
    )
    table = experiment_service.run(config, record_history=not args.no_history)
    last = table.rows[-1]
    print(f"round={last.round} mode={last.mode} test_accuracy={last.test_accuracy:.4f} "
          f"test_loss={last.test_loss:.4f} output_dir={config.output_dir}")
    return 0


def _cmd_sweep(args) -> int:
    from genfl.services.experiment_service import experiment_service
    from genfl.services.plot_service import plot_service

    config = experiment_service.load_config(args.config, {"output_dir": args.out})
    workers = args.workers if args.workers > 0 else DEFAULT_WORKERS
    tables = experiment_service.sweep(
        config, args.axis, _split_list(args.values),
        paired=args.paired, workers=workers, record_history=not args.no_history,
    )
    plot_service.plot(tables, Path(config.output_dir) / "sweep.svg", title=f"Test accuracy per round ({args.axis})")
    for table in tables:
        print(f"{table.label} seed={table.seed} final_accuracy={table.final_accuracy:.4f}")
    return 0


def _cmd_plot(args) -> int:
    from genfl.services.experiment_service import experiment_service
    from genfl.services.plot_service import plot_service

    tables = [experiment_service.read_metrics_csv(p) for p in _split_list(args.inputs)]
    plot_service.plot(tables, args.out, title=args.title)
    return 0


def _cmd_history(args) -> int:
    from genfl.database import SessionLocal, init_db
    from genfl.services.run_history_service import RunHistoryService

    init_db()
    db = SessionLocal()
    try:
        service = RunHistoryService(db)
        if args.stats:
            for key, value in service.get_statistics().items():
                print(f"{key}: {value}")
            return 0
        for run in service.list_runs(limit=args.limit, mode=args.mode):
            acc = "-" if run.final_accuracy is None else f"{run.final_accuracy:.4f}"
            member = f" {run.sweep_axis}={run.sweep_value}" if run.sweep_axis else ""
            print(f"{run.id:>5} {run.status:<8} {run.mode:<9} alpha={run.alpha:<6g} seed={run.seed:<10} "
                  f"acc={acc} rounds={run.rounds}{member} [{run.config_hash}] {run.get_duration_formatted()}")
    finally:
        db.close()
    return 0


def _cmd_export(args) -> int:
    from genfl.services.experiment_service import experiment_service

    config = experiment_service.load_config(args.config)
    experiment_service.export_split(config, args.out, args.split)
    return 0


COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "plot": _cmd_plot,
    "history": _cmd_history,
    "export-data": _cmd_export,
}


def _one_line(message: str) -> str:
    return " ".join(str(message).split())


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging()
    try:
        return COMMANDS[args.command](args)
    except GenFLError as exc:
        logger.debug("Command failed", exc_info=True)
        print(f"error: {exc.category}: {_one_line(exc)}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: io: {_one_line(exc)}", file=sys.stderr)
        return 1
    except Exception as exc:
        logger.debug("Unexpected failure", exc_info=True)
        print(f"error: internal: {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
