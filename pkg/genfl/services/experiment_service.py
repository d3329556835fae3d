"""
Experiment orchestration: config loading, single runs, parameter sweeps
and the metrics CSV files they produce.
"""
import csv
import io
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import psutil
from pydantic import ValidationError

from genfl.database import SessionLocal, init_db
from genfl.errors import ConfigError, MetricsFormatError, SweepError
from genfl.schemas.experiment import ExperimentConfig
from genfl.schemas.metrics import CSV_COLUMNS, MetricsTable, RoundMetrics, rounds_to_threshold
from genfl.schemas.protocol import Mode
from genfl.services.data_service import data_service
from genfl.services.generator_service import generator_service
from genfl.services.protocol_service import protocol_service
from genfl.services.run_history_service import RunHistoryService
from genfl.utils.files import atomic_write_text
from genfl.utils.rng import derive_seed, make_stream

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.csv"
CONFIG_ECHO_FILE = "config.txt"
SWEEP_FILE = "sweep.csv"
SWEEP_SUMMARY_FILE = "sweep_summary.csv"

SWEEP_SUMMARY_COLUMNS = (
    "axis", "value", "seed", "mode", "final_accuracy", "best_accuracy", "plateau_accuracy",
    "rounds_to_threshold", "total_time_sec", "total_energy_joules",
)

# Keys that only change where or how fast a run executes
NON_SWEEPABLE = {"output_dir", "preset", "client_workers"}
SWEEPABLE_KEYS = tuple(k for k in ExperimentConfig.model_fields if k not in NON_SWEEPABLE)


def _value_text(value) -> str:
    if isinstance(value, Mode):
        return value.value
    return str(value).strip()


def _execute_member(args: Tuple[ExperimentConfig, str]) -> MetricsTable:
    config, label = args
    return experiment_service.execute(config, label=label)


class ExperimentService:
    # -----------------------------------------------------------------------
    # config
    # -----------------------------------------------------------------------

    def parse_config_text(self, text: str) -> Dict[str, str]:
        """
        Parse flat `key = value` lines.

        Blank lines and lines starting with '#' are skipped.

        Raises:
            ConfigError: missing '=', empty key, duplicate or unknown key (with line number)
        """
        known = set(ExperimentConfig.model_fields)
        values: Dict[str, str] = {}
        for line_no, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"expected key=value, got '{line}'", line=line_no)
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ConfigError("empty key", line=line_no)
            if key not in known:
                raise ConfigError(f"unknown key '{key}'", line=line_no, keys=[key])
            if key in values:
                raise ConfigError(f"duplicate key '{key}'", line=line_no, keys=[key])
            values[key] = value
        return values

    def validate_config(self, values: Dict[str, object]) -> ExperimentConfig:
        """
        Build an ExperimentConfig, reporting every violation at once.

        Raises:
            ConfigError: one message listing each offending key
        """
        try:
            return ExperimentConfig.model_validate(values)
        except ValidationError as exc:
            keys, parts = [], []
            for error in exc.errors():
                key = ".".join(str(p) for p in error["loc"]) or "config"
                message = error["msg"].removeprefix("Value error, ")
                keys.append(key)
                parts.append(f"{key}: {message}")
            raise ConfigError("invalid config: " + "; ".join(parts), keys=keys) from None

    def load_config(self, path: Union[str, Path], overrides: Optional[Dict[str, object]] = None) -> ExperimentConfig:
        """
        Read a key=value config file; missing keys take their defaults.

        Args:
            path: Config file
            overrides: Values applied on top of the file (e.g. CLI flags)

        Returns:
            Validated ExperimentConfig
        """
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        values: Dict[str, object] = dict(self.parse_config_text(path.read_text(encoding="utf-8")))
        for key, value in (overrides or {}).items():
            if value is not None:
                values[key] = value
        config = self.validate_config(values)
        logger.debug(f"Loaded config {path} (hash {config.config_hash()})")
        return config

    def config_echo(self, config: ExperimentConfig) -> str:
        """Fully resolved config text; loading it reproduces the run"""
        return f"# config_hash={config.config_hash()}\n# seed={config.seed}\n" + config.to_text()

    # -----------------------------------------------------------------------
    # metrics files
    # -----------------------------------------------------------------------

    def metrics_csv_text(self, rows: Sequence[RoundMetrics]) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.as_row())
        return buffer.getvalue()

    def write_metrics_csv(self, table: MetricsTable, path: Union[str, Path]) -> Path:
        return atomic_write_text(path, self.metrics_csv_text(table.rows))

    def read_metrics_csv(self, path: Union[str, Path]) -> MetricsTable:
        """
        Load a metrics.csv back into a MetricsTable. The label is the run's mode
        and the config hash / seed come from a config.txt next to it if present.
        """
        path = Path(path)
        with open(path, "r", encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if tuple(header or ()) != CSV_COLUMNS:
                raise MetricsFormatError(f"{path}: unexpected metrics header {header}")
            try:
                rows = [
                    RoundMetrics(
                        round=int(r[0]),
                        mode=r[1],
                        test_accuracy=float(r[2]),
                        test_loss=float(r[3]),
                        mean_client_emd=float(r[4]),
                        round_time_sec=float(r[5]),
                        round_energy_joules=float(r[6]),
                        pool_size=int(r[7]),
                    )
                    for r in reader if r
                ]
            except (IndexError, ValueError) as exc:
                raise MetricsFormatError(f"{path}: malformed metrics row: {exc}") from exc

        config_hash, seed = "", 0
        echo = path.with_name(CONFIG_ECHO_FILE)
        if echo.is_file():
            for line in echo.read_text(encoding="utf-8").splitlines():
                if line.startswith("# config_hash="):
                    config_hash = line.split("=", 1)[1]
                elif line.startswith("# seed="):
                    seed = int(line.split("=", 1)[1])
        label = rows[-1].mode if rows else path.parent.name
        return MetricsTable(rows=rows, config_hash=config_hash, seed=seed, label=label)

    def write_run_outputs(self, table: MetricsTable, config: ExperimentConfig) -> Path:
        out_dir = Path(config.output_dir)
        self.write_metrics_csv(table, out_dir / METRICS_FILE)
        atomic_write_text(out_dir / CONFIG_ECHO_FILE, self.config_echo(config))
        return out_dir

    # -----------------------------------------------------------------------
    # runs
    # -----------------------------------------------------------------------

    def execute(self, config: ExperimentConfig, label: Optional[str] = None) -> MetricsTable:
        """Run the simulation and write metrics.csv + config.txt; no registry"""
        started = time.perf_counter()
        logger.info(f"Run start: config {config.config_hash()}, seed {config.seed}, mode {config.mode.value}")

        trace = protocol_service.run_experiment(config)
        table = MetricsTable(
            rows=trace,
            config_hash=config.config_hash(),
            seed=config.seed,
            label=label or config.policy().effective_mode.value,
        )
        out_dir = self.write_run_outputs(table, config)

        rss_mb = psutil.Process(os.getpid()).memory_info().rss / 1024 / 1024
        logger.info(
            f"Run done: final accuracy {table.final_accuracy:.4f} after {config.rounds} rounds "
            f"in {time.perf_counter() - started:.1f}s (rss {rss_mb:.0f} MB) -> {out_dir}"
        )
        return table

    def run(self, config: ExperimentConfig, record_history: bool = True) -> MetricsTable:
        """
        Single run: simulate, write output_dir/metrics.csv and output_dir/config.txt
        and, unless disabled, record the run in the registry.
        """
        if not record_history:
            return self.execute(config)

        init_db()
        db = SessionLocal()
        try:
            history = RunHistoryService(db)
            record = history.create_run(config)
            try:
                table = self.execute(config)
            except Exception as exc:
                history.fail_run(record.id, f"{type(exc).__name__}: {exc}")
                raise
            history.finish_run(record.id, table.rows, config.accuracy_threshold)
            return table
        finally:
            db.close()

    def member_config(self, base: ExperimentConfig, axis: str, value, paired: bool = False) -> ExperimentConfig:
        """
        Config of one sweep member.

        The member seed is derived from (base seed, axis, value) unless paired,
        in which case every member keeps the base seed. Sweeping one kappa sets
        the other to its complement.
        """
        text = _value_text(value)
        data = base.model_dump()
        data[axis] = text

        if axis == "kappa1":
            data["kappa2"] = 1.0 - float(text)
        elif axis == "kappa2":
            data["kappa1"] = 1.0 - float(text)
        elif axis == "mode":
            keep_kappas = Mode.parse(text) is Mode.GENFL and base.mode is Mode.GENFL
            if not keep_kappas:
                data.pop("kappa1")
                data.pop("kappa2")

        if axis != "seed":
            data["seed"] = base.seed if paired else derive_seed(base.seed, "sweep", axis, text) % (2 ** 31)
        data["output_dir"] = str(Path(base.output_dir) / f"{axis}={text}")
        return self.validate_config(data)

    def sweep(self, base_config: ExperimentConfig, axis: str, values: Sequence, paired: bool = False,
              workers: int = 1, record_history: bool = True) -> List[MetricsTable]:
        """
        One run per value of axis, plus the combined sweep.csv and
        sweep_summary.csv in base_config.output_dir.

        Raises:
            SweepError: axis not sweepable, or no values
            ConfigError: a member config is invalid (checked before any run)
        """
        if axis not in SWEEPABLE_KEYS:
            raise SweepError(f"'{axis}' is not a sweepable key (choose from {', '.join(SWEEPABLE_KEYS)})")
        if not values:
            raise SweepError("sweep needs at least one value")

        members = [self.member_config(base_config, axis, v, paired) for v in values]
        labels = [f"{axis}={_value_text(v)}" for v in values]
        logger.info(f"Sweep over {axis}: {len(members)} member(s), paired={paired}, workers={workers}")

        db = None
        history = None
        records = []
        if record_history:
            init_db()
            db = SessionLocal()
            history = RunHistoryService(db)
            records = [history.create_run(m, sweep_axis=axis, sweep_value=_value_text(v)) for m, v in zip(members, values)]

        try:
            tables = self._run_members(members, labels, workers, history, records)
        finally:
            if db is not None:
                db.close()

        self.write_sweep_outputs(base_config, axis, values, members, tables)
        return tables

    def _run_members(self, members, labels, workers, history, records) -> List[MetricsTable]:
        jobs = list(zip(members, labels))
        tables: List[MetricsTable] = []
        executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 and len(jobs) > 1 else None
        try:
            results = executor.map(_execute_member, jobs) if executor else map(_execute_member, jobs)
            for index, (member, _) in enumerate(jobs):
                try:
                    table = next(results)
                except Exception as exc:
                    if history:
                        for record in records[index:]:
                            history.fail_run(record.id, f"{type(exc).__name__}: {exc}")
                    raise
                if history:
                    history.finish_run(records[index].id, table.rows, member.accuracy_threshold)
                tables.append(table)
        finally:
            if executor is not None:
                executor.shutdown(wait=True, cancel_futures=True)
        return tables

    def write_sweep_outputs(self, base_config: ExperimentConfig, axis: str, values: Sequence,
                            members: Sequence[ExperimentConfig], tables: Sequence[MetricsTable]) -> Path:
        out_dir = Path(base_config.output_dir)

        combined = io.StringIO()
        writer = csv.writer(combined, lineterminator="\n")
        writer.writerow(("axis", "value", "seed") + CSV_COLUMNS)
        for value, member, table in zip(values, members, tables):
            for row in table.rows:
                writer.writerow((axis, _value_text(value), member.seed) + row.as_row())
        atomic_write_text(out_dir / SWEEP_FILE, combined.getvalue())

        summary = io.StringIO()
        writer = csv.writer(summary, lineterminator="\n")
        writer.writerow(SWEEP_SUMMARY_COLUMNS)
        for value, member, table in zip(values, members, tables):
            reached = rounds_to_threshold(table.rows, member.accuracy_threshold)
            writer.writerow((
                axis,
                _value_text(value),
                member.seed,
                member.policy().effective_mode.value,
                repr(table.final_accuracy),
                repr(table.best_accuracy),
                repr(table.plateau_accuracy(member.plateau_window)),
                "" if reached is None else reached,
                repr(table.total_time_sec),
                repr(table.total_energy_joules),
            ))
        atomic_write_text(out_dir / SWEEP_SUMMARY_FILE, summary.getvalue())
        return out_dir

    # -----------------------------------------------------------------------
    # dataset export
    # -----------------------------------------------------------------------

    def build_generated_pool(self, config: ExperimentConfig):
        """
        The generated pool a run of this config ends with. Generation only
        depends on the shared histograms and the pool, so no training is needed.
        """
        server, _ = protocol_service.build_simulation(config)
        pool = server.gen_pool
        if not config.policy().uses_generator:
            return pool
        for round_no in range(1, config.rounds + 1):
            labels = generator_service.select_labels(server.client_histograms, pool, config.rate_per_round)
            if not labels:
                break
            fresh = generator_service.generate(
                labels, config.generator_config(), server.geometry, make_stream(config.seed, "generate", round_no)
            )
            pool = generator_service.accrue(pool, fresh, config.cap_per_class)
        return pool

    def export_split(self, config: ExperimentConfig, out_path: Union[str, Path], split: str = "train") -> Path:
        """Write the train set, test set or final generated pool as text"""
        if split == "pool":
            dataset = self.build_generated_pool(config).dataset
        else:
            dataset = data_service.make_synthetic_dataset(
                config.num_classes, config.feature_dim, config.samples_per_class,
                config.cluster_spread, config.seed, config.center_separation,
            )
            train_set, test_set = data_service.split_holdout(dataset, config.test_fraction, config.seed)
            if split == "train":
                dataset = train_set
            elif split == "test":
                dataset = test_set
            else:
                raise ValueError(f"unknown split '{split}' (expected train, test or pool)")
        logger.info(f"Exporting {len(dataset)} {split} samples to {out_path}")
        return data_service.export_dataset(dataset, out_path)


experiment_service = ExperimentService()
