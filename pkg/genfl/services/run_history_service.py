"""
Service for the persisted run history.
"""
import logging
from datetime import datetime
from typing import List, Optional, Sequence

from sqlalchemy import func
from sqlalchemy.orm import Session

from genfl.models.experiment_run import ExperimentRun
from genfl.models.round_record import RoundRecord
from genfl.schemas.experiment import ExperimentConfig
from genfl.schemas.metrics import RoundMetrics, rounds_to_threshold

logger = logging.getLogger(__name__)


class RunHistoryService:
    """Records runs and their round metrics in the registry database"""

    def __init__(self, db: Session):
        self.db = db

    def create_run(
        self,
        config: ExperimentConfig,
        sweep_axis: Optional[str] = None,
        sweep_value: Optional[str] = None
    ) -> ExperimentRun:
        """
        Register a run that is about to start.

        Args:
            config: Resolved experiment config
            sweep_axis: Axis name when the run is a sweep member
            sweep_value: Axis value when the run is a sweep member

        Returns:
            ExperimentRun with status 'running'
        """
        run = ExperimentRun(
            config_hash=config.config_hash(),
            seed=config.seed,
            mode=config.mode.value,
            alpha=config.alpha,
            kappa1=config.kappa1,
            kappa2=config.kappa2,
            rounds=config.rounds,
            sweep_axis=sweep_axis,
            sweep_value=sweep_value,
            status='running',
            output_dir=config.output_dir,
            start_time=datetime.utcnow(),
        )
        self.db.add(run)
        self.db.commit()
        self.db.refresh(run)

        logger.debug(f"Run {run.id} registered (config {run.config_hash}, seed {run.seed})")
        return run

    def finish_run(
        self,
        run_id: int,
        metrics: Sequence[RoundMetrics],
        threshold: float
    ) -> Optional[ExperimentRun]:
        """
        Mark a run successful and store its metric trace.

        Returns:
            Updated ExperimentRun or None if not found
        """
        run = self.get_run(run_id)
        if not run:
            logger.error(f"Run {run_id} not found")
            return None

        for row in metrics:
            run.round_records.append(RoundRecord(
                round=row.round,
                mode=row.mode,
                test_accuracy=row.test_accuracy,
                test_loss=row.test_loss,
                mean_client_emd=row.mean_client_emd,
                round_time_sec=row.round_time_sec,
                round_energy_joules=row.round_energy_joules,
                pool_size=row.pool_size,
            ))

        run.status = 'success'
        run.end_time = datetime.utcnow()
        run.final_accuracy = metrics[-1].test_accuracy if metrics else None
        run.rounds_to_threshold = rounds_to_threshold(list(metrics), threshold)
        self.db.commit()
        self.db.refresh(run)

        logger.debug(f"Run {run_id} finished in {run.get_duration_formatted()}")
        return run

    def fail_run(self, run_id: int, error_message: str) -> Optional[ExperimentRun]:
        """Mark a run failed"""
        run = self.get_run(run_id)
        if not run:
            logger.error(f"Run {run_id} not found")
            return None

        run.status = 'failed'
        run.error_message = error_message
        run.end_time = datetime.utcnow()
        self.db.commit()
        self.db.refresh(run)

        logger.warning(f"Run {run_id} failed: {error_message}")
        return run

    def get_run(self, run_id: int) -> Optional[ExperimentRun]:
        return self.db.query(ExperimentRun).filter(ExperimentRun.id == run_id).first()

    def list_runs(self, limit: int = 20, mode: Optional[str] = None) -> List[ExperimentRun]:
        """Most recent runs first"""
        query = self.db.query(ExperimentRun)
        if mode:
            query = query.filter(ExperimentRun.mode == mode)
        return query.order_by(ExperimentRun.start_time.desc(), ExperimentRun.id.desc()).limit(limit).all()

    def get_round_records(self, run_id: int) -> List[RoundRecord]:
        return self.db.query(RoundRecord).filter(
            RoundRecord.run_id == run_id
        ).order_by(RoundRecord.round).all()

    def get_statistics(self) -> dict:
        """
        Registry totals.

        Returns:
            Dict with total/success/failed/running counts, success rate (%)
            and the best final accuracy per mode
        """
        total = self.db.query(ExperimentRun).count()
        success = self.db.query(ExperimentRun).filter(ExperimentRun.status == 'success').count()
        failed = self.db.query(ExperimentRun).filter(ExperimentRun.status == 'failed').count()
        running = self.db.query(ExperimentRun).filter(ExperimentRun.status == 'running').count()

        best = self.db.query(
            ExperimentRun.mode, func.max(ExperimentRun.final_accuracy)
        ).filter(ExperimentRun.status == 'success').group_by(ExperimentRun.mode).all()

        return {
            "total_runs": total,
            "success_runs": success,
            "failed_runs": failed,
            "running_runs": running,
            "success_rate": (success / total * 100) if total > 0 else 0,
            "best_accuracy_by_mode": {mode: acc for mode, acc in best},
        }
