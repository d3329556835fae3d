"""
ExperimentRun model for tracking simulation runs.
"""
from sqlalchemy import Column, Integer, String, DateTime, Float
from sqlalchemy.orm import relationship
from datetime import datetime
from genfl.database import Base


class ExperimentRun(Base):
    """
    One simulator run (a single `run` or one sweep member).

    Attributes:
        id: Primary key
        config_hash: Content hash of the resolved config
        seed: Run seed
        mode: Configured mode ('genfl', 'fl-only', 'aigc-only')
        alpha: Dirichlet concentration
        kappa1, kappa2: Aggregation weights
        rounds: Configured number of rounds
        status: 'running', 'success' or 'failed'
        error_message: Error text when status is failed
        sweep_axis, sweep_value: Set for sweep members
        final_accuracy: Test accuracy after the last round
        rounds_to_threshold: First round reaching the accuracy threshold
        output_dir: Where metrics.csv and config.txt were written
    """
    __tablename__ = "experiment_runs"

    id = Column(Integer, primary_key=True, index=True)

    config_hash = Column(String(12), nullable=False, index=True)
    seed = Column(Integer, nullable=False)
    mode = Column(String, nullable=False)
    alpha = Column(Float, nullable=False)
    kappa1 = Column(Float, nullable=False)
    kappa2 = Column(Float, nullable=False)
    rounds = Column(Integer, nullable=False)

    # Sweep membership
    sweep_axis = Column(String, nullable=True)
    sweep_value = Column(String, nullable=True)

    # Status
    status = Column(String, default='running', nullable=False)  # running, success, failed
    error_message = Column(String, nullable=True)

    # Results
    final_accuracy = Column(Float, nullable=True)
    rounds_to_threshold = Column(Integer, nullable=True)
    output_dir = Column(String, nullable=True)

    # Timestamps
    start_time = Column(DateTime, default=datetime.utcnow, nullable=False)
    end_time = Column(DateTime, nullable=True)

    round_records = relationship(
        "RoundRecord", back_populates="run", cascade="all, delete-orphan", order_by="RoundRecord.round"
    )

    def __repr__(self):
        return f"<ExperimentRun(id={self.id}, mode='{self.mode}', alpha={self.alpha}, status='{self.status}')>"

    def to_dict(self):
        """Convert model to dictionary"""
        return {
            "id": self.id,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "mode": self.mode,
            "alpha": self.alpha,
            "kappa1": self.kappa1,
            "kappa2": self.kappa2,
            "rounds": self.rounds,
            "sweep_axis": self.sweep_axis,
            "sweep_value": self.sweep_value,
            "status": self.status,
            "error_message": self.error_message,
            "final_accuracy": self.final_accuracy,
            "rounds_to_threshold": self.rounds_to_threshold,
            "output_dir": self.output_dir,
            "start_time": self.start_time.isoformat() if self.start_time else None,
            "end_time": self.end_time.isoformat() if self.end_time else None,
            "duration_formatted": self.get_duration_formatted(),
            "round_count": len(self.round_records),
        }

    def get_duration_seconds(self) -> float:
        """Wall-clock duration of the run in seconds"""
        if not self.start_time:
            return 0.0
        end = self.end_time or datetime.utcnow()
        return (end - self.start_time).total_seconds()

    def get_duration_formatted(self) -> str:
        """Get formatted duration (HH:MM:SS)"""
        seconds = int(self.get_duration_seconds())
        hours = seconds // 3600
        minutes = (seconds % 3600) // 60
        secs = seconds % 60
        return f"{hours:02d}:{minutes:02d}:{secs:02d}"
