from sqlalchemy import Column, Integer, String, Float, ForeignKey
from sqlalchemy.orm import relationship
from genfl.database import Base


class RoundRecord(Base):
    """Persisted RoundMetrics row of an ExperimentRun"""
    __tablename__ = "round_records"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey('experiment_runs.id'), nullable=False, index=True)

    round = Column(Integer, nullable=False)
    mode = Column(String, nullable=False)
    test_accuracy = Column(Float, nullable=False)
    test_loss = Column(Float, nullable=False)
    mean_client_emd = Column(Float, nullable=False)
    round_time_sec = Column(Float, nullable=False)
    round_energy_joules = Column(Float, nullable=False)
    pool_size = Column(Integer, nullable=False)

    run = relationship("ExperimentRun", back_populates="round_records")

    def __repr__(self):
        return f"<RoundRecord(run_id={self.run_id}, round={self.round}, acc={self.test_accuracy:.4f})>"
