from genfl.models.experiment_run import ExperimentRun
from genfl.models.round_record import RoundRecord

__all__ = [
    "ExperimentRun",
    "RoundRecord",
]
