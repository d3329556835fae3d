from genfl.schemas.model import ModelParams, Gradient, TrainSpec
from genfl.schemas.dataset import ClassGeometry, LabeledDataset, LabelHistogram, PartitionPlan, Provenance
from genfl.schemas.generator import GeneratorConfig, GenPool
from genfl.schemas.protocol import AggregationPolicy, ClientState, Mode, ServerState
from genfl.schemas.metrics import CSV_COLUMNS, MetricsTable, RoundMetrics, rounds_to_threshold
from genfl.schemas.experiment import CostConfig, ExperimentConfig

__all__ = [
    "ModelParams",
    "Gradient",
    "TrainSpec",
    "ClassGeometry",
    "LabeledDataset",
    "LabelHistogram",
    "PartitionPlan",
    "Provenance",
    "GeneratorConfig",
    "GenPool",
    "AggregationPolicy",
    "ClientState",
    "Mode",
    "ServerState",
    "CSV_COLUMNS",
    "MetricsTable",
    "RoundMetrics",
    "rounds_to_threshold",
    "CostConfig",
    "ExperimentConfig",
]
