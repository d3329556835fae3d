"""
Protocol state: clients, server and the aggregation policy.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

from genfl.schemas.dataset import ClassGeometry, LabeledDataset, LabelHistogram
from genfl.schemas.generator import GenPool
from genfl.schemas.model import ModelParams, TrainSpec


class Mode(str, Enum):
    GENFL = "genfl"
    FL_ONLY = "fl-only"
    AIGC_ONLY = "aigc-only"

    @classmethod
    def parse(cls, raw) -> "Mode":
        if isinstance(raw, Mode):
            return raw
        text = str(raw).strip().lower().replace("_", "-")
        for mode in cls:
            if mode.value == text:
                return mode
        raise ValueError(f"unknown mode '{raw}' (expected genfl, fl-only or aigc-only)")


@dataclass(frozen=True)
class ClientState:
    """
    One client. Its features never leave this object: the server only sees
    the shared histogram, the sample count and the trained parameters.
    """
    id: int
    local_data: LabeledDataset
    shared_histogram: LabelHistogram
    rng_seed_base: int

    @property
    def num_samples(self) -> int:
        return len(self.local_data)

    def local_update(self, global_model: ModelParams, spec: TrainSpec, round_index: int) -> ModelParams:
        """Train a copy of the broadcast model on the local data"""
        from genfl.services.nn_service import nn_service
        from genfl.utils.rng import make_stream

        stream = make_stream(self.rng_seed_base, "client", round_index, self.id)
        return nn_service.train(global_model, self.local_data, spec, stream)

    __hash__ = None


@dataclass(frozen=True)
class AggregationPolicy:
    """
    Weighted combination of the client average and the augmented model:
    new = kappa1 * sum(rho_n * local_n) + kappa2 * augmented.
    """
    kappa1: float
    kappa2: float
    mode: Mode = Mode.GENFL

    def __post_init__(self):
        mode = Mode.parse(self.mode)
        object.__setattr__(self, "mode", mode)
        if self.kappa1 < 0 or self.kappa2 < 0:
            raise ValueError("kappa1 and kappa2 must be non-negative")
        if abs(self.kappa1 + self.kappa2 - 1.0) > 1e-9:
            raise ValueError(f"kappa1 + kappa2 must equal 1 (got {self.kappa1} + {self.kappa2})")
        if mode is Mode.FL_ONLY and self.kappa2 != 0:
            raise ValueError("fl-only mode requires kappa2 = 0")
        if mode is Mode.AIGC_ONLY and self.kappa1 != 0:
            raise ValueError("aigc-only mode requires kappa1 = 0")

    @classmethod
    def for_mode(cls, mode, kappa1: float = 0.7, kappa2: float = 0.3) -> "AggregationPolicy":
        mode = Mode.parse(mode)
        if mode is Mode.FL_ONLY:
            return cls(1.0, 0.0, mode)
        if mode is Mode.AIGC_ONLY:
            return cls(0.0, 1.0, mode)
        return cls(kappa1, kappa2, mode)

    @property
    def effective_mode(self) -> Mode:
        """GenFL with a zero weight behaves exactly like the matching baseline"""
        if self.kappa2 == 0:
            return Mode.FL_ONLY
        if self.kappa1 == 0:
            return Mode.AIGC_ONLY
        return Mode.GENFL

    @property
    def uses_clients(self) -> bool:
        return self.effective_mode is not Mode.AIGC_ONLY

    @property
    def uses_generator(self) -> bool:
        return self.effective_mode is not Mode.FL_ONLY

    def fedavg_fallback(self) -> "AggregationPolicy":
        """Policy used when no augmented model exists this round"""
        return AggregationPolicy(1.0, 0.0, Mode.FL_ONLY)


@dataclass(frozen=True)
class ServerState:
    global_model: ModelParams
    gen_pool: GenPool
    round_index: int
    client_histograms: Tuple[LabelHistogram, ...]
    test_set: LabeledDataset
    geometry: Optional[ClassGeometry] = None
    population_histogram: Optional[LabelHistogram] = field(default=None)

    def __post_init__(self):
        if self.population_histogram is None and self.client_histograms:
            total = self.client_histograms[0]
            for hist in self.client_histograms[1:]:
                total = total + hist
            object.__setattr__(self, "population_histogram", total)

    __hash__ = None
