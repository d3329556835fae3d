"""
Generator settings and the accumulated generated-sample pool.
"""
from dataclasses import dataclass

import numpy as np

from genfl.schemas.dataset import LabeledDataset, LabelHistogram


@dataclass(frozen=True)
class GeneratorConfig:
    """
    Stand-in generator knobs.

    Attributes:
        rate_per_round: Samples generated per round
        cap_per_class: Maximum stored generated samples per class
        label_noise: Probability a generated sample carries a wrong label
        center_shift: Distance between generator and true class centers
        spread_factor: Multiplier on the real cluster spread
    """
    rate_per_round: int = 10
    cap_per_class: int = 300
    label_noise: float = 0.0
    center_shift: float = 0.0
    spread_factor: float = 1.0

    def __post_init__(self):
        if int(self.rate_per_round) < 1:
            raise ValueError("rate_per_round must be >= 1")
        if int(self.cap_per_class) < 1:
            raise ValueError("cap_per_class must be >= 1")
        if not 0.0 <= self.label_noise <= 1.0:
            raise ValueError("label_noise must lie in [0, 1]")
        if not self.center_shift >= 0.0:
            raise ValueError("center_shift must be >= 0")
        if not self.spread_factor > 0.0:
            raise ValueError("spread_factor must be > 0")


@dataclass(frozen=True)
class GenPool:
    """Generated samples kept by the server, at most cap_per_class per class"""
    dataset: LabeledDataset
    per_class_counts: LabelHistogram
    cap_per_class: int

    @classmethod
    def empty(cls, num_classes: int, dim: int, cap_per_class: int) -> "GenPool":
        return cls(
            dataset=LabeledDataset.empty(num_classes, dim),
            per_class_counts=LabelHistogram.zeros(num_classes),
            cap_per_class=cap_per_class,
        )

    def __len__(self) -> int:
        return len(self.dataset)

    @property
    def num_classes(self) -> int:
        return self.dataset.num_classes

    def at_cap(self) -> np.ndarray:
        """Boolean mask of classes whose count has reached the cap"""
        return self.per_class_counts.as_array() >= self.cap_per_class

    __hash__ = None
