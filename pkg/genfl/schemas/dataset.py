"""
Dataset value types: samples with provenance, label histograms and
partition plans.
"""
from dataclasses import dataclass
from enum import IntEnum
from typing import List, Sequence, Tuple

import numpy as np

from genfl.errors import ShapeMismatchError


class Provenance(IntEnum):
    REAL = 0
    GENERATED = 1

    @property
    def flag(self) -> str:
        return "g" if self is Provenance.GENERATED else "r"

    @classmethod
    def from_flag(cls, flag: str) -> "Provenance":
        flag = flag.strip().lower()
        if flag == "r":
            return cls.REAL
        if flag == "g":
            return cls.GENERATED
        raise ValueError(f"unknown provenance flag '{flag}'")


@dataclass(frozen=True)
class LabeledDataset:
    """
    Samples of a classification task.

    Attributes:
        features: (n, d) float64 array
        labels: (n,) int64 array, every entry in [0, num_classes)
        provenance: (n,) uint8 array of Provenance values
        num_classes: C
    """
    features: np.ndarray
    labels: np.ndarray
    provenance: np.ndarray
    num_classes: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim == 1 and labels.size == 0:
            features = features.reshape(0, 0)
        if features.ndim != 2:
            raise ShapeMismatchError("features must be a 2-D array")
        provenance = np.asarray(self.provenance, dtype=np.uint8).reshape(-1)
        if not (features.shape[0] == labels.size == provenance.size):
            raise ShapeMismatchError(
                f"features/labels/provenance lengths differ: "
                f"{features.shape[0]}, {labels.size}, {provenance.size}"
            )
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise ValueError(f"labels must lie in [0, {self.num_classes})")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "provenance", provenance)

    @classmethod
    def empty(cls, num_classes: int, dim: int) -> "LabeledDataset":
        return cls(
            features=np.zeros((0, dim)),
            labels=np.zeros(0, dtype=np.int64),
            provenance=np.zeros(0, dtype=np.uint8),
            num_classes=num_classes,
        )

    def __len__(self) -> int:
        return int(self.labels.size)

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    def subset(self, indices: Sequence[int]) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.features[idx], self.labels[idx], self.provenance[idx], self.num_classes)

    def concat(self, other: "LabeledDataset") -> "LabeledDataset":
        if other.num_classes != self.num_classes:
            raise ShapeMismatchError("cannot concatenate datasets with different class counts")
        if len(self) == 0:
            return other
        if len(other) == 0:
            return self
        if other.dim != self.dim:
            raise ShapeMismatchError(f"feature dims differ: {self.dim} vs {other.dim}")
        return LabeledDataset(
            np.concatenate([self.features, other.features]),
            np.concatenate([self.labels, other.labels]),
            np.concatenate([self.provenance, other.provenance]),
            self.num_classes,
        )

    def all_generated(self) -> bool:
        return bool(np.all(self.provenance == Provenance.GENERATED))

    __hash__ = None


@dataclass(frozen=True)
class LabelHistogram:
    """Per-class sample counts"""
    counts: Tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if any(c < 0 for c in counts):
            raise ValueError("histogram counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def zeros(cls, num_classes: int) -> "LabelHistogram":
        return cls((0,) * num_classes)

    @property
    def num_classes(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)

    def __add__(self, other: "LabelHistogram") -> "LabelHistogram":
        if other.num_classes != self.num_classes:
            raise ShapeMismatchError("histograms have different class counts")
        return LabelHistogram(tuple(a + b for a, b in zip(self.counts, other.counts)))


@dataclass(frozen=True)
class PartitionPlan:
    """Per-client sample indices into a parent dataset"""
    assignments: Tuple[Tuple[int, ...], ...]
    attempts: int = 1

    @property
    def num_clients(self) -> int:
        return len(self.assignments)

    def sizes(self) -> List[int]:
        return [len(a) for a in self.assignments]


@dataclass(frozen=True)
class ClassGeometry:
    """True per-class Gaussian centers and spread of the real data"""
    centers: np.ndarray
    spread: float
    seed: int = 0

    @property
    def num_classes(self) -> int:
        return int(self.centers.shape[0])

    @property
    def dim(self) -> int:
        return int(self.centers.shape[1])

    __hash__ = None
