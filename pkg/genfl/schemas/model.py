"""
Parameter-vector types for the dense classifier.
"""
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from genfl.errors import ShapeMismatchError

LayerShape = Tuple[int, int]


def param_count(layer_shapes) -> int:
    """Number of scalars for the given layers: sum of in*out + out"""
    return sum(i * o + o for i, o in layer_shapes)


@dataclass(frozen=True)
class ModelParams:
    """
    Flat parameter vector of a dense network.

    Layout: for each layer in order, the (in_dim, out_dim) weight matrix in
    row-major order followed by the out_dim biases.
    """
    layer_shapes: Tuple[LayerShape, ...]
    values: np.ndarray

    def __post_init__(self):
        shapes = tuple((int(i), int(o)) for i, o in self.layer_shapes)
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size != param_count(shapes):
            raise ShapeMismatchError(
                f"values length {values.size} does not match layer shapes {shapes} "
                f"(expected {param_count(shapes)})"
            )
        object.__setattr__(self, "layer_shapes", shapes)
        object.__setattr__(self, "values", values)

    @property
    def num_params(self) -> int:
        return self.values.size

    @property
    def input_dim(self) -> int:
        return self.layer_shapes[0][0]

    @property
    def num_classes(self) -> int:
        return self.layer_shapes[-1][1]

    def layers(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        """(W, b) views into values, one pair per layer"""
        out = []
        offset = 0
        for in_dim, out_dim in self.layer_shapes:
            w = self.values[offset:offset + in_dim * out_dim].reshape(in_dim, out_dim)
            offset += in_dim * out_dim
            b = self.values[offset:offset + out_dim]
            offset += out_dim
            out.append((w, b))
        return out

    def with_values(self, values: np.ndarray) -> "ModelParams":
        return ModelParams(self.layer_shapes, values)

    def copy(self) -> "ModelParams":
        return ModelParams(self.layer_shapes, self.values.copy())

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def check_compatible(self, other: "ModelParams"):
        if self.layer_shapes != other.layer_shapes:
            raise ShapeMismatchError(f"layer shapes differ: {self.layer_shapes} vs {other.layer_shapes}")

    def __add__(self, other: "ModelParams") -> "ModelParams":
        self.check_compatible(other)
        return self.with_values(self.values + other.values)

    def scale(self, factor: float) -> "ModelParams":
        return self.with_values(float(factor) * self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ModelParams):
            return NotImplemented
        return self.layer_shapes == other.layer_shapes and np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True)
class Gradient:
    """Partial derivatives of the mean batch loss, laid out like ModelParams"""
    layer_shapes: Tuple[LayerShape, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.size != param_count(self.layer_shapes):
            raise ShapeMismatchError("gradient length does not match layer shapes")
        object.__setattr__(self, "values", values)

    __hash__ = None


@dataclass(frozen=True)
class TrainSpec:
    """Local training hyper-parameters (plain mini-batch SGD)"""
    epochs: int
    batch_size: int
    learning_rate: float

    def __post_init__(self):
        if int(self.epochs) < 1:
            raise ValueError("epochs must be a positive integer")
        if int(self.batch_size) < 1:
            raise ValueError("batch_size must be a positive integer")
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be non-negative")
