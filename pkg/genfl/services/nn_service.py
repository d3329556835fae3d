"""
Dense classifier engine: tanh hidden layers, softmax output, mean
cross-entropy loss and plain mini-batch SGD. Used for both client-side
local training and the server's augmented model.
"""
import logging
from typing import List, Sequence, Tuple

import numpy as np

from genfl.errors import EmptyDatasetError, NumericalError, ShapeMismatchError
from genfl.schemas.dataset import LabeledDataset
from genfl.schemas.model import Gradient, LayerShape, ModelParams, TrainSpec, param_count

logger = logging.getLogger(__name__)


def _check_features(model: ModelParams, features: np.ndarray):
    if features.shape[-1] != model.input_dim:
        raise ShapeMismatchError(
            f"feature dimension {features.shape[-1]} does not match model input {model.input_dim}"
        )


def _forward_pass(model: ModelParams, x: np.ndarray) -> Tuple[List[np.ndarray], np.ndarray]:
    """Hidden activations (input included) and output logits"""
    activations = [x]
    layers = model.layers()
    for w, b in layers[:-1]:
        activations.append(np.tanh(activations[-1] @ w + b))
    w, b = layers[-1]
    logits = activations[-1] @ w + b
    return activations, logits


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def _loss_and_grad_arrays(model: ModelParams, x: np.ndarray, y: np.ndarray) -> Tuple[float, np.ndarray]:
    n = y.size
    activations, logits = _forward_pass(model, x)
    log_probs = _log_softmax(logits)
    loss = -float(log_probs[np.arange(n), y].mean())

    # d(mean loss)/d(logits)
    delta = np.exp(log_probs)
    delta[np.arange(n), y] -= 1.0
    delta /= n

    layers = model.layers()
    grads = [None] * len(layers)
    for index in range(len(layers) - 1, -1, -1):
        w, _ = layers[index]
        a_prev = activations[index]
        grads[index] = (a_prev.T @ delta, delta.sum(axis=0))
        if index > 0:
            delta = (delta @ w.T) * (1.0 - a_prev ** 2)

    flat = np.concatenate([part for gw, gb in grads for part in (gw.reshape(-1), gb)])
    return loss, flat


class NNService:
    def mlp_layer_shapes(self, input_dim: int, hidden_width: int, num_classes: int) -> List[LayerShape]:
        """Default architecture: one tanh hidden layer"""
        return [(input_dim, hidden_width), (hidden_width, num_classes)]

    def init_model(self, layer_shapes: Sequence[LayerShape], seed: int) -> ModelParams:
        """
        Initialize weights uniformly in [-1/sqrt(in_dim), 1/sqrt(in_dim)], biases at zero.

        Args:
            layer_shapes: (in_dim, out_dim) per layer
            seed: RNG seed

        Returns:
            ModelParams
        """
        shapes = [(int(i), int(o)) for i, o in layer_shapes]
        if not shapes:
            raise ShapeMismatchError("at least one layer is required")
        for (_, prev_out), (next_in, _) in zip(shapes, shapes[1:]):
            if prev_out != next_in:
                raise ShapeMismatchError(f"layer in_dim {next_in} does not match previous out_dim {prev_out}")

        rng = np.random.default_rng(seed)
        chunks = []
        for in_dim, out_dim in shapes:
            bound = 1.0 / np.sqrt(in_dim)
            chunks.append(rng.uniform(-bound, bound, size=in_dim * out_dim))
            chunks.append(np.zeros(out_dim))
        values = np.concatenate(chunks)
        assert values.size == param_count(shapes)
        return ModelParams(tuple(shapes), values)

    def predict_logits(self, model: ModelParams, features: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(features, dtype=np.float64))
        _check_features(model, x)
        return _forward_pass(model, x)[1]

    def predict_proba(self, model: ModelParams, features: np.ndarray) -> np.ndarray:
        """Class probabilities for an (n, d) feature matrix"""
        return np.exp(_log_softmax(self.predict_logits(model, features)))

    def forward(self, model: ModelParams, features) -> np.ndarray:
        """
        Class-probability vector for a single feature vector.

        Raises:
            ShapeMismatchError: features length differs from the first layer in_dim
        """
        x = np.asarray(features, dtype=np.float64)
        if x.ndim != 1:
            raise ShapeMismatchError("forward expects a single feature vector")
        return self.predict_proba(model, x[None, :])[0]

    def loss_and_grad(self, model: ModelParams, batch: LabeledDataset) -> Tuple[float, Gradient]:
        """
        Mean cross-entropy of the batch and its exact gradient.

        Raises:
            EmptyDatasetError: batch has no samples
            ShapeMismatchError: feature dims differ from the model
        """
        if len(batch) == 0:
            raise EmptyDatasetError("loss_and_grad needs a non-empty batch")
        _check_features(model, batch.features)
        loss, flat = _loss_and_grad_arrays(model, batch.features, batch.labels)
        return loss, Gradient(model.layer_shapes, flat)

    def train(self, model: ModelParams, dataset: LabeledDataset, spec: TrainSpec, rng_stream: np.random.Generator) -> ModelParams:
        """
        Run spec.epochs epochs of mini-batch SGD and return the updated copy.

        Each epoch draws a fresh permutation from rng_stream. The last batch of an
        epoch may be smaller than batch_size. The input model is not modified.

        Raises:
            EmptyDatasetError: dataset has no samples
            NumericalError: training produced NaN or Inf
        """
        if len(dataset) == 0:
            raise EmptyDatasetError("cannot train on an empty dataset")
        _check_features(model, dataset.features)

        values = model.values.copy()
        n = len(dataset)
        x_all, y_all = dataset.features, dataset.labels
        lr = spec.learning_rate

        for epoch in range(spec.epochs):
            order = rng_stream.permutation(n)
            for start in range(0, n, spec.batch_size):
                idx = order[start:start + spec.batch_size]
                _, grad = _loss_and_grad_arrays(ModelParams(model.layer_shapes, values), x_all[idx], y_all[idx])
                values = values - lr * grad

        if not np.all(np.isfinite(values)):
            raise NumericalError(f"training diverged (non-finite parameters), learning_rate={lr}")
        return ModelParams(model.layer_shapes, values)

    def evaluate(self, model: ModelParams, dataset: LabeledDataset) -> Tuple[float, float]:
        """
        Accuracy (argmax, ties to the lowest class index) and mean cross-entropy.

        Raises:
            EmptyDatasetError: dataset has no samples
        """
        if len(dataset) == 0:
            raise EmptyDatasetError("cannot evaluate on an empty dataset")
        logits = self.predict_logits(model, dataset.features)
        predictions = np.argmax(logits, axis=1)
        accuracy = float(np.mean(predictions == dataset.labels))
        log_probs = _log_softmax(logits)
        mean_loss = -float(log_probs[np.arange(len(dataset)), dataset.labels].mean())
        return accuracy, mean_loss


nn_service = NNService()
