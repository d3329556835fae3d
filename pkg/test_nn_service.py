import math

import numpy as np
import pytest

from conftest import real_dataset
from genfl.errors import EmptyDatasetError, ShapeMismatchError
from genfl.schemas.model import ModelParams, TrainSpec, param_count
from genfl.services.nn_service import nn_service


def zero_model(shapes):
    return ModelParams(tuple(shapes), np.zeros(param_count(shapes)))


def random_model(shapes, rng, scale=0.5):
    return ModelParams(tuple(shapes), rng.normal(0.0, scale, size=param_count(shapes)))


def numeric_grad(model, batch, eps=1e-5):
    grad = np.zeros(model.num_params)
    for i in range(model.num_params):
        plus = model.values.copy()
        plus[i] += eps
        minus = model.values.copy()
        minus[i] -= eps
        loss_plus, _ = nn_service.loss_and_grad(model.with_values(plus), batch)
        loss_minus, _ = nn_service.loss_and_grad(model.with_values(minus), batch)
        grad[i] = (loss_plus - loss_minus) / (2 * eps)
    return grad


def assert_grad_matches(analytic, numeric):
    # relative tolerance 1e-5 plus the finite-difference round-off floor
    mask = np.abs(analytic) > 1e-8
    err = np.abs(analytic - numeric)[mask]
    scale = np.maximum(np.abs(analytic), np.abs(numeric))[mask]
    assert np.all(err <= 1e-5 * scale + 1e-9), float(np.max(err / scale))


def test_init_model_is_deterministic():
    a = nn_service.init_model([(4, 3)], seed=7)
    b = nn_service.init_model([(4, 3)], seed=7)
    assert a == b


def test_init_model_layout_and_ranges():
    model = nn_service.init_model([(4, 8), (8, 3)], seed=1)
    assert model.num_params == 4 * 8 + 8 + 8 * 3 + 3 == 67
    for (w, b), (in_dim, _) in zip(model.layers(), model.layer_shapes):
        assert np.all(b == 0.0)
        assert np.all(np.abs(w) <= 1.0 / math.sqrt(in_dim))


def test_init_model_rejects_unchained_layers():
    with pytest.raises(ShapeMismatchError):
        nn_service.init_model([(4, 8), (7, 3)], seed=0)


def test_model_params_rejects_wrong_length():
    with pytest.raises(ShapeMismatchError):
        ModelParams(((2, 2),), np.zeros(5))


def test_forward_zero_model_is_uniform():
    probs = nn_service.forward(zero_model([(5, 10)]), np.arange(5.0))
    np.testing.assert_allclose(probs, np.full(10, 0.1), atol=1e-15)


def test_forward_probabilities_are_normalized():
    rng = np.random.default_rng(0)
    model = nn_service.init_model([(5, 16), (16, 7)], seed=2)
    probs = nn_service.predict_proba(model, rng.normal(0, 3, size=(1000, 5)))
    assert probs.shape == (1000, 7)
    assert np.all(probs >= 0)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)


def test_forward_hand_computed_single_layer():
    model = ModelParams(((2, 2),), np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0]))
    probs = nn_service.forward(model, [math.log(3.0), 0.0])
    np.testing.assert_allclose(probs, [0.75, 0.25], atol=1e-12)


def test_forward_dimension_mismatch():
    with pytest.raises(ShapeMismatchError):
        nn_service.forward(zero_model([(3, 2)]), [1.0, 2.0])


def test_loss_of_uniform_predictor_is_log_classes():
    batch = real_dataset(np.random.default_rng(1).normal(size=(7, 4)), [0, 1, 2, 3, 4, 5, 9], 10)
    loss, grad = nn_service.loss_and_grad(zero_model([(4, 10)]), batch)
    assert abs(loss - math.log(10)) < 1e-9
    assert grad.values.shape == (4 * 10 + 10,)


def test_gradient_matches_finite_differences_twenty_params():
    rng = np.random.default_rng(11)
    shapes = [(3, 3), (3, 2)]
    assert param_count(shapes) == 20
    model = random_model(shapes, rng)
    batch = real_dataset(rng.normal(size=(8, 3)), rng.integers(0, 2, size=8), 2)
    _, grad = nn_service.loss_and_grad(model, batch)
    assert_grad_matches(grad.values, numeric_grad(model, batch))


def test_gradient_matches_finite_differences_random_cases():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        d, h, c = rng.integers(2, 5), rng.integers(2, 6), rng.integers(2, 5)
        shapes = [(int(d), int(h)), (int(h), int(c))]
        assert param_count(shapes) <= 200
        model = random_model(shapes, rng)
        n = int(rng.integers(1, 9))
        batch = real_dataset(rng.normal(size=(n, d)), rng.integers(0, c, size=n), int(c))
        _, grad = nn_service.loss_and_grad(model, batch)
        assert np.all(np.isfinite(grad.values))
        assert_grad_matches(grad.values, numeric_grad(model, batch))


def test_gradient_of_deeper_network():
    rng = np.random.default_rng(5)
    shapes = [(3, 4), (4, 4), (4, 3)]
    model = random_model(shapes, rng)
    batch = real_dataset(rng.normal(size=(6, 3)), rng.integers(0, 3, size=6), 3)
    _, grad = nn_service.loss_and_grad(model, batch)
    assert_grad_matches(grad.values, numeric_grad(model, batch))


def test_duplicating_batch_keeps_loss_and_gradient():
    rng = np.random.default_rng(3)
    model = random_model([(4, 5), (5, 3)], rng)
    batch = real_dataset(rng.normal(size=(6, 4)), rng.integers(0, 3, size=6), 3)
    loss, grad = nn_service.loss_and_grad(model, batch)
    loss2, grad2 = nn_service.loss_and_grad(model, batch.concat(batch))
    assert loss2 == pytest.approx(loss, rel=1e-12)
    np.testing.assert_allclose(grad2.values, grad.values, rtol=1e-12, atol=1e-15)


def test_loss_and_grad_rejects_empty_batch():
    with pytest.raises(EmptyDatasetError):
        nn_service.loss_and_grad(zero_model([(2, 2)]), real_dataset(np.zeros((0, 2)), [], 2))


def test_train_with_zero_learning_rate_is_identity():
    rng = np.random.default_rng(4)
    model = random_model([(3, 4), (4, 2)], rng)
    data = real_dataset(rng.normal(size=(10, 3)), rng.integers(0, 2, size=10), 2)
    trained = nn_service.train(model, data, TrainSpec(3, 4, 0.0), np.random.default_rng(0))
    assert np.array_equal(trained.values, model.values)


def test_train_single_step_matches_manual_sgd():
    rng = np.random.default_rng(6)
    model = random_model([(3, 4), (4, 2)], rng)
    sample = real_dataset(rng.normal(size=(1, 3)), [1], 2)
    trained = nn_service.train(model, sample, TrainSpec(1, 1, 0.1), np.random.default_rng(0))
    _, grad = nn_service.loss_and_grad(model, sample)
    assert np.array_equal(trained.values, model.values - 0.1 * grad.values)


def test_train_leaves_input_untouched_and_is_deterministic():
    rng = np.random.default_rng(8)
    model = random_model([(3, 4), (4, 2)], rng)
    before = model.values.copy()
    data = real_dataset(rng.normal(size=(21, 3)), rng.integers(0, 2, size=21), 2)
    spec = TrainSpec(2, 5, 0.05)
    a = nn_service.train(model, data, spec, np.random.default_rng(42))
    b = nn_service.train(model, data, spec, np.random.default_rng(42))
    assert np.array_equal(model.values, before)
    assert a == b
    assert not np.array_equal(a.values, before)


def test_train_separates_two_blobs():
    rng = np.random.default_rng(9)
    features = np.vstack([rng.normal([-3.0, 0.0], 0.5, size=(100, 2)), rng.normal([3.0, 0.0], 0.5, size=(100, 2))])
    data = real_dataset(features, np.repeat([0, 1], 100), 2)
    model = nn_service.init_model([(2, 8), (8, 2)], seed=0)
    trained = nn_service.train(model, data, TrainSpec(50, 16, 0.1), np.random.default_rng(1))
    accuracy, _ = nn_service.evaluate(trained, data)
    assert accuracy >= 0.99


def test_train_rejects_empty_dataset():
    with pytest.raises(EmptyDatasetError):
        nn_service.train(zero_model([(2, 2)]), real_dataset(np.zeros((0, 2)), [], 2),
                         TrainSpec(1, 1, 0.1), np.random.default_rng(0))


def test_evaluate_memorized_set():
    features = 3.0 * np.eye(10)
    data = real_dataset(features, np.arange(10), 10)
    identity = ModelParams(((10, 10),), np.concatenate([np.eye(10).reshape(-1), np.zeros(10)]))
    assert nn_service.evaluate(identity, data)[0] == 1.0

    model = nn_service.init_model([(10, 10)], seed=3)
    trained = nn_service.train(model, data, TrainSpec(200, 10, 0.5), np.random.default_rng(0))
    assert nn_service.evaluate(trained, data)[0] == 1.0


def test_evaluate_zero_model_on_balanced_set():
    rng = np.random.default_rng(10)
    data = real_dataset(rng.normal(size=(50, 4)), np.repeat(np.arange(10), 5), 10)
    accuracy, mean_loss = nn_service.evaluate(zero_model([(4, 10)]), data)
    assert accuracy == 0.1
    assert abs(mean_loss - math.log(10)) < 1e-9


def test_evaluate_accuracy_unchanged_by_logit_shift():
    rng = np.random.default_rng(12)
    model = random_model([(4, 6), (6, 3)], rng)
    data = real_dataset(rng.normal(size=(40, 4)), rng.integers(0, 3, size=40), 3)
    shifted = model.values.copy()
    shifted[-3:] += 5.0  # output biases
    assert nn_service.evaluate(model, data)[0] == nn_service.evaluate(model.with_values(shifted), data)[0]


def test_evaluate_rejects_empty_dataset():
    with pytest.raises(EmptyDatasetError):
        nn_service.evaluate(zero_model([(2, 2)]), real_dataset(np.zeros((0, 2)), [], 2))
