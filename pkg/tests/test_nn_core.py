import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ancer.errors import DataError, FormatError, InputShapeError, ParseError
from ancer.nn_core import (Classifier, Dataset, Layer, forward, forward_batch, init_classifier,
                           input_gradient, load_model, predict_batch, save_model, train_classifier)
from conftest import constant_model
from oracles import central_difference, mlp_forward


def _raw(model):
    return [(l.weight, l.bias, l.activation) for l in model.layers]


def test_linear_forward_symmetric(linear_model):
    assert np.allclose(forward(linear_model, [0.0, 0.0]), [0.5, 0.5], atol=1e-15)


def test_linear_forward_ln3(linear_model):
    assert np.allclose(forward(linear_model, [math.log(3.0), 0.0]), [0.75, 0.25], atol=1e-15)


def test_forward_matches_reference():
    m = init_classifier([3, 7, 5, 4], seed=11)
    x = np.random.default_rng(0).normal(size=(50, 3))
    assert np.allclose(forward_batch(m, x), mlp_forward(_raw(m), x), atol=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 5), st.integers(2, 6))
def test_softmax_normalisation(seed, n, k):
    m = init_classifier([n, 8, k], seed)
    x = np.random.default_rng(seed).normal(scale=5.0, size=(5, n))
    p = forward_batch(m, x)
    assert np.all(p >= 0) and np.all(np.abs(p.sum(axis=1) - 1.0) < 1e-9)


def test_forward_shape_error(linear_model):
    with pytest.raises(InputShapeError):
        forward(linear_model, [1.0, 2.0, 3.0])
    with pytest.raises(InputShapeError):
        forward_batch(linear_model, np.zeros((4, 3)))


def test_predict_tie_goes_to_lowest_index(linear_model):
    assert predict_batch(linear_model, np.array([[1.0, 1.0]]))[0] == 0


def test_layer_chain_validated():
    with pytest.raises(InputShapeError):
        Classifier((Layer(np.zeros((3, 2)), np.zeros(3)), Layer(np.zeros((2, 4)), np.zeros(2))))


def test_linear_gradient_closed_form(linear_model):
    # softmax(x)_0 = 1 / (1 + exp(x1 - x0)); d/dx0 = p0 p1, d/dx1 = -p0 p1
    g = input_gradient(linear_model, np.zeros(2), 0)
    assert np.allclose(g, [0.25, -0.25], atol=1e-15)


def test_gradient_vs_finite_differences():
    rng = np.random.default_rng(5)
    m = init_classifier([4, 16, 16, 3], seed=2)
    checked = 0
    while checked < 20:
        x = rng.normal(size=4)
        # skip points near a ReLU kink
        h = x
        near_kink = False
        for l in m.layers[:-1]:
            z = h @ l.weight.T + l.bias
            near_kink |= bool(np.any(np.abs(z) < 1e-3))
            h = np.maximum(z, 0)
        if near_kink:
            continue
        head = int(rng.integers(3))
        g = input_gradient(m, x, head)
        fd = central_difference(lambda v: mlp_forward(_raw(m), v)[head], x, 1e-4)
        assert np.linalg.norm(g - fd) <= 1e-5 * max(np.linalg.norm(fd), 1e-12)
        checked += 1


def test_constant_model_zero_gradient():
    g = input_gradient(constant_model(), np.array([0.3, -0.2]), 1)
    assert np.array_equal(g, np.zeros(2))


def test_gradient_head_out_of_range(linear_model):
    with pytest.raises(IndexError):
        input_gradient(linear_model, np.zeros(2), 2)


def test_training_reaches_accuracy(toy_model):
    assert toy_model.train_accuracy >= 0.95


def test_zero_epochs_returns_init(toy_train):
    m = train_classifier(toy_train, [2, 8, 2], epochs=0, seed=3)
    assert m.same_weights(init_classifier([2, 8, 2], seed=3))


def test_training_deterministic(toy_train):
    small = toy_train.subset(slice(0, 100))
    a = train_classifier(small, [2, 8, 2], epochs=3, seed=9)
    b = train_classifier(small, [2, 8, 2], epochs=3, seed=9)
    assert a.same_weights(b)


def test_training_errors():
    with pytest.raises(DataError):
        train_classifier(Dataset(np.zeros((0, 2)), np.zeros(0, dtype=int)), [2, 2])
    with pytest.raises(DataError):
        train_classifier(Dataset(np.zeros((4, 2)), np.array([0, 1, 0, 1])), [3, 2])


def test_save_load_roundtrip(tmp_path, toy_model):
    p = tmp_path / "m.txt"
    save_model(toy_model, p)
    assert load_model(p).same_weights(toy_model)


def test_load_truncated(tmp_path, toy_model):
    p = tmp_path / "m.txt"
    save_model(toy_model, p)
    lines = p.read_text().splitlines()
    p.write_text("\n".join(lines[:10]) + "\n")
    with pytest.raises(ParseError) as info:
        load_model(p)
    assert info.value.line is not None


def test_load_wrong_magic(tmp_path, linear_model):
    p = tmp_path / "m.txt"
    save_model(linear_model, p)
    p.write_text("NOT-A-MODEL\n" + p.read_text().split("\n", 1)[1])
    with pytest.raises(FormatError) as info:
        load_model(p)
    assert info.value.line == 1


def test_load_bad_number(tmp_path, linear_model):
    p = tmp_path / "m.txt"
    save_model(linear_model, p)
    lines = p.read_text().splitlines()
    lines[3] = "1.0 abc"
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError) as info:
        load_model(p)
    assert info.value.line == 4
