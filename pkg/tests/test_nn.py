import math

import numpy as np
import pytest

from tripnet.errors import ArgumentError, ShapeError
from tripnet.nn import (Activation, DenseLayer, Network, activate, activate_grad, backward,
                        flatten_params, forward, init_network, paper_architecture, param_count,
                        unflatten_params)
from tripnet.numerics import Rng


def mse(net, x, y):
    out, _ = forward(net, x)
    return float(np.mean((out - y) ** 2))


def finite_difference_grads(net, x, y, h=1e-5):
    """Central differences of the MSE loss with respect to every parameter."""
    theta = flatten_params(net)
    grads = np.zeros_like(theta)
    for p in range(theta.size):
        plus, minus = theta.copy(), theta.copy()
        plus[p] += h
        minus[p] -= h
        grads[p] = (mse(unflatten_params(plus, net), x, y)
                    - mse(unflatten_params(minus, net), x, y)) / (2 * h)
    return grads


def analytic_grads(net, x, y):
    out, cache = forward(net, x)
    g = backward(net, cache, 2.0 * (out - y) / x.shape[0])
    return np.concatenate([np.concatenate([dw.ravel(), db.ravel()])
                           for dw, db in zip(g.d_weights, g.d_bias)])


def max_relative_error(a, n):
    return float(np.max(np.abs(a - n) / np.maximum(1e-8, np.abs(a) + np.abs(n))))


def test_paper_architecture_param_counts():
    counts, total = param_count(paper_architecture(16))
    assert counts == [85, 30, 6]
    assert total == 121
    assert 16 * 5 + 5 == 85


def test_paper_architecture_layout():
    net = paper_architecture(16)
    assert net.dims == [16, 5, 5, 1]
    assert [l.activation for l in net.layers] == [Activation.RELU, Activation.TANH,
                                                  Activation.IDENTITY]


def test_param_count_small_networks():
    assert param_count(paper_architecture(1)) == ([10, 30, 6], 46)
    assert param_count(Network((DenseLayer.zeros(3, 2, "identity"),))) == ([8], 8)
    two = Network((DenseLayer.zeros(4, 3, "relu"), DenseLayer.zeros(3, 1, "identity")))
    assert param_count(two) == ([15, 4], 19)


def test_paper_architecture_rejects_zero_features():
    with pytest.raises(ArgumentError):
        paper_architecture(0)


def test_network_rejects_broken_chain():
    with pytest.raises(ShapeError):
        Network((DenseLayer.zeros(4, 3, "relu"), DenseLayer.zeros(2, 1, "identity")))
    with pytest.raises(ArgumentError):
        Network(())


def test_init_network():
    net = init_network(paper_architecture(16), Rng(7))
    s = math.sqrt(6 / 21)
    assert all((l.bias == 0).all() for l in net.layers)
    w = net.layers[0].weights
    assert (np.abs(w) < s).all() and w.std() > 0
    again = init_network(paper_architecture(16), Rng(7))
    for a, b in zip(net.layers, again.layers):
        assert a.weights.tobytes() == b.weights.tobytes()


def test_layers_are_immutable():
    net = init_network(paper_architecture(3), Rng(1))
    with pytest.raises(ValueError):
        net.layers[0].weights[0, 0] = 1.0


def test_activation_values():
    z = np.array([[-3.0, 2.5, 0.0]])
    np.testing.assert_array_equal(activate(Activation.RELU, z), [[0.0, 2.5, 0.0]])
    np.testing.assert_array_equal(activate_grad(Activation.RELU, z), [[0.0, 1.0, 0.0]])
    assert activate(Activation.TANH, np.array([[0.0]]))[0, 0] == 0.0
    assert activate_grad(Activation.TANH, np.array([[0.0]]))[0, 0] == 1.0
    # (e^2 - 1) / (e^2 + 1) from an exact-rational Taylor series of e^2
    assert activate(Activation.TANH, np.array([[1.0]]))[0, 0] == pytest.approx(
        0.7615941559557649, abs=1e-15)
    np.testing.assert_array_equal(activate(Activation.IDENTITY, z), z)
    np.testing.assert_array_equal(activate_grad(Activation.IDENTITY, z), np.ones_like(z))


def test_forward_zero_network_outputs_zero(rng):
    out, cache = forward(paper_architecture(16), rng.normal(size=(7, 16)))
    assert out.shape == (7, 1)
    assert (out == 0).all()
    assert len(cache.pre_activations) == len(cache.activations) == 3


def test_forward_identity_layer_is_affine(rng):
    w, b = rng.normal(size=(4, 3)), rng.normal(size=(1, 3))
    x = rng.normal(size=(5, 4))
    out, _ = forward(Network((DenseLayer(w, b, "identity"),)), x)
    np.testing.assert_allclose(out, x @ w + b, rtol=0, atol=1e-14)


def test_forward_hand_computed():
    # x=2: relu(2*1.5 - 1) = 2; tanh(2*0.5) = tanh(1); out = 2*tanh(1) + 0.25
    net = Network((
        DenseLayer(np.array([[1.5]]), np.array([[-1.0]]), "relu"),
        DenseLayer(np.array([[0.5]]), np.array([[0.0]]), "tanh"),
        DenseLayer(np.array([[2.0]]), np.array([[0.25]]), "identity"),
    ))
    out, _ = forward(net, np.array([[2.0], [0.0]]))
    assert out[0, 0] == pytest.approx(2 * 0.7615941559557649 + 0.25, abs=1e-14)
    assert out[1, 0] == pytest.approx(0.25, abs=1e-15)  # relu clamps -1 to 0


def test_forward_shape_error():
    with pytest.raises(ShapeError):
        forward(paper_architecture(16), np.zeros((2, 15)))


def test_forward_is_deterministic(rng):
    net = init_network(paper_architecture(16), Rng(3))
    x = rng.normal(size=(9, 16))
    assert forward(net, x)[0].tobytes() == forward(net, x)[0].tobytes()


def test_backward_zero_upstream_gives_zero_grads(rng):
    net = init_network(paper_architecture(16), Rng(3))
    _, cache = forward(net, rng.normal(size=(4, 16)))
    g = backward(net, cache, np.zeros((4, 1)))
    assert all((dw == 0).all() and (db == 0).all() for dw, db in zip(g.d_weights, g.d_bias))


def test_backward_single_neuron_by_hand():
    # L = (w*x + b - 0)^2 with w=1, b=0, x=2: dL/dw = 2*2*x = 8, dL/db = 4
    net = Network((DenseLayer(np.array([[1.0]]), np.array([[0.0]]), "identity"),))
    x, y = np.array([[2.0]]), np.array([[0.0]])
    g = analytic_grads(net, x, y)
    np.testing.assert_allclose(g, [8.0, 4.0])
    np.testing.assert_allclose(finite_difference_grads(net, x, y), [8.0, 4.0], rtol=1e-8)


def test_backward_does_not_mutate_batch(rng):
    net = init_network(paper_architecture(16), Rng(3))
    x = rng.normal(size=(4, 16))
    x0 = x.copy()
    out, cache = forward(net, x)
    backward(net, cache, out)
    np.testing.assert_array_equal(x, x0)


def test_backward_shape_error(rng):
    net = init_network(paper_architecture(16), Rng(3))
    _, cache = forward(net, rng.normal(size=(4, 16)))
    with pytest.raises(ShapeError):
        backward(net, cache, np.zeros((3, 1)))


@pytest.mark.parametrize("seed", range(25))
def test_gradients_match_finite_differences(seed):
    g = np.random.default_rng(seed)
    net = init_network(paper_architecture(16), Rng(seed))
    # random biases move the units off their init values
    net = unflatten_params(flatten_params(net) + 0.1 * g.normal(size=121), net)
    batch = int(g.integers(1, 9))
    x = g.normal(size=(batch, 16))
    y = g.normal(size=(batch, 1)) * 3
    _, cache = forward(net, x)
    assert np.abs(cache.pre_activations[0]).min() > 1e-4  # keep off the ReLU kink
    err = max_relative_error(analytic_grads(net, x, y), finite_difference_grads(net, x, y))
    assert err <= 1e-4


def test_all_identity_network_is_affine(rng):
    net = Network((DenseLayer(rng.normal(size=(3, 4)), rng.normal(size=(1, 4)), "identity"),
                   DenseLayer(rng.normal(size=(4, 2)), rng.normal(size=(1, 2)), "identity")))
    x = rng.normal(size=(5, 3))
    f = lambda a: forward(net, a)[0]
    for alpha in (0.0, 0.3, 0.5, 1.0):
        np.testing.assert_allclose(f(alpha * x) + f((1 - alpha) * x) - f(np.zeros_like(x)), f(x),
                                   rtol=0, atol=1e-9)


def test_flatten_round_trip():
    net = init_network(paper_architecture(16), Rng(5))
    theta = flatten_params(net)
    assert theta.size == 121
    back = unflatten_params(theta, net)
    assert flatten_params(back).tobytes() == theta.tobytes()
    with pytest.raises(ShapeError):
        unflatten_params(theta[:-1], net)
