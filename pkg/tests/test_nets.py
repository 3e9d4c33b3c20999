import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from privkick.dirichlet import make_rng
from privkick.nets import (
    Adam,
    NetworkParameters,
    ShapeMismatch,
    backward,
    head_backward,
    init_params,
    load_checkpoint,
    policy_forward,
    save_checkpoint,
    softmax,
    value_forward,
    value_forward_cached,
)

from fixtures import finite_difference, rel_err


def test_init_bounds_and_shapes():
    p = init_params([16, 64, 64, 5], make_rng(0), "policy", 1e-3)
    assert p.sizes == [16, 64, 64, 5]
    for w, b in zip(p.weights, p.biases):
        bound = 1 / np.sqrt(w.shape[0])
        assert np.all(np.abs(w) <= bound) and np.all(np.abs(b) <= bound)


def test_policy_output_is_floored_simplex():
    p = init_params([4, 8, 5], make_rng(1), "policy", 0.02)
    # huge inputs push the softmax to a vertex; the floor must hold anyway
    pi = policy_forward(p, 1e3 * make_rng(2).normal(size=(50, 4))).pi
    assert np.allclose(pi.sum(axis=1), 1.0, atol=1e-12)
    assert pi.min() >= 0.02 - 1e-15


def test_value_forward_shapes():
    v = init_params([4, 8, 1], make_rng(3), "linear")
    assert isinstance(value_forward(v, np.zeros(4)), float)
    assert value_forward(v, np.zeros((7, 4))).shape == (7,)


def test_shape_mismatch():
    p = init_params([4, 8, 3], make_rng(4))
    with pytest.raises(ShapeMismatch):
        policy_forward(p, np.zeros(5))
    with pytest.raises(ShapeMismatch):
        NetworkParameters([np.zeros((4, 3))], [np.zeros(2)])
    with pytest.raises(ShapeMismatch):
        NetworkParameters([np.zeros((4, 3)), np.zeros((2, 2))], [np.zeros(3), np.zeros(2)])


def test_policy_backward_matches_finite_differences():
    p = init_params([4, 6, 3], make_rng(5), "policy", 0.01)
    x = make_rng(6).random((5, 4))
    g_pi = make_rng(7).normal(size=(5, 3))
    analytic = backward(p, policy_forward(p, x), g_pi).flat()
    numeric = finite_difference(lambda: float(np.sum(policy_forward(p, x).pi * g_pi)), p)
    assert rel_err(analytic, numeric) < 1e-6


def test_value_backward_matches_finite_differences():
    p = init_params([4, 6, 1], make_rng(8), "linear")
    x = make_rng(9).random((5, 4))
    g = make_rng(10).normal(size=5)
    _, cache = value_forward_cached(p, x)
    analytic = backward(p, cache, g).flat()
    numeric = finite_difference(lambda: float(np.sum(value_forward(p, x) * g)), p)
    assert rel_err(analytic, numeric) < 1e-6


@given(st.integers(2, 8), st.floats(0.0, 0.1))
def test_head_backward_is_tangent(m, frac):
    eta = frac / m
    rng = np.random.default_rng(m)
    s = softmax(rng.normal(size=(3, m)))
    g = head_backward(s, rng.normal(size=(3, m)), eta)
    # shifting every logit by a constant leaves pi unchanged
    assert np.allclose(g.sum(axis=1), 0.0, atol=1e-12)


def test_checkpoint_round_trip(tmp_path):
    pol = init_params([4, 6, 3], make_rng(11), "policy", 1e-3)
    val = init_params([4, 6, 1], make_rng(12), "linear")
    path = tmp_path / "ck.json"
    save_checkpoint(path, {"policy": pol, "value": val})
    back = load_checkpoint(path)
    for a, b in zip(back["policy"].tensors(), pol.tensors()):
        assert np.array_equal(a, b)
    assert back["policy"].eta == 1e-3 and back["value"].head == "linear"


def test_adam_zero_lr_leaves_params():
    p = init_params([3, 4, 2], make_rng(13))
    before = p.flat()
    opt = Adam(p, lr=0.0)
    opt.step(p, p.copy())
    assert np.array_equal(p.flat(), before)


def test_adam_descends_quadratic():
    p = NetworkParameters([np.array([[3.0]])], [np.array([-2.0])], "linear")
    opt = Adam(p, lr=0.05)
    for _ in range(500):
        opt.step(p, p.copy())  # gradient of 0.5 * ||theta||^2
    assert np.abs(p.flat()).max() < 0.05
