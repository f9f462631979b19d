import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from mechcool.policy import (ADAM_EPS, PolicyParams, adam_update, argmax_action, forward, init_params,
                             logits, logprob_grad, n_params, sample_action, softmax,
                             weighted_logprob_grad)

SMALL = (2, 4, 4, 3)


def log_pi(params, obs, a):
    return np.log(forward(params, obs)[a])


def max_relative_error(g, fd):
    den = np.maximum(np.abs(g), np.abs(fd))
    both_zero = den == 0
    return float(np.max(np.where(both_zero, 0.0, np.abs(g - fd) / np.where(both_zero, 1.0, den))))


def central_diff(params, obs, a, h=1e-5):
    grad = np.zeros_like(params.theta)
    for i in range(params.theta.size):
        plus, minus = params.copy(), params.copy()
        plus.theta[i] += h
        minus.theta[i] -= h
        grad[i] = (log_pi(plus, obs, a) - log_pi(minus, obs, a)) / (2 * h)
    return grad


def test_param_counts():
    assert init_params((2, 60, 60, 11), np.random.default_rng(0)).theta.size == 4511
    assert init_params((2, 100, 100, 11), np.random.default_rng(0)).theta.size == 11511
    assert n_params((2, 60, 60, 11)) == 2 * 60 + 60 + 60 * 60 + 60 + 60 * 11 + 11


def test_init_scale_and_zero_bias():
    p = init_params((2, 60, 60, 11), np.random.default_rng(1))
    for w in p.weights:
        assert np.abs(w).max() <= 1 / np.sqrt(w.shape[1])
    assert all(not np.any(b) for b in p.biases)
    assert not np.any(p.adam_m) and not np.any(p.adam_v) and p.adam_t == 0


def test_views_share_memory():
    p = init_params(SMALL, np.random.default_rng(0))
    p.weights[0][0, 0] = 123.0
    assert p.theta[0] == 123.0
    # layer-major, row-major: W1 (4x2) then b1 (4) then W2 ...
    assert p.biases[0].base is p.theta or np.shares_memory(p.biases[0], p.theta)


@pytest.mark.parametrize("sizes", [(2, 0, 4, 3), (2, 4, 3), (2, 4, 4, 4, 3)])
def test_bad_layer_sizes(sizes):
    with pytest.raises(ValueError):
        init_params(sizes, np.random.default_rng(0))


def test_zero_network_is_uniform():
    p = init_params((2, 60, 60, 11), zero=True)
    np.testing.assert_allclose(forward(p, [3.0, -7.0]), np.full(11, 1 / 11))


def test_bias_shift_invariance():
    p = init_params(SMALL, np.random.default_rng(2))
    x = np.array([0.3, -1.2])
    before = forward(p, x)
    p.biases[2][:] += 17.0
    np.testing.assert_allclose(forward(p, x), before, rtol=1e-12)


def test_forward_shape_mismatch():
    p = init_params(SMALL, np.random.default_rng(0))
    with pytest.raises(ValueError):
        forward(p, [1.0, 2.0, 3.0])


def test_forward_batch_matches_single():
    p = init_params((2, 60, 60, 11), np.random.default_rng(3))
    X = np.random.default_rng(4).normal(size=(6, 2)) * 10
    batch = forward(p, X)
    for k in range(6):
        np.testing.assert_allclose(batch[k], forward(p, X[k]), rtol=1e-12)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), x=arrays(float, 2, elements=st.floats(-100, 100)))
def test_probs_on_simplex(seed, x):
    p = init_params((2, 60, 60, 11), np.random.default_rng(seed))
    probs = forward(p, x)
    assert np.all(probs >= 0)
    assert abs(probs.sum() - 1) < 1e-12


@settings(max_examples=100)
@given(arrays(float, 11, elements=st.floats(-1e3, 1e3)))
def test_softmax_simplex_for_large_logits(z):
    probs = softmax(z)
    assert np.all(np.isfinite(probs)) and abs(probs.sum() - 1) < 1e-12


@settings(max_examples=100)
@given(z=arrays(np.int64, 11, elements=st.integers(-50, 50)), c=st.integers(-1000, 1000))
def test_argmax_invariant_to_logit_shift(z, c):
    # integer logits keep the shift exact, so ties survive it
    z = z.astype(float)
    assert argmax_action(softmax(z)) == argmax_action(softmax(z + c)) == int(np.argmax(z))


def test_forward_is_pure():
    p = init_params(SMALL, np.random.default_rng(0))
    theta = p.theta.copy()
    a = forward(p, [1.0, 2.0])
    b = forward(p, [1.0, 2.0])
    assert np.array_equal(a, b) and np.array_equal(theta, p.theta)


# --- action selection -----------------------------------------------------

def test_sample_one_hot():
    probs = np.zeros(11)
    probs[4] = 1.0
    rng = np.random.default_rng(0)
    assert all(sample_action(probs, rng) == 4 for _ in range(200))


def test_sample_uniform_frequencies():
    rng = np.random.default_rng(7)
    n = 100_000
    draws = sample_action(np.full((n, 11), 1 / 11), rng)
    counts = np.bincount(draws, minlength=11)
    sigma = np.sqrt(n * (1 / 11) * (10 / 11))
    assert np.all(np.abs(counts - n / 11) < 3 * sigma)


def test_sample_reproducible():
    probs = softmax(np.linspace(-1, 1, 11))
    a = [sample_action(probs, r) for r in [np.random.default_rng(5)] for _ in range(50)]
    b = [sample_action(probs, r) for r in [np.random.default_rng(5)] for _ in range(50)]
    assert a == b


def test_sample_inverse_cdf_edges():
    probs = np.array([0.2, 0.3, 0.5])
    assert sample_action(probs, None, uniforms=np.array(0.0)) == 0
    assert sample_action(probs, None, uniforms=np.array(0.2)) == 1
    assert sample_action(probs, None, uniforms=np.array(0.999999)) == 2
    # cdf ending a hair below one must not run off the end
    assert sample_action(np.array([0.5, 0.5 - 1e-16]), None, uniforms=np.array(1 - 1e-17)) == 1


def test_argmax_examples():
    probs = np.full(11, 0.1 / 9)
    probs[0], probs[1] = 0.1, 0.8
    assert argmax_action(probs) == 1
    tie = np.zeros(11)
    tie[2] = tie[7] = 0.5
    assert argmax_action(tie) == 2
    one_hot = np.eye(11)[9]
    assert argmax_action(one_hot) == 9


# --- gradients ------------------------------------------------------------

def test_logprob_grad_matches_finite_differences():
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(100):
        p = init_params(SMALL, rng)
        p.theta[:] += rng.normal(scale=0.3, size=p.theta.size)  # nonzero biases too
        x = rng.normal(size=2)
        a = int(rng.integers(3))
        g = logprob_grad(p, x, a)
        fd = central_diff(p, x, a)
        worst = max(worst, max_relative_error(g, fd))
    assert worst < 1e-4


def test_score_function_identity():
    rng = np.random.default_rng(8)
    for _ in range(20):
        p = init_params((2, 60, 60, 11), rng)
        x = rng.normal(size=2) * 5
        probs = forward(p, x)
        total = sum(probs[a] * logprob_grad(p, x, a) for a in range(11))
        assert np.max(np.abs(total)) < 1e-8


def test_saturated_policy_has_zero_gradient():
    p = init_params(SMALL, zero=True)
    p.biases[2][:] = [0.0, 800.0, 0.0]
    g = logprob_grad(p, [0.5, 0.5], 1)
    assert np.max(np.abs(g)) < 1e-12


def test_weighted_grad_is_weighted_sum():
    rng = np.random.default_rng(1)
    p = init_params(SMALL, rng)
    X = rng.normal(size=(7, 2))
    A = rng.integers(0, 3, size=7)
    w = rng.normal(size=7)
    expected = sum(w[k] * logprob_grad(p, X[k], int(A[k])) for k in range(7))
    np.testing.assert_allclose(weighted_logprob_grad(p, X, A, w, chunk=3), expected, atol=1e-13)


def test_logprob_grad_rejects_bad_action():
    p = init_params(SMALL, zero=True)
    with pytest.raises(IndexError):
        logprob_grad(p, [0.0, 0.0], 3)


# --- Adam -----------------------------------------------------------------

def test_adam_zero_gradient():
    p = init_params(SMALL, np.random.default_rng(0))
    q = adam_update(p, np.zeros_like(p.theta), 1e-3)
    assert np.array_equal(q.theta, p.theta)
    assert q.adam_t == 1


def test_adam_first_step_is_eta():
    p = init_params(SMALL, np.random.default_rng(0))
    g = np.full(p.theta.size, 0.37)
    g[::2] *= -5.0
    q = adam_update(p, g, 1e-3)
    # m_hat = g, v_hat = g^2, step = eta * g / (|g| + eps)
    expected = 1e-3 * np.sign(g) * np.abs(g) / (np.abs(g) + ADAM_EPS)
    np.testing.assert_allclose(q.theta - p.theta, expected, rtol=1e-10)


def test_adam_matches_reference_sequence():
    # hand-rolled textbook Adam on a short gradient sequence
    rng = np.random.default_rng(4)
    p = init_params(SMALL, rng)
    theta, m, v = p.theta.copy(), np.zeros_like(p.theta), np.zeros_like(p.theta)
    for t in range(1, 6):
        g = rng.normal(size=theta.size)
        p = adam_update(p, g, 0.01)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        theta = theta + 0.01 * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
    np.testing.assert_allclose(p.theta, theta, rtol=1e-12)


def test_adam_deterministic():
    p = init_params(SMALL, np.random.default_rng(0))
    g = np.random.default_rng(1).normal(size=p.theta.size)
    a, b = adam_update(p, g, 1e-3), adam_update(p, g, 1e-3)
    assert np.array_equal(a.theta, b.theta) and np.array_equal(a.adam_v, b.adam_v)


def test_adam_errors():
    p = init_params(SMALL, zero=True)
    with pytest.raises(FloatingPointError):
        adam_update(p, np.full(p.theta.size, np.nan), 1e-3)
    with pytest.raises(ValueError):
        adam_update(p, np.zeros(3), 1e-3)
    with pytest.raises(ValueError):
        adam_update(p, np.zeros_like(p.theta), 0.0)


def test_params_validation():
    with pytest.raises(ValueError):
        PolicyParams(SMALL, np.zeros(5))
