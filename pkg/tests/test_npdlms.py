"""Kernel-MAP update: kernels, mu weights, gradient oracle, gate, buffers."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffnet.diffusion import NodeState, SharedData
from diffnet.errors import (
    DegenerateDenominator,
    DimensionMismatch,
    EmptyBuffer,
    InvalidParameters,
    NonPositiveBandwidth,
)
from diffnet.npdlms import (
    EstimateBuffer,
    KernelParams,
    ThresholdParams,
    bounded_error_gain,
    conditional_kde,
    gaussian_kernel,
    kde_prior,
    log_local_objective,
    mu_weights,
    neighbor_error,
    npdlms_gradient,
    npdlms_step,
    pseudo_huber,
    threshold_gate,
)


# --- kernels and losses ----------------------------------------------------


def test_gaussian_kernel_examples():
    x = np.array([1.0, 2.0])
    assert gaussian_kernel(1.0, x, x) == 1.0
    assert gaussian_kernel(2.0, x, x) == 0.5
    y = x + np.array([1.0, 1.0])  # squared distance 2
    assert gaussian_kernel(1.0, x, y) == pytest.approx(np.exp(-1.0))


def test_gaussian_kernel_errors():
    with pytest.raises(NonPositiveBandwidth):
        gaussian_kernel(0.0, np.zeros(2), np.zeros(2))
    with pytest.raises(DimensionMismatch):
        gaussian_kernel(1.0, np.zeros(2), np.zeros(3))


def test_pseudo_huber_examples():
    assert pseudo_huber(1.0, 0.0) == (0.0, 0.0)
    loss, dloss = pseudo_huber(1.0, 1.0)
    assert loss == pytest.approx(np.sqrt(2.0) - 1.0)
    assert dloss == pytest.approx(1.0 / np.sqrt(2.0))


def test_pseudo_huber_asymptote():
    delta, a = 0.25, 100.0
    loss, _ = pseudo_huber(delta, a)
    approx = delta * a - delta * delta
    assert abs(loss - approx) / loss < 1e-4  # within 0.01 percent


@given(st.floats(-1e12, 1e12), st.floats(1e-6, 1e3))
@settings(max_examples=300, deadline=None)
def test_bounded_gain_never_exceeds_delta(a, delta):
    assert abs(bounded_error_gain(delta, a)) <= delta


def test_bounded_gain_odd_and_saturating():
    e = np.array([-1e300, -1.0, 0.0, 1.0, 1e300])
    g = bounded_error_gain(0.25, e)
    assert np.array_equal(g, -g[::-1])
    assert g[-1] == 0.25 and g[0] == -0.25


# --- kernel density over buffers -------------------------------------------


def test_kde_prior_all_equal():
    buf = np.tile(np.array([0.5, -1.0]), (4, 1))
    assert kde_prior(buf, np.array([0.5, -1.0]), sigma=2.0) == pytest.approx(0.5)


def test_kde_prior_single_entry():
    buf = np.array([[1.0, 0.0]])
    theta = np.array([0.0, 0.0])
    assert kde_prior(buf, theta, 1.0) == pytest.approx(gaussian_kernel(1.0, theta, buf[0]))


def test_kde_prior_matches_resummation_oracle(rng):
    buf = rng.standard_normal((3, 4))
    theta = rng.standard_normal(4)
    sigma = 0.7
    oracle = sum(gaussian_kernel(sigma, theta, row) for row in buf) / 3
    assert kde_prior(buf, theta, sigma) == pytest.approx(oracle, rel=1e-14)


def test_kde_prior_empty_buffer():
    with pytest.raises(EmptyBuffer):
        kde_prior(np.empty((0, 2)), np.zeros(2), 1.0)


def test_conditional_kde_reductions(rng):
    theta_k = rng.standard_normal(3)
    theta_l = rng.standard_normal(3)
    buf_k = rng.standard_normal((4, 3))
    # all neighbour entries at theta_l: ratio collapses to the plain prior
    buf_l = np.tile(theta_l, (4, 1))
    value = conditional_kde(buf_k, buf_l, theta_k, theta_l, 0.9, 1.4)
    assert value == pytest.approx(kde_prior(buf_k, theta_k, 0.9), rel=1e-14)
    # all own entries at theta_k: maximal kernel 1/sigma_k
    value = conditional_kde(np.tile(theta_k, (4, 1)), rng.standard_normal((4, 3)),
                            theta_k, theta_l, 0.9, 1.4)
    assert value == pytest.approx(1.0 / 0.9, rel=1e-14)


def test_conditional_kde_single_entry(rng):
    buf_k = rng.standard_normal((1, 2))
    buf_l = rng.standard_normal((1, 2))
    theta_k, theta_l = rng.standard_normal(2), rng.standard_normal(2)
    assert conditional_kde(buf_k, buf_l, theta_k, theta_l, 1.1, 0.8) == pytest.approx(
        gaussian_kernel(1.1, theta_k, buf_k[0]), rel=1e-14
    )


def test_conditional_kde_matches_resummation_oracle(rng):
    buf_k = rng.standard_normal((5, 2))
    buf_l = rng.standard_normal((5, 2))
    theta_k, theta_l = rng.standard_normal(2), rng.standard_normal(2)
    sk, sl = 0.8, 1.3
    num = sum(gaussian_kernel(sk, theta_k, bk) * gaussian_kernel(sl, theta_l, bl)
              for bk, bl in zip(buf_k, buf_l))
    den = sum(gaussian_kernel(sl, theta_l, bl) for bl in buf_l)
    assert conditional_kde(buf_k, buf_l, theta_k, theta_l, sk, sl) == pytest.approx(
        num / den, rel=1e-13
    )


def test_degenerate_denominator_raises():
    buf_l = np.full((3, 2), np.inf)
    with pytest.raises(DegenerateDenominator):
        conditional_kde(np.zeros((3, 2)), buf_l, np.zeros(2), np.zeros(2), 1.0, 1.0)
    with pytest.raises(DegenerateDenominator):
        mu_weights(np.full((3, 2), np.inf), np.zeros((3, 2)), np.zeros(2), np.zeros(2), 1.0, 1.0)


# --- mu weights -------------------------------------------------------------


def test_mu_weights_full_symmetry():
    buf_k = np.tile(np.array([1.0, 1.0]), (5, 1))
    buf_l = np.tile(np.array([-2.0, 0.5]), (5, 1))
    mw = mu_weights(buf_k, buf_l, np.array([0.0, 0.0]), np.array([-2.0, 0.5]), 1.0, 1.0)
    assert np.allclose(mw.mu_ki, 0.2, atol=1e-15)
    assert np.allclose(mw.mu_kli, 0.2, atol=1e-15)


def test_mu_weights_idealized_neighbor_buffer():
    # r_l matching entries at theta_l, the rest far away: mu_kli = 1/r_l there.
    theta_l = np.array([0.3, -0.7])
    far = theta_l + 30.0
    buf_l = np.stack([theta_l, theta_l, far, far])
    buf_k = np.tile(np.array([1.0, 1.0]), (4, 1))
    mw = mu_weights(buf_k, buf_l, np.array([1.0, 1.0]), theta_l, 1.0, 1.0)
    assert mw.mu_kli[0] == pytest.approx(0.5, abs=1e-12)
    assert mw.mu_kli[1] == pytest.approx(0.5, abs=1e-12)
    assert mw.mu_kli[2] == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(mw.mu_ki, 0.25, atol=1e-12)


def test_mu_weights_single_entry(rng):
    mw = mu_weights(rng.standard_normal((1, 3)), rng.standard_normal((1, 3)),
                    rng.standard_normal(3), rng.standard_normal(3), 1.0, 1.0)
    assert mw.mu_kli[0] == 1.0 and mw.mu_ki[0] == 1.0


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_mu_weights_sum_to_one(seed):
    r = np.random.default_rng(seed)
    b = int(r.integers(1, 7))
    d = int(r.integers(1, 5))
    scale = 10.0 ** r.integers(-2, 3)
    mw = mu_weights(scale * r.standard_normal((b, d)), scale * r.standard_normal((b, d)),
                    scale * r.standard_normal(d), scale * r.standard_normal(d),
                    float(r.uniform(0.1, 3.0)), float(r.uniform(0.1, 3.0)))
    assert abs(mw.mu_kli.sum() - 1.0) <= 1e-12
    assert abs(mw.mu_ki.sum() - 1.0) <= 1e-12
    assert np.all(mw.mu_kli >= 0) and np.all(mw.mu_ki >= 0)


# --- neighbourhood error and gate something --------------------------------


def test_neighbor_error_examples(rng):
    shared = SharedData(node=1, neighbors=(1,), u=np.array([[1.0, 0.0]]),
                        d=np.array([2.0]), theta_prev=np.zeros((1, 2)))
    assert neighbor_error(np.zeros(2), shared) == 4.0
    u = rng.standard_normal((3, 2))
    theta = rng.standard_normal(2)
    shared = SharedData(node=1, neighbors=(1, 2, 3), u=u, d=(u @ theta),
                        theta_prev=np.zeros((3, 2)))
    assert neighbor_error(theta, shared) == pytest.approx(0.0, abs=1e-25)
    d_vals = rng.standard_normal(3)
    shared = SharedData(node=1, neighbors=(1, 2, 3), u=u, d=d_vals, theta_prev=np.zeros((3, 2)))
    oracle = sum((d_vals[i] - u[i] @ theta) ** 2 for i in range(3))
    assert neighbor_error(theta, shared) == pytest.approx(oracle, rel=1e-14)


def test_threshold_gate_examples():
    assert threshold_gate(3.0, ThresholdParams(eta=3.0, slope=5.0, mode="smooth")) == 0.5
    assert threshold_gate(0.5, ThresholdParams(eta=0.0, mode="hard")) == 1.0
    assert threshold_gate(0.0, ThresholdParams(eta=0.0, mode="hard")) == 0.0
    value = threshold_gate(4.0, ThresholdParams(eta=3.0, slope=10.0, mode="smooth"))
    assert value == pytest.approx(1.0 / (1.0 + np.exp(-20.0)), rel=1e-12)


@given(st.floats(0.0, 50.0), st.floats(0.0, 50.0))
@settings(max_examples=100, deadline=None)
def test_smooth_gate_monotone(e1, e2):
    params = ThresholdParams(eta=10.0, slope=2.0, mode="smooth")
    lo, hi = sorted((e1, e2))
    assert threshold_gate(lo, params) <= threshold_gate(hi, params)


def test_threshold_params_validation():
    with pytest.raises(InvalidParameters):
        ThresholdParams(eta=-1.0)
    with pytest.raises(InvalidParameters):
        ThresholdParams(slope=0.0)
    with pytest.raises(InvalidParameters):
        ThresholdParams(mode="sometimes")


# --- estimate buffers -------------------------------------------------------


def test_buffer_ring_keeps_last_b_newest_first():
    buf = EstimateBuffer(3, [7])
    for n in range(6):
        buf.push(7, np.array([float(n)]))
    hist = buf.history(7)
    assert hist.shape == (3, 1)
    assert [float(h[0]) for h in hist] == [5.0, 4.0, 3.0]


def test_buffer_depth_and_errors():
    buf = EstimateBuffer(2, [1, 2])
    assert buf.depth(1) == 0
    with pytest.raises(EmptyBuffer):
        buf.history(1)
    buf.push(1, np.zeros(2))
    assert buf.depth(1) == 1
    with pytest.raises(InvalidParameters):
        EstimateBuffer(0, [1])


def test_buffer_stores_copies():
    buf = EstimateBuffer(2, [1])
    v = np.array([1.0, 2.0])
    buf.push(1, v)
    v[0] = 99.0
    assert buf.history(1)[0, 0] == 1.0


# --- gradient oracle --------------------------------------------------------


def _random_instance(r, max_dim=4, max_buf=5, max_nbrs=3):
    d = int(r.integers(1, max_dim + 1))
    m = int(r.integers(1, max_nbrs + 1))
    b = int(r.integers(2, max_buf + 1))
    neighbors = tuple(range(1, m + 1))
    buffers = EstimateBuffer(b, neighbors)
    for _ in range(b):
        for l in neighbors:
            buffers.push(l, r.normal(0, 1, d))
    shared = SharedData(node=1, neighbors=neighbors, u=r.normal(0, 1, (m, d)),
                        d=r.normal(0, 1, m), theta_prev=r.normal(0, 1, (m, d)))
    params = KernelParams(sigma=float(r.uniform(0.5, 2.0)), h=float(r.uniform(0.5, 2.0)),
                          delta=float(r.uniform(0.1, 1.0)))
    return shared, buffers, params, r.normal(0, 1, d)


def _fd_gradient(theta, shared, buffers, params, step=1e-5):
    fd = np.zeros_like(theta)
    for j in range(theta.size):
        e_j = np.zeros_like(theta)
        e_j[j] = step
        fd[j] = (log_local_objective(theta + e_j, shared, buffers, params)
                 - log_local_objective(theta - e_j, shared, buffers, params)) / (2 * step)
    return fd


def test_gradient_matches_finite_differences():
    r = np.random.default_rng(12)
    for _ in range(100):
        shared, buffers, params, theta = _random_instance(r)
        grad = npdlms_gradient(theta, shared, buffers, params)
        fd = _fd_gradient(theta, shared, buffers, params)
        rel = np.linalg.norm(grad - fd) / max(np.linalg.norm(grad), 1e-12)
        assert rel <= 1e-6


def test_gradient_zero_at_stationary_point(rng):
    # zero errors, uniform buffers: both terms vanish
    d = 3
    theta = rng.standard_normal(d)
    u = rng.standard_normal((2, d))
    shared = SharedData(node=1, neighbors=(1, 2), u=u, d=u @ theta,
                        theta_prev=np.stack([theta, theta]))
    buffers = EstimateBuffer(3, (1, 2))
    for _ in range(3):
        buffers.push(1, theta)
        buffers.push(2, theta)
    grad = npdlms_gradient(theta, shared, buffers, KernelParams())
    assert np.allclose(grad, 0.0, atol=1e-14)


def test_gradient_reduces_to_scaled_lms_for_small_errors(rng):
    # single node, huge delta: direction is (1/h) e u'
    d = 4
    theta = rng.standard_normal(d)
    u = rng.standard_normal((1, d))
    d_val = np.array([u[0] @ theta + 0.01])
    shared = SharedData(node=1, neighbors=(1,), u=u, d=d_val, theta_prev=theta[None])
    buffers = EstimateBuffer(2, (1,))
    buffers.push(1, theta)
    params = KernelParams(h=1.7, delta=1e9)
    grad = npdlms_gradient(theta, shared, buffers, params)
    err = d_val[0] - u[0] @ theta
    assert np.allclose(grad, err * u[0] / 1.7, rtol=1e-9)


def test_objective_likelihood_scales_with_h(rng):
    shared, buffers, params, theta = _random_instance(np.random.default_rng(3))
    # doubling h halves the likelihood block at fixed errors; verify on the
    # pure-likelihood part by cancelling the prior blocks
    p1 = KernelParams(sigma=params.sigma, h=1.0, delta=params.delta)
    p2 = KernelParams(sigma=params.sigma, h=2.0, delta=params.delta)
    like1 = log_local_objective(theta, shared, buffers, p1)
    like2 = log_local_objective(theta, shared, buffers, p2)
    prior_only = _prior_block(theta, shared, buffers, params.sigma)
    assert (like1 - prior_only) == pytest.approx(2.0 * (like2 - prior_only), rel=1e-10)


def _prior_block(theta, shared, buffers, sigma):
    total = 0.0
    for i, l in enumerate(shared.neighbors):
        total += np.log(kde_prior(buffers.history(l), shared.theta_prev[i], sigma))
    for i, l in enumerate(shared.neighbors):
        if l == shared.node:
            continue
        total += np.log(conditional_kde(buffers.history(shared.node), buffers.history(l),
                                        theta, shared.theta_prev[i], sigma, sigma))
        total -= np.log(kde_prior(buffers.history(shared.node), theta, sigma))
    return total


# --- full step --------------------------------------------------------------


def test_step_with_infinite_threshold_is_pure_combination(rng):
    d = 3
    prev = rng.standard_normal((3, d))
    u = rng.standard_normal((3, d))
    shared = SharedData(node=2, neighbors=(1, 2, 3), u=u, d=rng.standard_normal(3),
                        theta_prev=prev)
    buffers = EstimateBuffer(3, (1, 2, 3))
    weights = np.array([0.3, 0.4, 0.3])
    state, updated = npdlms_step(NodeState(theta=prev[1].copy()), shared, buffers,
                                 KernelParams(), ThresholdParams(eta=np.inf, mode="hard"),
                                 0.5, weights)
    assert not updated
    assert np.allclose(state.theta, prev.T @ weights, atol=1e-15)


def test_step_single_node_b1_matches_lms_trajectory(rng):
    # B=1, no neighbours, huge delta, eta=0: exactly LMS with step alpha/h
    d, alpha, h = 3, 0.08, 1.6
    theta_o = rng.standard_normal(d)
    theta = np.zeros(d)
    theta_ref = np.zeros(d)
    buffers = EstimateBuffer(1, (1,))
    params = KernelParams(sigma=1.0, h=h, delta=1e12)
    gate = ThresholdParams(eta=0.0, mode="hard")
    for _ in range(100):
        u = rng.standard_normal((1, d))
        d_val = np.array([u[0] @ theta_o + 0.05 * rng.standard_normal()])
        shared = SharedData(node=1, neighbors=(1,), u=u, d=d_val, theta_prev=theta[None])
        state, updated = npdlms_step(NodeState(theta=theta.copy()), shared, buffers,
                                     params, gate, alpha, np.array([1.0]))
        theta = state.theta
        theta_ref = theta_ref + (alpha / h) * (d_val[0] - u[0] @ theta_ref) * u[0]
        assert updated
        assert np.max(np.abs(theta - theta_ref)) <= 1e-10


def test_step_zero_noise_fixed_point(rng):
    d = 2
    theta_o = rng.standard_normal(d)
    u = rng.standard_normal((2, d))
    shared = SharedData(node=1, neighbors=(1, 2), u=u, d=u @ theta_o,
                        theta_prev=np.stack([theta_o, theta_o]))
    buffers = EstimateBuffer(3, (1, 2))
    state, updated = npdlms_step(NodeState(theta=theta_o.copy()), shared, buffers,
                                 KernelParams(), ThresholdParams(eta=1e-6, mode="hard"),
                                 0.3, np.array([0.5, 0.5]))
    assert np.allclose(state.theta, theta_o, atol=1e-14)
    assert not updated  # zero error cannot clear a positive threshold


def test_step_atc_single_node_equals_cta(rng):
    d = 2
    theta = rng.standard_normal(d)
    u = rng.standard_normal((1, d))
    d_val = np.array([0.4])
    params = KernelParams()
    gate = ThresholdParams(eta=0.0, mode="hard")
    out = {}
    for strategy in ("cta", "atc"):
        buffers = EstimateBuffer(2, (1,))
        shared = SharedData(node=1, neighbors=(1,), u=u, d=d_val, theta_prev=theta[None])
        state, _ = npdlms_step(NodeState(theta=theta.copy()), shared, buffers,
                               params, gate, 0.1, np.array([1.0]), strategy=strategy)
        out[strategy] = state.theta
    assert np.allclose(out["cta"], out["atc"], atol=1e-15)


def test_step_pushes_received_estimates():
    prev = np.array([[1.0, 0.0], [0.0, 1.0]])
    shared = SharedData(node=1, neighbors=(1, 2), u=np.zeros((2, 2)),
                        d=np.zeros(2), theta_prev=prev)
    buffers = EstimateBuffer(3, (1, 2))
    npdlms_step(NodeState(theta=prev[0].copy()), shared, buffers, KernelParams(),
                ThresholdParams(eta=0.0, mode="hard"), 0.1, np.array([0.5, 0.5]))
    assert buffers.depth(1) == 1 and buffers.depth(2) == 1
    assert np.array_equal(buffers.history(1)[0], prev[0])
    assert np.array_equal(buffers.history(2)[0], prev[1])
