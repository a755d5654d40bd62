import numpy as np
import pytest

from fscap.channel import bsc_family, lift_memoryless, sample_path, stream_rng
from fscap.constraints import rll_forbidden_pairs
from fscap.errors import TooShort
from fscap.hmm import view_Y
from fscap.markov import (MarkovParams, build_transition,
                          markov_entropy_gradient, transition_derivatives)
from fscap.simulator import (compute_S, compute_W, estimate_gradient,
                             make_schedule, replicate_gradient,
                             variance_diagnostics)

RLL = rll_forbidden_pairs(1, None)
PARAMS = MarkovParams(np.array([0.5]))
CHANNEL = lift_memoryless(bsc_family(), 0.1)


def test_make_schedule_values():
    sched = make_schedule(4096, alpha=0.3, beta=0.2)
    assert sched.q == int(4096 ** 0.2)
    assert sched.p == int(4096 ** 0.3)
    assert sched.k == 4096 // (sched.p + sched.q)
    assert sched.half_window == sched.q // 2


def test_schedule_blocks_fit_and_are_disjoint():
    sched = make_schedule(4096)
    prev_hi = 0
    for i in range(1, sched.k + 1):
        lo, hi = sched.block_range(i)
        assert lo > prev_hi
        assert lo - prev_hi - 1 >= sched.q  # gap of q before every block
        assert hi - lo + 1 == sched.p
        prev_hi = hi
    assert prev_hi <= sched.n
    idx = sched.in_block_indices()
    assert len(idx) == sched.k * sched.p
    assert idx.min() - sched.half_window >= 1


def test_make_schedule_rejects_bad_inputs():
    with pytest.raises(TooShort):
        make_schedule(8)
    with pytest.raises(ValueError):
        make_schedule(4096, alpha=0.2, beta=0.3)
    with pytest.raises(ValueError):
        make_schedule(4096, alpha=0.4, beta=0.2)


def test_compute_S_equals_sum_of_W():
    tm = build_transition(PARAMS, RLL)
    dP = transition_derivatives(PARAMS.theta, RLL)
    vy = view_Y(tm, dP, CHANNEL)
    sched = make_schedule(512)
    path = sample_path(tm, CHANNEL, 512, stream_rng(0))
    s, zeta = compute_S(vy, path.y, sched)
    w_sum = sum(compute_W(vy, path.y, int(j), sched.q)
                for j in sched.in_block_indices())
    assert np.allclose(s, w_sum, rtol=1e-10)
    assert zeta.shape == (sched.k, 1)
    assert np.allclose(zeta.sum(axis=0), s)


def test_compute_W_window_bounds():
    tm = build_transition(PARAMS, RLL)
    dP = transition_derivatives(PARAMS.theta, RLL)
    vy = view_Y(tm, dP, CHANNEL)
    path = sample_path(tm, CHANNEL, 16, stream_rng(0))
    with pytest.raises(IndexError):
        compute_W(vy, path.y, 1, q=4)  # window would start before index 1
    with pytest.raises(IndexError):
        compute_W(vy, path.y, 17, q=4)


def test_estimate_gradient_combines_terms():
    est = estimate_gradient(PARAMS, RLL, CHANNEL, 1024, seed=3)
    kp = est.schedule.k * est.schedule.p
    expected = est.h_prime + est.s_y / kp - est.s_xy / kp
    assert np.allclose(est.g, expected)
    assert np.allclose(est.h_prime, markov_entropy_gradient(PARAMS, RLL))
    assert np.allclose(est.per_block_zeta_y.sum(axis=0), est.s_y)


def test_estimate_gradient_reproducible():
    a = estimate_gradient(PARAMS, RLL, CHANNEL, 1024, seed=3, stream_ids=(5,))
    b = estimate_gradient(PARAMS, RLL, CHANNEL, 1024, seed=3, stream_ids=(5,))
    c = estimate_gradient(PARAMS, RLL, CHANNEL, 1024, seed=3, stream_ids=(6,))
    assert np.array_equal(a.g, b.g)
    assert not np.array_equal(a.g, c.g)


def test_replicate_gradient_shape_and_streams():
    gs, ests = replicate_gradient(PARAMS, RLL, CHANNEL, 1024, replicas=4, seed=0)
    assert gs.shape == (4, 1)
    assert len(ests) == 4
    assert len({float(g) for g in gs[:, 0]}) == 4  # all draws distinct


def test_variance_diagnostics():
    sched = make_schedule(1024)
    s_values = np.array([[1.0], [3.0], [5.0]])
    out = variance_diagnostics(s_values, sched)
    assert out["var_S"][0] == pytest.approx(4.0)
    norm = sched.k * sched.p * sched.q ** 3
    assert out["ratio"][0] == pytest.approx(4.0 / norm)
    with pytest.raises(ValueError):
        variance_diagnostics(np.array([[1.0]]), sched)
