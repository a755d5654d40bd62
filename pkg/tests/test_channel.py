import numpy as np
import pytest

from fscap.channel import (ChannelSpec, bec_family, bsc_family,
                           burn_in_length, joint_chain_matrix, lift_memoryless,
                           load_channel, sample_path, save_channel, stream_rng)
from fscap.constraints import rll_forbidden_pairs
from fscap.errors import DegenerateKernel, OutOfRange
from fscap.markov import MarkovParams, build_transition

RLL = rll_forbidden_pairs(1, None)


def two_state_channel() -> ChannelSpec:
    state = np.array([[[0.9, 0.1], [0.2, 0.8]],
                      [[0.6, 0.4], [0.3, 0.7]]])
    emission = np.array([[[0.8, 0.2], [0.3, 0.7]],
                         [[0.1, 0.9], [0.5, 0.5]]])
    return ChannelSpec(state, emission)


def test_bsc_kernel():
    kernel = bsc_family().kernel(0.1)
    assert np.allclose(kernel, [[0.9, 0.1], [0.1, 0.9]])
    with pytest.raises(OutOfRange):
        bsc_family().kernel(0.6)


def test_bec_kernel():
    kernel = bec_family().kernel(0.25)
    assert kernel.shape == (2, 3)
    assert np.allclose(kernel.sum(axis=1), 1.0)
    assert kernel[0, 2] == 0.25 and kernel[1, 2] == 0.25


def test_lift_memoryless():
    ch = lift_memoryless(bsc_family(), 0.1)
    assert (ch.num_inputs, ch.num_states, ch.num_outputs) == (2, 1, 2)
    assert np.allclose(ch.emission_kernel[:, 0, :], bsc_family().kernel(0.1))


def test_noiseless_kernel_needs_explicit_opt_in():
    with pytest.raises(DegenerateKernel):
        lift_memoryless(bsc_family(), 0.0)
    ch = lift_memoryless(bsc_family(), 0.0, allow_degenerate=True)
    assert np.allclose(ch.emission_kernel[:, 0, :], np.eye(2))


def test_channel_spec_validates():
    with pytest.raises(ValueError):
        ChannelSpec(np.zeros((2, 1, 1)), np.ones((2, 1, 1)))  # zero kernel
    with pytest.raises(ValueError):
        ChannelSpec(np.ones((2, 1, 1)), np.full((2, 1, 2), 0.4))  # bad rows


def test_stream_rng_reproducible_and_distinct():
    a = stream_rng(7, 1).random(4)
    b = stream_rng(7, 1).random(4)
    c = stream_rng(7, 2).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_joint_chain_matrix_stochastic():
    tm = build_transition(MarkovParams(np.array([0.5])), RLL)
    ch = two_state_channel()
    T = joint_chain_matrix(tm.entries, ch)
    assert T.shape == (4, 4)
    assert np.allclose(T.sum(axis=1), 1.0)
    # entry (x=0,s=0) -> (x=1,s=1) is P[0,1] * K[1,0,1]
    assert T[0, 3] == pytest.approx(0.5 * 0.4)


def test_burn_in_length():
    tm = build_transition(MarkovParams(np.array([0.5])), RLL)
    assert burn_in_length(tm.entries, lift_memoryless(bsc_family(), 0.1)) == 0
    assert burn_in_length(tm.entries, two_state_channel()) > 0


def test_sample_path_respects_constraint():
    tm = build_transition(MarkovParams(np.array([0.5])), RLL)
    ch = lift_memoryless(bsc_family(), 0.1)
    path = sample_path(tm, ch, 5000, stream_rng(0))
    assert len(path.x) == len(path.y) == 5000
    assert set(np.unique(path.x)) <= {0, 1}
    # no forbidden 1->1 transition ever appears
    assert not np.any((path.x[:-1] == 1) & (path.x[1:] == 1))


def test_sample_path_frequencies_match_chain():
    tm = build_transition(MarkovParams(np.array([0.5])), RLL)
    ch = lift_memoryless(bsc_family(), 0.1)
    path = sample_path(tm, ch, 200000, stream_rng(1))
    # stationary frequency of state 0 is 2/3; flip frequency matches eps
    assert np.mean(path.x == 0) == pytest.approx(2 / 3, abs=5e-3)
    assert np.mean(path.x != path.y) == pytest.approx(0.1, abs=5e-3)


def test_sample_path_deterministic_per_stream():
    tm = build_transition(MarkovParams(np.array([0.5])), RLL)
    ch = two_state_channel()
    p1 = sample_path(tm, ch, 100, stream_rng(3, 1))
    p2 = sample_path(tm, ch, 100, stream_rng(3, 1))
    assert np.array_equal(p1.x, p2.x)
    assert np.array_equal(p1.s, p2.s)
    assert np.array_equal(p1.y, p2.y)


def test_save_load_channel_roundtrip(tmp_path):
    ch = two_state_channel()
    path = tmp_path / "channel.txt"
    save_channel(ch, path)
    back = load_channel(path)
    assert np.array_equal(back.state_kernel, ch.state_kernel)
    assert np.array_equal(back.emission_kernel, ch.emission_kernel)
