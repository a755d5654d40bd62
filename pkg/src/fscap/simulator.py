"""Blocked Monte Carlo simulator of the mutual-information-rate gradient.

A sampled joint path is split into k blocks of length p separated by gaps
of length q.  Each in-block index j contributes a windowed term W_j built
from hidden-Markov conditionals over the window [j - floor(q/2), j]; the
block sums combine with the exact Markov entropy gradient into the
estimate g = H'(X2|X1) + S(Y)/(kp) - S(X,Y)/(kp).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSpec, sample_path, stream_rng
from .constraints import ForbiddenPairSet
from .errors import TooShort
from .hmm import (HmmView, batch_forward, encode_xy, forward_step,
                  initial_state, view_XY, view_Y)
from .markov import (MarkovParams, build_transition, markov_entropy_gradient,
                     transition_derivatives)

DEFAULT_ALPHA = 0.3
DEFAULT_BETA = 0.2


@dataclass(frozen=True)
class BlockSchedule:
    """Blocking of a length-n path: q = floor(n^beta), p = floor(n^alpha),
    k = floor(n / (p + q)); block i covers j in [iq + (i-1)p + 1, iq + ip]
    (1-based indices)."""

    n: int
    alpha: float
    beta: float
    q: int
    p: int
    k: int

    @property
    def half_window(self) -> int:
        return self.q // 2

    def block_range(self, i: int):
        """1-based inclusive index range of block i (i = 1..k)."""
        lo = i * self.q + (i - 1) * self.p + 1
        return lo, lo + self.p - 1

    def in_block_indices(self) -> np.ndarray:
        """All 1-based in-block indices, grouped block by block."""
        return np.concatenate([np.arange(lo, hi + 1)
                               for lo, hi in (self.block_range(i)
                                              for i in range(1, self.k + 1))])


def make_schedule(n: int, alpha: float = DEFAULT_ALPHA,
                  beta: float = DEFAULT_BETA) -> BlockSchedule:
    if not 0 < beta < alpha < 1 / 3:
        raise ValueError("need 0 < beta < alpha < 1/3")
    q = int(np.floor(n ** beta))
    p = int(np.floor(n ** alpha))
    k = int(np.floor(n / (p + q))) if p + q > 0 else 0
    if k < 1 or q < 2:
        raise TooShort(f"n={n} gives q={q}, k={k}; need q >= 2 and k >= 1")
    return BlockSchedule(n=n, alpha=alpha, beta=beta, q=q, p=p, k=k)


@dataclass(frozen=True)
class GradientEstimate:
    g: np.ndarray
    s_y: np.ndarray
    s_xy: np.ndarray
    h_prime: np.ndarray
    per_block_zeta_y: np.ndarray     # (k, d)
    per_block_zeta_xy: np.ndarray
    n_used: int
    schedule: BlockSchedule = field(repr=False, default=None)


def compute_W(view: HmmView, path_z, j: int, q: int) -> np.ndarray:
    """W_j for the window [j - floor(q/2), j] (1-based j), one value per
    theta coordinate.  The bracketed derivative sum is the accumulated
    d ln p over a fresh forward pass on the window."""
    w = q // 2
    if j - w < 1 or j > len(path_z):
        raise IndexError(f"window [{j - w}, {j}] out of range for n={len(path_z)}")
    state = initial_state(view)
    dlogsum = np.zeros(view.num_params)
    c = 1.0
    for t in range(j - w - 1, j):
        state, c, dc = forward_step(state, view, int(path_z[t]))
        dlogsum += dc / c
    return -dlogsum * np.log2(c)


def compute_S(view: HmmView, path_z, schedule: BlockSchedule):
    """Block sum S_n and the per-block zeta diagnostics (k, d).

    All windows share one length, so the forward passes run batched.
    """
    path_z = np.asarray(path_z, dtype=np.int64)
    if len(path_z) < schedule.block_range(schedule.k)[1]:
        raise TooShort("path shorter than the schedule's last block")
    w = schedule.half_window
    js = schedule.in_block_indices()
    offsets = np.arange(-w, 1)
    windows = path_z[(js[:, None] - 1) + offsets[None, :]]
    c, _, dlogsum = batch_forward(view, windows)
    W = -dlogsum * np.log2(c)[:, None]          # (k*p, d)
    zeta = W.reshape(schedule.k, schedule.p, -1).sum(axis=1)
    return zeta.sum(axis=0), zeta


def estimate_gradient(params: MarkovParams, F: ForbiddenPairSet,
                      channel: ChannelSpec, n: int,
                      rng=None, seed: int = 0, stream_ids: tuple = (),
                      alpha: float = DEFAULT_ALPHA,
                      beta: float = DEFAULT_BETA) -> GradientEstimate:
    """One-path simulator draw of the mutual-information-rate gradient."""
    schedule = make_schedule(n, alpha, beta)
    tm = build_transition(params, F)
    dP = transition_derivatives(params.theta, F)
    if rng is None:
        rng = stream_rng(seed, *stream_ids)
    path = sample_path(tm, channel, n, rng, seed_id=(seed, *stream_ids))
    vy = view_Y(tm, dP, channel)
    vxy = view_XY(tm, dP, channel)
    z_xy = encode_xy(path.x, path.y, channel.num_outputs)
    s_y, zeta_y = compute_S(vy, path.y, schedule)
    s_xy, zeta_xy = compute_S(vxy, z_xy, schedule)
    h_prime = markov_entropy_gradient(params, F)
    kp = schedule.k * schedule.p
    g = h_prime + s_y / kp - s_xy / kp
    return GradientEstimate(g=g, s_y=s_y, s_xy=s_xy, h_prime=h_prime,
                            per_block_zeta_y=zeta_y, per_block_zeta_xy=zeta_xy,
                            n_used=n, schedule=schedule)


def replicate_gradient(params, F, channel, n, replicas: int, seed: int = 0,
                       alpha: float = DEFAULT_ALPHA, beta: float = DEFAULT_BETA):
    """Independent replicas of estimate_gradient; returns (g_matrix, estimates)
    with g_matrix of shape (replicas, d)."""
    ests = [estimate_gradient(params, F, channel, n, seed=seed, stream_ids=(r,),
                              alpha=alpha, beta=beta)
            for r in range(replicas)]
    return np.array([e.g for e in ests]), ests


def variance_diagnostics(s_values: np.ndarray, schedule: BlockSchedule) -> dict:
    """Empirical variance of S_n across replicas and its ratio to k p q^3.

    s_values: (replicas, d) array of S_n draws.
    """
    s_values = np.atleast_2d(np.asarray(s_values, dtype=float))
    if s_values.shape[0] < 2:
        raise ValueError("need at least 2 replicas for a variance estimate")
    var_s = s_values.var(axis=0, ddof=1)
    norm = schedule.k * schedule.p * schedule.q ** 3
    return {"var_S": var_s, "ratio": var_s / norm}
