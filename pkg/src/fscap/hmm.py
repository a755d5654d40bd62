"""Forward recursions for hidden-Markov conditionals and their
theta-derivatives.

Two canonical views share one code path: the output process Y (hidden
state (x, s), observation y) and the joint process (X, Y) (same hidden
chain, observation (x, y) with the x-coordinate emitted deterministically).
Forward vectors are renormalized every step; derivatives are carried as
derivatives of the normalized predictive law, which keeps d log p stable
over long windows.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelSpec, joint_chain_matrix
from .errors import ZeroLikelihood
from .markov import (LOG2, TransitionMatrix, stationary_derivative,
                     stationary_distribution)

UNDERFLOW_FLOOR = 1e-300


@dataclass(frozen=True)
class HmmView:
    """Hidden chain T, observation kernel O[h, z], derivative kernels dT,
    and the stationary initial law with its derivative."""

    T: np.ndarray
    O: np.ndarray
    dT: np.ndarray          # (d, H, H), zero row sums
    init: np.ndarray        # stationary law of T
    dinit: np.ndarray       # (d, H)

    def __post_init__(self):
        if np.max(np.abs(self.T.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("T rows must sum to 1")
        if np.max(np.abs(self.O.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("O rows must sum to 1")
        if self.dT.size and np.max(np.abs(self.dT.sum(axis=2))) > 1e-10:
            raise ValueError("dT rows must sum to 0")

    @property
    def num_hidden(self) -> int:
        return self.T.shape[0]

    @property
    def num_obs(self) -> int:
        return self.O.shape[1]

    @property
    def num_params(self) -> int:
        return self.dT.shape[0]


def _hidden_chain(tm: TransitionMatrix, dP: np.ndarray, channel: ChannelSpec):
    T = joint_chain_matrix(tm.entries, channel)
    ns = channel.num_states
    K = channel.state_kernel
    dT = np.einsum("mxz,zst->mxszt", dP, K).reshape(dP.shape[0], T.shape[0], T.shape[0])
    init = stationary_distribution(T)
    dinit = stationary_derivative(T, dT, init) if dP.shape[0] else np.zeros((0, T.shape[0]))
    return T, dT, init, dinit


def view_Y(tm: TransitionMatrix, dP: np.ndarray, channel: ChannelSpec) -> HmmView:
    """Observation process Y over hidden alphabet X x S."""
    T, dT, init, dinit = _hidden_chain(tm, dP, channel)
    nx, ns, ny = channel.num_inputs, channel.num_states, channel.num_outputs
    O = channel.emission_kernel.reshape(nx * ns, ny)
    return HmmView(T, O, dT, init, dinit)


def view_XY(tm: TransitionMatrix, dP: np.ndarray, channel: ChannelSpec) -> HmmView:
    """Observation process (X, Y), z = x * |Y| + y, over hidden alphabet X x S."""
    T, dT, init, dinit = _hidden_chain(tm, dP, channel)
    nx, ns, ny = channel.num_inputs, channel.num_states, channel.num_outputs
    O = np.zeros((nx * ns, nx * ny))
    for x in range(nx):
        for s in range(ns):
            O[x * ns + s, x * ny:(x + 1) * ny] = channel.emission_kernel[x, s]
    return HmmView(T, O, dT, init, dinit)


def encode_xy(x: np.ndarray, y: np.ndarray, num_outputs: int) -> np.ndarray:
    return np.asarray(x) * num_outputs + np.asarray(y)


@dataclass(frozen=True)
class ForwardState:
    """Predictive law p(h_t | z-history) with derivatives and accumulated
    log2-likelihood."""

    pi: np.ndarray
    dpi: np.ndarray          # (d, H), derivative of the normalized pi
    logp_acc: float = 0.0    # log2 p(z-history)
    dlogp_acc: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.dlogp_acc is None:
            object.__setattr__(self, "dlogp_acc", np.zeros(self.dpi.shape[0]))


def initial_state(view: HmmView) -> ForwardState:
    return ForwardState(view.init.copy(), view.dinit.copy())


def forward_step(state: ForwardState, view: HmmView, z: int):
    """Advance one symbol; returns (new_state, c, dc) with
    c = p(z | history) and dc its theta-gradient."""
    o = view.O[:, z]
    beta = state.pi * o
    c = float(beta.sum())
    if c <= UNDERFLOW_FLOOR:
        raise ZeroLikelihood(f"symbol {z} has conditional probability <= floor")
    dbeta = state.dpi * o
    dc = dbeta.sum(axis=1)
    phi = beta / c
    dphi = dbeta / c - np.outer(dc / c, phi)
    pi_next = phi @ view.T
    dpi_next = dphi @ view.T + np.einsum("h,mhk->mk", phi, view.dT)
    new = ForwardState(pi_next, dpi_next,
                       state.logp_acc + float(np.log2(c)),
                       state.dlogp_acc + dc / (c * LOG2))
    return new, c, dc


def windowed_conditional(view: HmmView, z_window):
    """p(z_last | preceding window symbols) from a stationary start,
    with its theta-gradient.  A length-1 window gives the stationary
    marginal and its derivative."""
    state = initial_state(view)
    c, dc = 1.0, np.zeros(view.num_params)
    for z in z_window:
        state, c, dc = forward_step(state, view, int(z))
    return c, dc


def log_likelihood(view: HmmView, z_path) -> ForwardState:
    state = initial_state(view)
    for z in z_path:
        state, _, _ = forward_step(state, view, int(z))
    return state


def sample_entropy(view: HmmView, z_path) -> float:
    """-log2 p(z_1^n) / n via a full forward pass."""
    n = len(z_path)
    if n < 1:
        raise ValueError("need n >= 1")
    state = log_likelihood(view, z_path)
    return -state.logp_acc / n


def batch_forward(view: HmmView, windows: np.ndarray):
    """Forward pass over many equal-length windows at once.

    windows: (m, L) int array.  Returns (c, dc, dlogsum) where c is the
    (m,) conditional of the last symbol, dc its (m, d) gradient and
    dlogsum the (m, d) accumulated d ln p over the whole window.
    """
    windows = np.asarray(windows, dtype=np.int64)
    m, L = windows.shape
    d = view.num_params
    pi = np.tile(view.init, (m, 1))
    dpi = np.tile(view.dinit, (m, 1, 1))        # (m, d, H)
    dlogsum = np.zeros((m, d))
    c = np.ones(m)
    dc = np.zeros((m, d))
    for t in range(L):
        o = view.O[:, windows[:, t]].T          # (m, H)
        beta = pi * o
        c = beta.sum(axis=1)
        if np.any(c <= UNDERFLOW_FLOOR):
            raise ZeroLikelihood("window with conditional probability <= floor")
        dbeta = dpi * o[:, None, :]
        dc = dbeta.sum(axis=2)                  # (m, d)
        ratio = dc / c[:, None]
        dlogsum += ratio
        phi = beta / c[:, None]
        dphi = dbeta / c[:, None, None] - ratio[:, :, None] * phi[:, None, :]
        pi = phi @ view.T
        dpi = dphi @ view.T + np.einsum("mh,dhk->mdk", phi, view.dT)
    return c, dc, dlogsum
