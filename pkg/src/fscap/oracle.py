"""Exact desk-scale ground truths: block mutual information by
enumeration, conditional-entropy sandwiches, finite-difference gradients,
the max-entropy (Parry) chain of a constraint graph, and two asymptotic
experiments on the memoryless channel class.

Enumeration runs the forward algorithm once per output prefix, expanding
level by level with pruning of zero-probability prefixes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSpec, joint_chain_matrix
from .constraints import ForbiddenPairSet, matrix_period
from .errors import NotMixing, NotPeriodic, TooLarge
from .hmm import view_XY, view_Y
from .markov import (MarkovParams, TransitionMatrix, build_transition,
                     markov_entropy_rate, stationary_distribution,
                     theta_from_matrix, transition_derivatives)

_PRUNE = 1e-300
_MAX_TERMS = 1e8


@dataclass(frozen=True)
class ExactResult:
    value: float
    n: int
    method: str
    error_bound: float = None


def _no_deriv(tm: TransitionMatrix) -> np.ndarray:
    k = tm.size
    return np.zeros((0, k, k))


def _entropy_profile(T: np.ndarray, O: np.ndarray, pi1: np.ndarray, n: int) -> np.ndarray:
    """H(Z_1^t) for t = 1..n by exhaustive prefix enumeration.

    pi1 is the predictive law of the first hidden state.
    """
    probs = np.array([1.0])
    A = pi1[None, :]
    out = np.empty(n)
    for t in range(n):
        beta = A[:, None, :] * O.T[None, :, :]       # (m, Z, H)
        c = beta.sum(axis=2)                         # (m, Z)
        new_probs = (probs[:, None] * c).ravel()
        keep = new_probs > _PRUNE
        new_probs = new_probs[keep]
        out[t] = float(-(new_probs * np.log2(new_probs)).sum())
        if t == n - 1:
            break
        phi = beta / np.maximum(c, _PRUNE)[:, :, None]
        A = (phi.reshape(-1, T.shape[0])[keep]) @ T
        probs = new_probs
    return out


def _y_profile(tm: TransitionMatrix, channel: ChannelSpec, n: int,
               cond_h0: int = None) -> np.ndarray:
    """H(Y_1^t) profile, optionally conditioned on the time-0 joint state."""
    view = view_Y(tm, _no_deriv(tm), channel)
    if cond_h0 is None:
        pi1 = view.init
    else:
        pi1 = view.T[cond_h0]
    return _entropy_profile(view.T, view.O, pi1, n)


def _check_size(tm: TransitionMatrix, channel: ChannelSpec, n: int):
    terms = (tm.size * channel.num_outputs) ** n
    if terms > _MAX_TERMS:
        raise TooLarge(f"({tm.size} * {channel.num_outputs})^{n} joint terms exceed the guard")


def block_entropy_x(tm: TransitionMatrix, n: int) -> float:
    """H(X_1^n) of the stationary chain: H(mu) + (n-1) H(X2|X1)."""
    mu = tm.stationary
    h_mu = float(-(mu[mu > 0] * np.log2(mu[mu > 0])).sum())
    return h_mu + (n - 1) * markov_entropy_rate(tm)


def exact_In(tm: TransitionMatrix, channel: ChannelSpec, n: int) -> ExactResult:
    """Block mutual information (H(X_1^n) + H(Y_1^n) - H(X_1^n, Y_1^n)) / n."""
    _check_size(tm, channel, n)
    hx = block_entropy_x(tm, n)
    hy = _y_profile(tm, channel, n)[-1]
    if channel.num_states == 1:
        # outputs are conditionally independent given the inputs
        E = channel.emission_kernel[:, 0, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            row_h = -np.where(E > 0, E * np.log2(np.where(E > 0, E, 1.0)), 0.0).sum(axis=1)
        hxy = hx + n * float(tm.stationary @ row_h)
    else:
        view = view_XY(tm, _no_deriv(tm), channel)
        hxy = _entropy_profile(view.T, view.O, view.init, n)[-1]
    return ExactResult(value=float((hx + hy - hxy) / n), n=n, method="enumeration")


def fd_gradient(theta, F: ForbiddenPairSet, channel: ChannelSpec, n: int,
                h: float = 1e-4, epsilon_floor: float = 1e-6) -> np.ndarray:
    """Central finite differences of exact_In over the theta coordinates."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    grad = np.empty(len(theta))
    for m in range(len(theta)):
        vals = []
        for sign in (+1.0, -1.0):
            t = theta.copy()
            t[m] += sign * h
            tm = build_transition(MarkovParams(t, epsilon_floor), F)
            vals.append(exact_In(tm, channel, n).value)
        grad[m] = (vals[0] - vals[1]) / (2 * h)
    return grad


def birch_profile(tm: TransitionMatrix, channel: ChannelSpec, n_max: int):
    """Conditional-entropy sandwich for t = 1..n_max.

    upper[t] = H(Y_t | Y_1^{t-1}) decreases to the entropy rate;
    lower[t] = H(Y_t | Y_1^{t-1}, X_0, S_0) increases to it.
    """
    _check_size(tm, channel, n_max)
    hy = _y_profile(tm, channel, n_max)
    upper = np.diff(np.concatenate([[0.0], hy]))
    T = joint_chain_matrix(tm.entries, channel)
    mu_h = stationary_distribution(T)
    lower_cum = np.zeros(n_max)
    for h0 in np.nonzero(mu_h > 1e-15)[0]:
        lower_cum += mu_h[h0] * _y_profile(tm, channel, n_max, cond_h0=int(h0))
    lower = np.diff(np.concatenate([[0.0], lower_cum]))
    return lower, upper


def birch_bounds(tm: TransitionMatrix, channel: ChannelSpec, n: int):
    """(lower, upper) entropy-rate bounds at block length n."""
    lower, upper = birch_profile(tm, channel, n)
    return float(lower[-1]), float(upper[-1])


def parry_optimum(F: ForbiddenPairSet):
    """Max-entropy chain on the constraint graph.

    Returns (theta_star, capacity0) with capacity0 = log2 of the Perron
    eigenvalue; the matrix is A_ij v_j / (lambda v_i) for the Perron
    eigenvector v.
    """
    if not F.is_irreducible():
        raise NotMixing("constraint graph is not strongly connected")
    if not F.is_primitive():
        raise NotMixing("constraint graph is not aperiodic")
    adj = F.adjacency().astype(float)
    eigvals, eigvecs = np.linalg.eig(adj)
    idx = int(np.argmax(eigvals.real))
    lam = float(eigvals[idx].real)
    v = np.abs(eigvecs[:, idx].real)
    P = adj * v[None, :] / (lam * v[:, None])
    P = P / P.sum(axis=1, keepdims=True)
    return theta_from_matrix(P, F), float(np.log2(lam))


def _entropy_rate_midpoint(tm, channel, n):
    lo, hi = birch_bounds(tm, channel, n)
    return 0.5 * (lo + hi)


def asymptotic_coefficient_experiment(pi: float, eps_grid, n: int = 12,
                                      family=None) -> dict:
    """Fit the eps*log2(1/eps) coefficient of H(Y) - H(X) for the no-11
    constrained symmetric channel and compare to pi(2 - pi)/(1 + pi).

    Uses the sandwich midpoint at block length n as the H(Y) value and a
    two-basis least-squares fit (eps log2(1/eps) and eps) over the grid.
    """
    from .channel import bsc_family, lift_memoryless
    from .constraints import rll_forbidden_pairs

    if family is None:
        family = bsc_family()
    F = rll_forbidden_pairs(1, None)
    tm = build_transition(MarkovParams(np.array([1.0 - pi]), 1e-9), F)
    hx = markov_entropy_rate(tm)
    eps_grid = np.asarray(eps_grid, dtype=float)
    dh = np.empty(len(eps_grid))
    for i, eps in enumerate(eps_grid):
        ch = lift_memoryless(family, float(eps), allow_degenerate=True)
        dh[i] = _entropy_rate_midpoint(tm, ch, n) - hx
    basis = np.column_stack([eps_grid * np.log2(1.0 / eps_grid), eps_grid])
    coef, *_ = np.linalg.lstsq(basis, dh, rcond=None)
    target = pi * (2.0 - pi) / (1.0 + pi)
    return {"fitted": float(coef[0]), "linear_term": float(coef[1]),
            "target": target, "eps": eps_grid, "delta_h": dh,
            "rel_error": abs(coef[0] - target) / target}


def perturbation_experiment(P, delta_grid, channel: ChannelSpec,
                            n: int = 12) -> dict:
    """Entropy gain of a periodic chain under the linear perturbation
    (1 - delta) P + delta I, which moves mass onto non-period-class
    entries.  Checks positivity of the gain and fits the log-log slope.
    """
    P = np.asarray(P, dtype=float)
    e, _ = matrix_period(P)
    if e < 2:
        raise NotPeriodic("base chain must have period >= 2")
    Q = np.eye(P.shape[0])
    delta_grid = np.asarray(delta_grid, dtype=float)
    h0 = _entropy_rate_midpoint(TransitionMatrix(P), channel, n)
    gains = np.empty(len(delta_grid))
    for i, delta in enumerate(delta_grid):
        Pd = (1.0 - delta) * P + delta * Q
        gains[i] = _entropy_rate_midpoint(TransitionMatrix(Pd), channel, n) - h0
    positive = bool(np.all(gains > 0))
    if positive:
        slope, _ = np.polyfit(np.log(delta_grid), np.log(gains), 1)
    else:
        slope = float("nan")
    return {"delta": delta_grid, "gain": gains, "base_entropy": h0,
            "all_positive": positive, "slope": float(slope)}
