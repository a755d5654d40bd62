"""Constrained Markov chains: parameter space, transition matrices,
stationary laws, and the exact entropy rate with its gradient.

Parameterization: for each state, the first m-1 allowed transition
probabilities are free coordinates and the last allowed entry is the
remainder, so the parameter space is a product of epsilon-shrunk
simplices.  All entropies are in bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constraints import ForbiddenPairSet, matrix_period, _strongly_connected
from .errors import (DimensionMismatch, InfeasibleParams, NonStochastic,
                     NotIrreducible, SingularSystem)

DEFAULT_EPS_FLOOR = 1e-3

LOG2 = np.log(2.0)


@dataclass(frozen=True)
class MarkovParams:
    theta: np.ndarray
    epsilon_floor: float = DEFAULT_EPS_FLOOR

    def __post_init__(self):
        object.__setattr__(self, "theta", np.atleast_1d(np.asarray(self.theta, dtype=float)))
        if self.epsilon_floor <= 0:
            raise ValueError("epsilon_floor must be positive")


@dataclass(frozen=True)
class TransitionMatrix:
    entries: np.ndarray
    stationary: np.ndarray = field(default=None)

    def __post_init__(self):
        P = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", P)
        if np.any(P < 0) or np.max(np.abs(P.sum(axis=1) - 1.0)) > 1e-12:
            raise NonStochastic("rows must be nonnegative and sum to 1")
        mu = self.stationary
        if mu is None:
            mu = stationary_distribution(P)
        mu = np.asarray(mu, dtype=float)
        if abs(mu.sum() - 1.0) > 1e-12 or np.any(mu < -1e-15):
            raise NonStochastic("stationary vector must be a distribution")
        if np.max(np.abs(mu @ P - mu)) > 1e-10:
            raise NonStochastic("mu is not stationary for P")
        object.__setattr__(self, "stationary", mu)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def _row_structure(F: ForbiddenPairSet):
    """Allowed targets per row and the flat coordinate layout.

    Returns (targets, coord_map) where targets[i] is the sorted list of
    allowed j for row i and coord_map is a list of (row, target, last_target)
    per free coordinate.
    """
    adj = F.adjacency()
    targets = [list(np.nonzero(adj[i])[0]) for i in range(F.alphabet_size)]
    coord_map = []
    for i, tgts in enumerate(targets):
        for j in tgts[:-1]:
            coord_map.append((i, j, tgts[-1]))
    return targets, coord_map


def build_matrix(theta, F: ForbiddenPairSet, epsilon_floor=DEFAULT_EPS_FLOOR) -> np.ndarray:
    """Raw matrix for theta; raises InfeasibleParams below the epsilon floor."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    targets, coord_map = _row_structure(F)
    if len(theta) != len(coord_map):
        raise DimensionMismatch(
            f"theta has {len(theta)} coordinates, constraint needs {len(coord_map)}")
    k = F.alphabet_size
    P = np.zeros((k, k))
    pos = 0
    for i, tgts in enumerate(targets):
        if not tgts:
            raise NotIrreducible(f"row {i} has no allowed transitions")
        m = len(tgts)
        if m == 1:
            P[i, tgts[0]] = 1.0
            continue
        vals = theta[pos:pos + m - 1]
        pos += m - 1
        rest = 1.0 - vals.sum()
        row_vals = np.append(vals, rest)
        floor = epsilon_floor if m > 1 else 0.0
        if np.any(row_vals < floor) or np.any(row_vals > 1.0):
            raise InfeasibleParams(
                f"row {i} entries {row_vals} violate the [{floor}, 1] box")
        P[i, tgts] = row_vals
    return P


def build_transition(params: MarkovParams, F: ForbiddenPairSet) -> TransitionMatrix:
    if not F.is_irreducible():
        raise NotIrreducible("constraint graph is not strongly connected")
    P = build_matrix(params.theta, F, params.epsilon_floor)
    return TransitionMatrix(P)


def transition_derivatives(theta, F: ForbiddenPairSet) -> np.ndarray:
    """dP/dtheta_m as a (d, k, k) array; each slice has zero row sums."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    _, coord_map = _row_structure(F)
    if len(theta) != len(coord_map):
        raise DimensionMismatch(
            f"theta has {len(theta)} coordinates, constraint needs {len(coord_map)}")
    k = F.alphabet_size
    d = len(coord_map)
    dP = np.zeros((d, k, k))
    for m, (i, j, j_last) in enumerate(coord_map):
        dP[m, i, j] = 1.0
        dP[m, i, j_last] = -1.0
    return dP


def feasible(theta, F: ForbiddenPairSet, epsilon_floor=DEFAULT_EPS_FLOOR) -> bool:
    """True iff build_transition would succeed for these coordinates."""
    try:
        build_matrix(theta, F, epsilon_floor)
    except (InfeasibleParams, DimensionMismatch, NotIrreducible):
        return False
    return True


def theta_from_matrix(P, F: ForbiddenPairSet) -> np.ndarray:
    """Extract the free coordinates of a matrix supported on F's graph."""
    P = np.asarray(P, dtype=float)
    targets, coord_map = _row_structure(F)
    return np.array([P[i, j] for (i, j, _) in coord_map])


def stationary_distribution(P) -> np.ndarray:
    """Unique stationary law of an irreducible row-stochastic matrix.

    Direct linear solve of (P^T - I) mu = 0 with one equation replaced by
    the normalization sum(mu) = 1.
    """
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise NonStochastic("P must be square")
    if np.any(P < 0) or np.max(np.abs(P.sum(axis=1) - 1.0)) > 1e-10:
        raise NonStochastic("P must be row-stochastic")
    if not _strongly_connected((P > 0).astype(int)):
        raise NotIrreducible("P is not irreducible")
    n = P.shape[0]
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        mu = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("stationary solve failed for irreducible P") from exc
    mu = np.clip(mu, 0.0, None)
    return mu / mu.sum()


def stationary_derivative(P, dP, mu=None) -> np.ndarray:
    """d mu / d theta from mu'(I - P) = mu P' with sum(mu') = 0.

    dP has shape (d, k, k); returns (d, k).
    """
    P = np.asarray(P, dtype=float)
    dP = np.asarray(dP, dtype=float)
    if mu is None:
        mu = stationary_distribution(P)
    n = P.shape[0]
    A = (np.eye(n) - P).T
    A[-1, :] = 1.0
    rhs = np.einsum("i,mij->mj", mu, dP)
    rhs[:, -1] = 0.0  # normalization row: sum of mu' is zero
    try:
        return np.linalg.solve(A, rhs.T).T
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("stationary sensitivity solve failed") from exc


def markov_entropy_rate(tm: TransitionMatrix) -> float:
    """H(X) = -sum_i mu_i sum_j P_ij log2 P_ij, with 0 log 0 = 0."""
    P = tm.entries
    mu = tm.stationary
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(P > 0, P * np.log2(np.where(P > 0, P, 1.0)), 0.0)
    return float(-mu @ plogp.sum(axis=1))


def markov_entropy_gradient(params: MarkovParams, F: ForbiddenPairSet) -> np.ndarray:
    """Exact gradient of the Markov entropy rate in bits per unit theta."""
    tm = build_transition(params, F)
    P, mu = tm.entries, tm.stationary
    dP = transition_derivatives(params.theta, F)
    dmu = stationary_derivative(P, dP, mu)
    with np.errstate(divide="ignore"):
        logP = np.where(P > 0, np.log2(np.where(P > 0, P, 1.0)), 0.0)
    row_plogp = (P * logP).sum(axis=1)
    # d/dtheta of -sum mu_i P_ij log2 P_ij; the sum_j dP_ij / ln 2 terms
    # cancel because each dP slice has zero row sums
    grad = -(dmu @ row_plogp) - np.einsum("mij,i,ij->m", dP, mu, logP)
    return grad
