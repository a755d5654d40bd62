"""Finite-state channels and sampling of joint (x, s, y) paths.

A channel is given by a state kernel p(s_n | x_n, s_{n-1}) (strictly
positive) and an emission kernel p(y_n | x_n, s_n).  Memoryless families
(BSC, BEC) are epsilon-parameterized and lift to one-state channels.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateKernel, OutOfRange, ParseError
from .markov import TransitionMatrix


@dataclass(frozen=True)
class ChannelSpec:
    """state_kernel[x, s_prev, s_new] and emission_kernel[x, s, y]."""

    state_kernel: np.ndarray
    emission_kernel: np.ndarray

    def __post_init__(self):
        K = np.asarray(self.state_kernel, dtype=float)
        E = np.asarray(self.emission_kernel, dtype=float)
        object.__setattr__(self, "state_kernel", K)
        object.__setattr__(self, "emission_kernel", E)
        if K.ndim != 3 or K.shape[1] != K.shape[2]:
            raise ValueError("state_kernel must have shape (|X|, |S|, |S|)")
        if E.ndim != 3 or E.shape[0] != K.shape[0] or E.shape[1] != K.shape[1]:
            raise ValueError("emission_kernel must have shape (|X|, |S|, |Y|)")
        if np.any(K <= 0):
            raise ValueError("state kernel must be strictly positive")
        if np.max(np.abs(K.sum(axis=2) - 1.0)) > 1e-12:
            raise ValueError("state kernel rows must sum to 1")
        if np.any(E < 0) or np.max(np.abs(E.sum(axis=2) - 1.0)) > 1e-12:
            raise ValueError("emission kernel rows must sum to 1")

    @property
    def num_inputs(self) -> int:
        return self.state_kernel.shape[0]

    @property
    def num_states(self) -> int:
        return self.state_kernel.shape[1]

    @property
    def num_outputs(self) -> int:
        return self.emission_kernel.shape[2]


@dataclass(frozen=True)
class NoisyMemorylessFamily:
    """Analytic family eps -> p(y|x) with a noiseless embedding phi."""

    name: str
    num_inputs: int
    num_outputs: int
    kernel_fn: Callable[[float], np.ndarray]
    phi: tuple
    eps_max: float

    def kernel(self, eps: float) -> np.ndarray:
        if not 0.0 <= eps <= self.eps_max:
            raise OutOfRange(f"{self.name} requires 0 <= eps <= {self.eps_max}")
        return self.kernel_fn(eps)


def bsc_family(eps: float = None) -> NoisyMemorylessFamily:
    """Binary symmetric channel with crossover probability eps."""
    fam = NoisyMemorylessFamily(
        name="bsc", num_inputs=2, num_outputs=2,
        kernel_fn=lambda e: np.array([[1 - e, e], [e, 1 - e]]),
        phi=(0, 1), eps_max=0.5)
    if eps is not None:
        fam.kernel(eps)  # range check on construction
    return fam


def bec_family(eps: float = None) -> NoisyMemorylessFamily:
    """Binary erasure channel; output alphabet {0, 1, e} with e encoded as 2."""
    fam = NoisyMemorylessFamily(
        name="bec", num_inputs=2, num_outputs=3,
        kernel_fn=lambda e: np.array([[1 - e, 0.0, e], [0.0, 1 - e, e]]),
        phi=(0, 1), eps_max=1.0)
    if eps is not None:
        fam.kernel(eps)
    return fam


def lift_memoryless(family: NoisyMemorylessFamily, eps: float,
                    allow_degenerate: bool = False) -> ChannelSpec:
    """One-state ChannelSpec for the family at eps.

    Deterministic emission rows (a probability-1 output per input) break
    the positivity the Monte Carlo simulator relies on; those are rejected
    unless allow_degenerate is set (the exact oracles handle them).
    """
    kernel = family.kernel(eps)
    if not allow_degenerate and np.any(kernel.max(axis=1) >= 1.0):
        raise DegenerateKernel(
            f"{family.name}(eps={eps}) has a deterministic emission row; "
            "only the exact oracles accept noiseless kernels")
    nx, ny = kernel.shape
    state_kernel = np.ones((nx, 1, 1))
    emission = kernel.reshape(nx, 1, ny)
    return ChannelSpec(state_kernel, emission)


@dataclass(frozen=True)
class SamplePath:
    x: np.ndarray
    s: np.ndarray
    y: np.ndarray
    seed_id: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not (len(self.x) == len(self.s) == len(self.y)):
            raise ValueError("x, s, y must have equal length")


def stream_rng(seed: int, *ids) -> np.random.Generator:
    """Independent, reproducible stream for a (seed, *ids) tuple."""
    return np.random.default_rng([int(seed) & 0xFFFFFFFF, *[int(i) & 0xFFFFFFFF for i in ids]])


def joint_chain_matrix(P: np.ndarray, channel: ChannelSpec) -> np.ndarray:
    """Transition matrix of the joint chain (x, s), index h = x * |S| + s."""
    ns = channel.num_states
    nx = P.shape[0]
    K = channel.state_kernel
    # T[(x,s), (x',s')] = P[x,x'] K[x', s, s']
    T = np.einsum("xz,zst->xszt", P, K).reshape(nx * ns, nx * ns)
    return T

def burn_in_length(P: np.ndarray, channel: ChannelSpec) -> int:
    """ceil(50 log|S| / log(1/lambda2)) capped at 200; 0 for one-state channels."""
    ns = channel.num_states
    if ns == 1:
        return 0
    T = joint_chain_matrix(P, channel)
    ev = np.sort(np.abs(np.linalg.eigvals(T)))[::-1]
    lam2 = float(ev[1]) if len(ev) > 1 else 0.0
    if lam2 <= 1e-12:
        return 1
    if lam2 >= 1.0 - 1e-12:
        return 200
    return min(200, int(np.ceil(50.0 * np.log(ns) / np.log(1.0 / lam2))))


def _cdf_rows(M: np.ndarray) -> list:
    return [np.cumsum(row).tolist() for row in M]


def sample_path(tm: TransitionMatrix, channel: ChannelSpec, n: int,
                rng: np.random.Generator, seed_id: tuple = ()) -> SamplePath:
    """Sample x, s, y of length n from the stationary input chain.

    x_1 ~ mu, s_0 uniform over S; a burn-in prefix approximating the
    stationary joint law is discarded before recording.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    P = tm.entries
    mu = tm.stationary
    ns = channel.num_states
    burn = burn_in_length(P, channel)
    total = n + burn

    p_cdf = _cdf_rows(P)
    mu_cdf = np.cumsum(mu).tolist()
    k_cdf = [_cdf_rows(channel.state_kernel[x]) for x in range(P.shape[0])]
    e_cdf = [_cdf_rows(channel.emission_kernel[x]) for x in range(P.shape[0])]

    u = rng.random((total, 3))
    xs = np.empty(total, dtype=np.int64)
    ss = np.empty(total, dtype=np.int64)
    ys = np.empty(total, dtype=np.int64)

    x = bisect_right(mu_cdf, u[0, 0])
    s_prev = int(rng.integers(ns))
    for t in range(total):
        if t > 0:
            x = bisect_right(p_cdf[x], u[t, 0])
        s = bisect_right(k_cdf[x][s_prev], u[t, 1])
        y = bisect_right(e_cdf[x][s], u[t, 2])
        xs[t] = x
        ss[t] = s
        ys[t] = y
        s_prev = s
    return SamplePath(xs[burn:], ss[burn:], ys[burn:], seed_id=seed_id)


def load_channel(path) -> ChannelSpec:
    """Read a channel file: alphabet sizes plus flattened row-major kernels."""
    values = {}
    with open(path) as fh:
        for ln in fh:
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            parts = ln.split()
            values[parts[0]] = parts[1:]
    try:
        nx, ns, ny = (int(values[k][0]) for k in ("x", "s", "y"))
        K = np.array(values["state_kernel"], dtype=float).reshape(nx, ns, ns)
        E = np.array(values["emission_kernel"], dtype=float).reshape(nx, ns, ny)
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad channel file {path}: {exc}") from exc
    return ChannelSpec(K, E)


def save_channel(ch: ChannelSpec, path):
    with open(path, "w") as fh:
        fh.write(f"x {ch.num_inputs}\ns {ch.num_states}\ny {ch.num_outputs}\n")
        fh.write("state_kernel " + " ".join(repr(float(v)) for v in ch.state_kernel.ravel()) + "\n")
        fh.write("emission_kernel " + " ".join(repr(float(v)) for v in ch.emission_kernel.ravel()) + "\n")
