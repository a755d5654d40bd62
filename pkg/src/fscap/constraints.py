"""Finite-type constraints given by forbidden symbol pairs.

A constraint is a set of forbidden ordered pairs over a finite alphabet.
The allowed-transition digraph must be strongly connected; it is "mixing"
when it is additionally aperiodic (primitive adjacency matrix).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotIrreducible, ParseError


@dataclass(frozen=True)
class ForbiddenPairSet:
    """Forbidden ordered pairs (i, j) over the alphabet {0, ..., k-1}."""

    alphabet_size: int
    forbidden: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.alphabet_size < 1:
            raise ValueError("alphabet_size must be positive")
        object.__setattr__(self, "forbidden", frozenset(self.forbidden))
        for (i, j) in self.forbidden:
            if not (0 <= i < self.alphabet_size and 0 <= j < self.alphabet_size):
                raise ValueError(f"pair ({i}, {j}) outside alphabet")

    def adjacency(self) -> np.ndarray:
        """0/1 matrix of allowed transitions."""
        k = self.alphabet_size
        adj = np.ones((k, k), dtype=int)
        for (i, j) in self.forbidden:
            adj[i, j] = 0
        return adj

    def allowed_pairs(self) -> list:
        """Allowed (i, j) pairs in row-major order."""
        adj = self.adjacency()
        return [(i, j) for i in range(self.alphabet_size)
                for j in range(self.alphabet_size) if adj[i, j]]

    def is_irreducible(self) -> bool:
        return _strongly_connected(self.adjacency())

    def is_primitive(self) -> bool:
        e, _ = self.period()
        return e == 1

    def period(self):
        """Period e (gcd of cycle lengths) and the partition into period classes."""
        return graph_period(self.adjacency())

    def num_free_params(self) -> int:
        """Free coordinates of the row parameterization.

        Each row with m >= 2 allowed targets contributes m - 1 coordinates.
        """
        adj = self.adjacency()
        row_counts = adj.sum(axis=1)
        return int(np.sum(np.maximum(row_counts - 1, 0)))


def _strongly_connected(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    if np.any(adj.sum(axis=1) == 0) or np.any(adj.sum(axis=0) == 0):
        return False

    def reach(a):
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in np.nonzero(a[u])[0]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    return len(reach(adj)) == n and len(reach(adj.T)) == n


def graph_period(adj: np.ndarray):
    """Period and period classes of a strongly connected digraph.

    Uses BFS levels: the period is the gcd of level[u] + 1 - level[v]
    over all edges (u, v); classes are levels mod the period.
    """
    if not _strongly_connected(adj):
        raise NotIrreducible("graph is not strongly connected")
    n = adj.shape[0]
    level = [-1] * n
    level[0] = 0
    queue = [0]
    while queue:
        u = queue.pop(0)
        for v in np.nonzero(adj[u])[0]:
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(v)
    g = 0
    for u in range(n):
        for v in np.nonzero(adj[u])[0]:
            g = math.gcd(g, level[u] + 1 - level[v])
    e = abs(g) if g != 0 else 1
    classes = [frozenset(u for u in range(n) if level[u] % e == c) for c in range(e)]
    return e, classes


def matrix_period(P: np.ndarray):
    """Period of the support graph of a nonnegative matrix."""
    return graph_period((np.asarray(P) > 0).astype(int))


def rll_forbidden_pairs(d: int, k=None) -> ForbiddenPairSet:
    """(d, k)-RLL constraint on its follower-set alphabet.

    Binary sequences with between d and k zeros between successive ones,
    encoded as a pair constraint over run states.  State labels decrease
    with the current zero-run count, so the (1, inf) case comes out as the
    familiar "no 11" constraint {(1, 1)} over {0, 1} with a self-loop at 0.
    """
    if d < 0 or (k is not None and k < max(d, 1)):
        raise ValueError("need d >= 0 and k >= max(d, 1)")
    m = d if k is None else k
    m = max(m, 1)
    # count c = zeros since the last one (capped at m when k is None)
    allowed = set()
    for c in range(m + 1):
        if c < m:
            allowed.add((c, c + 1))          # emit 0
        elif k is None:
            allowed.add((m, m))              # emit 0, count stays capped
        if c >= d:
            allowed.add((c, 0))              # emit 1
    # label = m - count, so label m means "just emitted a 1"
    relabel = lambda c: m - c
    allowed_lab = {(relabel(i), relabel(j)) for (i, j) in allowed}
    size = m + 1
    forbidden = {(i, j) for i in range(size) for j in range(size)
                 if (i, j) not in allowed_lab}
    return ForbiddenPairSet(size, frozenset(forbidden))


def load_constraint(path) -> ForbiddenPairSet:
    """Read a constraint file: header "alphabet k", then one "i j" line per
    forbidden pair."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines or not lines[0].startswith("alphabet"):
        raise ParseError("constraint file must start with 'alphabet k'")
    try:
        size = int(lines[0].split()[1])
    except (IndexError, ValueError) as exc:
        raise ParseError(f"bad alphabet header: {lines[0]!r}") from exc
    pairs = set()
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ParseError(f"bad forbidden-pair line: {ln!r}")
        pairs.add((int(parts[0]), int(parts[1])))
    return ForbiddenPairSet(size, frozenset(pairs))


def save_constraint(F: ForbiddenPairSet, path):
    with open(path, "w") as fh:
        fh.write(f"alphabet {F.alphabet_size}\n")
        for (i, j) in sorted(F.forbidden):
            fh.write(f"{i} {j}\n")


def named_constraint(name: str) -> ForbiddenPairSet:
    """Resolve names like "rll-1-inf", "rll-1-3" or "free-2" (no constraint)."""
    parts = name.split("-")
    if parts[0] == "rll" and len(parts) == 3:
        d = int(parts[1])
        k = None if parts[2] in ("inf", "infty") else int(parts[2])
        return rll_forbidden_pairs(d, k)
    if parts[0] == "free" and len(parts) == 2:
        return ForbiddenPairSet(int(parts[1]), frozenset())
    raise ParseError(f"unknown constraint name: {name!r}")
