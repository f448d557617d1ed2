"""Core geometry of the Lovász extension.

Permutations, nested-subset chains, threshold points, chain-weight
distributions, extension values and subgradients, best-response
permutations, and chain-overlap detection.

Conventions used throughout the package:
  * ground-set elements carry 1-based ids {1..n};
  * a permutation lists the element at each position, position 1 first;
  * set arguments are passed to oracles as sorted tuples of ids;
  * sorting ties break by ascending element id (deterministic everywhere).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

SetOracle = Callable[[tuple, object], float]

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Permutation:
    """A coordinate ordering: order[j] is the element id at position j+1."""

    order: tuple

    def __post_init__(self):
        n = len(self.order)
        if sorted(self.order) != list(range(1, n + 1)):
            raise ValueError(f"order must be a bijection on 1..{n}, got {self.order}")

    @property
    def n(self) -> int:
        return len(self.order)

    def positions(self) -> np.ndarray:
        """positions()[e-1] = 1-based position of element e."""
        pos = np.empty(self.n, dtype=np.int64)
        for j, e in enumerate(self.order):
            pos[e - 1] = j + 1
        return pos


@dataclass(frozen=True)
class Chain:
    """The nested prefix sets C_0 ⊂ … ⊂ C_n of a permutation."""

    sets: tuple  # tuple of frozensets, index 0..n

    def __post_init__(self):
        n = len(self.sets) - 1
        if self.sets[0] != frozenset() or self.sets[-1] != frozenset(range(1, n + 1)):
            raise ValueError("chain must run from the empty set to the full ground set")
        for j in range(1, n + 1):
            if len(self.sets[j]) != j or not self.sets[j - 1] < self.sets[j]:
                raise ValueError(f"chain violates nesting at index {j}")

    @property
    def n(self) -> int:
        return len(self.sets) - 1


@dataclass(frozen=True)
class ThresholdPoint:
    """A point of the relaxation cube [0,1]^n."""

    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        if self.x.ndim != 1:
            raise ValueError("threshold point must be a vector")
        if np.any(self.x < -1e-12) or np.any(self.x > 1 + 1e-12):
            raise ValueError("threshold point coordinates must lie in [0,1]")

    @property
    def n(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class ChainWeights:
    """A probability vector over the n+1 chain vertices."""

    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        if self.p.ndim != 1 or self.p.size < 1:
            raise ValueError("chain weights must be a nonempty vector")
        if np.any(self.p < 0):
            raise ValueError("chain weights must be nonnegative")
        if abs(self.p.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"chain weights must sum to 1 (got {self.p.sum()!r})")

    @property
    def n(self) -> int:
        return self.p.size - 1


def _as_vector(x) -> np.ndarray:
    if isinstance(x, ThresholdPoint):
        return x.x
    return np.asarray(x, dtype=float)


def _as_weights(p) -> np.ndarray:
    if isinstance(p, ChainWeights):
        return p.p
    return np.asarray(p, dtype=float)


def sort_order_descending(x: np.ndarray) -> np.ndarray:
    """0-based argsort of x, descending value, ascending index on ties."""
    n = x.size
    return np.lexsort((np.arange(n), -x))


def sort_permutation(x) -> Permutation:
    """Permutation sorting x in descending order; tied coordinates keep ascending-id order."""
    xv = _as_vector(x)
    order0 = sort_order_descending(xv)
    return Permutation(tuple(int(i) + 1 for i in order0))


def chain_of(perm: Permutation) -> Chain:
    """Prefix chain C_j = {π(1),…,π(j)} of a permutation."""
    sets = [frozenset()]
    for e in perm.order:
        sets.append(sets[-1] | {e})
    return Chain(tuple(sets))


def _prefix_tuples(order0: np.ndarray) -> list:
    """Sorted-id tuples of the n+1 prefix sets of a 0-based order array."""
    prefixes = [()]
    acc: list = []
    for i in order0:
        acc.append(int(i) + 1)
        acc.sort()
        prefixes.append(tuple(acc))
    return prefixes


def lovasz_value(f: SetOracle, x, y) -> float:
    """Lovász extension value at x: Σ_i (x_{π(i)} − x_{π(i+1)}) f(C_i, y).

    Boundary convention x_{π(0)} = 1, x_{π(n+1)} = 0, so the telescoping
    weights sum to one and indicator points recover set values exactly.
    Makes exactly n+1 oracle calls.
    """
    xv = _as_vector(x)
    n = xv.size
    order0 = sort_order_descending(xv)
    xs = xv[order0]
    gaps = np.empty(n + 1)
    gaps[0] = 1.0 - xs[0]
    gaps[1:n] = xs[:-1] - xs[1:]
    gaps[n] = xs[-1]
    total = 0.0
    for i, prefix in enumerate(_prefix_tuples(order0)):
        total += gaps[i] * f(prefix, y)
    return float(total)


def lovasz_subgradient_x(f: SetOracle, x, y) -> np.ndarray:
    """Subgradient of f_L(·, y) at x: g[π(i)] = f(C_i, y) − f(C_{i−1}, y)."""
    xv = _as_vector(x)
    n = xv.size
    order0 = sort_order_descending(xv)
    g = np.empty(n)
    prev = f((), y)
    prefixes = _prefix_tuples(order0)
    for i in range(1, n + 1):
        cur = f(prefixes[i], y)
        g[order0[i - 1]] = cur - prev
        prev = cur
    return g


def weights_to_threshold(p, perm: Permutation) -> ThresholdPoint:
    """Threshold point of a chain-weight vector: x_{π(j)} = Σ_{i≥j} p_i."""
    pv = _as_weights(p)
    n = pv.size - 1
    if perm.n != n:
        raise ValueError("weights and permutation disagree on ground-set size")
    suffix = np.cumsum(pv[::-1])[::-1]
    x = np.empty(n)
    for j, e in enumerate(perm.order):
        x[e - 1] = suffix[j + 1]
    return ThresholdPoint(np.clip(x, 0.0, 1.0))


def br_permutation(f: SetOracle, y, n: int | None = None) -> Permutation:
    """Best-response permutation: elements by ascending singleton marginal.

    Marginal of element e at y is f({e}, y) − f(∅, y); the element most
    beneficial to include comes first, so the induced cell keeps the
    descending-coordinate convention. Ties break by ascending id.
    """
    if n is None:
        n = f.n  # type: ignore[attr-defined]
    base = f((), y)
    deltas = np.array([f((e,), y) - base for e in range(1, n + 1)])
    order0 = np.lexsort((np.arange(n), deltas))
    return Permutation(tuple(int(i) + 1 for i in order0))


def shared_prefix_indices(pa: Permutation, pb: Permutation) -> frozenset:
    """Indices j with {π_a(1..j)} = {π_b(1..j)} as sets; 0 and n always qualify."""
    if pa.n != pb.n:
        raise ValueError("permutations must share a ground set")
    n = pa.n
    pos_b = pb.positions()
    shared = {0}
    running_max = 0
    for j, e in enumerate(pa.order, start=1):
        running_max = max(running_max, int(pos_b[e - 1]))
        if running_max == j:
            shared.add(j)
    return frozenset(shared)


def identity_permutation(n: int) -> Permutation:
    return Permutation(tuple(range(1, n + 1)))


def prefix_tuple(perm: Permutation, j: int) -> tuple:
    """Sorted-id tuple of C_j under perm."""
    return tuple(sorted(perm.order[:j]))


def chain_prefix_tuples(perm: Permutation) -> list:
    """All n+1 prefix tuples of a permutation, sorted-id convention."""
    order0 = np.array([e - 1 for e in perm.order], dtype=np.int64)
    return _prefix_tuples(order0)
