"""Game abstractions and designed instance generators.

The epoch adversary produces a sequence of submodular-concave games with a
prescribed number of equilibrium cell switches: the horizon splits into s+1
epochs, each epoch picks a Lovász cell (consecutive cells differ in their
first coordinate), and within the epoch the payoff hides one designated
chain prefix behind a flat loss cliff, optionally modulated by a
maximizer-gated Rademacher disturbance on the chain vertices. Closed-form
per-round equilibrium records come from an exact 1-D concave envelope and
are validated against ``brute_force_saddle`` in the tests.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .lovasz import (
    Chain,
    ChainWeights,
    Permutation,
    ThresholdPoint,
    chain_of,
    identity_permutation,
    sort_order_descending,
    sort_permutation,
    weights_to_threshold,
)

CLIFF_DEPTH = 0.6          # B: flat loss gap hiding the designated prefix
GRADE_SCALE = 0.2          # tie-breaking modular grades, relative to B/n^2
PLATEAU_STEP_FRAC = 0.125  # post-designated exit slope, relative to B


@dataclass(frozen=True)
class MaximizerDomain:
    """Box domain for the maximizer."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", np.atleast_1d(np.asarray(self.lower, float)))
        object.__setattr__(self, "upper", np.atleast_1d(np.asarray(self.upper, float)))
        if self.lower.shape != self.upper.shape or np.any(self.lower > self.upper):
            raise ValueError("domain must satisfy lower <= upper componentwise")

    @property
    def m(self) -> int:
        return self.lower.size

    def clamp(self, y) -> np.ndarray:
        return np.clip(np.atleast_1d(np.asarray(y, float)), self.lower, self.upper)

    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)


@dataclass(frozen=True)
class EquilibriumRecord:
    x_star: ThresholdPoint
    y_star: np.ndarray
    pi_star: Permutation
    value: float


@dataclass(frozen=True)
class EpochSchedule:
    """1-based epoch boundaries t_1=1 < ... < t_{s+2}=T+1, one cell per epoch."""

    boundaries: tuple
    cell_permutations: tuple

    def __post_init__(self):
        b = self.boundaries
        if b[0] != 1 or any(b[i] >= b[i + 1] for i in range(len(b) - 1)):
            raise ValueError("boundaries must be increasing and start at 1")
        if len(self.cell_permutations) != len(b) - 1:
            raise ValueError("need one cell permutation per epoch")
        for p, q in zip(self.cell_permutations, self.cell_permutations[1:]):
            if p.order == q.order:
                raise ValueError("consecutive epoch permutations must differ")

    @property
    def switch_count(self) -> int:
        return len(self.boundaries) - 2


@dataclass
class GameRound:
    """One round's payoff oracle plus an optional equilibrium record."""

    payoff: Callable
    grad_y: Callable
    bounds: tuple  # (M, L_y)
    domain: MaximizerDomain
    n: int
    equilibrium: EquilibriumRecord | None = None


def epoch_starts(T: int, s: int) -> np.ndarray:
    """0-based epoch start rounds plus sentinel T; remainder goes to early epochs."""
    base, rem = divmod(T, s + 1)
    lengths = [base + 1 if j < rem else base for j in range(s + 1)]
    return np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)


def _position_weights(n: int, i_star: int, cliff: float) -> np.ndarray:
    """Modular weight of the element at each 1-based position (tie-grades + plateau exit)."""
    dpos = np.empty(n)
    gamma = PLATEAU_STEP_FRAC * cliff
    for l in range(1, n + 1):
        grade = GRADE_SCALE * cliff * l / n**2
        dpos[l - 1] = grade if l <= i_star else gamma * (l - i_star) + grade
    return dpos


def _noise_staircase(n: int, xi_row: np.ndarray) -> np.ndarray:
    """Nonincreasing disturbance Ğ(i) on chain indices 0..n, |Ğ| <= 1."""
    i = np.arange(n + 1)
    return ((1.0 - 2.0 * i / n) + xi_row / n) / (1.0 + 1.0 / n)


class EpochAdversary:
    """Designed game sequence with exactly s equilibrium cell switches.

    Within epoch j with permutation π_j and designated prefix index i*:

        f_t(S, y) = c·[B + Σ_{e∈S} d̂_e − (B + G₍ᵢ*₎)·1[C_{i*} ⊆ S]]
                    + a·w(y)·Ğ_t(k(S)),  w(y) = (1+y)/2,

    where k(S) is the deepest π_j-prefix inside S, d̂ assigns tiny strictly
    increasing grades by position (plus a short plateau exit after i*), and
    Ğ_t is a nonincreasing staircase modulated by the round's Rademacher
    draw. Submodular in S for every y ∈ [−1,1], linear in y, |f| ≤ c + a.
    """

    def __init__(self, n: int, T: int, s: int, noise_amplitude: float = 1.0,
                 perturbation_scale: float = 1.0, seed: int = 0):
        if n < 3:
            raise ValueError(f"epoch adversary needs n >= 3, got n={n}")
        if not 0 <= s <= T - 1:
            raise ValueError(f"switch target must satisfy 0 <= s <= T-1, got s={s}, T={T}")
        if noise_amplitude < 0 or perturbation_scale < 0:
            raise ValueError("amplitudes must be nonnegative")
        self.n, self.T, self.s = n, T, s
        self.a, self.c = float(noise_amplitude), float(perturbation_scale)
        self.seed = int(seed)
        self.B = CLIFF_DEPTH
        rng = np.random.Generator(np.random.Philox(key=[seed, 0x1071]))
        self.i_star = int(rng.integers(max(2, n - 2), n))  # in {max(2,n-2), .., n-1}
        self.starts = epoch_starts(T, s)
        # epoch permutations: swap position 1 with a small position r <= i_star
        perms = np.empty((s + 1, n), dtype=np.int64)
        perms[0] = rng.permutation(n)
        hi = min(3, self.i_star)
        for j in range(1, s + 1):
            r = 2 if hi == 2 else int(rng.integers(2, hi + 1))
            perms[j] = perms[j - 1]
            perms[j, [0, r - 1]] = perms[j, [r - 1, 0]]
        self.perms = perms
        self.dpos = _position_weights(n, self.i_star, self.B)
        self.G_istar = float(self.dpos[: self.i_star].sum())
        L = np.empty(n + 1)
        L[0] = self.B
        L[1:] = self.B + np.cumsum(self.dpos)
        L[self.i_star:] -= self.B + self.G_istar
        self.L = L
        self.max_abs_det = float(max(abs(L).max(), self.B + self.dpos.sum()))
        if self.a > 0:
            noise_rng = np.random.Generator(np.random.Philox(key=[seed, 0x2a17]))
            self.xi = (2 * noise_rng.integers(0, 2, size=(T, n + 1)) - 1).astype(np.int8)
        else:
            self.xi = None
        self._epoch_of_round = np.searchsorted(self.starts, np.arange(T), side="right") - 1
        self._compute_equilibria()

    # -- structure helpers -------------------------------------------------
    def epoch_of(self, t: int) -> int:
        return int(self._epoch_of_round[t])

    def positions(self, j: int) -> np.ndarray:
        """positions(j)[e] = 0-based position of 0-based element e in epoch j."""
        pos = np.empty(self.n, dtype=np.int64)
        pos[self.perms[j]] = np.arange(self.n)
        return pos

    def element_weights(self, j: int) -> np.ndarray:
        delem = np.empty(self.n)
        delem[self.perms[j]] = self.dpos
        return delem

    def k_of(self, S: Sequence[int], j: int) -> int:
        """Deepest epoch-j chain prefix contained in S (ids 1-based in S)."""
        flags = np.zeros(self.n + 1, dtype=bool)
        pos = self.positions(j)
        for e in S:
            flags[pos[e - 1] + 1] = True
        k = 0
        while k < self.n and flags[k + 1]:
            k += 1
        return k

    def staircase(self, t: int) -> np.ndarray:
        if self.xi is None:
            return np.zeros(self.n + 1)
        return _noise_staircase(self.n, self.xi[t].astype(float))

    # -- equilibrium -------------------------------------------------------
    def _compute_equilibria(self):
        T, n = self.T, self.n
        self.eq_i1 = np.full(T, self.i_star, dtype=np.int64)
        self.eq_i2 = np.full(T, self.i_star, dtype=np.int64)
        self.eq_theta = np.ones(T)
        self.eq_wstar = np.full(T, 0.5)
        self.eq_A = np.full(T, self.c * self.L[self.i_star])
        self.eq_B = np.zeros(T)
        self.eq_value = self.eq_A.copy()
        if self.a == 0:
            return
        b = self.c * self.L
        for t in range(T):
            slopes = self.a * self.staircase(t)
            w, V, i1, i2, theta = _envelope_max(b, slopes)
            self.eq_wstar[t] = w
            self.eq_value[t] = V
            self.eq_i1[t], self.eq_i2[t], self.eq_theta[t] = i1, i2, theta
            self.eq_A[t] = theta * b[i1] + (1 - theta) * b[i2]
            self.eq_B[t] = theta * slopes[i1] + (1 - theta) * slopes[i2]

    def record(self, t: int) -> EquilibriumRecord:
        j = self.epoch_of(t)
        perm = Permutation(tuple(int(e) + 1 for e in self.perms[j]))
        p = np.zeros(self.n + 1)
        p[self.eq_i1[t]] += self.eq_theta[t]
        p[self.eq_i2[t]] += 1 - self.eq_theta[t]
        x_star = weights_to_threshold(ChainWeights(p), perm)
        y_star = np.array([2 * self.eq_wstar[t] - 1.0])
        return EquilibriumRecord(x_star, y_star, perm, float(self.eq_value[t]))

    # -- materialized rounds ------------------------------------------------
    def round(self, t: int) -> GameRound:
        inst, j = self, self.epoch_of(t)
        delem = self.element_weights(j)
        stair = self.staircase(t)

        class _Payoff:
            n = inst.n

            def __call__(self, S, y):
                yv = float(np.atleast_1d(y)[0])
                k = inst.k_of(S, j)
                det = inst.B + sum(delem[e - 1] for e in S)
                if k >= inst.i_star:
                    det -= inst.B + inst.G_istar
                w = 0.5 * (1.0 + yv)
                return inst.c * det + inst.a * w * stair[k]

        payoff = _Payoff()

        def grad_y(x, y):
            if inst.a == 0:
                return np.zeros(1)
            xv = x.x if isinstance(x, ThresholdPoint) else np.asarray(x, float)
            order0 = sort_order_descending(xv)
            xs = xv[order0]
            gaps = np.concatenate([[1.0 - xs[0]], xs[:-1] - xs[1:], [xs[-1]]])
            pos = inst.positions(j)
            ks = _prefix_staircase(order0, pos)
            return np.array([0.5 * inst.a * float(gaps @ stair[ks])])

        return GameRound(
            payoff=payoff,
            grad_y=grad_y,
            bounds=(self.c * self.max_abs_det + self.a, 0.5 * self.a),
            domain=MaximizerDomain([-1.0], [1.0]),
            n=self.n,
            equilibrium=self.record(t),
        )

    def rounds(self) -> list:
        return [self.round(t) for t in range(self.T)]

    def schedule(self) -> EpochSchedule:
        perms = tuple(Permutation(tuple(int(e) + 1 for e in row)) for row in self.perms)
        return EpochSchedule(tuple(int(b) + 1 for b in self.starts), perms)


def _prefix_staircase(order0: np.ndarray, pos: np.ndarray) -> np.ndarray:
    """k-values of the n+1 prefixes of order0 against the epoch permutation."""
    n = order0.size
    ks = np.empty(n + 1, dtype=np.int64)
    ks[0] = 0
    seen = np.zeros(n, dtype=bool)
    k = 0
    for i, e in enumerate(order0, start=1):
        seen[pos[e]] = True
        while k < n and seen[k]:
            k += 1
        ks[i] = k
    return ks


def _envelope_max(b: np.ndarray, s: np.ndarray):
    """Maximize min_i (b_i + s_i·w) over w in [0,1].

    Returns (w*, V*, i1, i2, theta): the optimal mix theta·e_{i1} +
    (1-theta)·e_{i2} of active lines whose combined slope vanishes at an
    interior maximum (i1 == i2 with theta = 1 at a boundary maximum).
    """
    n1 = b.size
    cands = [0.0, 1.0]
    for i in range(n1):
        ds = s[i] - s  # crossing of line i with the others
        with np.errstate(divide="ignore", invalid="ignore"):
            w = (b - b[i]) / ds
        cands.extend(w[(ds != 0) & (w > 0) & (w < 1)].tolist())
    cands = np.array(sorted(set(cands)))
    phi = (b[None, :] + np.outer(cands, s)).min(axis=1)
    best = int(np.argmax(phi))
    wstar, V = float(cands[best]), float(phi[best])
    active = np.flatnonzero(b + s * wstar <= V + 1e-11)
    sa = s[active]
    if wstar <= 0.0:
        i1 = int(active[np.argmin(sa)])
        return 0.0, V, i1, i1, 1.0
    if wstar >= 1.0:
        i1 = int(active[np.argmax(sa)])
        return 1.0, V, i1, i1, 1.0
    flat = active[np.abs(sa) <= 1e-12]
    if flat.size:
        i1 = int(flat[0])
        return wstar, V, i1, i1, 1.0
    i_pos = int(active[np.argmax(sa)])
    i_neg = int(active[np.argmin(sa)])
    theta = -s[i_neg] / (s[i_pos] - s[i_neg])
    return wstar, V, i_pos, i_neg, float(theta)


def gen_epoch_adversary(n: int, T: int, s: int, noise_amplitude: float = 1.0,
                        perturbation_scale: float = 1.0, seed: int = 0):
    """Designed game sequence with exactly s equilibrium cell switches.

    Returns (rounds, schedule); every round carries a closed-form
    equilibrium record with pi_star equal to the scheduled cell permutation.
    """
    inst = EpochAdversary(n, T, s, noise_amplitude, perturbation_scale, seed)
    return inst.rounds(), inst.schedule()


# ---------------------------------------------------------------------------
# coverage family


def gen_coverage_game(n: int, universe_size: int, T: int, seed: int = 0,
                      drift: float = 0.0):
    """Deterministic submodular coverage games, linear in y over [0,1]^universe.

    f_t(S, y) = Σ_u y_u · w_{t,u} · min(1, |S ∩ cover(u)|), with covers and
    weight endpoints drawn once from the seed and weights linearly
    interpolated across the horizon at rate ``drift``.
    """
    if n < 1 or universe_size < 1:
        raise ValueError("need n >= 1 and universe_size >= 1")
    rng = np.random.Generator(np.random.Philox(key=[seed, 0xc0f]))
    covers = []
    for _ in range(universe_size):
        mask = rng.random(n) < min(1.0, 3.0 / n)
        if not mask.any():
            mask[rng.integers(n)] = True
        covers.append(np.flatnonzero(mask))
    w0 = rng.uniform(0.2, 1.0, size=universe_size)
    w1 = rng.uniform(0.2, 1.0, size=universe_size)
    domain = MaximizerDomain(np.zeros(universe_size), np.ones(universe_size))
    rounds = []
    for t in range(T):
        lam = drift * (t / (T - 1)) if T > 1 else 0.0
        wt = (1 - lam) * w0 + lam * w1

        def payoff(S, y, wt=wt):
            yv = np.atleast_1d(np.asarray(y, float))
            Sset = set(S)
            hit = np.array([1.0 if any(e + 1 in Sset for e in cov) else 0.0
                            for cov in covers])
            return float((yv * wt * hit).sum())

        f = _CallableOracle(n, payoff)

        def grad_y(x, y, wt=wt):
            xv = x.x if isinstance(x, ThresholdPoint) else np.asarray(x, float)
            cover_max = np.array([xv[cov].max() if cov.size else 0.0 for cov in covers])
            return wt * cover_max

        rounds.append(GameRound(payoff=f, grad_y=grad_y,
                                bounds=(float(wt.sum()), float(np.linalg.norm(wt))),
                                domain=domain, n=n, equilibrium=None))
    return rounds


class _CallableOracle:
    def __init__(self, n, fn):
        self.n = n
        self._fn = fn

    def __call__(self, S, y):
        return self._fn(S, y)


# ---------------------------------------------------------------------------
# brute-force saddle oracle


def _y_grid(domain: MaximizerDomain, h_y: float) -> np.ndarray:
    axes = []
    for lo, hi in zip(domain.lower, domain.upper):
        pts = max(2, int(round((hi - lo) / h_y)) + 1) if hi > lo else 1
        axes.append(np.linspace(lo, hi, pts))
    if domain.m == 1:
        return axes[0][:, None]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def brute_force_saddle(round: GameRound, mode: str = "cube",
                       grid_resolution: float = 0.05,
                       y_grid_resolution: float = 0.05,
                       perms: Sequence[Permutation] | None = None) -> EquilibriumRecord:
    """Grid search for the round's saddle point (validation oracle).

    Cube mode grids [0,1]^n (n <= 4); chain mode grids the chain-weight
    simplex of each supplied permutation (n <= 10). Maximizer domains up to
    m <= 2. Returns the lexicographically first grid optimum.
    """
    n, domain = round.n, round.domain
    if domain.m > 2:
        raise ValueError(f"brute force supports m <= 2 maximizer dims, got {domain.m}")
    Y = _y_grid(domain, y_grid_resolution)
    if mode == "cube":
        if n > 4:
            raise ValueError(f"cube mode supports n <= 4, got n={n}")
        return _brute_cube(round, grid_resolution, Y)
    if mode == "chain":
        if n > 10:
            raise ValueError(f"chain mode supports n <= 10, got n={n}")
        if perms is None:
            perms = [round.equilibrium.pi_star] if round.equilibrium else [identity_permutation(n)]
        return _brute_chain(round, grid_resolution, Y, perms)
    raise ValueError(f"unknown mode {mode!r}")


def _subset_tuple(mask: int, n: int) -> tuple:
    return tuple(e + 1 for e in range(n) if mask >> e & 1)


def _brute_cube(round: GameRound, h: float, Y: np.ndarray) -> EquilibriumRecord:
    n = round.n
    fvals = np.empty((1 << n, Y.shape[0]))
    for mask in range(1 << n):
        S = _subset_tuple(mask, n)
        for yi, y in enumerate(Y):
            fvals[mask, yi] = round.payoff(S, y if y.size > 1 else y[0])
    pts = int(np.round(1.0 / h)) + 1
    axis = np.linspace(0.0, 1.0, pts)
    best_val, best_x, best_yi = np.inf, None, 0
    chunk = max(1, 200000 // max(1, Y.shape[0]))
    grids = itertools.product(*([axis] * n))
    while True:
        block = np.array(list(itertools.islice(grids, chunk * 64)))
        if block.size == 0:
            break
        order = np.argsort(-block, axis=1, kind="stable")
        xs = np.take_along_axis(block, order, axis=1)
        gaps = np.empty((block.shape[0], n + 1))
        gaps[:, 0] = 1.0 - xs[:, 0]
        gaps[:, 1:n] = xs[:, :-1] - xs[:, 1:]
        gaps[:, n] = xs[:, -1]
        masks = np.zeros((block.shape[0], n + 1), dtype=np.int64)
        acc = np.zeros(block.shape[0], dtype=np.int64)
        for i in range(n):
            acc = acc | (1 << order[:, i])
            masks[:, i + 1] = acc
        FL = np.zeros((block.shape[0], Y.shape[0]))
        for i in range(n + 1):
            FL += gaps[:, i, None] * fvals[masks[:, i], :]
        vmax = FL.max(axis=1)
        bi = int(np.argmin(vmax))
        if vmax[bi] < best_val - 1e-15:
            best_val = float(vmax[bi])
            best_x = block[bi].copy()
            best_yi = int(np.argmax(FL[bi]))
    y_star = Y[best_yi]
    return EquilibriumRecord(ThresholdPoint(best_x), np.atleast_1d(y_star),
                             sort_permutation(best_x), best_val)


def _compositions(total: int, parts: int):
    """All nonnegative integer vectors of given length summing to total."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def _brute_chain(round: GameRound, h: float, Y: np.ndarray,
                 perms: Sequence[Permutation]) -> EquilibriumRecord:
    n = round.n
    M = max(1, int(np.round(1.0 / h)))
    W = np.array(list(_compositions(M, n + 1)), dtype=float) / M
    best = (np.inf, None, None, 0)
    for perm in perms:
        prefixes = [tuple(sorted(perm.order[:j])) for j in range(n + 1)]
        cv = np.empty((n + 1, Y.shape[0]))
        for i, S in enumerate(prefixes):
            for yi, y in enumerate(Y):
                cv[i, yi] = round.payoff(S, y if y.size > 1 else y[0])
        FL = W @ cv
        vmax = FL.max(axis=1)
        bi = int(np.argmin(vmax))
        if vmax[bi] < best[0] - 1e-15:
            best = (float(vmax[bi]), W[bi], perm, int(np.argmax(FL[bi])))
    val, w, perm, yi = best
    x_star = weights_to_threshold(ChainWeights(w), perm)
    return EquilibriumRecord(x_star, np.atleast_1d(Y[yi]), perm, val)


def switch_schedule_of(records: Sequence[EquilibriumRecord]) -> EpochSchedule:
    """Epoch schedule implied by a sequence of equilibrium records."""
    if not records:
        raise ValueError("need at least one record")
    boundaries = [1]
    perms = [records[0].pi_star]
    for t in range(1, len(records)):
        if records[t].pi_star.order != records[t - 1].pi_star.order:
            boundaries.append(t + 1)
            perms.append(records[t].pi_star)
    boundaries.append(len(records) + 1)
    return EpochSchedule(tuple(boundaries), tuple(perms))
