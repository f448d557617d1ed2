"""Online shortest-path on k×k grid DAGs with controlled region switches.

Fixed-partition instantiation of the instability story: the path polytope's
regions are indexed by the per-round argmin path, designed loss schedules
prescribe how often that argmin changes, MW-with-restarts runs over the
enumerated paths, and OGD-FW is the projection-free continuous baseline
driven by a shortest-path linear minimization oracle.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .games import epoch_starts

ENUMERATION_MAX_K = 8


@dataclass(frozen=True)
class GridDag:
    """k×k grid DAG; right-edges row-major first, then down-edges row-major."""

    k: int

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"grid needs k >= 2, got k={self.k}")

    @property
    def d(self) -> int:
        return 2 * self.k * (self.k - 1)

    def edge_right(self, r: int, c: int) -> int:
        return r * (self.k - 1) + c

    def edge_down(self, r: int, c: int) -> int:
        return self.k * (self.k - 1) + r * self.k + c


def build_grid(k: int) -> GridDag:
    return GridDag(k)


@dataclass(frozen=True)
class PathSet:
    """All source-to-sink paths of a grid, as edge-indicator rows."""

    dag: GridDag
    paths: np.ndarray  # (N, d) bool

    @property
    def N(self) -> int:
        return self.paths.shape[0]

    def indicator(self, i: int) -> np.ndarray:
        return self.paths[i].astype(float)


def _path_from_moves(dag: GridDag, moves: np.ndarray) -> np.ndarray:
    es = np.zeros(dag.d, dtype=bool)
    r = c = 0
    for right in moves:
        if right:
            es[dag.edge_right(r, c)] = True
            c += 1
        else:
            es[dag.edge_down(r, c)] = True
            r += 1
    return es


def enumerate_paths(dag: GridDag) -> PathSet:
    """Paths in lexicographic order of move sequences (right before down)."""
    if dag.k > ENUMERATION_MAX_K:
        raise ValueError(
            f"path enumeration is capped at k <= {ENUMERATION_MAX_K} "
            f"(N grows as binomial(2(k-1), k-1)); got k={dag.k}")
    m = 2 * (dag.k - 1)
    rows = []
    for rights in itertools.combinations(range(m), dag.k - 1):
        moves = np.zeros(m, dtype=bool)
        moves[list(rights)] = True
        rows.append(_path_from_moves(dag, moves))
    paths = np.array(rows)
    assert paths.shape[0] == comb(m, dag.k - 1)
    return PathSet(dag, paths)


def shortest_path_lmo(dag: GridDag, costs) -> np.ndarray:
    """Min-cost source→sink path under additive edge costs.

    Deterministic: at equal node values the right edge wins.
    """
    k = dag.k
    costs = np.asarray(costs, dtype=float)
    val = np.full((k, k), np.inf)
    val[k - 1, k - 1] = 0.0
    go_right = np.zeros((k, k), dtype=bool)
    for r in range(k - 1, -1, -1):
        for c in range(k - 1, -1, -1):
            if r == k - 1 and c == k - 1:
                continue
            best, right = np.inf, False
            if c + 1 < k:
                best, right = costs[dag.edge_right(r, c)] + val[r, c + 1], True
            if r + 1 < k:
                v = costs[dag.edge_down(r, c)] + val[r + 1, c]
                if v < best:
                    best, right = v, False
            val[r, c] = best
            go_right[r, c] = right
    es = np.zeros(dag.d, dtype=bool)
    r = c = 0
    while (r, c) != (k - 1, k - 1):
        if go_right[r, c]:
            es[dag.edge_right(r, c)] = True
            c += 1
        else:
            es[dag.edge_down(r, c)] = True
            r += 1
    return es


def uniform_flow(dag: GridDag) -> np.ndarray:
    """Unit flow splitting evenly at every branching node."""
    k = dag.k
    z = np.zeros(dag.d)
    inflow = np.zeros((k, k))
    inflow[0, 0] = 1.0
    for s in range(2 * k - 1):
        for r in range(max(0, s - k + 1), min(k, s + 1)):
            c = s - r
            f = inflow[r, c]
            if f == 0.0:
                continue
            can_r, can_d = c + 1 < k, r + 1 < k
            if can_r and can_d:
                z[dag.edge_right(r, c)] += f / 2
                z[dag.edge_down(r, c)] += f / 2
                inflow[r, c + 1] += f / 2
                inflow[r + 1, c] += f / 2
            elif can_r:
                z[dag.edge_right(r, c)] += f
                inflow[r, c + 1] += f
            elif can_d:
                z[dag.edge_down(r, c)] += f
                inflow[r + 1, c] += f
    return z


def flow_residual(dag: GridDag, z) -> float:
    """Max conservation violation (source emits 1, sink absorbs 1)."""
    k = dag.k
    z = np.asarray(z, dtype=float)
    worst = 0.0
    for r in range(k):
        for c in range(k):
            out = 0.0
            if c + 1 < k:
                out += z[dag.edge_right(r, c)]
            if r + 1 < k:
                out += z[dag.edge_down(r, c)]
            inn = 0.0
            if c > 0:
                inn += z[dag.edge_right(r, c - 1)]
            if r > 0:
                inn += z[dag.edge_down(r - 1, c)]
            if (r, c) == (0, 0):
                inn += 1.0
            if (r, c) == (k - 1, k - 1):
                out += 1.0
            worst = max(worst, abs(out - inn))
    return worst


@dataclass
class PathLossSchedule:
    """Designed per-round edge costs with an epoch-designated optimal path."""

    dag: GridDag
    starts: np.ndarray            # (E+1,) 0-based epoch starts, sentinel T
    designated: list              # per-epoch edge-indicator bool arrays
    epoch_costs: np.ndarray       # (E, d) noise-free cost vectors
    noise: np.ndarray | None      # (T, d) per-round noise, or None
    margin: float
    noise_amplitude: float

    @property
    def T(self) -> int:
        return int(self.starts[-1])

    def epoch_of(self, t: int) -> int:
        return int(np.searchsorted(self.starts, t, side="right") - 1)

    def cost(self, t: int) -> np.ndarray:
        c = self.epoch_costs[self.epoch_of(t)]
        if self.noise is None:
            return c
        return np.clip(c + self.noise[t], 0.0, 1.0)


def _corner_flip(moves: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Swap one adjacent (right,down) pair of moves; changes exactly 2 edges."""
    out = moves.copy()
    idxs = np.flatnonzero(out[:-1] != out[1:])
    pos = int(idxs[rng.integers(idxs.size)])
    out[pos], out[pos + 1] = out[pos + 1], out[pos]
    return out


def gen_path_losses(dag: GridDag, T: int, rs_target: int, margin: float,
                    noise_amplitude: float = 0.0, seed: int = 0,
                    verify: bool = True) -> PathLossSchedule:
    """Epoch loss schedule whose per-round best path changes rs_target times.

    Each epoch's designated path is a one-corner flip of a seeded home path
    (consecutive designations distinct); designated edges cost 0.5−margin,
    all others 0.5, plus optional i.i.d. uniform edge noise clamped to [0,1].
    """
    if not 0 <= rs_target <= T - 1:
        raise ValueError(f"need 0 <= rs_target <= T-1, got {rs_target}")
    if margin <= 0:
        raise ValueError("margin must be positive")
    if margin + noise_amplitude > 0.5:
        raise ValueError("margin + noise_amplitude must stay within [0,1] costs")
    rng = np.random.Generator(np.random.Philox(key=[seed, 0x9a7b]))
    m = 2 * (dag.k - 1)
    home = np.zeros(m, dtype=bool)
    home[rng.permutation(m)[: dag.k - 1]] = True
    starts = epoch_starts(T, rs_target)
    designated, costs, prev = [], [], None
    for _ in range(rs_target + 1):
        moves = _corner_flip(home, rng) if rs_target > 0 else home.copy()
        while prev is not None and np.array_equal(moves, prev):
            moves = _corner_flip(home, rng)
        prev = moves.copy()
        path = _path_from_moves(dag, moves)
        designated.append(path)
        c = np.full(dag.d, 0.5)
        c[path] = 0.5 - margin
        costs.append(c)
    noise = None
    if noise_amplitude > 0:
        noise_rng = np.random.Generator(np.random.Philox(key=[seed, 0x7e11]))
        noise = noise_rng.uniform(-noise_amplitude, noise_amplitude, size=(T, dag.d))
    sched = PathLossSchedule(dag, starts, designated, np.array(costs), noise,
                             margin, noise_amplitude)
    if verify and dag.k <= ENUMERATION_MAX_K:
        _verify_margin(sched)
    return sched


def _verify_margin(sched: PathLossSchedule):
    """Designated path must beat every other path by the margin, every round."""
    ps = enumerate_paths(sched.dag)
    Pf = ps.paths.astype(float)
    if sched.noise is None:
        for j, c in enumerate(sched.epoch_costs):
            pl = Pf @ c
            order = np.argsort(pl)
            best = int(order[0])
            if not np.array_equal(ps.paths[best], sched.designated[j]):
                raise ValueError("designated path is not the epoch argmin")
            if pl[order[1]] - pl[best] < sched.margin - 1e-12:
                raise ValueError("margin invariant violated at generation")
        return
    block = max(1, 2_000_000 // ps.N)
    for t0 in range(0, sched.T, block):
        ts = range(t0, min(sched.T, t0 + block))
        C = np.stack([sched.cost(t) for t in ts])
        PL = C @ Pf.T
        for i, t in enumerate(ts):
            j = sched.epoch_of(t)
            pl = PL[i]
            order = np.argsort(pl)
            best = int(order[0])
            if not np.array_equal(ps.paths[best], sched.designated[j]) or \
                    pl[order[1]] - pl[best] < sched.margin - 1e-12:
                raise ValueError(f"margin invariant violated at round {t}")


@dataclass
class MwPathState:
    pathset: PathSet
    weights: np.ndarray
    last_best: int | None = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)


def fresh_mw_path_state(pathset: PathSet) -> MwPathState:
    return MwPathState(pathset, np.full(pathset.N, 1.0 / pathset.N))


def mw_restarts_step(state: MwPathState, costs_t, eta: float) -> tuple:
    """Play the MW mean flow, observe, reset to uniform when the per-round
    argmin path moves, then apply the exponential update. Returns (z_t, state)."""
    Pf = state.pathset.paths
    z = state.weights @ Pf.astype(float)
    pl = Pf @ np.asarray(costs_t, dtype=float)
    best = int(np.argmin(pl))
    if state.last_best is not None and best != state.last_best:
        state.weights = np.full(state.pathset.N, 1.0 / state.pathset.N)
    state.last_best = best
    zshift = -eta * (pl - pl.min())
    w = state.weights * np.exp(zshift - zshift.max())
    state.weights = w / w.sum()
    return z, state


@dataclass
class OgdFwState:
    dag: GridDag
    z: np.ndarray
    z1: np.ndarray
    G: np.ndarray
    t: int = 0
    eta: float = 0.0


def fresh_ogd_fw_state(dag: GridDag, T: int) -> OgdFwState:
    z1 = uniform_flow(dag)
    return OgdFwState(dag, z1.copy(), z1, np.zeros(dag.d), 0, 1.0 / np.sqrt(T))


def ogd_fw_step(state: OgdFwState, costs_t) -> tuple:
    """Regularized online Frank-Wolfe step over the flow polytope.

    Plays z_t, accumulates G, calls the LMO on the surrogate gradient
    eta·G + 2(z_t − z_1), then mixes toward the returned vertex with
    γ_t = min(1, 1/sqrt(t)). Returns (z_t, state)."""
    state.t += 1
    z_play = state.z.copy()
    state.G = state.G + np.asarray(costs_t, dtype=float)
    v = shortest_path_lmo(state.dag, state.eta * state.G + 2.0 * (state.z - state.z1))
    gamma = min(1.0, 1.0 / np.sqrt(state.t))
    state.z = state.z + gamma * (v.astype(float) - state.z)
    return z_play, state


def path_regret(plays, schedule: PathLossSchedule, pathset: PathSet):
    """Per-round increments vs the round-wise best enumerated path, plus the
    region-switch count (argmin-path changes). Returns (increments, rs)."""
    Pf = pathset.paths.astype(float)
    increments = np.empty(len(plays))
    rs = 0
    last = None
    for t, z in enumerate(plays):
        c = schedule.cost(t)
        pl = Pf @ c
        best = int(np.argmin(pl))
        if last is not None and best != last:
            rs += 1
        last = best
        zv = np.asarray(z, dtype=float)
        increments[t] = zv @ c - pl[best]
    return increments, rs
