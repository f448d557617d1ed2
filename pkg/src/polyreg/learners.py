"""Online algorithms for the Lovász game.

The MW core, the three CAMW restart variants (cold, warm uniform-floor,
geometric chain-overlap transfer), the continuous OLMDA/OGD baselines,
Fixed-Share MW, and the maximizer's projected ascent step. Everything here
is the step-level reference implementation; the experiment engine runs an
equivalent vectorized loop (tested for agreement).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .games import GameRound, MaximizerDomain
from .lovasz import (
    ChainWeights,
    Permutation,
    ThresholdPoint,
    br_permutation,
    chain_prefix_tuples,
    lovasz_subgradient_x,
    shared_prefix_indices,
    weights_to_threshold,
)

MIN_TRANSFER_ALPHA = 1e-6

ALGORITHM_NAMES = ("camw_cold", "camw_ws", "camw_geometric", "olmda", "ogd", "fixed_share")


@dataclass(frozen=True)
class StepSizes:
    eta_x: float
    eta_y: float

    def __post_init__(self):
        if self.eta_x <= 0 or self.eta_y <= 0:
            raise ValueError("step sizes must be strictly positive")


def default_eta_x(n: int, T: int, switch_budget: int = 0) -> float:
    """Instability-tuned MW rate over n+1 chain vertices; the stationary
    case reduces to the usual sqrt(log n / T) prescription."""
    return float(np.sqrt(np.log(n + 1) * (1 + switch_budget) / T))


def default_eta_y(T: int) -> float:
    return float(1.0 / np.sqrt(T))


def default_eta_continuous(n: int, T: int) -> float:
    """Diameter-over-gradient rate for the cube, D = sqrt(n)/2, L := 1."""
    return float(np.sqrt(n / T) / 2.0)


@dataclass
class RestartPolicy:
    """When a detected (or scheduled) reset fires.

    kind: "adaptive" fires on an observed permutation change, "none" never,
    "periodic" every `param` rounds, "random" i.i.d. with rate `param`.
    """

    kind: str = "adaptive"
    param: float = 0.0
    seed: int = 0
    _rng: np.random.Generator = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("adaptive", "none", "periodic", "random"):
            raise ValueError(f"unknown restart policy {self.kind!r}")
        if self.kind == "periodic" and int(self.param) < 1:
            raise ValueError("periodic restart needs an interval >= 1")
        if self.kind == "random" and not 0 <= self.param <= 1:
            raise ValueError("random restart rate must be in [0,1]")
        if self._rng is None:
            object.__setattr__(self, "_rng", np.random.Generator(np.random.Philox(key=[self.seed, 0x9e57])))

    def fires(self, t: int, perm_changed: bool) -> bool:
        if self.kind == "adaptive":
            return perm_changed
        if self.kind == "none":
            return False
        if self.kind == "periodic":
            return t > 1 and (t - 1) % int(self.param) == 0
        return bool(self._rng.random() < self.param)


@dataclass
class CamwState:
    weights: np.ndarray
    current_perm: Permutation | None = None
    transfer_alpha: float = 0.01
    restart_policy: RestartPolicy = field(default_factory=RestartPolicy)
    observed_switches: int = 0
    t: int = 0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if not MIN_TRANSFER_ALPHA <= self.transfer_alpha < 1 + 1e-12:
            raise ValueError(f"transfer alpha must lie in [{MIN_TRANSFER_ALPHA}, 1]")


def fresh_camw_state(n: int, alpha: float = 0.01,
                     policy: RestartPolicy | None = None) -> CamwState:
    return CamwState(weights=np.full(n + 1, 1.0 / (n + 1)),
                     transfer_alpha=alpha,
                     restart_policy=policy or RestartPolicy())


@dataclass
class ContinuousState:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.atleast_1d(np.asarray(self.y, dtype=float))


def fresh_continuous_state(n: int, domain: MaximizerDomain) -> ContinuousState:
    return ContinuousState(x=np.full(n, 0.5), y=domain.center())


def mw_update(p, losses, eta_x: float) -> np.ndarray:
    """Multiplicative-weights update, max-shifted so the normalizer never
    underflows for finite losses."""
    pv = p.p if isinstance(p, ChainWeights) else np.asarray(p, dtype=float)
    lv = np.asarray(losses, dtype=float)
    if not np.all(np.isfinite(lv)):
        raise ValueError("losses must be finite")
    z = -eta_x * lv
    w = pv * np.exp(z - z.max())
    return w / w.sum()


def geometric_transfer(p, shared, alpha: float) -> np.ndarray:
    """Chain-overlap transfer: shared indices keep (1−α)·weight plus the
    uniform floor α/(n+1); new indices get the floor only. The normalizer
    is at most 1, so every coordinate ends at least α/(n+1)."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0,1], got {alpha}")
    pv = p.p if isinstance(p, ChainWeights) else np.asarray(p, dtype=float)
    n1 = pv.size
    floor = alpha / n1
    ptil = np.full(n1, floor)
    idx = np.fromiter(shared, dtype=np.int64) if not isinstance(shared, np.ndarray) else shared
    ptil[idx] += (1 - alpha) * pv[idx]
    return ptil / ptil.sum()


def fixed_share_update(p, losses, eta_x: float, beta: float) -> np.ndarray:
    """(1−β)·MW update + β·uniform."""
    if not 0 <= beta <= 1:
        raise ValueError(f"beta must lie in [0,1], got {beta}")
    q = mw_update(p, losses, eta_x)
    return (1 - beta) * q + beta / q.size


def mirror_ascent_y(y, grad, eta_y: float, domain: MaximizerDomain) -> np.ndarray:
    """Euclidean (projected) ascent step on the maximizer's box."""
    yv = np.atleast_1d(np.asarray(y, dtype=float))
    return domain.clamp(yv + eta_y * np.asarray(grad, dtype=float))


def _apply_reset(state: CamwState, variant: str, new_perm: Permutation):
    n1 = state.weights.size
    if variant == "cold":
        state.weights = np.full(n1, 1.0 / n1)
    elif variant == "warm_uniform_floor":
        state.weights = geometric_transfer(state.weights, np.arange(n1), state.transfer_alpha)
    elif variant == "geometric":
        shared = shared_prefix_indices(new_perm, state.current_perm)
        state.weights = geometric_transfer(state.weights, sorted(shared), state.transfer_alpha)
    else:
        raise ValueError(f"unknown CAMW variant {variant!r}")


def camw_step(state: CamwState, round: GameRound, steps: StepSizes,
              variant: str, y_t) -> tuple:
    """One CAMW round: observe the best-response cell, transfer or reset on
    a change, play the chain-weight threshold point, then run MW on the
    observed chain-vertex losses. Returns (x_t, state).

    The first round initializes the cell without firing a transfer, so a
    switch-free horizon runs the identical code path in all variants.
    """
    n = round.n
    if state.weights.size != n + 1:
        raise ValueError("state dimension does not match the round's ground set")
    state.t += 1
    perm = br_permutation(round.payoff, y_t, n)
    if state.current_perm is None:
        state.current_perm = perm
    else:
        changed = perm.order != state.current_perm.order
        if changed:
            state.observed_switches += 1
        if state.restart_policy.fires(state.t, changed):
            _apply_reset(state, variant, perm)
        state.current_perm = perm
    x_t = weights_to_threshold(ChainWeights(state.weights), perm)
    losses = np.array([round.payoff(S, y_t) for S in chain_prefix_tuples(perm)])
    state.weights = mw_update(state.weights, losses, steps.eta_x)
    return x_t, state


def olmda_step(state: ContinuousState, round: GameRound, steps: StepSizes) -> tuple:
    """One mirror-descent-ascent round on (cube, box) with Euclidean maps.

    Plays the current pair, then descends the Lovász subgradient in x and
    ascends the payoff gradient in y, clamping both. Returns ((x,y), state).
    """
    play = (ThresholdPoint(state.x.copy()), state.y.copy())
    g_x = lovasz_subgradient_x(round.payoff, state.x, state.y if state.y.size > 1 else state.y[0])
    g_y = np.atleast_1d(np.asarray(round.grad_y(state.x, state.y), dtype=float))
    state.x = np.clip(state.x - steps.eta_x * g_x, 0.0, 1.0)
    state.y = mirror_ascent_y(state.y, g_y, steps.eta_y, round.domain)
    return play, state


def ogd_step(state: ContinuousState, round: GameRound, steps: StepSizes) -> tuple:
    """Projected online gradient descent on the cube; identical update rule
    to OLMDA under Euclidean mirror maps, kept as a separate label so that
    experiment outputs match the baseline naming."""
    return olmda_step(state, round, steps)
