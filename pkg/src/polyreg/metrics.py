"""Regret accounting, instability statistics, and theory normalization."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .games import GameRound
from .lovasz import Permutation, br_permutation, lovasz_value


@dataclass
class RegretTrace:
    """Per-round saddle-point regret increments and their running sums."""

    increments: np.ndarray

    def __post_init__(self):
        self.increments = np.asarray(self.increments, dtype=float)

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.increments)

    @property
    def avg_final(self) -> float:
        return float(self.increments.sum() / self.increments.size)


@dataclass
class SwitchStats:
    sc_oracle: int | None = None
    sc_observed: int | None = None
    sc_br_offline: int | None = None
    rs: int | None = None


def saddle_regret_increment(round: GameRound, x_t, y_t) -> float:
    """Eq.-style saddle regret increment f_L(x_t, y*) − f_L(x*, y_t)."""
    if round.equilibrium is None:
        raise ValueError(
            "round has no equilibrium record; compute one with brute_force_saddle")
    eq = round.equilibrium
    y_star = eq.y_star if eq.y_star.size > 1 else float(eq.y_star[0])
    yv = np.atleast_1d(np.asarray(y_t, dtype=float))
    y_val = yv if yv.size > 1 else float(yv[0])
    return lovasz_value(round.payoff, x_t, y_star) - lovasz_value(round.payoff, eq.x_star, y_val)


def switch_count(perms: Sequence[Permutation]) -> int:
    """Number of adjacent unequal pairs in a permutation sequence."""
    if len(perms) == 0:
        raise ValueError("need at least one permutation")
    return sum(1 for a, b in zip(perms, perms[1:]) if a.order != b.order)


def sc_br_offline(rounds: Sequence[GameRound], y_log: Sequence) -> int:
    """Best-response switch count recomputed by replaying logged maximizer iterates."""
    perms = [br_permutation(r.payoff, y, r.n) for r, y in zip(rounds, y_log)]
    return switch_count(perms)


def theory_normalize(avg_regret: float, kappa: float, v_eff: float, T: int,
                     mode: str, d_eff: float | None = None) -> float:
    """Divide average regret by the predicted rate.

    struct mode: sqrt((1+kappa)·ln(v_eff)/T); cont mode: sqrt(d_eff/T).
    """
    if not np.isfinite(avg_regret):
        raise ValueError("average regret must be finite")
    if T < 1:
        raise ValueError("T must be >= 1")
    if mode == "struct":
        if v_eff < 2:
            raise ValueError("struct normalization needs v_eff >= 2")
        return float(avg_regret / np.sqrt((1 + kappa) * np.log(v_eff) / T))
    if mode == "cont":
        if d_eff is None or d_eff <= 0:
            raise ValueError("cont normalization needs positive d_eff")
        return float(avg_regret / np.sqrt(d_eff / T))
    raise ValueError(f"unknown normalization mode {mode!r}")


def loglog_slope(xs, ys) -> float:
    """OLS slope of ln(ys) on ln(xs)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 3:
        raise ValueError("need at least 3 points for a slope")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("log-log slope needs positive inputs")
    lx, ly = np.log(xs), np.log(ys)
    lx = lx - lx.mean()
    return float((lx @ (ly - ly.mean())) / (lx @ lx))


def coeff_variation(vals) -> float:
    """Sample standard deviation over mean; a single value has CV 0."""
    v = np.asarray(vals, dtype=float)
    if v.size == 0:
        raise ValueError("need at least one value")
    mean = v.mean()
    if mean == 0:
        raise ValueError("coefficient of variation undefined for zero mean")
    if v.size == 1:
        return 0.0
    return float(v.std(ddof=1) / mean)
