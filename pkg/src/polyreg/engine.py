"""Experiment engine: runs one (instance, algorithm, seed) cell fast.

The engine drives the backend kernels on compact instance arrays; the
step-level API in `learners`/`pathgame` is the reference implementation and
the two are tested for agreement on small instances.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .games import EpochAdversary
from .learners import (
    ALGORITHM_NAMES,
    RestartPolicy,
    StepSizes,
    camw_step,
    default_eta_continuous,
    default_eta_x,
    default_eta_y,
    fresh_camw_state,
    fresh_continuous_state,
    ogd_step,
    olmda_step,
)
from .metrics import saddle_regret_increment, theory_normalize
from .pathgame import GridDag, PathSet, enumerate_paths, gen_path_losses, uniform_flow

PATH_ALGORITHMS = ("mw_restarts", "ogd_fw")

PATH_MW_ETA_SCALE = 0.5  # loss-range-normalized tuned rate, halved (see ledger)


@dataclass
class CellResult:
    increments: np.ndarray
    observed_switches: int
    oracle_switches: int
    restarts: int

    @property
    def cum_regret(self) -> float:
        return float(self.increments.sum())

    @property
    def avg_regret(self) -> float:
        return float(self.increments.mean())


def lovasz_eta_x(algo: str, n: int, T: int, target: int) -> float:
    if algo in ("olmda", "ogd"):
        return default_eta_continuous(n, T)
    return default_eta_x(n, T, target)


def run_lovasz_cell(n: int, T: int, target: int, seed: int, algo: str,
                    noise_amplitude: float = 0.0, perturbation_scale: float = 1.0,
                    eta_x: float | None = None, eta_y: float | None = None,
                    alpha: float = 0.01, beta: float = 0.01,
                    policy: str = "adaptive", policy_param: float = 0.0,
                    oracle_pi: bool = False,
                    inst: EpochAdversary | None = None) -> CellResult:
    """One algorithm on one designed Lovász-game instance."""
    if algo not in ALGORITHM_NAMES:
        raise ValueError(f"unknown algorithm {algo!r}")
    if inst is None:
        inst = EpochAdversary(n, T, target, noise_amplitude, perturbation_scale, seed)
    ex = lovasz_eta_x(algo, n, T, target) if eta_x is None else eta_x
    ey = default_eta_y(T) if eta_y is None else eta_y
    xi = inst.xi if inst.xi is not None else np.zeros((T, n + 1), dtype=np.int8)
    inc, br_changes, restarts = _kernels.run_lovasz_game(
        n, T, inst.c, inst.a, inst.B, inst.G_istar, inst.i_star,
        inst.starts, inst.perms, inst.dpos, inst.L, xi,
        inst.eq_A, inst.eq_B, inst.eq_wstar,
        _kernels.ALGO_IDS[algo], ex, ey, alpha, beta,
        _kernels.POLICY_IDS[policy], policy_param, seed, bool(oracle_pi))
    return CellResult(np.asarray(inc), int(br_changes), inst.s, int(restarts))


def reference_run_lovasz(inst: EpochAdversary, algo: str,
                         eta_x: float | None = None, eta_y: float | None = None,
                         alpha: float = 0.01, policy: str = "adaptive",
                         policy_param: float = 0.0, seed: int = 0) -> CellResult:
    """Slow oracle-based run through the step-level API (tests only)."""
    n, T = inst.n, inst.T
    ex = lovasz_eta_x(algo, n, T, inst.s) if eta_x is None else eta_x
    steps = StepSizes(ex, default_eta_y(T) if eta_y is None else eta_y)
    inc = np.empty(T)
    variant = {"camw_cold": "cold", "camw_ws": "warm_uniform_floor",
               "camw_geometric": "geometric"}.get(algo)
    if variant is not None:
        state = fresh_camw_state(n, alpha, RestartPolicy(policy, policy_param, seed))
        y = np.zeros(1)
        for t in range(T):
            rnd = inst.round(t)
            x_t, state = camw_step(state, rnd, steps, variant, float(y[0]))
            inc[t] = saddle_regret_increment(rnd, x_t, y)
            gy = rnd.grad_y(x_t, y)
            y = rnd.domain.clamp(y + steps.eta_y * gy)
        return CellResult(inc, state.observed_switches, inst.s, 0)
    if algo in ("olmda", "ogd"):
        step_fn = olmda_step if algo == "olmda" else ogd_step
        state = fresh_continuous_state(n, inst.round(0).domain)
        for t in range(T):
            rnd = inst.round(t)
            (x_t, y_t), state = step_fn(state, rnd, steps)
            inc[t] = saddle_regret_increment(rnd, x_t, y_t)
        return CellResult(inc, 0, inst.s, 0)
    raise ValueError(f"reference runner does not support {algo!r}")


# ---------------------------------------------------------------------------
# path game


def path_mw_eta(k: int, N: int, T: int, target: int, margin: float) -> float:
    loss_range = 2 * (k - 1) * margin
    return PATH_MW_ETA_SCALE * float(np.sqrt((1 + target) * np.log(N) / T)) / loss_range


def run_path_cell(k: int, T: int, target: int, seed: int, algo: str,
                  margin: float = 0.3, noise_amplitude: float = 0.0,
                  eta: float | None = None,
                  pathset: PathSet | None = None) -> CellResult:
    """One algorithm on one designed shortest-path schedule."""
    if algo not in PATH_ALGORITHMS:
        raise ValueError(f"unknown path algorithm {algo!r}")
    dag = GridDag(k)
    if pathset is None:
        pathset = enumerate_paths(dag)
    sched = gen_path_losses(dag, T, target, margin, noise_amplitude, seed, verify=False)
    Pf = pathset.paths.astype(float)
    if sched.noise is None:
        C = sched.epoch_costs
        per_round = False
    else:
        C = np.stack([sched.cost(t) for t in range(T)])
        per_round = True
    PL = C @ Pf.T
    argmins = np.argmin(PL, axis=1)
    if per_round:
        rs_observed = int(np.count_nonzero(np.diff(argmins)))
    else:
        per_epoch_arg = argmins[np.searchsorted(sched.starts, np.arange(T), side="right") - 1]
        rs_observed = int(np.count_nonzero(np.diff(per_epoch_arg)))
    if algo == "mw_restarts":
        e = path_mw_eta(k, pathset.N, T, target, margin) if eta is None else eta
        inc, restarts = _kernels.run_path_mw(PL, sched.starts, per_round, e)
        return CellResult(np.asarray(inc), rs_observed, target, int(restarts))
    plmin = PL.min(axis=1)
    right_idx = np.array([[dag.edge_right(r, c) for c in range(k - 1)] for r in range(k)],
                         dtype=np.int64)
    down_idx = np.array([[dag.edge_down(r, c) for c in range(k)] for r in range(k - 1)],
                        dtype=np.int64)
    inc = _kernels.run_path_fw(C, sched.starts, per_round, plmin, k,
                               1.0 / np.sqrt(T), uniform_flow(dag), right_idx, down_idx)
    return CellResult(np.asarray(inc), rs_observed, target, 0)


def normalized_columns(avg_regret: float, target: int, T: int,
                       v_eff: float, d_eff: float) -> tuple:
    struct = theory_normalize(avg_regret, target, v_eff, T, "struct") \
        if avg_regret > 0 else 0.0
    cont = theory_normalize(avg_regret, target, v_eff, T, "cont", d_eff) \
        if avg_regret > 0 else 0.0
    return struct, cont
