"""Pure-numpy experiment loops: the fallback backend.

The compiled extension (`_fastloops`) mirrors these functions; both
implement exactly the per-round semantics of the step-level API in
`learners`/`pathgame` (tested for agreement). Keep the two in sync.
"""
from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

ALGO_IDS = {"camw_cold": 0, "camw_ws": 1, "camw_geometric": 2,
            "olmda": 3, "ogd": 4, "fixed_share": 5}
POLICY_IDS = {"adaptive": 0, "none": 1, "periodic": 2, "random": 3}


def _ks_for_order(order: np.ndarray, pos: np.ndarray) -> np.ndarray:
    """k-staircase of the n+1 prefixes of `order` against epoch positions.

    ks[i] = deepest epoch-chain prefix contained in the first i elements.
    """
    n = order.size
    rank = np.empty(n, dtype=np.int64)
    rank[pos[order]] = np.arange(n)
    M = np.maximum.accumulate(rank)
    return np.searchsorted(M, np.arange(n + 1), side="left")


def _staircase(n: int, xi_row) -> np.ndarray:
    i = np.arange(n + 1)
    return ((1.0 - 2.0 * i / n) + xi_row / n) / (1.0 + 1.0 / n)


def _transfer(p: np.ndarray, shared_mask: np.ndarray, alpha: float) -> np.ndarray:
    n1 = p.size
    ptil = np.full(n1, alpha / n1)
    ptil[shared_mask] += (1.0 - alpha) * p[shared_mask]
    return ptil / ptil.sum()


def _shared_mask(new_order: np.ndarray, prev_order: np.ndarray) -> np.ndarray:
    """Boolean mask over chain indices 0..n of prefix-set equality."""
    n = new_order.size
    posb = np.empty(n, dtype=np.int64)
    posb[prev_order] = np.arange(n)
    runmax = np.maximum.accumulate(posb[new_order])
    mask = np.zeros(n + 1, dtype=bool)
    mask[0] = True
    mask[1:] = runmax == np.arange(n)
    return mask


def run_lovasz_game(n, T, c, a, B, G_istar, i_star,
                    starts, perms, dpos, L, xi,
                    eq_A, eq_B, eq_wstar,
                    algo, eta_x, eta_y, alpha, beta,
                    policy_kind, policy_param, policy_seed,
                    oracle_pi=False):
    """Run one algorithm for T rounds on an epoch-adversary instance.

    Returns (increments, br_changes, restarts). `algo`/`policy_kind` are the
    integer ids from ALGO_IDS/POLICY_IDS.
    """
    increments = np.empty(T)
    ids = np.arange(n)
    y = 0.0
    continuous = algo in (3, 4)
    if continuous:
        x = np.full(n, 0.5)
    else:
        p = np.full(n + 1, 1.0 / (n + 1))
    rand_u = None
    if policy_kind == 3:
        rand_u = np.random.Generator(np.random.Philox(key=[policy_seed, 0x9e57])).random(T)
    ui = 0
    br_changes = 0
    restarts = 0
    prev_br = None
    frozen_order = None
    epoch = -1
    pos = delem = first = None
    E1 = starts.size - 1
    for t in range(T):
        if epoch + 1 < E1 and t == starts[epoch + 1]:
            epoch += 1
            pe = perms[epoch]
            pos = np.empty(n, dtype=np.int64)
            pos[pe] = ids
            delem = np.empty(n)
            delem[pe] = dpos
            first = int(pe[0])
        wy = 0.5 * (1.0 + y)
        stair = _staircase(n, xi[t].astype(float)) if a > 0 else None
        # observable best-response permutation (ascending marginals, id ties)
        marg = c * delem
        if a > 0:
            marg = marg.copy()
            marg[first] += a * wy * (stair[1] - stair[0])
        br = np.lexsort((ids, marg))
        if prev_br is not None and not np.array_equal(br, prev_br):
            br_changes += 1
        if algo <= 2:  # CAMW family
            order = perms[epoch] if oracle_pi else br
            if t == 0:
                cur = order.copy()
            else:
                perm_moved = not np.array_equal(order, cur)
                fire = False
                if policy_kind == 0:
                    fire = perm_moved
                elif policy_kind == 2:
                    fire = t % int(policy_param) == 0  # t is 0-based; round t+1
                elif policy_kind == 3:
                    fire = rand_u[ui] < policy_param
                    ui += 1
                if fire:
                    restarts += 1
                    if algo == 0:
                        p = np.full(n + 1, 1.0 / (n + 1))
                    elif algo == 1:
                        p = _transfer(p, np.ones(n + 1, dtype=bool), alpha)
                    else:
                        p = _transfer(p, _shared_mask(order, cur), alpha)
                cur = order.copy()
        elif algo == 5:  # fixed share: chain frozen at the first round
            if t == 0:
                frozen_order = br.copy()
            order = frozen_order
        if continuous:
            order = np.lexsort((ids, -x))
        ks = _ks_for_order(order, pos)
        Ldet = np.empty(n + 1)
        Ldet[0] = B
        Ldet[1:] = B + np.cumsum(delem[order])
        Ldet[ks >= i_star] -= B + G_istar
        if a > 0:
            sk = stair[ks]
            lref = c * Ldet + (a * eq_wstar[t]) * sk
            lplay = c * Ldet + (a * wy) * sk
        else:
            lref = lplay = c * Ldet
        ref_value = eq_A[t] + eq_B[t] * wy
        if continuous:
            xs = x[order]
            gaps = np.empty(n + 1)
            gaps[0] = 1.0 - xs[0]
            gaps[1:n] = xs[:-1] - xs[1:]
            gaps[n] = xs[-1]
            increments[t] = gaps @ lref - ref_value
            if a > 0:
                gy = 0.5 * a * (gaps @ sk)
            g = np.empty(n)
            g[order] = np.diff(lplay)
            x = np.clip(x - eta_x * g, 0.0, 1.0)
        else:
            increments[t] = p @ lref - ref_value
            if a > 0:
                gy = 0.5 * a * (p @ sk)
            z = -eta_x * lplay
            w = p * np.exp(z - z.max())
            p = w / w.sum()
            if algo == 5:
                p = (1.0 - beta) * p + beta / (n + 1)
        if a > 0:
            y = min(1.0, max(-1.0, y + eta_y * gy))
        prev_br = br
    return increments, br_changes, restarts


# ---------------------------------------------------------------------------
# path game


def run_path_mw(PL, starts, per_round, eta):
    """MW-with-restarts over enumerated paths.

    PL holds path-loss rows, per epoch (per_round=False) or per round.
    Returns (increments, restarts).
    """
    T = int(starts[-1])
    N = PL.shape[1]
    increments = np.empty(T)
    w = np.full(N, 1.0 / N)
    restarts = 0
    last = -1
    epoch = -1
    E1 = starts.size - 1
    for t in range(T):
        if epoch + 1 < E1 and t == starts[epoch + 1]:
            epoch += 1
        pl = PL[t] if per_round else PL[epoch]
        best = int(np.argmin(pl))
        if t > 0 and best != last:
            restarts += 1
            w = np.full(N, 1.0 / N)
        last = best
        increments[t] = w @ pl - pl[best]
        z = -eta * (pl - pl[best])
        u = w * np.exp(z - z.max())
        w = u / u.sum()
    return increments, restarts


def _lmo_grid(k, cr, cd):
    """Vectorized min-cost staircase path: returns (k,k) go-right decisions.

    cr: (k, k-1) right-edge costs by row; cd: (k-1, k) down-edge costs by row.
    Right edges win ties.
    """
    INF = np.inf
    go_right = np.zeros((k, k), dtype=bool)
    val_below = None
    for r in range(k - 1, -1, -1):
        if r == k - 1:
            dopt = np.full(k, INF)
            dopt[k - 1] = 0.0
        else:
            dopt = cd[r] + val_below
        rc = np.concatenate([[0.0], np.cumsum(cr[r])])
        t = np.minimum.accumulate((rc + dopt)[::-1])[::-1] - rc
        go_right[r, : k - 1] = cr[r] + t[1:] <= dopt[: k - 1]
        val_below = t
    return go_right


def run_path_fw(C, starts, per_round, plmin, k, eta, z1,
                right_idx, down_idx):
    """Regularized online Frank-Wolfe over the flow polytope.

    C holds edge-cost rows (per epoch or per round); plmin the matching
    per-row best path loss. Returns increments.
    """
    T = int(starts[-1])
    d = C.shape[1]
    increments = np.empty(T)
    z = z1.copy()
    G = np.zeros(d)
    epoch = -1
    E1 = starts.size - 1
    for t in range(T):
        if epoch + 1 < E1 and t == starts[epoch + 1]:
            epoch += 1
        row = t if per_round else epoch
        cvec = C[row]
        increments[t] = z @ cvec - plmin[row]
        G = G + cvec
        grad = eta * G + 2.0 * (z - z1)
        go_right = _lmo_grid(k, grad[right_idx], grad[down_idx])
        v = np.zeros(d)
        r = c = 0
        while (r, c) != (k - 1, k - 1):
            if go_right[r, c]:
                v[right_idx[r, c]] = 1.0
                c += 1
            else:
                v[down_idx[r, c]] = 1.0
                r += 1
        gamma = min(1.0, 1.0 / np.sqrt(t + 1.0))
        z = z + gamma * (v - z)
    return increments
