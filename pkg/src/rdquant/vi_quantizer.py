"""Partition design as a layered MDP solved by tabular value iteration.

For a fixed anchor boundary the state is ``(segment start, level)``: the cell
that closes the previous region and the number of regions placed so far. An
action picks the next boundary; its reward is the segment cost between the
two. Transitions are deterministic and every action raises the level by one,
so the state graph is a DAG of depth ``k``. Values are costs and the Bellman
update minimises.

With ``gamma == 1`` the greedy policy reproduces the dynamic program exactly.
``gamma < 1`` is supported together with the sweep-count bound
:func:`horizon_bound`.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distortion import ObjectiveConfig, SegmentCostTable
from .dp_quantizer import Partition, _check_k, _pick_smallest_index, partition_from_boundaries
from .exceptions import DomainError, InconsistencyError
from .grid import PopulationProfile

__all__ = [
    "Mdp",
    "ValueTable",
    "build_mdp",
    "horizon_bound",
    "value_iteration",
    "extract_policy",
    "bellman_residual",
    "design_fixed_k_vi",
]

SWEEP_ORDERS = ("reverse", "synchronous")


@dataclass(frozen=True)
class Mdp:
    """Layered MDP for one anchor.

    Internally a state is ``(level, q)`` with ``q`` the number of cells
    already covered east of the anchor; the public accessors speak in absolute
    cell indices. ``rewards[q, w]`` is the cost of the segment of width ``w``
    starting ``q`` cells east of the anchor.
    """

    table: SegmentCostTable = field(repr=False)
    k: int
    anchor: int
    n_cells: int
    min_width: int
    rewards: np.ndarray = field(repr=False)

    # feasible positions per level
    def q_range(self, level: int) -> tuple:
        n, k, mw = self.n_cells, self.k, self.min_width
        if level == 0:
            return 0, 0
        if level == k:
            return n, n
        return level * mw, n - (k - level) * mw

    def w_range(self, level: int, q: int) -> tuple:
        n, k, mw = self.n_cells, self.k, self.min_width
        if level == k - 1:
            return n - q, n - q
        return mw, n - q - (k - level - 1) * mw

    def _key(self, state) -> tuple:
        start, level = state
        if not 0 <= level <= self.k:
            raise DomainError(f"level {level} outside 0..{self.k}")
        q = self.n_cells if level == self.k else (start - self.anchor) % self.n_cells
        lo, hi = self.q_range(level)
        if not lo <= q <= hi:
            raise DomainError(f"state {state} is not part of this MDP")
        return level, q

    def states(self) -> list:
        """All states as ``(start cell, level)``, terminal last."""
        out = []
        for level in range(self.k + 1):
            lo, hi = self.q_range(level)
            out.extend(((self.anchor + q) % self.n_cells, level) for q in range(lo, hi + 1))
        return out

    @property
    def root(self) -> tuple:
        return (self.anchor, 0)

    def is_terminal(self, state) -> bool:
        return state[1] == self.k

    def actions(self, state) -> list:
        """Feasible next-boundary cells from ``state``, west to east."""
        level, q = self._key(state)
        if level == self.k:
            return []
        lo, hi = self.w_range(level, q)
        return [(self.anchor + q + w) % self.n_cells for w in range(lo, hi + 1)]

    def _width(self, state, action) -> tuple:
        level, q = self._key(state)
        w = (action - self.anchor - q) % self.n_cells or self.n_cells
        lo, hi = self.w_range(level, q)
        if level == self.k or not lo <= w <= hi:
            raise DomainError(f"action {action} not available in state {state}")
        return level, q, w

    def successor(self, state, action) -> tuple:
        level, _, _ = self._width(state, action)
        return (action % self.n_cells, level + 1)

    def reward(self, state, action) -> float:
        _, q, w = self._width(state, action)
        return float(self.rewards[q, w])


def build_mdp(profile: PopulationProfile, k: int, anchor: int,
              cfg: ObjectiveConfig | None = None,
              table: SegmentCostTable | None = None) -> Mdp:
    """Layered MDP whose episodes are the feasible boundary sequences from ``anchor``."""
    cfg = cfg or ObjectiveConfig()
    n = profile.n_cells
    k = _check_k(n, k, cfg)
    if int(anchor) != anchor or not 0 <= anchor < n:
        raise DomainError(f"anchor {anchor!r} out of range for {n} cells")
    anchor = int(anchor)
    table = table if table is not None else SegmentCostTable(profile, cfg)
    full = np.full((n + 1, n + 1), np.inf)
    full[:n, : table.max_width + 1] = table.total[(anchor + np.arange(n)) % n]
    full.setflags(write=False)
    return Mdp(table, k, anchor, n, cfg.min_width, full)


def horizon_bound(v1_minus_v0_sup: float, gamma: float, epsilon: float) -> int:
    """Sweeps ``T`` that guarantee ``||V_T - V*||_inf < epsilon`` for ``gamma < 1``.

    Least integer ``T >= (log d + log 2 - log(eps (1 - gamma))) / log(1 / gamma)``
    with ``d = ||V_1 - V_0||_inf``, clamped below at 1.
    """
    if gamma == 1:
        raise DomainError("horizon bound needs gamma < 1; with gamma == 1 the DAG depth bounds the sweeps")
    if not 0 < gamma < 1:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma!r}")
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon!r}")
    if not (v1_minus_v0_sup >= 0 and math.isfinite(v1_minus_v0_sup)):
        raise DomainError(f"sup norm must be finite and >= 0, got {v1_minus_v0_sup!r}")
    if v1_minus_v0_sup == 0:
        return 1
    t = (math.log(v1_minus_v0_sup) + math.log(2) - math.log(epsilon * (1 - gamma))) / math.log(1 / gamma)
    return max(1, math.ceil(t))


@dataclass
class ValueTable:
    """Values and greedy actions per state, indexed ``[level, q]``.

    Entries for non-states are NaN (values) and -1 (actions). ``greedy``
    stores segment widths; use :func:`extract_policy` for boundaries.
    """

    values: np.ndarray
    previous: np.ndarray
    greedy: np.ndarray
    gamma: float
    sweeps_run: int
    sup_delta: float
    converged: bool
    deltas: list = field(default_factory=list)
    history: list | None = None

    @property
    def root_value(self) -> float:
        return float(self.values[0, 0])


def _state_mask(mdp: Mdp) -> np.ndarray:
    mask = np.zeros((mdp.k + 1, mdp.n_cells + 1), dtype=bool)
    for level in range(mdp.k + 1):
        lo, hi = mdp.q_range(level)
        mask[level, lo : hi + 1] = True
    return mask


def _backup(mdp: Mdp, level: int, src_next: np.ndarray, gamma: float):
    """Bellman backup for every state of ``level`` given next-level values."""
    n = mdp.n_cells
    lo, hi = mdp.q_range(level)
    qs = np.arange(lo, hi + 1)
    if level == mdp.k - 1:
        ws = n - qs
        vals = mdp.rewards[qs, ws] + gamma * src_next[n]
        return qs, vals, ws
    w_lo, w_hi = mdp.w_range(level, lo)
    ws = np.arange(w_lo, w_hi + 1)
    succ = qs[:, None] + ws[None, :]
    limit = n - (mdp.k - level - 1) * mdp.min_width
    ok = succ <= limit
    cand = mdp.rewards[qs[:, None], ws[None, :]] + gamma * src_next[np.minimum(succ, n)]
    cand[~ok] = np.inf
    j = np.argmin(cand, axis=1)  # first minimum: westernmost boundary
    return qs, cand[np.arange(qs.size), j], ws[j]


def value_iteration(mdp: Mdp, gamma: float = 1.0, epsilon: float = 1e-9,
                    max_sweeps: int | None = None, order: str = "reverse",
                    stop_early: bool = True, record: bool = False) -> ValueTable:
    """Tabular value iteration from all-zero values.

    Args:
        gamma: Discount in ``(0, 1]``.
        epsilon: Stop once a sweep changes no value by ``epsilon`` or more.
        max_sweeps: Sweep budget. Defaults to ``k + 1`` for ``gamma == 1``;
            for ``gamma < 1`` it is set from :func:`horizon_bound` after the
            first sweep.
        order: ``"reverse"`` updates levels deepest-first and lets each
            level read the next level's values from the current sweep;
            ``"synchronous"`` reads only the previous sweep's values.
        stop_early: If False, run exactly ``max_sweeps`` sweeps.
        record: Keep a copy of the values after every sweep in ``history``.
    """
    if not 0 < gamma <= 1:
        raise DomainError(f"gamma must lie in (0, 1], got {gamma!r}")
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon!r}")
    if order not in SWEEP_ORDERS:
        raise DomainError(f"order must be one of {SWEEP_ORDERS}, got {order!r}")
    if max_sweeps is not None and max_sweeps < 1:
        raise DomainError("max_sweeps must be >= 1")

    mask = _state_mask(mdp)
    prev = np.where(mask, 0.0, np.nan)
    budget = max_sweeps if max_sweeps is not None else (mdp.k + 1 if gamma == 1 else None)
    deltas = []
    history = [prev.copy()] if record else None
    sweeps = 0
    while True:
        cur = prev.copy()
        for level in range(mdp.k - 1, -1, -1):
            src = cur if order == "reverse" else prev
            qs, vals, _ = _backup(mdp, level, src[level + 1], gamma)
            cur[level, qs] = vals
        sweeps += 1
        delta = float(np.nanmax(np.abs(cur - prev)))
        deltas.append(delta)
        if record:
            history.append(cur.copy())
        if budget is None:
            budget = horizon_bound(delta, gamma, epsilon)
        done = delta < epsilon
        previous, prev = prev, cur
        if (done and stop_early) or sweeps >= budget:
            break

    greedy = np.full(mask.shape, -1, dtype=np.int64)
    for level in range(mdp.k):
        qs, _, ws = _backup(mdp, level, prev[level + 1], gamma)
        greedy[level, qs] = ws
    converged = deltas[-1] < epsilon
    if not converged:
        warnings.warn(
            f"value iteration stopped after {sweeps} sweeps with sup delta {deltas[-1]:.3g} >= {epsilon:g}",
            RuntimeWarning,
            stacklevel=2,
        )
    return ValueTable(prev, previous, greedy, gamma, sweeps, deltas[-1], converged, deltas, history)


def bellman_residual(table: ValueTable, mdp: Mdp) -> float:
    """``max_s |V(s) - min_a [R(s, a) + gamma V(s')]|`` over non-terminal states."""
    worst = 0.0
    for level in range(mdp.k):
        qs, vals, _ = _backup(mdp, level, table.values[level + 1], table.gamma)
        worst = max(worst, float(np.max(np.abs(table.values[level, qs] - vals))))
    return worst


def extract_policy(table: ValueTable, mdp: Mdp) -> Partition:
    """Follow greedy actions from the root and assemble the partition."""
    if not table.converged:
        warnings.warn("extracting a policy from unconverged values", RuntimeWarning, stacklevel=2)
    n = mdp.n_cells
    boundaries = [mdp.anchor]
    q = 0
    for level in range(mdp.k):
        w = int(table.greedy[level, q])
        lo, hi = mdp.w_range(level, q)
        if not lo <= w <= hi:
            raise InconsistencyError(f"no valid greedy action at level {level}, offset {q}")
        q += w
        if level < mdp.k - 1:
            boundaries.append((mdp.anchor + q) % n)
    if q != n:
        raise InconsistencyError(f"greedy path covers {q} of {n} cells")
    return partition_from_boundaries(mdp.table, boundaries, mdp.table.cfg.eta)


def design_fixed_k_vi(profile: PopulationProfile, k: int, cfg: ObjectiveConfig | None = None,
                      gamma: float = 1.0, epsilon: float = 1e-9, max_sweeps: int | None = None,
                      order: str = "reverse", table: SegmentCostTable | None = None,
                      n_jobs: int = 1) -> Partition:
    """Solve one MDP per anchor and keep the best extracted partition.

    With ``gamma == 1`` anchors are compared by root value, which matches the
    dynamic program bit for bit; otherwise by the undiscounted cost of each
    anchor's greedy partition. Ties go to the smallest anchor.
    """
    cfg = cfg or ObjectiveConfig()
    k = _check_k(profile.n_cells, k, cfg)
    table = table if table is not None else SegmentCostTable(profile, cfg)

    def solve(anchor):
        mdp = build_mdp(profile, k, anchor, cfg, table=table)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            vt = value_iteration(mdp, gamma, epsilon, max_sweeps, order)
            part = extract_policy(vt, mdp)
        return vt.root_value, part

    anchors = range(profile.n_cells)
    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(solve, anchors))
    else:
        results = [solve(a) for a in anchors]
    if gamma == 1:
        scores = np.array([r[0] for r in results])
    else:
        scores = np.array([r[1].total_cost for r in results])
    return results[_pick_smallest_index(scores)][1]
