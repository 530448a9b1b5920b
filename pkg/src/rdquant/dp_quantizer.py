"""Exact optimal circular partitions by dynamic programming.

A ``k``-region partition of the circle is an anchor boundary plus ``k - 1``
interior boundaries. For every anchor the remaining problem is a linear
segmentation; all anchors share one table of segment costs and one set of
level tables::

    W[1][s, L] = D1(s, L)
    W[l][s, L] = min_w  D1(s, w) + W[l-1][(s + w) % N, L - w]

where ``W[l][s, L]`` is the cheapest way to cover the ``L`` cells east of
boundary ``s`` with ``l`` segments, each at least ``min_width`` wide. The
optimum for anchor ``a`` is ``W[k][a, N]``.

Ties: smallest anchor (within a relative 1e-12), then the lexicographically
smallest boundary sequence.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .distortion import (
    TIE_RTOL,
    ObjectiveConfig,
    SegmentCostTable,
    segment_cost,
    segment_widths,
)
from .exceptions import ConstraintError, DomainError
from .grid import PopulationProfile

__all__ = [
    "Partition",
    "design_fixed_k",
    "design_open_k",
    "choose_prime_meridian_uniform",
    "uniform_offset_costs",
    "brute_force_design",
    "partition_from_boundaries",
    "LevelTables",
]

BRUTE_FORCE_MAX_CELLS = 24
BRUTE_FORCE_MAX_K = 4


@dataclass(frozen=True)
class Partition:
    """A circular partition into ``k`` contiguous regions.

    ``boundaries[m]`` is the cell whose eastern edge closes region ``m``'s
    western neighbour; region ``m`` covers cells ``boundaries[m]+1`` through
    ``boundaries[m+1]`` (the last region wraps back to ``boundaries[0]``).
    ``rotation`` is the anchor boundary, always ``boundaries[0]``.
    """

    k: int
    rotation: int
    boundaries: tuple
    rep_points: tuple
    segment_costs: tuple
    total_cost: float
    eta: float = 0.0
    n_cells: int = field(default=0, compare=False)

    @property
    def widths(self) -> np.ndarray:
        return segment_widths(self.boundaries, self.n_cells)

    @property
    def distortion(self) -> float:
        """Total without the per-boundary penalty."""
        return float(sum(c.total for c in self.segment_costs))

    def region_of(self, cells) -> np.ndarray:
        """Region label (0-based, in boundary order) of each cell index."""
        cells = np.asarray(cells, dtype=np.int64) % self.n_cells
        rel = (cells - self.rotation - 1) % self.n_cells
        ends = np.cumsum(self.widths)
        return np.searchsorted(ends, rel, side="right")

    def to_dict(self, profile: PopulationProfile | None = None) -> dict:
        out = {
            "k": self.k,
            "rotation": self.rotation,
            "boundaries": list(self.boundaries),
            "rep_points": list(self.rep_points),
            "segment_costs": [
                {"circadian": c.circadian, "edge": c.edge, "total": c.total}
                for c in self.segment_costs
            ],
            "eta": self.eta,
            "total_cost": self.total_cost,
        }
        if profile is not None:
            out["boundaries_deg"] = [profile.east_edge_deg(b) for b in self.boundaries]
            out["rep_points_deg"] = [profile.center_deg(r) for r in self.rep_points]
        return out


def partition_from_boundaries(table: SegmentCostTable, boundaries, eta: float = 0.0) -> Partition:
    """Assemble a :class:`Partition` from boundaries using cached segment costs."""
    n = table.n_cells
    b = [int(x) % n for x in boundaries]
    order = np.argsort(b, kind="stable")
    b = [b[i] for i in order]
    widths = segment_widths(b, n)
    if np.any(widths < table.cfg.min_width):
        raise ConstraintError(f"segment widths {widths.tolist()} violate min_width {table.cfg.min_width}")
    costs = tuple(table[s, int(w)] for s, w in zip(b, widths))
    total = 0.0
    for c in costs:
        total += c.total
    return Partition(
        k=len(b),
        rotation=b[0],
        boundaries=tuple(b),
        rep_points=tuple(c.rep_point for c in costs),
        segment_costs=costs,
        total_cost=total + eta * len(b),
        eta=float(eta),
        n_cells=n,
    )


def _check_k(n: int, k, cfg: ObjectiveConfig) -> int:
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    k = int(k)
    if k * cfg.min_width > n:
        raise ConstraintError(
            f"infeasible: {k} regions of at least {cfg.min_width} cells need {k * cfg.min_width} "
            f"cells, profile has {n}"
        )
    return k


def _pick_smallest_index(values: np.ndarray) -> int:
    """Smallest index whose value is within TIE_RTOL of the minimum."""
    best = values.min()
    return int(np.argmax(values <= best + TIE_RTOL * abs(best)))


class LevelTables:
    """``W[l][s, L]`` and its arg-min widths for ``l = 1..k_max``.

    Only the ``L = N`` column of each level's values is kept; the full choice
    arrays are kept for path reconstruction.
    """

    def __init__(self, table: SegmentCostTable, k_max: int):
        n = table.n_cells
        mw = table.cfg.min_width
        k_max = _check_k(n, k_max, table.cfg)
        total = np.full((n, n + 1), np.inf)
        total[:, : table.max_width + 1] = table.total
        idx = np.arange(n)

        self.table = table
        self.k_max = k_max
        self.choice = []
        self.closing = np.empty((k_max + 1, n))
        self.closing[0] = np.inf

        w_prev = total.copy()
        w_prev[:, :mw] = np.inf
        self.choice.append(None)
        self.closing[1] = w_prev[:, n]
        choice1 = np.where(np.isfinite(w_prev), np.arange(n + 1)[None, :], -1)
        self.choice.append(choice1.astype(np.int32))

        for level in range(2, k_max + 1):
            best = np.full((n, n + 1), np.inf)
            arg = np.full((n, n + 1), -1, dtype=np.int32)
            w_hi = n - (level - 1) * mw
            for w in range(mw, w_hi + 1):
                nxt = w_prev[(idx + w) % n, : n + 1 - w]
                cand = total[:, w][:, None] + nxt
                target = best[:, w:]
                better = cand < target
                np.copyto(target, cand, where=better)
                arg[:, w:][better] = w
            self.choice.append(arg)
            self.closing[level] = best[:, n]
            w_prev = best

    def best_anchor(self, k: int) -> int:
        return _pick_smallest_index(self.closing[k])

    def boundaries(self, k: int, anchor: int) -> list:
        n = self.table.n_cells
        out = [anchor]
        s, remaining = anchor, n
        for level in range(k, 0, -1):
            w = int(self.choice[level][s, remaining])
            if w <= 0:
                raise ConstraintError(f"no feasible {k}-region partition from anchor {anchor}")
            s = (s + w) % n
            remaining -= w
            if level > 1:
                out.append(s)
        return out


def design_fixed_k(profile: PopulationProfile, k: int, cfg: ObjectiveConfig | None = None,
                   table: SegmentCostTable | None = None) -> Partition:
    """Globally optimal ``k``-region circular partition.

    Every cell is tried as the anchor boundary; the best anchor's linear
    solution is returned. ``table`` may be passed to reuse segment costs.
    """
    cfg = cfg or ObjectiveConfig()
    k = _check_k(profile.n_cells, k, cfg)
    table = table if table is not None else SegmentCostTable(profile, cfg)
    levels = LevelTables(table, k)
    anchor = levels.best_anchor(k)
    return partition_from_boundaries(table, levels.boundaries(k, anchor), cfg.eta)


def design_open_k(profile: PopulationProfile, k_min: int, k_max: int,
                  cfg: ObjectiveConfig | None = None,
                  table: SegmentCostTable | None = None) -> Partition:
    """Best partition over ``k_min <= k <= k_max`` including ``eta * k``.

    Ties go to the smaller ``k``.
    """
    cfg = cfg or ObjectiveConfig()
    n = profile.n_cells
    if int(k_min) != k_min or int(k_max) != k_max or not 1 <= k_min <= k_max:
        raise DomainError(f"need 1 <= k_min <= k_max, got {k_min!r}, {k_max!r}")
    k_max = _check_k(n, k_max, cfg)
    k_min = int(k_min)
    table = table if table is not None else SegmentCostTable(profile, cfg)
    levels = LevelTables(table, k_max)
    ks = np.arange(k_min, k_max + 1)
    scores = np.array([levels.closing[k].min() for k in ks]) + cfg.eta * ks
    k = int(ks[_pick_smallest_index(scores)])
    return partition_from_boundaries(table, levels.boundaries(k, levels.best_anchor(k)), cfg.eta)


def uniform_offset_costs(profile: PopulationProfile, k: int,
                         cfg: ObjectiveConfig | None = None) -> np.ndarray:
    """Total cost of the equal-width ``k``-region partition anchored at every offset."""
    cfg = cfg or ObjectiveConfig()
    n = profile.n_cells
    k = _check_k(n, k, cfg)
    if n % k:
        raise ConstraintError(
            f"{n} cells do not split into {k} equal regions; use design_fixed_k for unequal widths"
        )
    width = n // k
    table = SegmentCostTable(profile, cfg, max_width=width)
    col = table.total[:, width]
    offsets = np.arange(n)
    costs = np.zeros(n)
    for m in range(k):
        costs += col[(offsets + m * width) % n]
    return costs + cfg.eta * k


def choose_prime_meridian_uniform(profile: PopulationProfile, k: int,
                                  cfg: ObjectiveConfig | None = None) -> int:
    """Anchor offset minimising the cost of ``k`` equal-width regions.

    The returned cell's eastern edge is one boundary; the others follow every
    ``N / k`` cells. Ties go to the smallest offset.
    """
    return _pick_smallest_index(uniform_offset_costs(profile, k, cfg))


def brute_force_design(profile: PopulationProfile, k: int,
                       cfg: ObjectiveConfig | None = None) -> Partition:
    """Exhaustive search over anchors and width patterns (testing oracle).

    Uses direct segment costs, memoised per ``(start, width)``, independent of
    :class:`SegmentCostTable`.
    """
    cfg = cfg or ObjectiveConfig()
    n = profile.n_cells
    if n > BRUTE_FORCE_MAX_CELLS or k > BRUTE_FORCE_MAX_K:
        raise DomainError(
            f"brute force limited to N <= {BRUTE_FORCE_MAX_CELLS} and k <= {BRUTE_FORCE_MAX_K}, "
            f"got N={n}, k={k}"
        )
    k = _check_k(n, k, cfg)
    mw = cfg.min_width
    memo: dict = {}

    def cost(start, width):
        key = (start % n, width)
        if key not in memo:
            memo[key] = segment_cost(profile, start, width, cfg)
        return memo[key]

    best_total = np.inf
    best = None
    for anchor in range(n):
        # interior cut positions relative to the anchor, in lexicographic order
        for cuts in itertools.combinations(range(mw, n - mw + 1), k - 1):
            rel = (0,) + cuts + (n,)
            widths = np.diff(rel)
            if np.any(widths < mw):
                continue
            total = 0.0
            for s, w in zip(rel[:-1], widths):
                total += cost(anchor + s, int(w)).total
            if total < best_total - TIE_RTOL * abs(best_total) or best is None:
                best_total, best = total, [(anchor + s) % n for s in rel[:-1]]

    b = sorted(best)
    widths = segment_widths(b, n)
    costs = tuple(cost(s, int(w)) for s, w in zip(b, widths))
    return Partition(
        k=k,
        rotation=b[0],
        boundaries=tuple(b),
        rep_points=tuple(c.rep_point for c in costs),
        segment_costs=costs,
        total_cost=sum(c.total for c in costs) + cfg.eta * k,
        eta=cfg.eta,
        n_cells=n,
    )
