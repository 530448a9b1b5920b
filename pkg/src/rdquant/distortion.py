"""Segment and partition costs.

A segment that starts after boundary cell ``i`` and has width ``j`` covers
cells ``i+1 .. i+j`` (mod N); its eastern boundary is the east edge of cell
``i+j``. Its cost combines

* a circadian term, ``min_r sum_w Z_w (|w - r| / j) ** alpha`` over in-segment
  representation cells ``r``, and
* an edge term, ``sum_w Z_w ((i + j - w) / j) ** beta``, which penalises mass
  lying far west of the segment's eastern boundary,

mixed as ``circadian + lam * edge``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ConstraintError, DomainError, ValidationError
from .grid import PopulationProfile

__all__ = [
    "ObjectiveConfig",
    "SegmentCost",
    "SegmentCostTable",
    "segment_cost",
    "partition_cost",
    "segment_widths",
]

# Relative slack under which two costs count as tied.
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class ObjectiveConfig:
    """Exponents, mixing weight, per-boundary penalty and width floor."""

    alpha: float = 1.0
    beta: float = 1.0
    lam: float = 1.0
    eta: float = 0.0
    min_width: int = 2

    def __post_init__(self):
        for name in ("alpha", "beta", "lam", "eta"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValidationError(f"{name} must be finite, got {value!r}")
        if self.alpha < 1 or self.beta < 1:
            raise ValidationError(f"alpha and beta must be >= 1, got {self.alpha}, {self.beta}")
        if self.lam < 0 or self.eta < 0:
            raise ValidationError(f"lam and eta must be >= 0, got {self.lam}, {self.eta}")
        if int(self.min_width) != self.min_width or self.min_width < 2:
            raise ValidationError(f"min_width must be an integer >= 2, got {self.min_width!r}")
        object.__setattr__(self, "min_width", int(self.min_width))

    def replace(self, **changes) -> "ObjectiveConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class SegmentCost:
    rep_point: int
    circadian: float
    edge: float
    total: float

    def as_dict(self) -> dict:
        return {
            "rep_point": self.rep_point,
            "circadian": self.circadian,
            "edge": self.edge,
            "total": self.total,
        }


def _last_argmin(values: np.ndarray) -> int:
    """Index of the easternmost entry within TIE_RTOL of the minimum."""
    best = values.min()
    near = values <= best + TIE_RTOL * abs(best)
    return int(values.size - 1 - np.argmax(near[::-1]))


def _check_width(n: int, width, cfg: ObjectiveConfig) -> int:
    if int(width) != width:
        raise DomainError(f"width must be an integer, got {width!r}")
    width = int(width)
    if width < cfg.min_width:
        raise ConstraintError(f"segment width {width} below min_width {cfg.min_width}")
    if width > n:
        raise DomainError(f"segment width {width} exceeds the {n}-cell circle")
    return width


def segment_cost(profile: PopulationProfile, start: int, width: int,
                 cfg: ObjectiveConfig | None = None) -> SegmentCost:
    """Cost of the segment covering cells ``start+1 .. start+width`` (mod N).

    Computed by direct summation; this is the reference the cached table is
    checked against. Ties in the representation point go east.
    """
    cfg = cfg or ObjectiveConfig()
    n = profile.n_cells
    width = _check_width(n, width, cfg)
    if int(start) != start:
        raise DomainError(f"start must be an integer, got {start!r}")
    start = int(start) % n

    pos = np.arange(start + 1, start + width + 1)
    z = profile.cells[pos % n]
    dist = np.abs(pos[None, :] - pos[:, None]) / width
    circ_by_r = (z[None, :] * dist ** cfg.alpha).sum(axis=1)
    k = _last_argmin(circ_by_r)
    edge = float((z * ((start + width - pos) / width) ** cfg.beta).sum())
    circ = float(circ_by_r[k])
    return SegmentCost(int(pos[k] % n), circ, edge, circ + cfg.lam * edge)


class SegmentCostTable:
    """Every segment cost of a profile, indexed by ``(start, width)``.

    Rows are starts ``0..N-1``; columns are widths ``0..max_width`` with
    ``inf`` below ``min_width``. Each entry is computed once. For a fixed start
    the unnormalised circadian sums for all widths and representation cells
    come from one cumulative sum along the segment, so identical windows give
    bit-identical costs regardless of where they sit on the circle.
    """

    def __init__(self, profile: PopulationProfile, cfg: ObjectiveConfig | None = None,
                 max_width: int | None = None):
        self.profile = profile
        self.cfg = cfg = cfg or ObjectiveConfig()
        n = profile.n_cells
        mw = n if max_width is None else min(int(max_width), n)
        if mw < cfg.min_width:
            raise ConstraintError(f"max_width {mw} below min_width {cfg.min_width}")
        self.n_cells = n
        self.max_width = mw

        t = np.arange(mw)
        dpow = np.abs(t[:, None] - t[None, :]).astype(float) ** cfg.alpha
        # epow[j, t] = (j - 1 - t) ** beta for t < j, else 0
        lag = np.arange(mw + 1)[:, None] - 1 - t[None, :]
        epow = np.where(lag >= 0, np.maximum(lag, 0).astype(float) ** cfg.beta, 0.0)

        widths = np.arange(cfg.min_width, mw + 1)
        rows = slice(cfg.min_width - 1, mw)
        # +inf where the rep cell lies beyond the segment's east end
        outside = np.where(t[None, :] > t[:, None], np.inf, 0.0)[rows]
        wa = widths.astype(float) ** cfg.alpha
        wb = widths.astype(float) ** cfg.beta
        ew = np.ascontiguousarray(epow[widths])

        circ = np.full((n, mw + 1), np.inf)
        edge = np.full((n, mw + 1), np.inf)
        rep = np.full((n, mw + 1), -1, dtype=np.int64)
        cells = profile.cells
        buf = np.empty((mw, mw))
        for i in range(n):
            z = cells[(i + 1 + t) % n]
            np.multiply(z[:, None], dpow, out=buf)
            np.cumsum(buf, axis=0, out=buf)
            g = buf[rows]
            g += outside
            best = g.min(axis=1)
            near = g <= (best + TIE_RTOL * best)[:, None]
            u = mw - 1 - np.argmax(near[:, ::-1], axis=1)
            circ[i, widths] = best / wa
            edge[i, widths] = (ew @ z) / wb
            rep[i, widths] = (i + 1 + u) % n
        self.circadian = circ
        self.edge = edge
        self.rep_point = rep
        self.total = circ + cfg.lam * edge
        for a in (self.circadian, self.edge, self.rep_point, self.total):
            a.setflags(write=False)

    def __getitem__(self, key) -> SegmentCost:
        start, width = key
        start = int(start) % self.n_cells
        width = _check_width(self.n_cells, width, self.cfg)
        if width > self.max_width:
            raise DomainError(f"width {width} beyond table limit {self.max_width}")
        return SegmentCost(
            int(self.rep_point[start, width]),
            float(self.circadian[start, width]),
            float(self.edge[start, width]),
            float(self.total[start, width]),
        )


def segment_widths(boundaries, n_cells: int) -> np.ndarray:
    """Widths of the regions east of each boundary, in circular order."""
    b = np.asarray(boundaries, dtype=np.int64)
    if b.size == 0:
        raise ConstraintError("a partition needs at least one boundary")
    rel = (b - b[0]) % n_cells
    if b.size > 1 and np.any(np.diff(rel) <= 0):
        raise ConstraintError(f"boundaries {b.tolist()} are not strictly increasing around the circle")
    return np.diff(np.append(rel, n_cells))


def partition_cost(profile: PopulationProfile, partition, cfg: ObjectiveConfig | None = None) -> float:
    """Sum of direct segment costs plus ``eta`` per boundary.

    ``partition`` is anything with a ``boundaries`` sequence (a
    :class:`~rdquant.dp_quantizer.Partition`) or the sequence itself.
    """
    cfg = cfg or ObjectiveConfig()
    boundaries = getattr(partition, "boundaries", partition)
    n = profile.n_cells
    b = [int(x) for x in boundaries]
    if any(not 0 <= x < n for x in b):
        raise ConstraintError(f"boundary indices must lie in 0..{n - 1}")
    widths = segment_widths(b, n)
    if np.any(widths < cfg.min_width):
        raise ConstraintError(f"segment widths {widths.tolist()} violate min_width {cfg.min_width}")
    total = 0.0
    for start, width in zip(b, widths):
        total += segment_cost(profile, start, int(width), cfg).total
    return total + cfg.eta * len(b)
