"""Circular population-by-longitude profiles.

Cells are half-open longitude intervals ``[west, east)``; indices increase
eastward and wrap modulo the number of cells.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import DomainTooSmallError, FormatError, ValidationError

__all__ = [
    "PopulationProfile",
    "load_population_profile",
    "save_population_profile",
    "rotate",
    "index_to_longitude",
    "wrap_longitude",
    "world_grid",
]

CSV_HEADER = ("index", "longitude_deg", "population")
MIN_CELLS = 4


def wrap_longitude(deg):
    """Wrap degrees into ``[-180, 180)``. Works on scalars and arrays."""
    deg = np.asarray(deg, dtype=float)
    out = np.mod(deg + 180.0, 360.0) - 180.0
    # mod can return 360.0 for tiny negative inputs
    out = np.where(out >= 180.0, out - 360.0, out)
    # leave in-range values bit-identical
    out = np.where((deg >= -180.0) & (deg < 180.0), deg, out)
    if np.ndim(out) == 0:
        return float(out)
    return out


@dataclass(frozen=True, eq=False)
class PopulationProfile:
    """Nonnegative population mass per longitude cell on the full circle.

    Attributes:
        cells: Mass per cell, float64, read-only.
        cell_width_deg: Width of one cell in degrees; ``n_cells * width == 360``.
        origin_deg: Longitude of cell 0's western edge, in ``[-180, 180)``.
    """

    cells: np.ndarray
    cell_width_deg: float | None = None
    origin_deg: float = -180.0

    def __post_init__(self):
        cells = np.array(self.cells, dtype=np.float64, copy=True).ravel()
        n = cells.size
        if n < MIN_CELLS:
            raise DomainTooSmallError(f"profile needs at least {MIN_CELLS} cells, got {n}")
        if not np.all(np.isfinite(cells)):
            bad = int(np.flatnonzero(~np.isfinite(cells))[0])
            raise ValidationError(f"non-finite population at index {bad}")
        if np.any(cells < 0):
            bad = int(np.flatnonzero(cells < 0)[0])
            raise ValidationError(f"negative population {cells[bad]!r} at index {bad}")
        if not np.any(cells > 0):
            raise ValidationError("profile has no positive mass")
        width = 360.0 / n if self.cell_width_deg is None else float(self.cell_width_deg)
        if not (width > 0 and math.isfinite(width)):
            raise ValidationError(f"cell width must be positive, got {width!r}")
        if abs(n * width - 360.0) > 1e-9 * 360.0:
            raise ValidationError(
                f"{n} cells of {width} deg cover {n * width} deg, not the full circle"
            )
        origin = float(self.origin_deg)
        if not (-180.0 <= origin < 180.0):
            raise ValidationError(f"origin_deg must lie in [-180, 180), got {origin!r}")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "cell_width_deg", width)
        object.__setattr__(self, "origin_deg", origin)

    @property
    def n_cells(self) -> int:
        return self.cells.size

    def __len__(self):
        return self.cells.size

    @property
    def total_mass(self) -> float:
        # correctly rounded, so independent of cell order
        return math.fsum(self.cells)

    def __eq__(self, other):
        if not isinstance(other, PopulationProfile):
            return NotImplemented
        return (
            self.cell_width_deg == other.cell_width_deg
            and self.origin_deg == other.origin_deg
            and np.array_equal(self.cells, other.cells)
        )

    __hash__ = None

    def west_edges_deg(self) -> np.ndarray:
        return wrap_longitude(self.origin_deg + np.arange(self.n_cells) * self.cell_width_deg)

    def east_edge_deg(self, i: int) -> float:
        """Longitude of the eastern edge of cell ``i``; used for boundaries."""
        return index_to_longitude(self, (i + 1) % self.n_cells)

    def center_deg(self, i: int) -> float:
        return wrap_longitude(index_to_longitude(self, i) + 0.5 * self.cell_width_deg)


def world_grid(cells, cell_width_deg: float = 0.5, origin_deg: float = -180.0) -> PopulationProfile:
    """Profile on the default world grid (720 cells of half a degree from -180)."""
    return PopulationProfile(np.asarray(cells, dtype=float), cell_width_deg, origin_deg)


def _check_index(profile: PopulationProfile, i, what="index") -> int:
    if isinstance(i, (bool, np.bool_)) or int(i) != i:
        raise IndexError(f"{what} must be an integer, got {i!r}")
    i = int(i)
    if not 0 <= i < profile.n_cells:
        raise IndexError(f"{what} {i} out of range for {profile.n_cells} cells")
    return i


def index_to_longitude(profile: PopulationProfile, i: int) -> float:
    """Western-edge longitude of cell ``i``, wrapped into ``[-180, 180)``."""
    i = _check_index(profile, i)
    lon = wrap_longitude(profile.origin_deg + i * profile.cell_width_deg)
    # rounding can leave the seam a hair below +180
    return -180.0 if lon > 180.0 - 1e-9 else lon


def rotate(profile: PopulationProfile, offset: int) -> PopulationProfile:
    """Return the profile re-indexed so that cell 0 is the input's cell ``offset``.

    Masses are copied, not recomputed, so the total is preserved exactly.
    """
    offset = _check_index(profile, offset, "offset")
    return PopulationProfile(
        np.roll(profile.cells, -offset),
        profile.cell_width_deg,
        index_to_longitude(profile, offset),
    )


def load_population_profile(path) -> PopulationProfile:
    """Read a population CSV (``index,longitude_deg,population``).

    Rows may come in any order but must cover ``0..N-1`` exactly once. The
    origin is taken from the row with index 0 and the cell width is 360/N.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8-sig", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise FormatError(f"{path}: header must be {','.join(CSV_HEADER)}, got {','.join(header)}")
        rows = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not f.strip() for f in row):
                continue
            if len(row) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                idx = int(row[0])
                lon = float(row[1])
                mass = float(row[2])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            if idx in rows:
                raise FormatError(f"index {idx} duplicated (line {lineno})")
            if not math.isfinite(mass):
                raise ValidationError(f"index {idx}: non-finite population {row[2]!r}")
            if mass < 0:
                raise ValidationError(f"index {idx}: negative population {mass!r}")
            rows[idx] = (lon, mass)

    n = len(rows)
    if n < MIN_CELLS:
        raise DomainTooSmallError(f"{path}: profile needs at least {MIN_CELLS} cells, got {n}")
    for idx in sorted(rows):
        if not 0 <= idx < n:
            missing = next(i for i in range(n) if i not in rows)
            raise FormatError(f"index {missing} absent (found out-of-range index {idx})")
    missing = [i for i in range(n) if i not in rows]
    if missing:
        raise FormatError(f"index {missing[0]} absent")

    width = 360.0 / n
    origin = float(wrap_longitude(rows[0][0]))
    profile = PopulationProfile(np.array([rows[i][1] for i in range(n)]), width, origin)
    expected = profile.west_edges_deg()
    for i in range(n):
        gap = abs(wrap_longitude(rows[i][0] - expected[i]))
        if gap > 1e-6:
            raise FormatError(
                f"index {i}: longitude {rows[i][0]!r} inconsistent with grid (expected {expected[i]!r})"
            )
    return profile


def save_population_profile(profile: PopulationProfile, path) -> None:
    """Write ``profile`` in the CSV layout read by :func:`load_population_profile`."""
    lons = profile.west_edges_deg()
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for i, mass in enumerate(profile.cells):
            lon = profile.origin_deg if i == 0 else float(lons[i])
            writer.writerow((i, repr(lon), repr(float(mass))))
