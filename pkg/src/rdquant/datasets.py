"""Synthetic fixtures: population profiles, planted RD samples and a county world."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import PopulationProfile
from .rdd import RddDataset, UnitsTable

__all__ = [
    "spike_profile",
    "noiseless_linear_fixture",
    "noiseless_quadratic_fixture",
    "planted_rdd",
    "density_jump_sample",
    "SyntheticWorld",
    "synthetic_world",
]


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def spike_profile(n_cells: int = 360, centers=(90, 250), sigma: float = 0.8,
                  peak: float = 1000.0, background: float = 0.01) -> PopulationProfile:
    """Gaussian population spikes (in cell units) on a flat background."""
    x = np.arange(n_cells, dtype=float)
    z = np.full(n_cells, float(background))
    for c in centers:
        # circular distance so spikes near the seam stay symmetric
        gap = (x - c + n_cells / 2) % n_cells - n_cells / 2
        z += peak * np.exp(-0.5 * (gap / sigma) ** 2)
    return PopulationProfile(z)


def _ids(n):
    return np.array([f"u{i:05d}" for i in range(n)])


def noiseless_linear_fixture() -> RddDataset:
    """``Y = 2 + 1.5 h + 0.3 d`` on ``d = +-0.05, +-0.10, ..., +-1.0``."""
    step = np.arange(1, 21) * 0.05
    d = np.concatenate([-step[::-1], step])
    y = 2.0 + 1.5 * (d >= 0) + 0.3 * d
    return RddDataset(_ids(d.size), d, y)


def noiseless_quadratic_fixture() -> RddDataset:
    """``Y = 1 + 0.5 h + 0.2 d - 0.1 d^2`` on the same grid."""
    step = np.arange(1, 21) * 0.05
    d = np.concatenate([-step[::-1], step])
    y = 1.0 + 0.5 * (d >= 0) + 0.2 * d - 0.1 * d ** 2
    return RddDataset(_ids(d.size), d, y)


def planted_rdd(n: int = 2000, beta1: float = -0.5, seed=0, beta0: float = 1.0,
                beta2: float = 0.4, beta3: float = 0.2, sigma: float = 1.0,
                control_coef: float | None = None, half_width: float = 1.0) -> RddDataset:
    """Sharp design ``Y = b0 + b1 h + b2 d + b3 h d (+ g c) + N(0, sigma^2)``.

    Distances are uniform on ``[-half_width, half_width]``. With
    ``control_coef`` set, a standard normal control ``c`` enters linearly.
    """
    rng = _rng(seed)
    d = rng.uniform(-half_width, half_width, n)
    h = (d >= 0).astype(float)
    y = beta0 + beta1 * h + beta2 * d + beta3 * h * d
    controls, names = None, ()
    if control_coef is not None:
        c = rng.standard_normal(n)
        y = y + control_coef * c
        controls, names = c[:, None], ("c",)
    y = y + sigma * rng.standard_normal(n)
    return RddDataset(_ids(n), d, y, controls, names)


def density_jump_sample(n: int = 5000, ratio: float = 2.0, seed=0,
                        half_width: float = 1.0) -> RddDataset:
    """Running variable whose density right of 0 is ``ratio`` times the left.

    Each point lands right with probability ``ratio / (1 + ratio)`` and is
    then uniform on its side. ``ratio = 1`` is the null.
    """
    rng = _rng(seed)
    right = rng.random(n) < ratio / (1.0 + ratio)
    mag = rng.uniform(0.0, half_width, n)
    d = np.where(right, mag, -mag)
    return RddDataset(_ids(n), d, rng.standard_normal(n))


@dataclass(frozen=True, eq=False)
class SyntheticWorld:
    """A profile, located units and the legacy boundaries they were observed under."""

    profile: PopulationProfile
    units: UnitsTable
    old_boundaries: tuple
    spike_centers: tuple
    harm: float
    band_deg: float


def synthetic_world(seed=0, n_units: int = 4000, n_cells: int = 360, zone_cells: int = 15,
                    spiked_zones=(1, 5, 9, 13, 17, 21), harm: float = -0.5,
                    band_deg: float = 5.0, noise: float = 0.25,
                    sigma: float = 0.8) -> SyntheticWorld:
    """Units observed under uniform legacy zones with an eastern-edge harm.

    Legacy boundaries sit every ``zone_cells`` cells. Units within
    ``band_deg`` east of any legacy boundary lose ``harm``; that is the
    negative jump an RD fit at the legacy boundaries recovers. Population
    spikes are centred half a band east of the legacy boundaries listed in
    ``spiked_zones``, so an optimal design draws its boundaries near the
    eastern end of those bands.
    """
    rng = _rng(seed)
    width = 360.0 / n_cells
    old = tuple(range(zone_cells - 1, n_cells, zone_cells))
    band_cells = band_deg / width
    centers = tuple(old[z] + 0.5 + band_cells / 2 for z in spiked_zones)
    profile = spike_profile(n_cells, centers, sigma)

    lon = rng.uniform(-180.0, 180.0, n_units)
    edges = np.array([-180.0 + (b + 1) * width for b in old])
    east_of = (lon[:, None] - edges[None, :]) % 360.0
    in_band = np.any(east_of < band_deg, axis=1)
    y = 1.0 + harm * in_band + noise * rng.standard_normal(n_units)
    units = UnitsTable(np.array([f"c{i:05d}" for i in range(n_units)]), lon, y, None)
    return SyntheticWorld(profile, units, old, centers, harm, band_deg)
