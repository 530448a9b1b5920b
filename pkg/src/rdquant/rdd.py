"""Sharp regression discontinuity estimation.

Treatment is ``h = 1{distance >= cutoff}``; positive distances lie east of the
boundary. Both estimators fit, by ordinary least squares,

    Y = b0 + b1 h + sum_p b2_p d^p + sum_p b3_p h d^p + b4 . controls

with ``d = distance - cutoff``. The local fit uses ``p = 1`` on the window
``|d| <= bandwidth`` (uniform kernel); the global fit uses every observation
and a polynomial of the requested order. Standard errors are HC1
heteroskedasticity-robust; p-values use the normal reference.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg, stats

from .exceptions import (
    BandwidthTooSmallError,
    CollinearityError,
    DomainError,
    EstimationError,
    FormatError,
    InsufficientDataError,
    SchemaError,
    ValidationError,
)
from .grid import PopulationProfile, wrap_longitude

__all__ = [
    "RddDataset",
    "RddFit",
    "EffectEstimate",
    "McCraryResult",
    "CounterfactualLines",
    "UnitsTable",
    "load_rdd_dataset",
    "save_rdd_dataset",
    "load_units",
    "fit_local",
    "fit_global",
    "select_bandwidth_cv",
    "mccrary_test",
    "counterfactual_lines",
    "effect_to_eta",
    "reassign_units",
]

logger = logging.getLogger(__name__)

SIGNIFICANCE_LEVELS = (0.01, 0.05, 0.1)
MAX_POLY_ORDER = 5
MISSING_TOKENS = {"", "na", "nan", "null", "none"}


@dataclass(frozen=True, eq=False)
class RddDataset:
    """Unit records around one cutoff.

    Attributes:
        unit_id: Unique identifiers, one per row.
        distance: Signed running variable (east of the boundary is positive).
        outcome: Outcome per unit.
        controls: ``(n, c)`` matrix of control covariates, possibly ``c == 0``.
        control_names: Names of the control columns.
        cutoff: Treatment threshold ``C``.
        min_side: Minimum rows required strictly on each side of ``C``.
        n_dropped: Rows discarded while loading because a field was missing.
    """

    unit_id: np.ndarray
    distance: np.ndarray
    outcome: np.ndarray
    controls: np.ndarray | None = None
    control_names: tuple = ()
    cutoff: float = 0.0
    min_side: int = 10
    n_dropped: int = 0

    def __post_init__(self):
        d = np.asarray(self.distance, dtype=float).ravel()
        y = np.asarray(self.outcome, dtype=float).ravel()
        n = d.size
        ids = np.asarray(self.unit_id).astype(str).ravel()
        x = np.zeros((n, 0)) if self.controls is None else np.asarray(self.controls, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        names = tuple(self.control_names) or tuple(f"control_{j}" for j in range(x.shape[1]))
        if y.size != n or ids.size != n or x.shape[0] != n:
            raise ValidationError("unit_id, distance, outcome and controls must have equal length")
        if len(names) != x.shape[1]:
            raise ValidationError(f"{x.shape[1]} control columns but {len(names)} names")
        for label, arr in (("distance", d), ("outcome", y), ("controls", x)):
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{label} contains NaN or infinite values")
        if not math.isfinite(self.cutoff):
            raise ValidationError("cutoff must be finite")
        if np.unique(ids).size != n:
            raise ValidationError("unit_id values are not unique")
        below = int(np.sum(d < self.cutoff))
        above = int(np.sum(d > self.cutoff))
        if below < self.min_side or above < self.min_side:
            raise InsufficientDataError(
                f"need at least {self.min_side} rows on each side of the cutoff, "
                f"got {below} below and {above} above"
            )
        for name, arr in (("distance", d), ("outcome", y), ("unit_id", ids), ("controls", x)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "control_names", names)
        object.__setattr__(self, "cutoff", float(self.cutoff))

    def __len__(self):
        return self.distance.size

    @property
    def treated(self) -> np.ndarray:
        return (self.distance >= self.cutoff).astype(float)

    @property
    def centered(self) -> np.ndarray:
        return self.distance - self.cutoff

    @property
    def n_left(self) -> int:
        return int(np.sum(self.distance < self.cutoff))

    @property
    def n_right(self) -> int:
        return int(np.sum(self.distance >= self.cutoff))

    def subset(self, mask) -> "RddDataset":
        mask = np.asarray(mask, dtype=bool)
        return RddDataset(
            self.unit_id[mask], self.distance[mask], self.outcome[mask], self.controls[mask],
            self.control_names, self.cutoff, min_side=0,
        )


@dataclass(frozen=True)
class EffectEstimate:
    beta1: float
    se: float
    p_value: float
    significant_at: float | None

    @classmethod
    def from_estimate(cls, beta1: float, se: float) -> "EffectEstimate":
        if se > 0:
            p = float(2 * stats.norm.sf(abs(beta1 / se)))
        else:
            p = 0.0 if beta1 != 0 else 1.0
        level = next((a for a in SIGNIFICANCE_LEVELS if p < a), None)
        return cls(float(beta1), float(se), p, level)

    @property
    def z(self) -> float:
        return self.beta1 / self.se if self.se > 0 else math.copysign(math.inf, self.beta1)

    def conf_int(self, level: float = 0.95) -> tuple:
        q = stats.norm.ppf(0.5 + level / 2)
        return self.beta1 - q * self.se, self.beta1 + q * self.se


@dataclass(frozen=True)
class RddFit:
    """Fitted sharp RD model.

    ``coef`` follows the layout intercept, treatment, ``poly_order`` slope
    terms, ``poly_order`` treated-slope interactions, then controls.
    """

    kind: str
    coef: np.ndarray
    coef_names: tuple
    poly_order: int
    bandwidth: float | None
    se: np.ndarray
    cov: np.ndarray = field(repr=False)
    n_left: int
    n_right: int
    cutoff: float
    control_means: np.ndarray = field(repr=False)
    support: tuple
    residuals: np.ndarray = field(repr=False)
    design: np.ndarray = field(repr=False)

    @property
    def beta1(self) -> float:
        return float(self.coef[1])

    @property
    def effect(self) -> EffectEstimate:
        return EffectEstimate.from_estimate(self.coef[1], self.se[1])

    def side_prediction(self, distance, treated) -> np.ndarray:
        """Fitted curve of one side at ``distance``, controls held at their sample means."""
        d = np.asarray(distance, dtype=float) - self.cutoff
        h = np.broadcast_to(np.asarray(treated, dtype=float), d.shape)
        p = self.poly_order
        powers = np.stack([d ** (j + 1) for j in range(p)], axis=-1)
        out = self.coef[0] + self.coef[1] * h + powers @ self.coef[2 : 2 + p]
        out = out + h * (powers @ self.coef[2 + p : 2 + 2 * p])
        if self.control_means.size:
            out = out + self.control_means @ self.coef[2 + 2 * p :]
        return out

    def predict(self, distance, controls=None) -> np.ndarray:
        """Fitted outcome for units at ``distance`` on their own side."""
        d = np.asarray(distance, dtype=float)
        h = (d >= self.cutoff).astype(float)
        out = self.side_prediction(d, h)
        if controls is not None and self.control_means.size:
            c = np.asarray(controls, dtype=float).reshape(d.size, -1)
            out = out + (c - self.control_means) @ self.coef[2 + 2 * self.poly_order :]
        return out

    def to_dict(self) -> dict:
        eff = self.effect
        return {
            "kind": self.kind,
            "beta1": eff.beta1,
            "se": eff.se,
            "p_value": eff.p_value,
            "significant_at": eff.significant_at,
            "n_left": self.n_left,
            "n_right": self.n_right,
            "bandwidth": self.bandwidth,
            "poly_order": self.poly_order,
            "coefficients": dict(zip(self.coef_names, map(float, self.coef))),
            "standard_errors": dict(zip(self.coef_names, map(float, self.se))),
        }


def _design(data: RddDataset, poly_order: int):
    d = data.centered
    h = data.treated
    cols = [np.ones_like(d), h]
    names = ["intercept", "treated"]
    for j in range(1, poly_order + 1):
        cols.append(d ** j)
        names.append(f"d^{j}")
    for j in range(1, poly_order + 1):
        cols.append(h * d ** j)
        names.append(f"treated*d^{j}")
    x = np.column_stack(cols + [data.controls]) if data.controls.shape[1] else np.column_stack(cols)
    return x, names + list(data.control_names)


def _check_rank(x: np.ndarray, names: list) -> None:
    if x.shape[0] < x.shape[1]:
        raise CollinearityError(
            f"{x.shape[0]} observations for {x.shape[1]} coefficients", names
        )
    scale = np.linalg.norm(x, axis=0)
    if np.any(scale == 0):
        bad = [names[j] for j in np.flatnonzero(scale == 0)]
        raise CollinearityError(f"design columns identically zero: {', '.join(bad)}", bad)
    _, r, piv = linalg.qr(x / scale, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = max(x.shape) * np.finfo(float).eps * diag[0] * 1e3
    rank = int(np.sum(diag > tol))
    if rank < x.shape[1]:
        bad = [names[j] for j in sorted(piv[rank:])]
        raise CollinearityError(f"rank-deficient design; collinear columns: {', '.join(bad)}", bad)


def _ols_hc1(x: np.ndarray, y: np.ndarray):
    """OLS coefficients, residuals and HC1 covariance."""
    n, p = x.shape
    coef, *_ = np.linalg.lstsq(x, y, rcond=None)
    resid = y - x @ coef
    bread = np.linalg.inv(x.T @ x)
    meat = (x * resid[:, None] ** 2).T @ x
    scale = n / (n - p) if n > p else np.inf
    cov = scale * bread @ meat @ bread
    cov = 0.5 * (cov + cov.T)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return coef, resid, cov, se


def _fit(data: RddDataset, mask, poly_order: int, kind: str, bandwidth, support) -> RddFit:
    sub = data if mask is None else data.subset(mask)
    x, names = _design(sub, poly_order)
    _check_rank(x, names)
    coef, resid, cov, se = _ols_hc1(x, sub.outcome)
    means = sub.controls.mean(axis=0) if sub.controls.shape[1] else np.zeros(0)
    return RddFit(
        kind=kind, coef=coef, coef_names=tuple(names), poly_order=poly_order,
        bandwidth=bandwidth, se=se, cov=cov, n_left=sub.n_left, n_right=sub.n_right,
        cutoff=data.cutoff, control_means=means, support=support, residuals=resid, design=x,
    )


def fit_local(data: RddDataset, bandwidth: float) -> RddFit:
    """Local-linear fit on ``|distance - cutoff| <= bandwidth`` with a uniform kernel."""
    if not (bandwidth > 0 and math.isfinite(bandwidth)):
        raise DomainError(f"bandwidth must be positive and finite, got {bandwidth!r}")
    inside = np.abs(data.centered) <= bandwidth
    n_l = int(np.sum(inside & (data.distance < data.cutoff)))
    n_r = int(np.sum(inside & (data.distance >= data.cutoff)))
    need = 2 + 2 * 1
    if n_l < need or n_r < need:
        raise BandwidthTooSmallError(
            f"bandwidth {bandwidth:g} leaves {n_l} left / {n_r} right observations; need {need} per side"
        )
    return _fit(data, inside, 1, "local", float(bandwidth),
                (data.cutoff - bandwidth, data.cutoff + bandwidth))


def fit_global(data: RddDataset, poly_order: int = 2) -> RddFit:
    """Polynomial fit of order ``poly_order`` on every observation."""
    if int(poly_order) != poly_order or not 1 <= poly_order <= MAX_POLY_ORDER:
        raise DomainError(f"poly_order must be an integer in 1..{MAX_POLY_ORDER}, got {poly_order!r}")
    return _fit(data, None, int(poly_order), "global", None,
                (float(data.distance.min()), float(data.distance.max())))


def _side_loo_mse(d, y, controls) -> float:
    x = np.column_stack([np.ones_like(d), d, controls])
    if x.shape[0] <= x.shape[1]:
        raise EstimationError("too few points")
    q, r = np.linalg.qr(x)
    diag = np.abs(np.diag(r))
    if diag.min() <= 1e-10 * diag.max():
        raise EstimationError("rank-deficient side design")
    lev = np.sum(q ** 2, axis=1)
    if np.any(lev > 1 - 1e-10):
        raise EstimationError("leverage 1 observation")
    resid = y - q @ (q.T @ y)
    return float(np.mean((resid / (1 - lev)) ** 2))


def select_bandwidth_cv(data: RddDataset, grid) -> float:
    """Grid bandwidth minimising leave-one-out error of the local-linear fit.

    For each candidate, each side's in-window observations are fitted
    separately and the mean squared leave-one-out prediction errors of the two
    sides are summed. Ties (within a relative 1e-9, or an absolute floor tied
    to the outcome scale) go to the smaller bandwidth.
    """
    grid = sorted(float(b) for b in grid)
    if not grid:
        raise DomainError("bandwidth grid is empty")
    if any(not (b > 0 and math.isfinite(b)) for b in grid):
        raise DomainError(f"bandwidths must be positive, got {grid}")
    cd = data.centered
    left = data.distance < data.cutoff
    scores, failures = {}, {}
    for bw in grid:
        inside = np.abs(cd) <= bw
        try:
            total = 0.0
            for side in (inside & left, inside & ~left):
                if side.sum() < 4:
                    raise EstimationError(f"{int(side.sum())} observations on one side")
                total += _side_loo_mse(cd[side], data.outcome[side], data.controls[side])
            scores[bw] = total
        except EstimationError as exc:
            failures[bw] = str(exc)
    if not scores:
        detail = "; ".join(f"{bw:g}: {msg}" for bw, msg in failures.items())
        raise BandwidthTooSmallError(f"no feasible bandwidth in grid ({detail})")
    best = min(scores.values())
    floor = 1e-12 * float(np.mean(data.outcome ** 2))
    return next(bw for bw in grid if bw in scores and scores[bw] <= best + max(1e-9 * best, floor))


@dataclass(frozen=True)
class McCraryResult:
    log_ratio: float
    se: float
    p_value: float
    manipulated: bool
    n_bins: int

    def to_dict(self) -> dict:
        return {
            "log_ratio": self.log_ratio,
            "se": self.se,
            "p_value": self.p_value,
            "manipulated": self.manipulated,
            "n_bins": self.n_bins,
        }


def _density_intercept(x, y, w):
    """Weighted linear fit of ``y`` on ``x``; intercept and its variance."""
    xm = np.column_stack([np.ones_like(x), x])
    xtw = xm.T * w
    bread = np.linalg.inv(xtw @ xm)
    coef = bread @ (xtw @ y)
    resid = y - xm @ coef
    sigma2 = float(resid @ resid) / (x.size - 2)
    cov = sigma2 * bread @ (xtw * w) @ xm @ bread
    return coef[0], cov[0, 0]


def mccrary_test(data: RddDataset, n_bins: int = 40, level: float = 0.05) -> McCraryResult:
    """Test for a jump in the density of the running variable at the cutoff.

    Each side is split into ``n_bins // 2`` equal-width bins starting at the
    cutoff, so no bin straddles it. ``log((count + 0.5) / width)`` is fitted
    linearly in the bin midpoints with triangular weights that vanish at the
    far end of each side; ``log_ratio`` is the right-minus-left difference of
    the fitted values at the cutoff.
    """
    if int(n_bins) != n_bins or n_bins < 10:
        raise DomainError(f"n_bins must be an integer >= 10, got {n_bins!r}")
    per_side = int(n_bins) // 2
    c = data.cutoff
    left = data.distance[data.distance < c]
    right = data.distance[data.distance >= c]
    if left.size == 0 or right.size == 0:
        raise InsufficientDataError("McCrary test needs observations on both sides of the cutoff")
    fits = []
    for values, sign in ((left, -1.0), (right, 1.0)):
        span = float(np.max(np.abs(values - c)))
        if span == 0:
            raise InsufficientDataError("all observations on one side sit exactly at the cutoff")
        width = span / per_side
        edges = c + sign * width * np.arange(per_side + 1)
        counts, _ = np.histogram(values, bins=np.sort(edges))
        mids = 0.5 * (np.sort(edges)[1:] + np.sort(edges)[:-1]) - c
        y = np.log((counts + 0.5) / width)
        w = 1.0 - np.abs(mids) / span
        fits.append(_density_intercept(mids, y, w))
    (b_l, v_l), (b_r, v_r) = fits
    log_ratio = float(b_r - b_l)
    se = float(math.sqrt(v_l + v_r))
    p = float(2 * stats.norm.sf(abs(log_ratio) / se)) if se > 0 else float(log_ratio == 0)
    return McCraryResult(log_ratio, se, p, p < level, 2 * per_side)


@dataclass(frozen=True)
class CounterfactualLines:
    """Own-side and opposite-side (continuity) predictions on a grid."""

    distance: np.ndarray
    observed: np.ndarray
    counterfactual: np.ndarray
    in_support: np.ndarray

    def rows(self) -> list:
        return [
            {
                "distance": float(d),
                "observed_side_prediction": float(o),
                "counterfactual_prediction": float(cf),
                "in_support": bool(s),
            }
            for d, o, cf, s in zip(self.distance, self.observed, self.counterfactual, self.in_support)
        ]


def counterfactual_lines(fit: RddFit, eval_grid) -> CounterfactualLines:
    """Predictions from each point's own side and from the opposite side's curve.

    Points outside the fitted support are flagged in ``in_support`` rather than
    rejected.
    """
    d = np.asarray(eval_grid, dtype=float).ravel()
    h = (d >= fit.cutoff).astype(float)
    lo, hi = fit.support
    return CounterfactualLines(
        d,
        fit.side_prediction(d, h),
        fit.side_prediction(d, 1.0 - h),
        (d >= lo) & (d <= hi),
    )


def effect_to_eta(estimate: EffectEstimate) -> float:
    """Per-boundary penalty from an effect estimate: ``|beta1|``.

    Warns when the estimate is not significant at 10%; the value is still
    returned.
    """
    if estimate.significant_at is None:
        warnings.warn(
            f"effect {estimate.beta1:g} (p={estimate.p_value:.3g}) is not significant; "
            "eta derived from it anyway",
            UserWarning,
            stacklevel=2,
        )
    return abs(float(estimate.beta1))


# --- tables on disk ---------------------------------------------------------------


def _read_columns(path, required, optional=()):
    path = Path(path)
    with path.open("r", encoding="utf-8-sig", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise FormatError(f"{path}: empty file")
        header = [h.strip() for h in reader.fieldnames]
        reader.fieldnames = header
        missing = [c for c in list(required) + list(optional) if c not in header]
        if missing:
            raise SchemaError(f"{path}: unknown column(s) {', '.join(missing)}; header is {','.join(header)}")
        rows = list(reader)
    return header, rows


def _parse_numeric(rows, columns, path):
    """Float matrix for ``columns``; rows with a missing field are dropped."""
    keep, values, dropped = [], [], 0
    for lineno, row in enumerate(rows, start=2):
        fields = [(row.get(c) or "").strip() for c in columns]
        if any(f.lower() in MISSING_TOKENS for f in fields):
            dropped += 1
            continue
        try:
            values.append([float(f) for f in fields])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from None
        keep.append(row)
    arr = np.array(values, dtype=float).reshape(len(values), len(columns))
    return keep, arr, dropped


def load_rdd_dataset(path, outcome_col: str = "outcome", distance_col: str = "distance",
                     control_cols=(), cutoff: float = 0.0, unit_col: str = "unit_id",
                     min_side: int = 10) -> RddDataset:
    """Read an RDD CSV; rows missing any named field are dropped and counted."""
    control_cols = list(control_cols)
    _, rows = _read_columns(path, [unit_col, distance_col, outcome_col], control_cols)
    keep, arr, dropped = _parse_numeric(rows, [distance_col, outcome_col] + control_cols, path)
    if dropped:
        logger.info("%s: dropped %d row(s) with missing fields", path, dropped)
    ids = [r[unit_col].strip() for r in keep]
    return RddDataset(ids, arr[:, 0], arr[:, 1], arr[:, 2:], tuple(control_cols), cutoff,
                      min_side=min_side, n_dropped=dropped)


def save_rdd_dataset(data: RddDataset, path_or_buf) -> None:
    """Write ``data`` as an RDD CSV to a path or an open text stream."""
    if hasattr(path_or_buf, "write"):
        _write_rdd(data, path_or_buf)
        return
    with Path(path_or_buf).open("w", encoding="utf-8", newline="") as fh:
        _write_rdd(data, fh)


def _write_rdd(data: RddDataset, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["unit_id", "distance", "outcome", *data.control_names])
    for i in range(len(data)):
        writer.writerow([
            data.unit_id[i], repr(float(data.distance[i])), repr(float(data.outcome[i])),
            *(repr(float(v)) for v in data.controls[i]),
        ])


@dataclass(frozen=True, eq=False)
class UnitsTable:
    """Units located by longitude, before assignment to a boundary."""

    unit_id: np.ndarray
    longitude_deg: np.ndarray
    outcome: np.ndarray
    controls: np.ndarray
    control_names: tuple = ()

    def __post_init__(self):
        lon = np.asarray(self.longitude_deg, dtype=float).ravel()
        n = lon.size
        x = np.asarray(self.controls, dtype=float).reshape(n, -1) if self.controls is not None else np.zeros((n, 0))
        object.__setattr__(self, "unit_id", np.asarray(self.unit_id).astype(str).ravel())
        object.__setattr__(self, "longitude_deg", lon)
        object.__setattr__(self, "outcome", np.asarray(self.outcome, dtype=float).ravel())
        object.__setattr__(self, "controls", x)
        names = tuple(self.control_names) or tuple(f"control_{j}" for j in range(x.shape[1]))
        object.__setattr__(self, "control_names", names)
        if not (self.unit_id.size == n == self.outcome.size) or len(names) != x.shape[1]:
            raise ValidationError("units table columns have inconsistent lengths")
        if not np.all(np.isfinite(lon)):
            raise ValidationError("longitude_deg contains NaN or infinite values")


def load_units(path, outcome_col: str = "outcome", control_cols=None,
               unit_col: str = "unit_id", longitude_col: str = "longitude_deg") -> UnitsTable:
    """Read a units CSV (``unit_id,longitude_deg,outcome[,control...]``).

    With ``control_cols=None`` every extra column is treated as a control.
    """
    header, rows = _read_columns(path, [unit_col, longitude_col, outcome_col], control_cols or ())
    if control_cols is None:
        control_cols = [h for h in header if h not in (unit_col, longitude_col, outcome_col)]
    keep, arr, dropped = _parse_numeric(rows, [longitude_col, outcome_col] + list(control_cols), path)
    if dropped:
        logger.info("%s: dropped %d row(s) with missing fields", path, dropped)
    return UnitsTable([r[unit_col].strip() for r in keep], arr[:, 0], arr[:, 1], arr[:, 2:],
                      tuple(control_cols))


def _signed_offsets(longitudes, boundaries_deg) -> np.ndarray:
    """Signed degrees from each boundary to each unit, east positive, wrap-aware."""
    lon = np.asarray(longitudes, dtype=float)
    b = np.asarray(boundaries_deg, dtype=float)
    return wrap_longitude(lon[:, None] - b[None, :])


def reassign_units(units: UnitsTable, partition, profile: PopulationProfile,
                   scale: float = 1.0, cutoff: float = 0.0, min_side: int = 0) -> RddDataset:
    """Assign every unit to its nearest partition boundary.

    The signed distance (degrees times ``scale``) is positive when the unit
    lies east of that boundary; a unit exactly on a boundary gets 0 and is
    treated. Ties between two equally near boundaries go to the first one in
    boundary order.
    """
    lon = units.longitude_deg
    off = (lon < -180.0) | (lon >= 180.0)
    if np.any(off):
        warnings.warn(f"{int(off.sum())} unit longitude(s) outside [-180, 180) wrapped", UserWarning,
                      stacklevel=2)
        lon = wrap_longitude(lon)
    boundaries_deg = [profile.east_edge_deg(b) for b in partition.boundaries]
    offsets = _signed_offsets(lon, boundaries_deg)
    nearest = np.argmin(np.abs(offsets), axis=1)
    dist = offsets[np.arange(lon.size), nearest] * scale
    return RddDataset(units.unit_id, dist + cutoff, units.outcome, units.controls,
                      units.control_names, cutoff, min_side=min_side)
