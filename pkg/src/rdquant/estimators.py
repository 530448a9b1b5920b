"""scikit-learn style wrappers around the designers and the RD fits."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .distortion import ObjectiveConfig, partition_cost
from .dp_quantizer import design_fixed_k, design_open_k
from .exceptions import DomainError
from .grid import PopulationProfile
from .rdd import RddDataset, fit_global, fit_local, select_bandwidth_cv
from .vi_quantizer import design_fixed_k_vi

__all__ = ["PartitionDesigner", "RDDRegressor"]


def _as_profile(X) -> PopulationProfile:
    if isinstance(X, PopulationProfile):
        return X
    return PopulationProfile(check_array(X, ensure_2d=False, dtype=np.float64).ravel())


class PartitionDesigner(BaseEstimator):
    """Optimal circular partition of a population profile.

    ``fit`` accepts a :class:`PopulationProfile` or a 1-D array of cell
    masses. Give ``k`` for a fixed region count, or ``k_min``/``k_max`` to
    let the ``eta`` penalty choose it.

    Attributes:
        partition_: the fitted :class:`~rdquant.dp_quantizer.Partition`.
        profile_: the profile it was fitted on.
        n_regions_: number of regions.
    """

    def __init__(self, k=None, k_min=None, k_max=None, alpha=1.0, beta=1.0, lam=1.0, eta=0.0,
                 min_width=2, method="dp", gamma=1.0, epsilon=1e-9):
        self.k = k
        self.k_min = k_min
        self.k_max = k_max
        self.alpha = alpha
        self.beta = beta
        self.lam = lam
        self.eta = eta
        self.min_width = min_width
        self.method = method
        self.gamma = gamma
        self.epsilon = epsilon

    def _config(self) -> ObjectiveConfig:
        return ObjectiveConfig(self.alpha, self.beta, self.lam, self.eta, self.min_width)

    def fit(self, X, y=None):
        profile = _as_profile(X)
        cfg = self._config()
        if self.method not in ("dp", "vi"):
            raise DomainError(f"method must be 'dp' or 'vi', got {self.method!r}")
        if (self.k is None) == (self.k_min is None and self.k_max is None):
            raise DomainError("give either k or both k_min and k_max")
        if self.k is not None:
            if self.method == "dp":
                self.partition_ = design_fixed_k(profile, self.k, cfg)
            else:
                self.partition_ = design_fixed_k_vi(profile, self.k, cfg, gamma=self.gamma,
                                                    epsilon=self.epsilon)
        else:
            if self.method != "dp":
                raise DomainError("open-k design is only available with method='dp'")
            self.partition_ = design_open_k(profile, self.k_min, self.k_max, cfg)
        self.profile_ = profile
        self.n_regions_ = self.partition_.k
        return self

    def predict(self, X=None):
        """Region label of each cell index in ``X`` (all cells when omitted)."""
        check_is_fitted(self, "partition_")
        if X is None:
            X = np.arange(self.profile_.n_cells)
        cells = check_array(X, ensure_2d=False, dtype=np.int64).ravel()
        return self.partition_.region_of(cells)

    def score(self, X, y=None):
        """Negative total cost of the fitted partition on profile ``X``."""
        check_is_fitted(self, "partition_")
        return -partition_cost(_as_profile(X), self.partition_, self._config())


class RDDRegressor(RegressorMixin, BaseEstimator):
    """Sharp RD regression with a scikit-learn interface.

    ``X`` holds the running variable in column 0 and controls in any further
    columns. ``kind='local'`` fits local-linear on ``bandwidth`` (chosen by
    leave-one-out CV over ``bandwidth_grid`` when ``bandwidth`` is None);
    ``kind='global'`` fits a polynomial of order ``poly_order`` on all rows.

    Attributes:
        fit_: the underlying :class:`~rdquant.rdd.RddFit`.
        coef_: its coefficient vector.
        effect_: the :class:`~rdquant.rdd.EffectEstimate` for the jump.
        bandwidth_: bandwidth used (None for global fits).
    """

    def __init__(self, kind="local", bandwidth=None, bandwidth_grid=None, poly_order=1,
                 cutoff=0.0, min_side=10):
        self.kind = kind
        self.bandwidth = bandwidth
        self.bandwidth_grid = bandwidth_grid
        self.poly_order = poly_order
        self.cutoff = cutoff
        self.min_side = min_side

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        data = RddDataset(np.arange(X.shape[0]), X[:, 0], y, X[:, 1:], cutoff=self.cutoff,
                          min_side=self.min_side)
        if self.kind == "local":
            bw = self.bandwidth
            if bw is None:
                if not self.bandwidth_grid:
                    raise DomainError("local fit needs bandwidth or bandwidth_grid")
                bw = select_bandwidth_cv(data, self.bandwidth_grid)
            self.fit_ = fit_local(data, bw)
            self.bandwidth_ = float(bw)
        elif self.kind == "global":
            self.fit_ = fit_global(data, self.poly_order)
            self.bandwidth_ = None
        else:
            raise DomainError(f"kind must be 'local' or 'global', got {self.kind!r}")
        self.coef_ = self.fit_.coef
        self.effect_ = self.fit_.effect
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return self.fit_.predict(X[:, 0], X[:, 1:] if X.shape[1] > 1 else None)
