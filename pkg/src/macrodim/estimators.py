"""scikit-learn style wrappers around the estimators.

Examples
--------
>>> from macrodim.estimators import MacroDimension
>>> from macrodim.dimension import fixture_set
>>> est = MacroDimension(shell_range=(5, 20)).fit(fixture_set("naturals", (5, 20)))
>>> round(est.dimension_, 2)
1.0
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_samples
from .dimension import DEFAULT_SLOPE_TOL, dimh_estimate, dimm_estimate
from .errors import InputError
from .exceedance import ExceedanceSpec, GaugeSpec, exceedance_pixels
from .moments import tail_exponent_fit
from .shells import PixelSet
from .simulators.types import TrajectoryGrid


def _as_pixels(X) -> PixelSet:
    if isinstance(X, PixelSet):
        return X
    arr = np.asarray(X)
    if arr.ndim == 2 and arr.shape[1] == 2:
        return PixelSet.from_cells(arr.astype(np.int64), 2)
    return PixelSet.from_cells(check_samples(arr, "cells").astype(np.int64), 1)


class MacroDimension(BaseEstimator):
    """Macroscopic dimension of a pixel set.

    Parameters
    ----------
    method : {"hausdorff", "lower_hausdorff", "minkowski"}
    shell_range : (int, int), optional
    slope_tol : float
    min_side : float

    Attributes
    ----------
    estimate_ : DimensionEstimate
    dimension_ : float
        ``-1`` when the set looks bounded.
    """

    def __init__(self, method: str = "hausdorff", shell_range=None, slope_tol: float = DEFAULT_SLOPE_TOL,
                 min_side: float = 1.0):
        self.method = method
        self.shell_range = shell_range
        self.slope_tol = slope_tol
        self.min_side = min_side

    def fit(self, X, y=None):
        """``X``: PixelSet, integer cells (d = 1) or an ``(m, 2)`` cell array."""
        px = _as_pixels(X)
        if self.method == "minkowski":
            self.estimate_ = dimm_estimate(px, self.shell_range)
        elif self.method in ("hausdorff", "lower_hausdorff"):
            self.estimate_ = dimh_estimate(px, shell_range=self.shell_range, min_side=self.min_side,
                                           slope_tol=self.slope_tol, method=self.method)
        else:
            raise InputError(f"unknown method {self.method!r}")
        self.dimension_ = self.estimate_.value
        return self

    def predict(self, X=None):
        check_is_fitted(self, "dimension_")
        return self.dimension_


class ExceedanceTransformer(TransformerMixin, BaseEstimator):
    """Map a sampled path or field to its pixelized tall-peak set.

    ``transform`` accepts a TrajectoryGrid, a Field, or an ``(n, 2)`` array of
    ``(time, value)`` rows on a uniform grid.

    Parameters
    ----------
    gauge, gamma, norm, start
        See :class:`GaugeSpec` and :class:`ExceedanceSpec`.
    value_transform : {"identity", "log", "signed"}
    """

    def __init__(self, gauge: str = "sqrt_log", gamma: float = 0.5, norm: float = 1.0, start=None,
                 value_transform: str = "identity"):
        self.gauge = gauge
        self.gamma = gamma
        self.norm = norm
        self.start = start
        self.value_transform = value_transform

    def fit(self, X=None, y=None):
        self.spec_ = ExceedanceSpec(GaugeSpec(self.gauge, self.norm, self.start), self.gamma)
        return self

    def transform(self, X) -> PixelSet:
        check_is_fitted(self, "spec_")
        if not hasattr(X, "values"):
            arr = check_samples(X, "X", ndim=2)
            if arr.shape[1] != 2:
                raise InputError("array input must have columns (time, value)")
            step = np.diff(arr[:, 0])
            if not np.allclose(step, step[0]):
                raise InputError("times must be uniformly spaced")
            X = TrajectoryGrid(float(arr[0, 0]), float(step[0]), arr[:, 1].copy())
        return exceedance_pixels(X, self.spec_, self.value_transform)


class TailExponentRegressor(BaseEstimator):
    """Fit ``-log P{X > z} ~ c0 + c z^b + kappa log z``.

    Attributes
    ----------
    b_, c_ : float
    fit_ : TailFit
    """

    def __init__(self, b=None, z_range=None, log_term: bool = True):
        self.b = b
        self.z_range = z_range
        self.log_term = log_term

    def fit(self, X, y=None):
        self.fit_ = tail_exponent_fit(X, b=self.b, z_range=self.z_range, log_term=self.log_term)
        self.b_, self.c_ = self.fit_.b_hat, self.fit_.c_hat
        return self

    def predict(self, z):
        """Predicted ``-log P{X > z}``."""
        check_is_fitted(self, "fit_")
        z = check_samples(z, "z")
        f = self.fit_
        out = f.intercept + f.c_hat * z ** f.b_hat
        if self.log_term:
            out = out + f.log_coef * np.log(z)
        return out
