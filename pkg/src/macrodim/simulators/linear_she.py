"""Additive-noise heat equation ``Z`` with flat zero initial data.

``Z_t`` is a stationary Gaussian process in ``x`` with covariance
``c_t(x) = int_0^t p_{2s}(x) ds``; closed form

    c_t(x) = sqrt(t/pi) exp(-x^2/(4t)) - (|x|/2) erfc(|x| / (2 sqrt t)).

The grid sampler embeds this covariance in a circulant matrix and draws
exact samples with one FFT.  The windowed sampler builds ``Z`` as an
explicit space-time sum over cells so the same noise can be restricted to a
window around each point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, ndtr

from .._validation import check_grid, check_int, check_positive
from ..errors import InputError
from ..rng import make_rng
from .types import Field, check_points


def she_covariance(x, t: float) -> np.ndarray:
    """``Cov[Z_t(0), Z_t(x)]``."""
    t = check_positive(t, "t")
    a = np.abs(np.asarray(x, dtype=float))
    return math.sqrt(t / math.pi) * np.exp(-a * a / (4 * t)) - 0.5 * a * erfc(a / (2 * math.sqrt(t)))


def spectral_density(xi, t: float) -> np.ndarray:
    """Spectral density ``S(xi) = (1 - e^{-t xi^2}) / (2 pi xi^2)``, ``S(0) = t / 2pi``."""
    t = check_positive(t, "t")
    xi = np.asarray(xi, dtype=float)
    q = t * xi * xi
    small = q < 1e-8
    safe = np.where(small, 1.0, xi * xi)
    out = np.where(small, t * (1 - q / 2), -np.expm1(-q) / safe) / (2 * math.pi)
    return out


def sample_linear_she(t: float, x_max: float, dx: float, seed: int, replica: int = 0,
                      pad: float | None = None) -> Field:
    """Exact Gaussian sample of ``Z_t`` on ``[0, x_max)`` by circulant embedding.

    Parameters
    ----------
    t : float
        Time, > 0.
    x_max, dx : float
        Output extent and spacing.
    seed, replica : int
    pad : float, optional
        Extra length added before wrapping; default ``10 sqrt(t)``.

    Returns
    -------
    Field
        ``meta`` holds the smallest circulant eigenvalue relative to the
        largest (negative values are clipped to zero).
    """
    t = check_positive(t, "t")
    x_max = check_positive(x_max, "x_max")
    dx = check_positive(dx, "dx")
    n0 = int(math.ceil(x_max / dx))
    pad = 10 * math.sqrt(t) if pad is None else pad
    m = 1 << int(math.ceil(math.log2(max(2, n0 + int(math.ceil(pad / dx))))))
    check_points(2 * m, "circulant embedding")
    k = np.arange(m)
    c = she_covariance(np.minimum(k, m - k) * dx, t)
    lam = np.fft.fft(c).real
    min_ratio = float(lam.min() / lam.max())
    lam = np.clip(lam, 0.0, None)
    rng = make_rng(seed, "linear-she", replica)
    w = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    z = np.fft.fft(np.sqrt(lam / m) * w).real[:n0]
    f = Field(1, (0.0,), dx, t, z, "linear_she", seed)
    f.meta = {"circulant_size": m, "min_eigen_ratio": min_ratio}
    return f


# ----------------------------------------------------------------------
# windowed space-time sums
# ----------------------------------------------------------------------
@dataclass
class WindowedSample:
    """Paired samples of ``Z_t(x)`` and its windowed version ``Z^(B)_t(x)``.

    Attributes
    ----------
    x : ndarray, shape (p,)
    z, zb : ndarray, shape (replicas, p)
        Built from the same noise.
    var_full : ndarray, shape (p,)
        Exact variance of the discretized ``Z`` (sum of squared weights).
    var_gap : ndarray, shape (p,)
        Exact variance of ``Z - Z^(B)`` for the discretization.
    """

    x: np.ndarray
    z: np.ndarray
    zb: np.ndarray
    var_full: np.ndarray
    var_gap: np.ndarray
    t: float
    B: float


def _cell_weights(t, ds, y_edges, x, nodes=12):
    """``sqrt(int int_cell p_{t-s}(y - x)^2 dy ds)`` for every (s, y) cell.

    The y integral is exact via the normal CDF; in ``s`` the substitution
    ``t - s = u^2`` gives a smooth integrand handled by Gauss-Legendre.
    """
    K = int(round(t / ds))
    g, gw = np.polynomial.legendre.leggauss(nodes)
    r_edges = t - ds * np.arange(K + 1)  # r = t - s, decreasing
    u_hi = np.sqrt(r_edges[:-1])
    u_lo = np.sqrt(np.maximum(r_edges[1:], 0.0))
    z0 = (y_edges[:-1] - x)[None, :]
    z1 = (y_edges[1:] - x)[None, :]
    W = np.zeros((K, z0.shape[1]))
    for gi, wi in zip(g, gw):
        u = 0.5 * (u_hi + u_lo) + 0.5 * (u_hi - u_lo) * gi
        half = 0.5 * (u_hi - u_lo) * wi
        u = u[:, None]
        D = ndtr(math.sqrt(2) * z1 / u) - ndtr(math.sqrt(2) * z0 / u)
        W += half[:, None] * D / math.sqrt(math.pi)
    return np.sqrt(np.maximum(W, 0.0))


def sample_linear_she_windowed(t: float, x_grid, B: float, ds: float, dy: float, seed: int,
                               replicas: int = 1, reach: float = 8.0,
                               batch: int = 256) -> WindowedSample:
    """Space-time sums for ``Z_t(x)`` and ``Z^(B)_t(x)`` sharing one noise.

    ``Z^(B)_t(x)`` keeps only noise cells whose centre lies in
    ``[x - sqrt(B t), x + sqrt(B t)]``.

    Parameters
    ----------
    t : float
    x_grid : array_like
        Evaluation points.
    B : float
        Window parameter.
    ds, dy : float
        Cell sizes in time and space; ``t / ds`` must be an integer.
    seed : int
    replicas : int
    reach : float
        Noise domain extends ``reach * sqrt(t)`` beyond the extreme points.
    batch : int
        Replicas drawn per matrix product.
    """
    t = check_positive(t, "t")
    B = check_positive(B, "B")
    ds = check_positive(ds, "ds")
    dy = check_positive(dy, "dy")
    x = check_grid(np.sort(np.asarray(x_grid, dtype=float)), "x_grid")
    replicas = check_int(replicas, "replicas", 1)
    if abs(t / ds - round(t / ds)) > 1e-9:
        raise InputError("t / ds must be an integer")
    half = math.sqrt(B * t)
    if half < dy:
        raise InputError("window half-width sqrt(B t) is below the cell size dy")
    R = reach * math.sqrt(t)
    if half > R:
        raise InputError(f"window half-width {half:.3g} exceeds the noise domain reach {R:.3g}")
    lo = x[0] - R
    L = int(math.ceil((x[-1] + R - lo) / dy))
    y_edges = lo + dy * np.arange(L + 1)
    centres = 0.5 * (y_edges[:-1] + y_edges[1:])
    K = int(round(t / ds))
    check_points(K * L * (x.size + batch), "windowed sampler")
    Wf = np.empty((K * L, x.size))
    Wb = np.empty((K * L, x.size))
    var_full = np.empty(x.size)
    var_gap = np.empty(x.size)
    for i, xi in enumerate(x):
        w = _cell_weights(t, ds, y_edges, xi)
        inside = np.abs(centres - xi) <= half
        Wf[:, i] = w.ravel()
        Wb[:, i] = (w * inside[None, :]).ravel()
        var_full[i] = float(np.sum(w ** 2))
        var_gap[i] = float(np.sum(w[:, ~inside] ** 2))
    z = np.empty((replicas, x.size))
    zb = np.empty((replicas, x.size))
    for b0 in range(0, replicas, batch):
        nb = min(batch, replicas - b0)
        rng = make_rng(seed, "she-window", b0 // batch)
        noise = rng.standard_normal((nb, K * L))
        z[b0:b0 + nb] = noise @ Wf
        zb[b0:b0 + nb] = noise @ Wb
    return WindowedSample(x, z, zb, var_full, var_gap, t, B)
