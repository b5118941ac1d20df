"""Finite-difference solvers for multiplicative heat equations.

``du = (1/2) Lap u dt + sigma(u) dW`` on a periodic lattice with flat initial
data ``u_0 = 1``.  White noise is discretized as ``zeta / sqrt(dt dx)`` per
space-time cell, so one step adds ``sigma(u) sqrt(dt/dx) zeta``.  Colored
noise is the white lattice noise convolved with a truncated Gaussian bump.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .._validation import check_dim, check_grid, check_positive
from ..errors import InputError, StabilityError
from ..rng import make_rng
from .types import Field, check_points

SIGMA_KINDS = ("linear", "clipped_linear", "table")
SCHEMES = ("explicit_euler", "exp_multiplicative")
_BLOCK = 1 << 22  # normals drawn per RNG call


# ----------------------------------------------------------------------
# specs
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class SigmaSpec:
    """Nonlinearity with ``sigma(0) = 0``.

    Parameters
    ----------
    kind : {"linear", "clipped_linear", "table"}
        ``linear``: ``c u``.  ``clipped_linear``: ``u clip(|u|, ell, L)``,
        so ``|sigma(u)/u|`` ranges exactly over ``[ell, L]``.  ``table``:
        piecewise-linear interpolation through ``(u_nodes, s_nodes)`` with
        linear extrapolation; the nodes must contain ``(0, 0)``.
    """

    kind: str = "linear"
    c: float = 1.0
    ell: float = 1.0
    L: float = 1.0
    u_nodes: tuple = ()
    s_nodes: tuple = ()

    def __post_init__(self):
        if self.kind not in SIGMA_KINDS:
            raise InputError(f"unknown sigma kind {self.kind!r}; expected one of {SIGMA_KINDS}")
        if self.kind == "clipped_linear":
            check_positive(self.ell, "ell")
            check_positive(self.L, "L")
            if self.ell > self.L:
                raise InputError(f"ell={self.ell} exceeds L={self.L}")
        elif self.kind == "table":
            u = np.asarray(self.u_nodes, dtype=float)
            s = np.asarray(self.s_nodes, dtype=float)
            if u.ndim != 1 or u.size < 2 or u.shape != s.shape:
                raise InputError("table needs matching node arrays of length >= 2")
            if np.any(np.diff(u) <= 0):
                raise InputError("table u_nodes must be strictly increasing")
            zero = np.flatnonzero(u == 0.0)
            if zero.size == 0 or s[zero[0]] != 0.0:
                raise InputError("sigma(0) must be 0: the table needs the node (0, 0)")

    def _arrays(self):
        if self.kind == "linear":
            return 0, np.array([self.c, 0.0]), np.zeros(2), np.zeros(2)
        if self.kind == "clipped_linear":
            return 1, np.array([self.ell, self.L]), np.zeros(2), np.zeros(2)
        return 2, np.zeros(2), np.asarray(self.u_nodes, float), np.asarray(self.s_nodes, float)

    def __call__(self, u):
        kind, p, xs, ys = self._arrays()
        arr = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.array([_sigma(v, kind, p, xs, ys) for v in arr.ravel()]).reshape(arr.shape)
        return float(out[0]) if np.ndim(u) == 0 else out

    def bounds(self) -> tuple[float, float]:
        """``(ell_sigma, L_sigma)``: inf and sup of ``|sigma(u)/u|`` over ``u != 0``."""
        if self.kind == "linear":
            return abs(self.c), abs(self.c)
        if self.kind == "clipped_linear":
            return self.ell, self.L
        u = np.asarray(self.u_nodes, float)
        s = np.asarray(self.s_nodes, float)
        ratios = [abs(s[i] / u[i]) for i in range(u.size) if u[i] != 0]
        # ratio is monotone between nodes; the end slopes are its limits at infinity
        ratios += [abs((s[1] - s[0]) / (u[1] - u[0])), abs((s[-1] - s[-2]) / (u[-1] - u[-2]))]
        return float(min(ratios)), float(max(ratios))


@dataclass(frozen=True)
class SchemeSpec:
    """Time stepping choice.

    ``exp_multiplicative`` supports only ``sigma(u) = c u`` and is
    positivity preserving.
    """

    scheme: str
    dt: float
    dx: float
    sigma: SigmaSpec = field(default_factory=SigmaSpec)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InputError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        check_positive(self.dt, "dt")
        check_positive(self.dx, "dx")
        if self.scheme == "exp_multiplicative" and self.sigma.kind != "linear":
            raise InputError("exp_multiplicative needs sigma(u) = c u")

    def check_stability(self, d: int = 1) -> None:
        limit = self.dx ** 2 / (2 * d)
        if self.dt > limit * (1 + 1e-12):
            raise StabilityError(f"dt={self.dt} violates dt <= dx^2/{2 * d}; need dt <= {limit:.6g}")


@dataclass(frozen=True)
class GaussianBump:
    """``h(x) = A exp(-|x|^2 / (2 w^2))`` for ``|x| <= truncation * w``, else 0.

    Then ``f = h * h~`` has ``f(x) = A^2 (pi w^2)^{d/2} exp(-|x|^2 / (4 w^2))``
    before truncation.
    """

    amplitude: float = 1.0
    width: float = 1.0
    truncation: float = 6.0

    def __post_init__(self):
        check_positive(self.amplitude, "amplitude")
        check_positive(self.width, "width")
        check_positive(self.truncation, "truncation")

    @property
    def radius(self) -> float:
        return self.truncation * self.width

    def h(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= self.radius, self.amplitude * np.exp(-r * r / (2 * self.width ** 2)), 0.0)

    def f(self, r, d: int):
        """Untruncated ``f(|x| = r)``."""
        r = np.asarray(r, dtype=float)
        w2 = self.width ** 2
        return self.amplitude ** 2 * (math.pi * w2) ** (d / 2) * np.exp(-r * r / (4 * w2))

    def f0(self, d: int) -> float:
        return float(self.f(0.0, d))

    @classmethod
    def parse(cls, text: str) -> "GaussianBump":
        """Parse ``"gaussian:A=1,w=1[,trunc=6]"``."""
        name, _, rest = text.partition(":")
        if name.strip() != "gaussian":
            raise InputError(f"unknown kernel {name!r}; only 'gaussian' is supported")
        keys = {"A": "amplitude", "w": "width", "trunc": "truncation"}
        kw = {}
        for item in filter(None, rest.split(",")):
            k, _, v = item.partition("=")
            if k.strip() not in keys:
                raise InputError(f"unknown kernel parameter {k!r}")
            kw[keys[k.strip()]] = float(v)
        return cls(**kw)


@dataclass(frozen=True)
class NoiseSpec:
    """``kind = "white"`` or ``"colored"`` (with a :class:`GaussianBump`)."""

    kind: str = "white"
    bump: GaussianBump | None = None
    stream: str = "noise"

    def __post_init__(self):
        if self.kind not in ("white", "colored"):
            raise InputError(f"unknown noise kind {self.kind!r}")
        if self.kind == "colored" and self.bump is None:
            raise InputError("colored noise needs a bump")


# ----------------------------------------------------------------------
# kernels
# ----------------------------------------------------------------------
@njit(cache=True)
def _sigma(u, kind, p, xs, ys):
    if kind == 0:
        return p[0] * u
    if kind == 1:
        a = abs(u)
        return u * min(max(a, p[0]), p[1])
    n = xs.size
    i = np.searchsorted(xs, u) - 1
    if i < 0:
        i = 0
    if i > n - 2:
        i = n - 2
    return ys[i] + (ys[i + 1] - ys[i]) * (u - xs[i]) / (xs[i + 1] - xs[i])


@njit(cache=True)
def _euler_steps(u, z, c1, S, kind, p, xs, ys, mask, tmp):
    """Explicit Euler steps in place, one per row of ``z``; returns max negative fraction."""
    n = u.size
    worst = 0.0
    for m in range(z.shape[0]):
        neg = 0
        for j in range(n):
            lap = u[j - 1] - 2.0 * u[j] + u[(j + 1) % n]
            tmp[j] = u[j] + c1 * lap + _sigma(u[j], kind, p, xs, ys) * S * z[m, j] * mask[j]
        for j in range(n):
            u[j] = tmp[j]
            if tmp[j] < 0.0:
                neg += 1
        worst = max(worst, neg / n)
    return worst


@njit(cache=True)
def _exp_steps(u, z, c1, cS, mask, tmp):
    """Diffusion step then ``u exp(c S zeta - c^2 S^2 / 2)``; returns the running minimum."""
    n = u.size
    lo = np.inf
    drift = 0.5 * cS * cS
    for m in range(z.shape[0]):
        for j in range(n):
            tmp[j] = u[j] + c1 * (u[j - 1] - 2.0 * u[j] + u[(j + 1) % n])
        for j in range(n):
            v = tmp[j] * math.exp(mask[j] * (cS * z[m, j] - drift))
            u[j] = v
            if v < lo:
                lo = v
    return lo


def _step_plan(t_end, dt, times):
    n_steps = max(1, int(math.ceil(t_end / dt - 1e-9)))
    dt_eff = t_end / n_steps
    if times is None:
        marks = [n_steps]
    else:
        times = check_grid(np.asarray(times, dtype=float), "times")
        if times[0] <= 0 or times[-1] > t_end * (1 + 1e-12):
            raise InputError("requested times must lie in (0, t_end]")
        marks = sorted({max(1, int(round(s / dt_eff))) for s in times})
    return n_steps, dt_eff, marks


def _window_mask(coords, window):
    if window is None:
        return np.ones(coords.shape[-1] if coords.ndim == 1 else coords.shape[:-1])
    window = np.asarray(window, dtype=float).reshape(-1, 2)
    if coords.ndim == 1:
        a, b = window[0]
        if b <= a:
            raise InputError("window must satisfy a < b")
        return ((coords >= a) & (coords <= b)).astype(float)
    inside = np.ones(coords.shape[:-1], dtype=bool)
    for ax in range(coords.shape[-1]):
        a, b = window[min(ax, window.shape[0] - 1)]
        inside &= (coords[..., ax] >= a) & (coords[..., ax] <= b)
    return inside.astype(float)


def solve_she_1d(scheme: SchemeSpec, noise: NoiseSpec, t_end: float, x_max: float, seed: int,
                 times=None, window=None, replica: int = 0) -> list[Field]:
    """Solve ``du = (1/2) u'' dt + sigma(u) xi`` on ``[0, x_max)`` with ``u_0 = 1``.

    Parameters
    ----------
    scheme : SchemeSpec
    noise : NoiseSpec
        Must be white.
    t_end, x_max : float
    seed, replica : int
    times : array_like, optional
        Output times (snapped to the step grid); default ``[t_end]``.
    window : (a, b), optional
        Noise is switched off outside ``[a, b]``.

    Returns
    -------
    list of Field
        ``meta`` records the effective step, ``ell_sigma``/``L_sigma`` and the
        largest fraction of negative sites (Euler) or the minimum value
        (exponential scheme).
    """
    if noise.kind != "white":
        raise InputError("solve_she_1d needs white noise; use solve_pam_colored for colored noise")
    scheme.check_stability(1)
    t_end = check_positive(t_end, "t_end")
    x_max = check_positive(x_max, "x_max")
    n = int(math.ceil(x_max / scheme.dx))
    if n < 3:
        raise InputError("domain needs at least 3 sites")
    check_points(3 * n, "lattice")
    n_steps, dt, marks = _step_plan(t_end, scheme.dt, times)
    c1 = dt / (2 * scheme.dx ** 2)
    S = math.sqrt(dt / scheme.dx)
    x = scheme.dx * np.arange(n)
    mask = _window_mask(x, window)
    kind, p, xs, ys = scheme.sigma._arrays()
    ell, L = scheme.sigma.bounds()
    rng = make_rng(seed, noise.stream, replica)
    u = np.ones(n)
    tmp = np.empty(n)
    block = max(1, _BLOCK // n)
    out, step, diag = [], 0, 0.0 if scheme.scheme == "explicit_euler" else np.inf
    for mark in marks:
        while step < mark:
            nb = min(block, mark - step)
            z = rng.standard_normal((nb, n))
            if scheme.scheme == "explicit_euler":
                diag = max(diag, _euler_steps(u, z, c1, S, kind, p, xs, ys, mask, tmp))
            else:
                diag = min(diag, _exp_steps(u, z, c1, p[0] * S, mask, tmp))
                if not diag > 0:
                    raise StabilityError("exponential scheme lost positivity (underflow)")
            step += nb
        meta = {"dt": dt, "steps": step, "ell_sigma": ell, "L_sigma": L, "scheme": scheme.scheme}
        meta["negative_fraction" if scheme.scheme == "explicit_euler" else "min_value"] = float(diag)
        model = "pam" if scheme.sigma.kind == "linear" else f"she_{scheme.sigma.kind}"
        out.append(Field(1, (0.0,), scheme.dx, step * dt, u.copy(), model, seed, meta=meta))
    return out


def pam_second_moment_exact(dt: float, dx: float, t_end: float, c: float = 1.0,
                            reach: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Exact ``E[u_t(x)^2]`` of the lattice exponential scheme for ``sigma(u) = c u``.

    The pair correlation ``M(m) = E[u(j) u(j + m)]`` obeys a deterministic
    recursion: convolve with the squared diffusion stencil, then multiply
    ``M(0)`` by ``exp(c^2 dt / dx)``.

    Returns
    -------
    times, second_moment : ndarray
    """
    SchemeSpec("exp_multiplicative", dt, dx, SigmaSpec("linear", c)).check_stability(1)
    n_steps = max(1, int(math.ceil(t_end / dt - 1e-9)))
    dt = t_end / n_steps
    a = dt / (2 * dx * dx)
    reach = reach or 2 * n_steps + 2
    M = np.ones(2 * reach + 1)
    k = np.convolve([a, 1 - 2 * a, a], [a, 1 - 2 * a, a])
    boost = math.exp(c * c * dt / dx)
    out = np.empty(n_steps)
    for s in range(n_steps):
        M = np.convolve(np.pad(M, 2, constant_values=1.0), k, mode="valid")
        M[reach] *= boost
        out[s] = M[reach]
    return dt * np.arange(1, n_steps + 1), out


# ----------------------------------------------------------------------
# colored noise PAM
# ----------------------------------------------------------------------
def _kernel_grid(bump: GaussianBump, shape, dx):
    idx = [np.minimum(np.arange(n), n - np.arange(n)) * dx for n in shape]
    grids = np.meshgrid(*idx, indexing="ij")
    r = np.sqrt(sum(g * g for g in grids))
    return bump.h(r)


def discrete_f0(bump: GaussianBump, d: int, dx: float) -> float:
    """Lattice ``f(0) = dx^d sum h^2`` used by the solver."""
    d = check_dim(d)
    n = 2 * int(math.ceil(bump.radius / dx)) + 3
    return float(dx ** d * np.sum(_kernel_grid(bump, (n,) * d, dx) ** 2))


class ColoredNoise:
    """Generator of per-step colored noise increments ``I`` on a periodic grid.

    ``I = sqrt(dt) dx^{d/2} (h conv W)`` with ``W`` iid standard normal, so
    ``Cov(I(x), I(y)) = dt f(x - y)`` up to lattice error.
    """

    def __init__(self, bump: GaussianBump, d: int, n: int, dx: float, dt: float, rng):
        self.shape = (n,) * d
        if n * dx < 2 * bump.radius:
            raise InputError(f"domain {n * dx:.3g} shorter than the kernel support {2 * bump.radius:.3g}")
        h = _kernel_grid(bump, self.shape, dx)
        self.H = np.fft.rfftn(h)
        self.scale = math.sqrt(dt) * dx ** (d / 2)
        self.var = dt * dx ** d * float(np.sum(h * h))
        self.rng = rng

    def draw(self) -> np.ndarray:
        W = self.rng.standard_normal(self.shape)
        return self.scale * np.fft.irfftn(np.fft.rfftn(W) * self.H, s=self.shape, axes=tuple(range(len(self.shape))))


def solve_pam_colored(d: int, noise: NoiseSpec, dt: float, dx: float, t_end: float, extent: float,
                      seed: int, window=None, times=None, replica: int = 0) -> list[Field]:
    """Exponential scheme for ``du = (1/2) Lap u dt + u eta`` on ``[0, extent)^d``.

    Parameters
    ----------
    d : {1, 2}
    noise : NoiseSpec
        Colored, with a Gaussian bump.
    dt, dx, t_end, extent : float
    seed, replica : int
    window : sequence of (a, b), optional
        Box outside which the noise is switched off (one pair per axis or a
        single pair for all axes).
    times : array_like, optional

    Returns
    -------
    list of Field
        ``meta["f0"]`` is the lattice ``f(0)``.
    """
    d = check_dim(d)
    if noise.kind != "colored":
        raise InputError("solve_pam_colored needs colored noise")
    SchemeSpec("exp_multiplicative", dt, dx).check_stability(d)
    t_end = check_positive(t_end, "t_end")
    extent = check_positive(extent, "extent")
    n = int(math.ceil(extent / dx))
    check_points(6 * n ** d, "colored lattice")
    n_steps, dt_eff, marks = _step_plan(t_end, dt, times)
    rng = make_rng(seed, noise.stream, replica)
    gen = ColoredNoise(noise.bump, d, n, dx, dt_eff, rng)
    coords = dx * np.arange(n)
    if d == 1:
        mask = _window_mask(coords, window)
    else:
        X, Y = np.meshgrid(coords, coords, indexing="ij")
        mask = _window_mask(np.stack([X, Y], axis=-1), window)
    c1 = dt_eff / (2 * dx * dx)
    u = np.ones(gen.shape)
    out, step = [], 0
    for mark in marks:
        while step < mark:
            lap = -2 * d * u
            for ax in range(d):
                lap += np.roll(u, 1, axis=ax) + np.roll(u, -1, axis=ax)
            u = (u + c1 * lap) * np.exp(mask * (gen.draw() - 0.5 * gen.var))
            step += 1
        if not np.all(u > 0):
            raise StabilityError("exponential scheme lost positivity (underflow)")
        meta = {"dt": dt_eff, "steps": step, "f0": gen.var / dt_eff, "f0_continuum": noise.bump.f0(d)}
        out.append(Field(d, (0.0,) * d, dx, step * dt_eff, u.copy(), "colored", seed, meta=meta))
    return out


__all__ = [
    "SigmaSpec", "SchemeSpec", "GaussianBump", "NoiseSpec", "ColoredNoise", "solve_she_1d",
    "solve_pam_colored", "pam_second_moment_exact", "discrete_f0",
]
