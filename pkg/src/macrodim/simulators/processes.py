"""Brownian motion and the stationary Ornstein-Uhlenbeck process."""
from __future__ import annotations

import math

import numpy as np
from scipy.signal import lfilter

from .._validation import check_int, check_positive
from ..errors import InputError
from ..rng import make_rng
from .types import TrajectoryGrid, check_points


def _n_steps(t_max: float, dt: float) -> int:
    t_max = check_positive(t_max, "t_max")
    dt = check_positive(dt, "dt")
    if t_max <= dt:
        raise InputError(f"t_max={t_max} must exceed the step {dt}")
    # grid t_k = k dt with t_k < t_max
    return check_points(math.ceil(t_max / dt), "trajectory")


def simulate_bm(t_max: float, dt: float, seed: int, replica: int = 0) -> TrajectoryGrid:
    """Brownian motion on the grid ``k dt < t_max`` with ``B(0) = 0``.

    Parameters
    ----------
    t_max, dt : float
    seed : int
        Master seed.
    replica : int
        Replica index (independent stream).
    """
    n = _n_steps(t_max, dt)
    rng = make_rng(seed, "bm", replica)
    v = np.empty(n)
    v[0] = 0.0
    np.cumsum(rng.standard_normal(n - 1) * math.sqrt(dt), out=v[1:])
    return TrajectoryGrid(0.0, float(dt), v, "bm")


def simulate_ou(t_max: float, dt: float, seed: int, replica: int = 0) -> TrajectoryGrid:
    """Stationary OU path ``U(t) = e^{-t/2} B(e^t)`` sampled exactly.

    Uses ``U_{k+1} = e^{-dt/2} U_k + sqrt(1 - e^{-dt}) zeta_k`` with
    ``U_0 ~ N(0, 1)``.
    """
    n = _n_steps(t_max, dt)
    rng = make_rng(seed, "ou", replica)
    phi = math.exp(-dt / 2)
    x = rng.standard_normal(n)
    x[1:] *= math.sqrt(-math.expm1(-dt))
    v = lfilter([1.0], [1.0, -phi], x)
    return TrajectoryGrid(0.0, float(dt), v, "ou")


def ou_sup_exceedance(x_levels, dt: float, replicas: int, seed: int, horizon: float = 1.0,
                      chunk: int = 100_000) -> np.ndarray:
    """Monte Carlo ``P{max_{k dt <= horizon} U(k dt) > x}`` for several levels.

    Parameters
    ----------
    x_levels : array_like
    dt : float
        Grid step (the sup is taken over the grid including both ends).
    replicas : int
    seed : int
    horizon : float
    chunk : int
        Replicas simulated together.

    Returns
    -------
    ndarray
        Empirical exceedance probabilities, one per level.
    """
    x = np.asarray(x_levels, dtype=float)
    replicas = check_int(replicas, "replicas", 1)
    steps = int(round(horizon / dt))
    phi = math.exp(-dt / 2)
    s = math.sqrt(-math.expm1(-dt))
    hits = np.zeros(x.size, dtype=np.int64)
    done = 0
    block = 0
    while done < replicas:
        m = min(chunk, replicas - done)
        rng = make_rng(seed, "ou-sup", block)
        u = rng.standard_normal(m)
        top = u.copy()
        z = np.empty(m)
        for _ in range(steps):
            rng.standard_normal(out=z)
            u *= phi
            u += s * z
            np.maximum(top, u, out=top)
        hits += (top[:, None] > x[None, :]).sum(axis=0)
        done += m
        block += 1
    return hits / replicas


def pickands_tail(x) -> np.ndarray:
    """Pickands approximation ``(2 pi)^{-1/2} x e^{-x^2/2} / 2`` for the OU sup over [0, 1]."""
    x = np.asarray(x, dtype=float)
    return 0.5 * x * np.exp(-x * x / 2) / math.sqrt(2 * math.pi)
