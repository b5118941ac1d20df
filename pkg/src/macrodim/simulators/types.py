"""Containers for simulated paths and fields."""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError, ResourceError

#: Largest number of float64 grid values a single simulation may allocate.
POINT_BUDGET = int(os.environ.get("MACRODIM_POINT_BUDGET", 2**27))


def check_points(n: float, what: str) -> int:
    if n > POINT_BUDGET:
        raise ResourceError(f"{what} needs too many grid points", required=n, budget=POINT_BUDGET)
    return int(n)


@dataclass
class TrajectoryGrid:
    """Uniformly sampled path ``values[k] = X(t0 + k * step)``."""

    t0: float
    step: float
    values: np.ndarray = field(repr=False)
    model: str = ""

    def __post_init__(self):
        if self.values.ndim != 1 or self.values.size < 2 or self.t0 < 0 or self.step <= 0:
            raise InputError("trajectory needs >= 2 values, t0 >= 0 and step > 0")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.step * np.arange(self.values.size)

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.times, self.values]), delimiter=",",
                   header="t,value", comments="", fmt="%.17g")


@dataclass
class Field:
    """Solution values on a uniform periodic grid.

    ``values`` has shape ``(N,)`` in ``d = 1`` and ``(N, N)`` in ``d = 2``;
    site ``j`` sits at ``origin + j * dx``.
    """

    d: int
    origin: tuple
    dx: float
    t: float
    values: np.ndarray = field(repr=False)
    model: str = ""
    seed: int | None = None
    boundary: str = "periodic"
    meta: dict = field(default_factory=dict, repr=False)

    def coords(self, axis: int = 0) -> np.ndarray:
        return self.origin[axis] + self.dx * np.arange(self.values.shape[axis])

    def to_csv(self, path) -> None:
        head = f"# model={self.model} t={self.t!r} dx={self.dx!r} seed={self.seed}\n"
        with open(path, "w") as fh:
            fh.write(head)
            if self.d == 1:
                fh.write("x,value\n")
                np.savetxt(fh, np.column_stack([self.coords(0), self.values]), delimiter=",", fmt="%.17g")
            else:
                fh.write("x,y,value\n")
                X, Y = np.meshgrid(self.coords(0), self.coords(1), indexing="ij")
                np.savetxt(fh, np.column_stack([X.ravel(), Y.ravel(), self.values.ravel()]),
                           delimiter=",", fmt="%.17g")
