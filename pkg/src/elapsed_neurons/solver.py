"""Upwind finite-volume integration of the nonlinear renewal equation.

With unit Courant number the transport part of the scheme is an exact
shift by one cell; the firing term is treated implicitly, so each step is

    n~_i = n_{i-1} / (1 + dt p_i),        n_0 = N^k,
    n_i  = n~_i / (ds * sum_j n~_j),
    N    = ds * sum_i p_i n_i,

where ``p_i = 1{i ds > sigma(J X)}``.  Cell ``i`` covers ages
``[(i-1) ds, i ds]``.

With instantaneous coupling (``delay == 0``) the boundary rule is implicit,
``N = F(N)`` with ``F`` non-decreasing.  It is solved by Picard iteration
started from the previous input; the iterates are monotone and stop on the
first repeated firing index, which selects the branch closest to the
previous activity and produces a jump only when that branch disappears.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .model import ModelConfig, validate_initial


class NumericalBlowup(FloatingPointError):
    """The discrete density stopped being finite."""


@dataclass
class GridState:
    """Discrete state at step ``k``: cell averages, boundary value and coupled input."""

    ds: float
    cells: np.ndarray
    N: float
    X: float
    k: int = 0

    @property
    def t(self) -> float:
        return self.k * self.ds

    @property
    def mass(self) -> float:
        return self.ds * float(self.cells.sum())


@dataclass
class ActivityTrace:
    t: np.ndarray
    N: np.ndarray
    X: np.ndarray
    mass: np.ndarray
    # pre-correction mass minus one, per step (0 at k = 0)
    drift: np.ndarray
    dt: float
    snapshots: Dict[float, Tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    # largest cell value per step
    peak: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.t)

    def window(self, t_from: float, t_to: Optional[float] = None) -> "ActivityTrace":
        """Sub-trace restricted to ``t_from <= t <= t_to`` (snapshots dropped)."""
        hi = self.t[-1] if t_to is None else t_to
        keep = (self.t >= t_from - 1e-12) & (self.t <= hi + 1e-12)
        peak = None if self.peak is None else self.peak[keep]
        return ActivityTrace(self.t[keep], self.N[keep], self.X[keep], self.mass[keep],
                             self.drift[keep], self.dt, peak=peak)


def cell_centers(n_cells: int, ds: float) -> np.ndarray:
    return ds * (np.arange(n_cells) + 0.5)


def _upper_ages(n_cells: int, ds: float) -> np.ndarray:
    return ds * np.arange(1, n_cells + 1)


class _Kernel:
    """Precomputed grid data shared by :func:`step` and :func:`run`."""

    def __init__(self, config: ModelConfig, n_cells: int):
        self.config = config
        self.sigma = config.threshold
        self.J = config.J
        self.ds = config.ds
        self.upper = _upper_ages(n_cells, config.ds)
        self.damp = 1.0 / (1.0 + config.ds)

    def first_firing(self, x: float) -> int:
        """Array index of the first cell with ``i ds > sigma(J x)``."""
        return int(np.searchsorted(self.upper, self.sigma(self.J * x), side="right"))

    def boundary(self, cells: np.ndarray, x_start: float, implicit: bool) -> float:
        tail = self.ds * np.cumsum(cells[::-1])[::-1]
        n_cells = len(cells)

        def F(j):
            return float(tail[j]) if j < n_cells else 0.0

        j = self.first_firing(x_start)
        N = F(j)
        if not implicit:
            return N
        for _ in range(n_cells + 1):
            j_next = self.first_firing(N)
            if j_next == j:
                return N
            j = j_next
            N = F(j)
        raise NumericalBlowup("boundary fixed point iteration did not settle")

    def advance(self, cells: np.ndarray, N: float, X: float, out: np.ndarray):
        """One step from ``(cells, N, X)``; writes new cells into ``out``.

        Returns ``(N_new, X_new, drift)``.
        """
        ds = self.ds
        j_fire = self.first_firing(X)
        out[0] = N
        out[1:] = cells[:-1]
        out[j_fire:] *= self.damp
        mass = ds * float(out.sum())
        if not (math.isfinite(mass) and mass > 0):
            raise NumericalBlowup(f"non-finite or vanishing mass {mass!r}")
        out /= mass
        delay = self.config.delay
        if delay > 0:
            X_new = X * (1.0 - ds / delay) + (ds / delay) * N
            N_new = self.boundary(out, X_new, implicit=False)
        else:
            N_new = self.boundary(out, X, implicit=True)
            X_new = N_new
        if not math.isfinite(N_new):
            raise NumericalBlowup("non-finite activity")
        return N_new, X_new, mass - 1.0


def init_grid(config: ModelConfig) -> GridState:
    """Discretize the initial density and compute ``N^0``; ``X^0 = N^0``."""
    cells = validate_initial(config.initial, config.s_max, config.ds)
    kernel = _Kernel(config, len(cells))
    N0 = kernel.boundary(cells, 0.0, implicit=True)
    return GridState(config.ds, cells, N0, N0, 0)


def step(state: GridState, config: ModelConfig) -> GridState:
    """Return the state one time step later (``state`` is left untouched)."""
    kernel = _Kernel(config, len(state.cells))
    out = np.empty_like(state.cells)
    N, X, _ = kernel.advance(state.cells, state.N, state.X, out)
    return GridState(state.ds, out, N, X, state.k + 1)


def snapshot_density(state: GridState) -> Tuple[np.ndarray, np.ndarray]:
    """Cell centers and cell averages of the current density."""
    return cell_centers(len(state.cells), state.ds), state.cells.copy()


def n_steps(config: ModelConfig) -> int:
    return int(math.ceil(config.t_max / config.dt - 1e-9))


def run(config: ModelConfig, snapshot_times: Sequence[float] = ()) -> ActivityTrace:
    """Integrate up to ``t_max`` and record ``N``, ``X`` and the mass every step.

    Snapshots are taken at the steps nearest to ``snapshot_times``.
    """
    state = init_grid(config)
    K = n_steps(config)
    kernel = _Kernel(config, len(state.cells))
    wanted: Dict[int, list] = {}
    for ts in snapshot_times:
        k = min(max(int(round(ts / config.dt)), 0), K)
        wanted.setdefault(k, []).append(float(ts))

    N = np.empty(K + 1)
    X = np.empty(K + 1)
    mass = np.empty(K + 1)
    drift = np.zeros(K + 1)
    peak = np.empty(K + 1)
    cells, buf = state.cells.copy(), np.empty_like(state.cells)
    N[0], X[0], mass[0], peak[0] = state.N, state.X, state.mass, state.cells.max()
    snapshots: Dict[float, Tuple[np.ndarray, np.ndarray]] = {}
    centers = cell_centers(len(cells), config.ds)

    def grab(k):
        for ts in wanted.get(k, ()):
            snapshots[ts] = (centers, cells.copy())

    grab(0)
    for k in range(K):
        N[k + 1], X[k + 1], drift[k + 1] = kernel.advance(cells, N[k], X[k], buf)
        cells, buf = buf, cells
        mass[k + 1] = config.ds * float(cells.sum())
        peak[k + 1] = cells.max()
        grab(k + 1)
    t = config.dt * np.arange(K + 1)
    return ActivityTrace(t, N, X, mass, drift, config.dt, snapshots, peak)
