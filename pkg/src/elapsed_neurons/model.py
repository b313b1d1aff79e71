"""Domain types for the time-elapsed population model.

A population of neurons is described by the density ``n(s, t)`` of cells
whose last discharge happened ``s`` time units ago.  Cells fire with the
indicator rate ``p(s, x) = 1{s > sigma(J x)}``, so everything that couples
the network is housed in the discharge threshold ``sigma``.

Three threshold shapes are provided:

* :class:`ConstantThreshold` -- unconnected neurons, ``sigma`` independent
  of the activity;
* :class:`PaperThreshold` -- the piecewise log-shaped threshold that carries
  the explicit periodic solutions;
* :class:`AffineThreshold` -- ``max(floor, sigma0 - slope * x)``, a mildly
  connected network with a small Lipschitz constant.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

ArrayLike = Union[float, np.ndarray]

#: Tolerance on samples of an initial density outside ``[0, 1]``.
BOUND_TOL = 1e-12


class DomainError(ValueError):
    """An argument lies outside the domain of a formula."""


class ConfigError(ValueError):
    """A run configuration violates one of its invariants."""


class InitialDataError(ValueError):
    """Initial density is not a probability density bounded by one."""


class TruncationError(InitialDataError):
    """Too little of the initial mass fits on the truncated age grid."""


def n_minus_plus(alpha: float) -> tuple[float, float]:
    """Return ``(N-, N+)`` bounding the sawtooth activity for threshold ``alpha``.

    ``N- = 1 / (2 e^alpha - 1)`` and ``N+ = e^alpha N-``.
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    e = math.exp(alpha)
    n_minus = 1.0 / (2.0 * e - 1.0)
    return n_minus, e * n_minus


def _check_activity(x: ArrayLike) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("activity must be non-negative")
    return arr


def _as_output(values: np.ndarray, x: ArrayLike):
    return float(values) if np.ndim(x) == 0 else values


class ThresholdSpec:
    """Base class for discharge thresholds ``sigma(x)``.

    Subclasses implement ``_value`` and ``_slope`` on validated arrays and
    expose ``sigma_minus``, ``sigma_plus`` and ``lipschitz``.
    """

    sigma_minus: float
    sigma_plus: float
    lipschitz: float

    def __call__(self, x: ArrayLike):
        return _as_output(self._value(_check_activity(x)), x)

    def derivative(self, x: ArrayLike):
        """Slope ``sigma'(x)`` (right derivative at the knots)."""
        return _as_output(self._slope(_check_activity(x)), x)

    def _value(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _slope(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantThreshold(ThresholdSpec):
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be positive and finite, got {self.sigma!r}")

    @property
    def sigma_minus(self) -> float:
        return self.sigma

    @property
    def sigma_plus(self) -> float:
        return self.sigma

    @property
    def lipschitz(self) -> float:
        return 0.0

    def _value(self, x):
        return np.full_like(x, self.sigma)

    def _slope(self, x):
        return np.zeros_like(x)


@dataclass(frozen=True)
class PaperThreshold(ThresholdSpec):
    """``2 alpha`` below ``N-``, ``alpha`` above ``N+`` and log-shaped between.

    On the middle branch ``sigma(x) = 2 alpha - ln(x / N-)``, so an activity
    decaying like ``e^{-t}`` raises the threshold at unit speed.
    """

    alpha: float
    n_minus: float = field(init=False, repr=False)
    n_plus: float = field(init=False, repr=False)

    def __post_init__(self):
        lo, hi = n_minus_plus(self.alpha)
        object.__setattr__(self, "n_minus", lo)
        object.__setattr__(self, "n_plus", hi)

    @property
    def sigma_minus(self) -> float:
        return self.alpha

    @property
    def sigma_plus(self) -> float:
        return 2.0 * self.alpha

    @property
    def lipschitz(self) -> float:
        # sup |sigma'| = 1/N- over the working range [N-, inf)
        return 1.0 / self.n_minus

    def _value(self, x):
        middle = 2.0 * self.alpha - np.log(np.clip(x, self.n_minus, self.n_plus) / self.n_minus)
        out = np.where(x <= self.n_minus, 2.0 * self.alpha, middle)
        return np.where(x >= self.n_plus, self.alpha, out)

    def _slope(self, x):
        inside = (x >= self.n_minus) & (x < self.n_plus)
        return np.where(inside, -1.0 / np.maximum(x, self.n_minus), 0.0)


@dataclass(frozen=True)
class AffineThreshold(ThresholdSpec):
    """``sigma(x) = max(floor, sigma0 - slope * x)``."""

    sigma0: float
    slope: float
    floor: float

    def __post_init__(self):
        if not (0 < self.floor <= self.sigma0):
            raise DomainError("need 0 < floor <= sigma0")
        if not self.slope >= 0:
            raise DomainError("slope must be non-negative")

    @property
    def sigma_minus(self) -> float:
        return self.floor if self.slope > 0 else self.sigma0

    @property
    def sigma_plus(self) -> float:
        return self.sigma0

    @property
    def lipschitz(self) -> float:
        return self.slope

    def _value(self, x):
        return np.maximum(self.floor, self.sigma0 - self.slope * x)

    def _slope(self, x):
        return np.where(self.sigma0 - self.slope * x > self.floor, -self.slope, 0.0)


def sigma_eval(spec: ThresholdSpec, x: ArrayLike):
    """Evaluate the threshold; raises :class:`DomainError` for negative ``x``."""
    return spec(x)


def firing_indicator(spec: ThresholdSpec, J: float, s: ArrayLike, x: ArrayLike):
    """``1{s > sigma(J x)}`` as integers (0 or 1)."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise DomainError("age must be non-negative")
    out = (s_arr > spec(J * np.asarray(x, dtype=float))).astype(int)
    return int(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------


class InitialDensity:
    """Initial age density; subclasses return exact or quadrature cell averages."""

    def cell_mass(self, edges: np.ndarray) -> np.ndarray:
        """Mass of ``n0`` in each cell ``[edges[i], edges[i+1]]``."""
        raise NotImplementedError


@dataclass(frozen=True)
class UnitBlock(InitialDensity):
    width: float = 1.0

    def cell_mass(self, edges):
        return np.diff(np.clip(edges, 0.0, self.width))


@dataclass(frozen=True)
class Exponential(InitialDensity):
    """``rate * e^{-rate s}``; bounded by one only for ``rate <= 1``."""

    rate: float = 1.0

    def cell_mass(self, edges):
        return -np.diff(np.exp(-self.rate * edges))


@dataclass(frozen=True)
class LinearStationary(InitialDensity):
    """Stationary profile of the unconnected network: ``N*`` up to ``sigma``, then ``N* e^{-(s-sigma)}``."""

    sigma: float

    def cell_mass(self, edges):
        n_star = 1.0 / (1.0 + self.sigma)
        # antiderivative of the profile
        flat = np.minimum(edges, self.sigma)
        tail = 1.0 - np.exp(-np.maximum(edges - self.sigma, 0.0))
        return np.diff(n_star * (flat + tail))


@dataclass(frozen=True)
class Custom(InitialDensity):
    """User supplied density ``func(s)``, averaged per cell with 4-point Gauss-Legendre."""

    func: Callable[[np.ndarray], np.ndarray]

    def cell_mass(self, edges):
        nodes, weights = np.polynomial.legendre.leggauss(4)
        a, b = edges[:-1], edges[1:]
        half = 0.5 * (b - a)
        pts = 0.5 * (a + b)[:, None] + half[:, None] * nodes[None, :]
        vals = np.asarray(self.func(pts), dtype=float)
        if np.any(vals < -BOUND_TOL) or np.any(vals > 1 + BOUND_TOL):
            raise InitialDataError("initial density must take values in [0, 1]")
        return half * (vals @ weights)


def validate_initial(d: InitialDensity, s_max: float, ds: float) -> np.ndarray:
    """Cell averages of ``d`` on ``[0, s_max]`` with cells ``[(i-1) ds, i ds]``.

    The result is renormalized so that ``ds * sum(values) == 1``.
    """
    n_cells = int(round(s_max / ds))
    edges = ds * np.arange(n_cells + 1)
    values = d.cell_mass(edges) / ds
    if np.any(values < -BOUND_TOL) or np.any(values > 1 + BOUND_TOL):
        raise InitialDataError("initial density must take values in [0, 1]")
    values = np.clip(values, 0.0, None)
    mass = ds * values.sum()
    if mass < 0.5:
        raise TruncationError(f"only {mass:.3g} of the initial mass lies in [0, {s_max}]")
    values = values / mass
    if values.max() > 1 + BOUND_TOL:
        raise InitialDataError("renormalized initial density exceeds one")
    return values


@dataclass(frozen=True)
class ModelConfig:
    """One simulation run.  ``ds`` is both the age and the time step."""

    threshold: ThresholdSpec
    J: float = 1.0
    delay: float = 0.0
    ds: float = 1e-3
    t_max: float = 20.0
    s_max: Optional[float] = None
    initial: InitialDensity = field(default_factory=UnitBlock)

    def __post_init__(self):
        if self.s_max is None:
            object.__setattr__(self, "s_max", self.threshold.sigma_plus + 20.0)
        for name in ("J", "delay", "ds", "t_max", "s_max"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ConfigError(f"{name} must be finite")
        if self.J < 0:
            raise ConfigError("connectivity J must be non-negative")
        if self.delay < 0:
            raise ConfigError("delay must be non-negative")
        if not self.ds > 0:
            raise ConfigError("ds must be positive")
        if self.t_max < 0:
            raise ConfigError("t_max must be non-negative")
        if self.s_max < self.threshold.sigma_plus + 10.0:
            raise ConfigError("s_max must exceed sigma_plus + 10")
        if self.delay > 0 and self.ds > self.delay:
            raise ConfigError("time step must not exceed the synaptic delay")

    @property
    def dt(self) -> float:
        return self.ds

    def replace(self, **changes) -> "ModelConfig":
        return dataclasses.replace(self, **changes)
