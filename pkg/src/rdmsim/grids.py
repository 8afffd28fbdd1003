"""Uniform periodic grids, wave-function containers and canonical states.

Conventions used throughout the package:

* the domain is periodic: point k of an n-point grid sits at x_min + k*dx
  and the right endpoint is identified with the left one (not stored);
* hbar and the particle mass default to 1 and can be overridden per state;
* a Gaussian of width ``sigma`` has position-density standard deviation
  sigma, i.e. the amplitude envelope is exp(-(x-c)^2 / (4 sigma^2)).

All containers are frozen dataclasses holding read-only arrays; operations
return new objects and never mutate their inputs, so values can be shared
across threads without coordination.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    BoxOutOfDomainError,
    BoxTooNarrowError,
    GridMismatchError,
    SigmaTooSmallError,
    TailTruncationError,
    ZeroNormError,
)

__all__ = [
    "Grid1D",
    "WaveFunction1D",
    "WaveFunction2D",
    "normalize",
    "box_ground_state",
    "gaussian_packet",
    "inner_product",
]

NORM_TOL = 1e-12
EDGE_AMPLITUDE_GUARD = 1e-10


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid covering [x_min, x_max) with n points.

    n must be a power of two (at least 16) so that spectral transforms have
    predictable cost.
    """

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if self.n < 16 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"grid size must be a power of two >= 16, got {self.n}")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @cached_property
    def x(self) -> np.ndarray:
        """Grid point coordinates, length n."""
        return _readonly(self.x_min + self.dx * np.arange(self.n))

    @cached_property
    def k(self) -> np.ndarray:
        """Angular wavenumbers matching numpy's FFT ordering."""
        return _readonly(2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx))


def _validate_amp(amp, shape) -> np.ndarray:
    amp = np.asarray(amp, dtype=np.complex128)
    if amp.shape != shape:
        raise ValueError(f"amplitude shape {amp.shape} does not match grid {shape}")
    return _readonly(amp)


@dataclass(frozen=True)
class WaveFunction1D:
    """Complex amplitudes on a Grid1D (one value per grid point)."""

    grid: Grid1D
    amp: np.ndarray
    m: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "amp", _validate_amp(self.amp, (self.grid.n,)))
        if self.m <= 0 or self.hbar <= 0:
            raise ValueError("mass and hbar must be positive")

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amp) ** 2) * self.grid.dx))

    def with_amp(self, amp) -> "WaveFunction1D":
        return WaveFunction1D(self.grid, amp, self.m, self.hbar)


@dataclass(frozen=True)
class WaveFunction2D:
    """Two-particle amplitude on the configuration grid (x1, x2).

    Both particles share one mass; unequal masses are not supported.
    """

    grid_a: Grid1D
    grid_b: Grid1D
    amp: np.ndarray
    m: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        object.__setattr__(
            self, "amp", _validate_amp(self.amp, (self.grid_a.n, self.grid_b.n))
        )
        if self.m <= 0 or self.hbar <= 0:
            raise ValueError("mass and hbar must be positive")

    @property
    def weight(self) -> float:
        """Quadrature weight dx1*dx2 of one configuration cell."""
        return self.grid_a.dx * self.grid_b.dx

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amp) ** 2) * self.weight))

    def with_amp(self, amp) -> "WaveFunction2D":
        return WaveFunction2D(self.grid_a, self.grid_b, amp, self.m, self.hbar)


def normalize(state):
    """Rescale a state to unit L2 norm.

    The returned amplitude is a positive multiple of the input amplitude.
    Raises ZeroNormError when the norm is numerically zero.
    """
    nrm = state.norm()
    if nrm <= 1e-300:
        raise ZeroNormError("cannot normalize a state of zero norm")
    return state.with_amp(state.amp / nrm)


def box_ground_state(grid: Grid1D, center: float, width: float,
                     m: float = 1.0, hbar: float = 1.0) -> WaveFunction1D:
    """Ground mode of an infinite well: a half-cosine of the given width.

    The amplitude is sqrt(2/width) * cos(pi (x - center) / width) strictly
    inside the box and exactly zero outside, then renormalized on the grid.
    """
    dx = grid.dx
    if width < 8.0 * dx:
        raise BoxTooNarrowError(
            f"box width {width} is below 8*dx = {8.0 * dx}"
        )
    lo, hi = center - 0.5 * width, center + 0.5 * width
    if lo < grid.x_min or hi > grid.x_max:
        raise BoxOutOfDomainError(
            f"box [{lo}, {hi}] exceeds the domain [{grid.x_min}, {grid.x_max}]"
        )
    x = grid.x
    inside = np.abs(x - center) < 0.5 * width
    amp = np.zeros(grid.n)
    amp[inside] = np.sqrt(2.0 / width) * np.cos(np.pi * (x[inside] - center) / width)
    return normalize(WaveFunction1D(grid, amp, m, hbar))


def gaussian_packet(grid: Grid1D, center: float, sigma: float, k0: float = 0.0,
                    m: float = 1.0, hbar: float = 1.0) -> WaveFunction1D:
    """Normalized Gaussian times a plane-wave factor exp(i k0 x).

    sigma is the standard deviation of the position density. The packet must
    fit in the domain: the envelope at either domain edge has to stay below
    the 1e-10 guard, otherwise TailTruncationError is raised.
    """
    if sigma < 2.0 * grid.dx:
        raise SigmaTooSmallError(f"sigma {sigma} is below 2*dx = {2.0 * grid.dx}")
    x = grid.x
    envelope = np.exp(-((x - center) ** 2) / (4.0 * sigma ** 2))
    edge = max(envelope[0], envelope[-1])
    if edge > EDGE_AMPLITUDE_GUARD:
        raise TailTruncationError(
            f"edge amplitude {edge:.2e} exceeds the {EDGE_AMPLITUDE_GUARD} guard; "
            "enlarge the domain or shrink sigma"
        )
    amp = (2.0 * np.pi * sigma ** 2) ** (-0.25) * envelope * np.exp(1j * k0 * x)
    return normalize(WaveFunction1D(grid, amp, m, hbar))


def _same_grids(a, b) -> bool:
    if isinstance(a, WaveFunction1D) and isinstance(b, WaveFunction1D):
        return a.grid == b.grid
    if isinstance(a, WaveFunction2D) and isinstance(b, WaveFunction2D):
        return a.grid_a == b.grid_a and a.grid_b == b.grid_b
    return False


def inner_product(a, b) -> complex:
    """L2 inner product sum(conj(a) * b) * dx (conjugate on the first slot)."""
    if not _same_grids(a, b):
        raise GridMismatchError("states live on different grids")
    if isinstance(a, WaveFunction1D):
        return complex(np.vdot(a.amp, b.amp) * a.grid.dx)
    return complex(np.vdot(a.amp, b.amp) * a.weight)
