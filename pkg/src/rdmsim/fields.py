"""Densities, currents and velocity fields derived from the wave function.

The position density is |psi|^2; the flux is (hbar/m) Im(psi* dpsi/dx) with
the derivative taken spectrally, consistent with the propagator. The local
density velocity v is defined through flux = density * velocity and is only
trusted where the density exceeds a floor; below it the point is masked
rather than extrapolated. v describes how the density moves, not any actual
particle velocity.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import EvolutionResult
from .errors import (
    AllMaskedError,
    GridMismatchError,
    TooFewSnapshotsError,
)
from .grids import Grid1D, WaveFunction1D, WaveFunction2D

__all__ = [
    "DensityField",
    "Density2D",
    "FluxField",
    "VelocityField",
    "density_from_wavefunction",
    "flux_from_wavefunction",
    "velocity_field",
    "continuity_residual",
    "configuration_density",
    "product_factorization_check",
]

DEFAULT_FLOOR_FRACTION = 1e-10


def spectral_derivative(values: np.ndarray, dx: float) -> np.ndarray:
    """d/dx on the periodic grid via the FFT; returns a complex array.

    The Nyquist mode is dropped from the derivative operator: its sign is
    ambiguous on the grid and keeping it makes the derivative of a real
    field spuriously complex.
    """
    n = values.shape[-1]
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=dx)
    k[n // 2] = 0.0
    return np.fft.ifft(1j * k * np.fft.fft(values))


@dataclass(frozen=True)
class DensityField:
    """Nonnegative density on a uniform axis, integrating to one.

    ``grid`` is set when the field lives on a wave-function grid and is None
    for coarse cell partitions (empirical densities).
    """

    x: np.ndarray
    dx: float
    values: np.ndarray
    t: float = 0.0
    grid: Grid1D | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != np.shape(self.x):
            raise ValueError("values and axis have different lengths")
        if np.any(v < 0):
            raise ValueError("density values must be nonnegative")
        total = float(np.sum(v) * self.dx)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"density integrates to {total}, expected 1")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class Density2D:
    """Configuration-space density on the (x1, x2) grid."""

    x1: np.ndarray
    x2: np.ndarray
    dx1: float
    dx2: float
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(v < 0):
            raise ValueError("density values must be nonnegative")
        total = float(np.sum(v) * self.dx1 * self.dx2)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"density integrates to {total}, expected 1")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class FluxField:
    """Probability current on a uniform axis."""

    x: np.ndarray
    dx: float
    values: np.ndarray
    t: float = 0.0
    grid: Grid1D | None = None


@dataclass(frozen=True)
class VelocityField:
    """Density velocity with a mask: ``defined`` is True where trusted."""

    x: np.ndarray
    dx: float
    values: np.ndarray
    defined: np.ndarray
    t: float = 0.0
    grid: Grid1D | None = None


def density_from_wavefunction(state, t: float = 0.0):
    """Position density |psi|^2 (1D) or |Psi|^2 on the configuration grid (2D)."""
    if isinstance(state, WaveFunction1D):
        return DensityField(
            x=state.grid.x, dx=state.grid.dx, values=np.abs(state.amp) ** 2,
            t=t, grid=state.grid,
        )
    if isinstance(state, WaveFunction2D):
        return Density2D(
            x1=state.grid_a.x, x2=state.grid_b.x,
            dx1=state.grid_a.dx, dx2=state.grid_b.dx,
            values=np.abs(state.amp) ** 2, t=t,
        )
    raise TypeError(f"unsupported state type {type(state).__name__}")


def flux_from_wavefunction(state: WaveFunction1D, t: float = 0.0) -> FluxField:
    """Probability current (hbar/m) Im(psi* dpsi/dx), derivative spectral."""
    if not isinstance(state, WaveFunction1D):
        raise TypeError("flux_from_wavefunction takes a one-particle state")
    dpsi = spectral_derivative(state.amp, state.grid.dx)
    j = (state.hbar / state.m) * np.imag(np.conj(state.amp) * dpsi)
    return FluxField(x=state.grid.x, dx=state.grid.dx, values=j, t=t, grid=state.grid)


def _check_same_axis(a, b):
    if a.grid is not None and b.grid is not None:
        if a.grid == b.grid:
            return
        raise GridMismatchError("fields live on different grids")
    if np.shape(a.x) != np.shape(b.x) or not np.array_equal(a.x, b.x):
        raise GridMismatchError("fields live on different axes")


def velocity_field(rho: DensityField, flux: FluxField,
                   rho_floor: float | None = None) -> VelocityField:
    """v = flux / density where the density exceeds rho_floor, masked elsewhere.

    rho_floor defaults to 1e-10 of the density peak. Raises AllMaskedError
    when no point survives the floor.
    """
    _check_same_axis(rho, flux)
    if rho_floor is None:
        rho_floor = DEFAULT_FLOOR_FRACTION * float(np.max(rho.values))
    if rho_floor <= 0:
        raise ValueError("rho_floor must be positive")
    defined = rho.values >= rho_floor
    if not np.any(defined):
        raise AllMaskedError("no grid point survives the density floor")
    v = np.zeros_like(rho.values)
    v[defined] = flux.values[defined] / rho.values[defined]
    return VelocityField(
        x=rho.x, dx=rho.dx, values=v, defined=defined, t=rho.t, grid=rho.grid,
    )


def continuity_residual(result: EvolutionResult) -> tuple[np.ndarray, np.ndarray]:
    """L2 norm of d(rho)/dt + d(flux)/dx at each interior snapshot.

    The time derivative is a centered difference across neighbouring
    snapshots; the space derivative is spectral. Returns (times, norms) for
    snapshots 1 .. n-2. Needs at least three snapshots.
    """
    if result.n_snapshots < 3:
        raise TooFewSnapshotsError("continuity residual needs >= 3 snapshots")
    first = result.states[0]
    if not isinstance(first, WaveFunction1D):
        raise TypeError("continuity_residual takes one-particle snapshots")
    dx = first.grid.dx
    spacing = result.snapshot_spacing
    rho = np.array([np.abs(s.amp) ** 2 for s in result.states])
    norms = np.empty(result.n_snapshots - 2)
    for i in range(1, result.n_snapshots - 1):
        state = result.states[i]
        dpsi = spectral_derivative(state.amp, dx)
        j = (state.hbar / state.m) * np.imag(np.conj(state.amp) * dpsi)
        dj_dx = np.real(spectral_derivative(j, dx))
        drho_dt = (rho[i + 1] - rho[i - 1]) / (2.0 * spacing)
        residual = drho_dt + dj_dx
        norms[i - 1] = np.sqrt(np.sum(residual ** 2) * dx)
    return np.asarray(result.times[1:-1], dtype=float), norms


def configuration_density(state: WaveFunction2D, t: float = 0.0):
    """Two-particle density plus its one-particle marginals.

    Returns (density_2d, marginal_a, marginal_b); each marginal integrates
    the partner coordinate out and is a normalized one-particle density.
    """
    if not isinstance(state, WaveFunction2D):
        raise TypeError("configuration_density takes a two-particle state")
    rho2 = density_from_wavefunction(state, t=t)
    marginal_a = DensityField(
        x=state.grid_a.x, dx=state.grid_a.dx,
        values=rho2.values.sum(axis=1) * state.grid_b.dx, t=t, grid=state.grid_a,
    )
    marginal_b = DensityField(
        x=state.grid_b.x, dx=state.grid_b.dx,
        values=rho2.values.sum(axis=0) * state.grid_a.dx, t=t, grid=state.grid_b,
    )
    return rho2, marginal_a, marginal_b


def product_factorization_check(state: WaveFunction2D) -> float:
    """Largest pointwise gap between rho(x1, x2) and the product of marginals.

    Zero (within tolerance) exactly when the two-particle density factorizes,
    i.e. when the particles are statistically independent.
    """
    rho2, marginal_a, marginal_b = configuration_density(state)
    outer = np.outer(marginal_a.values, marginal_b.values)
    return float(np.max(np.abs(rho2.values - outer)))
