"""Rebuilding the wave function from density and velocity fields.

The map is psi = sqrt(rho) * exp(i S / hbar) with the phase S(x) =
m * integral of v from a reference point to x (cumulative trapezoid along
the grid). It determines the state up to one overall phase factor -- and
only per connected unmasked region: where the density falls below the
velocity floor no phase information survives, so each region gets its own
anchor and the relative phase between regions is genuinely unrecoverable
from (rho, v). That ambiguity is surfaced as metadata, never resolved
silently.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AllMaskedError, GridMismatchError, MaskedReferenceError
from .fields import DensityField, VelocityField
from .grids import WaveFunction1D, inner_product

__all__ = [
    "PhaseField",
    "phase_from_velocity",
    "reconstruct_wavefunction",
    "global_phase_distance",
]


def _circular_components(defined: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of defined points on the periodic index circle.

    Returns (start, length) pairs; a fully defined grid is one component
    covering the whole circle.
    """
    n = defined.size
    if defined.all():
        return [(0, n)]
    if not defined.any():
        return []
    d = defined
    starts = np.flatnonzero(d & ~np.roll(d, 1))
    ends = np.flatnonzero(~d & np.roll(d, 1))  # first masked point after a run
    comps = []
    for s in starts:
        length = int(np.min((ends - s) % n))
        comps.append((int(s), length))
    comps.sort()
    return comps


def _anchored_phase(v_arc: np.ndarray, dx: float, m: float,
                    anchor_local: int) -> np.ndarray:
    s = np.zeros(v_arc.size)
    if v_arc.size > 1:
        s[1:] = np.cumsum(0.5 * (v_arc[1:] + v_arc[:-1])) * dx
    s -= s[anchor_local]
    return m * s


@dataclass(frozen=True)
class PhaseField:
    """Action phase S with per-component anchoring metadata.

    S is zero at each component's anchor and at all masked points.
    ``disconnected`` flags that the unmasked set splits into several
    components, whose relative phases are not determined by (rho, v).
    """

    x: np.ndarray
    dx: float
    values: np.ndarray
    reference_index: int
    component_slices: tuple[tuple[int, int], ...]
    component_anchors: tuple[int, ...]
    disconnected: bool


def phase_from_velocity(v: VelocityField, m: float, hbar: float,
                        reference_index: int) -> PhaseField:
    """Integrate m*v along the grid, anchored to zero at reference_index.

    The reference point must be unmasked. If the unmasked set is
    disconnected, every other component is integrated separately (anchored
    at its first point) and the result is flagged ``disconnected``.
    """
    if m <= 0 or hbar <= 0:
        raise ValueError("mass and hbar must be positive")
    if not v.defined[reference_index]:
        raise MaskedReferenceError(
            f"reference point {reference_index} lies in a masked region"
        )
    n = v.values.size
    comps = _circular_components(v.defined)
    s = np.zeros(n)
    anchors = []
    for start, length in comps:
        idx = (start + np.arange(length)) % n
        in_comp = np.flatnonzero(idx == reference_index)
        anchor_local = int(in_comp[0]) if in_comp.size else 0
        anchors.append(int(idx[anchor_local]))
        s[idx] = _anchored_phase(v.values[idx], v.dx, m, anchor_local)
    return PhaseField(
        x=v.x,
        dx=v.dx,
        values=s,
        reference_index=reference_index,
        component_slices=tuple(comps),
        component_anchors=tuple(anchors),
        disconnected=len(comps) > 1,
    )


def reconstruct_wavefunction(rho: DensityField, v: VelocityField,
                             m: float = 1.0, hbar: float = 1.0) -> WaveFunction1D:
    """sqrt(rho) * exp(i S / hbar) with S integrated per unmasked component.

    Each component is anchored at its own highest-density point; masked
    points carry zero phase (their amplitude sqrt(rho) is below the floor by
    construction). |result| equals sqrt(rho) pointwise, unconditionally.
    """
    if rho.grid is None:
        raise ValueError("reconstruction needs a density on a wave-function grid")
    if (v.grid is not None and v.grid != rho.grid) or not np.array_equal(rho.x, v.x):
        raise GridMismatchError("density and velocity live on different axes")
    comps = _circular_components(v.defined)
    if not comps:
        raise AllMaskedError("velocity field has no defined points")
    n = rho.values.size
    s = np.zeros(n)
    for start, length in comps:
        idx = (start + np.arange(length)) % n
        anchor_local = int(np.argmax(rho.values[idx]))
        s[idx] = _anchored_phase(v.values[idx], v.dx, m, anchor_local)
    amp = np.sqrt(rho.values) * np.exp(1j * s / hbar)
    return WaveFunction1D(rho.grid, amp, m, hbar)


def global_phase_distance(a: WaveFunction1D, b: WaveFunction1D) -> float:
    """min over theta of ||a - exp(i theta) b||, for normalized states.

    The optimum is theta = arg<b|a>; the difference norm is evaluated
    explicitly at that angle. Zero exactly when the states agree up to one
    overall phase; sqrt(2) for orthogonal states.
    """
    for s in (a, b):
        if abs(s.norm() - 1.0) > 1e-6:
            raise ValueError("global_phase_distance expects normalized states")
    overlap = inner_product(b, a)
    theta = np.angle(overlap) if overlap != 0 else 0.0
    diff = a.amp - np.exp(1j * theta) * b.amp
    return float(np.sqrt(np.sum(np.abs(diff) ** 2) * a.grid.dx))
