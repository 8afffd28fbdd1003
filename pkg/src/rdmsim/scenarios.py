"""Four-box experiments: branch energetics and branch-local dynamics.

Two particles are each superposed over two disjoint boxes on the same line
(boxes 1, 2 belong to particle A, boxes 3, 4 to particle B). The product
mode prepares (1/2)[psi1 + psi2][phi1 + phi2]; the entangled mode prepares
(1/sqrt 2)[psi1 phi1 + psi2 phi2]. Decomposing the pair-interaction
expectation value over the product branches shows which box pairs actually
exchange energy; tracking packet centers during evolution shows which boxes
actually feel forces. Both diagnostics exist because "these packets
interact" is a claim about forces felt, not only about energies.

During dynamical runs each box sits in a harmonic holding well so that
packet drift isolates interaction forces from free dispersion.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import (
    EvolutionResult,
    PotentialSpec,
    evolve,
    soft_coulomb,
)
from .errors import (
    EmptyRegionError,
    GridMismatchError,
    IncompleteBranchBasisError,
    OverlappingBoxesError,
)
from .fields import density_from_wavefunction
from .grids import (
    Grid1D,
    WaveFunction1D,
    WaveFunction2D,
    box_ground_state,
    inner_product,
    normalize,
)

__all__ = [
    "FourBoxScenario",
    "Branch",
    "BranchInteractionMatrix",
    "Region",
    "TrackingResult",
    "ContrastReport",
    "build_four_box",
    "four_box_branches",
    "branch_interaction_matrix",
    "holding_wells",
    "matched_well_omega",
    "packet_center_tracking",
    "center_displacements",
    "two_box_superposition",
    "self_interaction_contrast",
    "write_tracking_table",
    "write_branch_matrix_table",
]


@dataclass(frozen=True)
class FourBoxScenario:
    """Geometry and couplings of the four-box experiment.

    centers = (c1, c2, c3, c4): boxes 1, 2 hold particle A, boxes 3, 4 hold
    particle B. All boxes share one width and must be pairwise disjoint with
    gaps of at least 4 * softening so the pair kernel cannot blur them
    together.
    """

    centers: tuple[float, float, float, float]
    width: float
    q1q2: float
    softening: float
    mode: str = "entangled"

    def __post_init__(self):
        if self.mode not in ("product", "entangled"):
            raise ValueError(f"mode must be 'product' or 'entangled', got {self.mode!r}")
        if len(self.centers) != 4:
            raise ValueError("exactly four box centers required")
        if self.softening <= 0:
            raise ValueError("softening must be positive")
        ordered = sorted(self.centers)
        for left, right in zip(ordered, ordered[1:]):
            gap = (right - 0.5 * self.width) - (left + 0.5 * self.width)
            if gap < 4.0 * self.softening:
                raise OverlappingBoxesError(
                    f"boxes at {left} and {right} have gap {gap}, "
                    f"need >= {4.0 * self.softening}"
                )

    @property
    def min_gap(self) -> float:
        ordered = sorted(self.centers)
        return min(
            (r - 0.5 * self.width) - (l + 0.5 * self.width)
            for l, r in zip(ordered, ordered[1:])
        )


def _packets(scenario: FourBoxScenario, grid_a: Grid1D, grid_b: Grid1D,
             m: float, hbar: float):
    c1, c2, c3, c4 = scenario.centers
    psi1 = box_ground_state(grid_a, c1, scenario.width, m, hbar)
    psi2 = box_ground_state(grid_a, c2, scenario.width, m, hbar)
    phi1 = box_ground_state(grid_b, c3, scenario.width, m, hbar)
    phi2 = box_ground_state(grid_b, c4, scenario.width, m, hbar)
    return psi1, psi2, phi1, phi2


def build_four_box(scenario: FourBoxScenario, grid_a: Grid1D, grid_b: Grid1D,
                   m: float = 1.0, hbar: float = 1.0) -> WaveFunction2D:
    """Prepare the two-particle four-box state in the scenario's mode."""
    psi1, psi2, phi1, phi2 = _packets(scenario, grid_a, grid_b, m, hbar)
    if scenario.mode == "product":
        amp = 0.5 * np.outer(psi1.amp + psi2.amp, phi1.amp + phi2.amp)
    else:
        amp = (np.outer(psi1.amp, phi1.amp) + np.outer(psi2.amp, phi2.amp)) / np.sqrt(2.0)
    return normalize(WaveFunction2D(grid_a, grid_b, amp, m, hbar))


@dataclass(frozen=True)
class Branch:
    """A labeled normalized product component of a two-particle state."""

    label: str
    state: WaveFunction2D


def four_box_branches(scenario: FourBoxScenario, grid_a: Grid1D, grid_b: Grid1D,
                      m: float = 1.0, hbar: float = 1.0) -> list[Branch]:
    """The product branches spanning the scenario state.

    Product mode spans all four box pairs; entangled mode spans the two
    correlated pairs A1B1 and A2B2.
    """
    psi1, psi2, phi1, phi2 = _packets(scenario, grid_a, grid_b, m, hbar)
    def product(label, a, b):
        return Branch(label, WaveFunction2D(grid_a, grid_b, np.outer(a.amp, b.amp), m, hbar))
    if scenario.mode == "product":
        return [
            product("A1B1", psi1, phi1),
            product("A1B2", psi1, phi2),
            product("A2B1", psi2, phi1),
            product("A2B2", psi2, phi2),
        ]
    return [product("A1B1", psi1, phi1), product("A2B2", psi2, phi2)]


@dataclass(frozen=True)
class BranchInteractionMatrix:
    """Pair-interaction energy decomposed over a branch expansion.

    values[k, l] = conj(c_k) c_l <branch_k| V_pair |branch_l> where the c are
    the expansion coefficients of the state over the branches. Diagonal
    entries are within-branch interaction energies; off-diagonal entries are
    cross-branch terms. The matrix is conjugate-symmetric and its total
    matches the direct expectation value.
    """

    labels: tuple[str, ...]
    values: np.ndarray
    coefficients: np.ndarray
    direct_expectation: float

    @property
    def total(self) -> float:
        return float(np.real(np.sum(self.values)))

    def completeness_error(self) -> float:
        scale = max(abs(self.direct_expectation), 1e-300)
        return abs(self.total - self.direct_expectation) / scale

    def diagonal(self) -> dict[str, float]:
        return {
            label: float(np.real(self.values[i, i]))
            for i, label in enumerate(self.labels)
        }

    def max_cross_magnitude(self) -> float:
        off = self.values - np.diag(np.diag(self.values))
        return float(np.max(np.abs(off))) if self.values.shape[0] > 1 else 0.0


def branch_interaction_matrix(state: WaveFunction2D, branches: list[Branch],
                              potential: PotentialSpec) -> BranchInteractionMatrix:
    """Decompose <state| V_pair |state> over the supplied branch expansion.

    The branches must be normalized products spanning the state to a
    residual of 1e-9 or better, otherwise IncompleteBranchBasisError is
    raised. Only the pair part of the potential enters.
    """
    for br in branches:
        if br.state.grid_a != state.grid_a or br.state.grid_b != state.grid_b:
            raise GridMismatchError(f"branch {br.label} lives on a different grid")
    pair = soft_coulomb(
        state.grid_a.x[:, None] - state.grid_b.x[None, :],
        potential.q1q2,
        potential.softening,
    )
    kets = [br.state for br in branches]
    n = len(kets)
    beta = np.array([inner_product(k, state) for k in kets])
    gram = np.array([[inner_product(ki, kj) for kj in kets] for ki in kets])
    coeff = np.linalg.solve(gram, beta)
    remainder = state.amp - sum(c * k.amp for c, k in zip(coeff, kets))
    residual = float(np.sqrt(np.sum(np.abs(remainder) ** 2) * state.weight))
    if residual > 1e-9:
        raise IncompleteBranchBasisError(
            f"branch expansion leaves a residual of {residual:.3e}"
        )
    weight = state.weight
    v_elems = np.array([
        [np.vdot(ki.amp, pair * kj.amp) * weight for kj in kets]
        for ki in kets
    ])
    values = np.conj(coeff)[:, None] * coeff[None, :] * v_elems
    direct = float(np.real(np.vdot(state.amp, pair * state.amp) * weight))
    return BranchInteractionMatrix(
        labels=tuple(br.label for br in branches),
        values=values,
        coefficients=coeff,
        direct_expectation=direct,
    )


def matched_well_omega(width: float, m: float = 1.0, hbar: float = 1.0) -> float:
    """Harmonic frequency whose ground width matches the box mode.

    The box ground mode of width w has position variance
    w^2 (1/12 - 1/(2 pi^2)); matching the well's ground variance
    hbar/(2 m omega) to it minimizes breathing while the packet is held.
    """
    sigma_sq = width ** 2 * (1.0 / 12.0 - 1.0 / (2.0 * np.pi ** 2))
    return hbar / (2.0 * m * sigma_sq)


def holding_wells(grid: Grid1D, centers, omega: float, m: float = 1.0) -> np.ndarray:
    """Piecewise harmonic wells: 0.5 m omega^2 * distance to nearest center squared."""
    x = grid.x
    d2 = np.min([(x - c) ** 2 for c in centers], axis=0)
    return 0.5 * m * omega ** 2 * d2


@dataclass(frozen=True)
class Region:
    """A labeled tracking interval; axis picks the particle in 2D runs."""

    label: str
    lo: float
    hi: float
    axis: int = 0

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError(f"region {self.label}: hi must exceed lo")
        if self.axis not in (0, 1):
            raise ValueError(f"region {self.label}: axis must be 0 or 1")


@dataclass(frozen=True)
class TrackingResult:
    """Per-region center-of-probability series with containment bookkeeping.

    containment[r, i] is the region's probability mass at snapshot i relative
    to its initial mass; regions whose containment ever drops below 99% are
    listed in leakage_labels.
    """

    times: np.ndarray
    labels: tuple[str, ...]
    centers: np.ndarray
    containment: np.ndarray
    leakage_labels: tuple[str, ...]
    regions: tuple[Region, ...]


def _marginal(state, axis: int) -> tuple[np.ndarray, np.ndarray, float]:
    if isinstance(state, WaveFunction1D):
        return state.grid.x, np.abs(state.amp) ** 2, state.grid.dx
    rho = np.abs(state.amp) ** 2
    if axis == 0:
        return state.grid_a.x, rho.sum(axis=1) * state.grid_b.dx, state.grid_a.dx
    return state.grid_b.x, rho.sum(axis=0) * state.grid_a.dx, state.grid_b.dx


def packet_center_tracking(evolution: EvolutionResult,
                           regions: list[Region]) -> TrackingResult:
    """First moment of the probability in each region, per snapshot.

    Regions on the same axis must be disjoint. A region whose mass falls
    below 1e-6 raises EmptyRegionError; one that loses more than 1% of its
    initial mass is flagged, not failed.
    """
    for i, ra in enumerate(regions):
        for rb in regions[i + 1:]:
            if ra.axis == rb.axis and ra.lo < rb.hi and rb.lo < ra.hi:
                raise ValueError(f"regions {ra.label} and {rb.label} overlap")
    n_t = evolution.n_snapshots
    centers = np.empty((len(regions), n_t))
    masses = np.empty((len(regions), n_t))
    for i, state in enumerate(evolution.states):
        for r, region in enumerate(regions):
            x, rho, dx = _marginal(state, region.axis)
            sel = (x >= region.lo) & (x <= region.hi)
            mass = float(np.sum(rho[sel]) * dx)
            if mass < 1e-6:
                raise EmptyRegionError(
                    f"region {region.label} holds {mass:.2e} probability "
                    f"at t = {evolution.times[i]}"
                )
            masses[r, i] = mass
            centers[r, i] = float(np.sum(x[sel] * rho[sel]) * dx) / mass
    containment = masses / masses[:, :1]
    leakage = tuple(
        region.label
        for r, region in enumerate(regions)
        if np.min(containment[r]) < 0.99
    )
    return TrackingResult(
        times=np.asarray(evolution.times, dtype=float),
        labels=tuple(r.label for r in regions),
        centers=centers,
        containment=containment,
        leakage_labels=leakage,
        regions=tuple(regions),
    )


def center_displacements(tracking: TrackingResult) -> np.ndarray:
    """Largest |center(t) - center(0)| per region over the run."""
    return np.max(np.abs(tracking.centers - tracking.centers[:, :1]), axis=1)


def two_box_superposition(grid: Grid1D, centers, width: float,
                          m: float = 1.0, hbar: float = 1.0) -> WaveFunction1D:
    """Equal superposition of two box ground modes (single particle)."""
    left = box_ground_state(grid, centers[0], width, m, hbar)
    right = box_ground_state(grid, centers[1], width, m, hbar)
    return normalize(left.with_amp(left.amp + right.amp))


@dataclass(frozen=True)
class ContrastReport:
    """Packet-center displacements of the two-box state per coupling value."""

    lambdas: tuple[float, ...]
    displacements: np.ndarray
    grid_dx: float
    trackings: tuple[TrackingResult, ...]

    def displacement_at_zero(self) -> float:
        return float(self.displacements[self.lambdas.index(0.0)])

    def is_nondecreasing(self, noise: float) -> bool:
        order = np.argsort(self.lambdas)
        d = self.displacements[order]
        return bool(np.all(np.diff(d) >= -noise))


def self_interaction_contrast(grid: Grid1D, centers, width: float,
                              lambdas, softening: float, t_final: float,
                              dt: float, record_stride: int = 10,
                              well_omega: float | None = None,
                              region_half_width: float | None = None,
                              m: float = 1.0, hbar: float = 1.0) -> ContrastReport:
    """Evolve the single-particle two-box state for each coupling value.

    With zero coupling the dynamics is linear and the packet centers stay
    put; switching the nonlinear term on makes each packet feel the field of
    the other one (precisely what linear quantum mechanics forbids) and the
    centers move. well_omega = None runs without holding wells; the tracking
    regions default to box center +- half the box distance.

    The coupling list must contain 0 so the report always carries the
    linear baseline.
    """
    lambdas = tuple(float(v) for v in lambdas)
    if 0.0 not in lambdas:
        raise ValueError("the coupling list must include 0")
    c_left, c_right = float(centers[0]), float(centers[1])
    if c_right <= c_left:
        raise ValueError("box centers must be ordered left < right")
    state = two_box_superposition(grid, (c_left, c_right), width, m, hbar)
    external = None
    if well_omega is not None:
        external = holding_wells(grid, (c_left, c_right), well_omega, m)
    if region_half_width is None:
        region_half_width = 0.5 * (c_right - c_left)
    # regions meet at the midpoint so wide windows stay disjoint
    mid = 0.5 * (c_left + c_right)
    regions = [
        Region("box1", c_left - region_half_width, mid),
        Region("box2", mid, c_right + region_half_width),
    ]
    displacements = []
    trackings = []
    for lam in lambdas:
        potential = PotentialSpec(
            softening=softening, external=external, self_coupling=lam
        )
        result = evolve(state, potential, t_final, dt, record_stride)
        tracking = packet_center_tracking(result, regions)
        trackings.append(tracking)
        displacements.append(float(np.max(center_displacements(tracking))))
    return ContrastReport(
        lambdas=lambdas,
        displacements=np.array(displacements),
        grid_dx=grid.dx,
        trackings=tuple(trackings),
    )


def write_tracking_table(tracking: TrackingResult, path) -> Path:
    """Delimited tracking table: t, region label, center, containment."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write("t,region,center,containment\n")
        for i, t in enumerate(tracking.times):
            for r, label in enumerate(tracking.labels):
                fh.write(
                    f"{t:.16e},{label},{tracking.centers[r, i]:.16e},"
                    f"{tracking.containment[r, i]:.16e}\n"
                )
    return path


def write_branch_matrix_table(matrix: BranchInteractionMatrix, path) -> Path:
    """Delimited branch matrix: row label, column label, Re, Im."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write("row,col,energy_re,energy_im\n")
        for i, ri in enumerate(matrix.labels):
            for j, cj in enumerate(matrix.labels):
                val = matrix.values[i, j]
                fh.write(f"{ri},{cj},{val.real:.16e},{val.imag:.16e}\n")
    return path
