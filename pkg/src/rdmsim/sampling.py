"""Random discontinuous position trajectories and their measure bookkeeping.

A trajectory is one position draw per snapshot: the grid cell comes from the
categorical distribution |psi|^2 * dx at that instant, the intra-cell offset
is uniform, and successive draws are independent. Randomness is counter
based: step i consumes the Philox block with counter (i, 0, 0, 0) under the
trajectory seed as key, so any step can be regenerated independently and
ensembles parallelize without sequencing constraints.

From a trajectory, cell_measures counts the time spent in each (space cell,
time slab): measure = (#draws in the cell during the slab) * dt. Summing a
slab over space returns the slab length exactly, which is what makes the
empirical density measure/(cell width * slab length) integrate to one with
no normalization step.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import EvolutionResult
from .errors import (
    CadenceMismatchError,
    EmptyEvolutionError,
    MisalignedPartitionError,
)
from .fields import DensityField
from .grids import Grid1D, WaveFunction1D, WaveFunction2D

__all__ = [
    "Trajectory",
    "CellMeasureTable",
    "EnsembleDensity",
    "sample_trajectory",
    "sample_cell_indices_2d",
    "cell_measures",
    "empirical_density",
    "ensemble_density",
    "export_trajectory",
]


def _step_uniforms(seed: int, n_steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Two uniforms per step from the keyed counter-based generator.

    Step i uses words 0 and 1 of the Philox block with counter (i, 0, 0, 0),
    so the draws are a pure function of (seed, step index).
    """
    if seed < 0 or seed >= 2 ** 64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    raw = np.random.Philox(key=seed).random_raw(4 * n_steps)
    u = (raw >> np.uint64(11)) * float(2.0 ** -53)
    blocks = u.reshape(n_steps, 4)
    return blocks[:, 0], blocks[:, 1]


def _categorical_indices(prob: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(prob / prob.sum())
    idx = np.searchsorted(cdf, uniforms, side="right")
    return np.minimum(idx, prob.size - 1)


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered position draws, stored as cell index plus offset.

    Draw i happened at t0 + i*dt; its position is
    grid.x_min + (cell_indices[i] + offsets[i]) * grid.dx.
    """

    grid: Grid1D
    seed: int
    t0: float
    dt: float
    cell_indices: np.ndarray
    offsets: np.ndarray

    @property
    def n_draws(self) -> int:
        return self.cell_indices.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_draws)

    @property
    def positions(self) -> np.ndarray:
        return self.grid.x_min + (self.cell_indices + self.offsets) * self.grid.dx


def sample_trajectory(evolution: EvolutionResult, seed: int) -> Trajectory:
    """Draw one position per snapshot, independently, from |psi(., t)|^2 dx.

    Deterministic for a fixed seed. Consecutive snapshots that share the same
    amplitude object (stationary records) are drawn in one vectorized batch.
    """
    n = evolution.n_snapshots
    if n == 0:
        raise EmptyEvolutionError("evolution record has no snapshots")
    if not isinstance(evolution.states[0], WaveFunction1D):
        raise TypeError("sample_trajectory takes one-particle snapshots")
    grid = evolution.states[0].grid
    u_cell, u_off = _step_uniforms(seed, n)
    indices = np.empty(n, dtype=np.int64)
    start = 0
    while start < n:
        amp = evolution.states[start].amp
        stop = start + 1
        while stop < n and evolution.states[stop].amp is amp:
            stop += 1
        prob = np.abs(amp) ** 2 * grid.dx
        indices[start:stop] = _categorical_indices(prob, u_cell[start:stop])
        start = stop
    return Trajectory(
        grid=grid,
        seed=seed,
        t0=float(evolution.times[0]),
        dt=evolution.snapshot_spacing,
        cell_indices=indices,
        offsets=u_off,
    )


def sample_cell_indices_2d(state: WaveFunction2D, n_draws: int,
                           seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Independent (cell1, cell2) index draws from the 2D categorical |Psi|^2.

    Configuration-space sampling stops at cell resolution: no intra-cell
    refinement is attempted in 2D.
    """
    prob = (np.abs(state.amp) ** 2 * state.weight).ravel()
    u_cell, _ = _step_uniforms(seed, n_draws)
    flat = _categorical_indices(prob, u_cell)
    return np.unravel_index(flat, state.amp.shape)


@dataclass(frozen=True)
class CellMeasureTable:
    """Time credited to each (space cell, time slab) of one trajectory.

    measures[s, j] is (#draws of slab s that landed in cell j) * step_dt.
    Each draw is credited to exactly one cell, so each slab row sums to
    slab_length up to float summation; a trailing part-slab is dropped.
    """

    x0: float
    cell_width: float
    n_cells: int
    t0: float
    slab_length: float
    step_dt: float
    measures: np.ndarray

    @property
    def n_slabs(self) -> int:
        return self.measures.shape[0]

    @property
    def cell_centers(self) -> np.ndarray:
        return self.x0 + self.cell_width * (np.arange(self.n_cells) + 0.5)

    @property
    def slab_times(self) -> np.ndarray:
        """Midpoint time of each slab."""
        return self.t0 + self.slab_length * (np.arange(self.n_slabs) + 0.5)

    def partition_residual(self) -> float:
        """Largest relative gap between a slab's measure total and its length."""
        sums = self.measures.sum(axis=1)
        return float(np.max(np.abs(sums - self.slab_length)) / self.slab_length)


def _as_multiple(value: float, unit: float, what: str) -> int:
    factor = value / unit
    rounded = int(round(factor))
    if rounded < 1 or abs(factor - rounded) > 1e-9 * max(1.0, abs(factor)):
        raise MisalignedPartitionError(
            f"{what} = {value} is not a positive multiple of {unit}"
        )
    return rounded


def cell_measures(traj: Trajectory, cell_width: float,
                  slab_length: float) -> CellMeasureTable:
    """Fold a trajectory into per-cell time measures on a coarser partition.

    cell_width must be a multiple of the grid spacing and divide the domain
    evenly; slab_length must be a multiple of the draw interval. At least one
    complete slab must fit.
    """
    factor = _as_multiple(cell_width, traj.grid.dx, "cell width")
    if traj.grid.n % factor != 0:
        raise MisalignedPartitionError(
            f"cell width {cell_width} does not divide the domain evenly"
        )
    per_slab = _as_multiple(slab_length, traj.dt, "slab length")
    n_slabs = traj.n_draws // per_slab
    if n_slabs < 1:
        raise MisalignedPartitionError(
            f"trajectory has {traj.n_draws} draws, fewer than one slab of {per_slab}"
        )
    n_cells = traj.grid.n // factor
    used = n_slabs * per_slab
    coarse = (traj.cell_indices[:used] // factor).reshape(n_slabs, per_slab)
    counts = np.zeros((n_slabs, n_cells))
    for s in range(n_slabs):
        counts[s] = np.bincount(coarse[s], minlength=n_cells)
    return CellMeasureTable(
        x0=traj.grid.x_min,
        cell_width=factor * traj.grid.dx,
        n_cells=n_cells,
        t0=traj.t0,
        slab_length=per_slab * traj.dt,
        step_dt=traj.dt,
        measures=counts * traj.dt,
    )


def empirical_density(table: CellMeasureTable) -> list[DensityField]:
    """Per-slab density estimate: measure / (cell width * slab length).

    Each slab's estimate integrates to one as a direct consequence of the
    per-slab partition identity, with no renormalization applied.
    """
    denom = table.cell_width * table.slab_length
    return [
        DensityField(
            x=table.cell_centers,
            dx=table.cell_width,
            values=table.measures[s] / denom,
            t=float(table.slab_times[s]),
        )
        for s in range(table.n_slabs)
    ]


@dataclass(frozen=True)
class EnsembleDensity:
    """Mean and standard error of per-trajectory density estimates."""

    x: np.ndarray
    dx: float
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_trajectories: int


def ensemble_density(trajectories: list[Trajectory], cell_width: float,
                     slab_length: float) -> EnsembleDensity:
    """Average the per-trajectory density estimates over independent seeds.

    All trajectories must share grid, start time, draw interval and length.
    The standard error is the per-cell sample standard deviation divided by
    sqrt(#trajectories).
    """
    if len(trajectories) < 2:
        raise CadenceMismatchError("ensemble needs at least two trajectories")
    ref = trajectories[0]
    for t in trajectories[1:]:
        if (t.grid != ref.grid or t.dt != ref.dt or t.t0 != ref.t0
                or t.n_draws != ref.n_draws):
            raise CadenceMismatchError("trajectories have mismatched cadence")
    tables = [cell_measures(t, cell_width, slab_length) for t in trajectories]
    denom = tables[0].cell_width * tables[0].slab_length
    stack = np.stack([tb.measures / denom for tb in tables])
    mean = stack.mean(axis=0)
    stderr = stack.std(axis=0, ddof=1) / np.sqrt(len(trajectories))
    return EnsembleDensity(
        x=tables[0].cell_centers,
        dx=tables[0].cell_width,
        times=tables[0].slab_times,
        mean=mean,
        stderr=stderr,
        n_trajectories=len(trajectories),
    )


def export_trajectory(traj: Trajectory, path) -> Path:
    """Write one trajectory as delimited text: step, t, cell_index, x."""
    path = Path(path)
    times = traj.times
    positions = traj.positions
    with path.open("w", encoding="utf-8") as fh:
        fh.write("step,t,cell_index,x\n")
        for i in range(traj.n_draws):
            fh.write(
                f"{i},{times[i]:.16e},{traj.cell_indices[i]},{positions[i]:.16e}\n"
            )
    return path
