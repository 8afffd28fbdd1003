"""Command-line harness: validated configs, deterministic runs, text artifacts.

Subcommands: evolve | sample | reconstruct | fourbox | contrast | convergence.
Each run reads one YAML config, writes comma-separated result tables (15+
significant digits, header row first), plot-ready projections of those
tables, and a manifest echoing the full resolved config together with every
invariant check that was exercised. The exit status is 0 exactly when all
checks pass. Identical config and seed give byte-identical tables; only the
manifest's wall-time field varies between runs.

Unknown config keys are hard errors: silently tolerated typos are the main
source of irreproducible runs. The only environment override is the seed
(SEED_OVERRIDE), so the manifest stays a complete record.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .dynamics import PotentialSpec, evolve, schmidt_purity, stationary_evolution
from .errors import ConfigError, MissingArtifactError, ParseError, ValidationError
from .fields import (
    continuity_residual,
    density_from_wavefunction,
    flux_from_wavefunction,
    velocity_field,
)
from .grids import Grid1D, box_ground_state, gaussian_packet
from .reconstruction import global_phase_distance, reconstruct_wavefunction
from .sampling import cell_measures, ensemble_density, export_trajectory, sample_trajectory
from .scenarios import (
    FourBoxScenario,
    Region,
    branch_interaction_matrix,
    build_four_box,
    center_displacements,
    four_box_branches,
    holding_wells,
    matched_well_omega,
    packet_center_tracking,
    self_interaction_contrast,
    two_box_superposition,
    write_branch_matrix_table,
    write_tracking_table,
)

__all__ = ["RunConfig", "parse_config", "run", "emit_plot_data", "main"]

EXPERIMENTS = ("evolve", "sample", "reconstruct", "fourbox", "contrast", "convergence")
SEED_ENV_VAR = "SEED_OVERRIDE"


def _fmt(value: float) -> str:
    return f"{value:.16e}"


def _write_table(path: Path, header: str, rows) -> Path:
    with path.open("w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
    return path


# ---------------------------------------------------------------------------
# configuration schema

@dataclass(frozen=True)
class GridConfig:
    x_min: float = -16.0
    x_max: float = 16.0
    n: int = 512


@dataclass(frozen=True)
class PhysicsConfig:
    mass: float = 1.0
    hbar: float = 1.0
    q1q2: float = 0.0
    softening: float | None = None  # None resolves to 2*dx
    self_coupling: float = 0.0


@dataclass(frozen=True)
class TimeConfig:
    dt: float = 1e-3
    t_final: float = 1.0
    stride: int = 10


@dataclass(frozen=True)
class StateConfig:
    kind: str = "gaussian"  # gaussian | twobox | box
    center: float = 0.0
    sigma: float = 1.0
    k0: float = 0.0
    centers: tuple[float, float] = (-3.0, 3.0)
    width: float = 2.0


@dataclass(frozen=True)
class PotentialConfig:
    kind: str = "none"  # none | harmonic
    omega: float = 1.0
    center: float = 0.0


@dataclass(frozen=True)
class SampleConfig:
    n_trajectories: int = 4
    cell_factor: int = 1       # measure-cell width in grid cells
    slab_draws: int | None = None  # draws per slab; None = one slab of all draws
    stationary: bool = False   # skip propagation, sample the initial density


@dataclass(frozen=True)
class ReconstructConfig:
    floor_fraction: float = 1e-28


@dataclass(frozen=True)
class FourBoxConfig:
    mode: str = "entangled"
    centers: tuple[float, float, float, float] = (-8.0, -3.0, 3.0, 8.0)
    width: float = 2.0
    well_omega: float | None = None  # None = matched to the box width
    track: bool = True
    region_half_width: float = 2.0


@dataclass(frozen=True)
class ContrastConfig:
    lambdas: tuple[float, ...] = (0.0, 100.0, 200.0, 400.0)
    centers: tuple[float, float] = (-3.0, 3.0)
    width: float = 2.0
    well_omega: float | None = None  # None = matched
    free: bool = False               # drop the holding wells
    strong_threshold_dx: float = 10.0


@dataclass(frozen=True)
class ConvergenceConfig:
    rungs: int = 3
    base_n: int = 256
    sigma: float = 1.0
    k0: float = 2.0


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    grid: GridConfig
    physics: PhysicsConfig
    time: TimeConfig
    state: StateConfig
    potential: PotentialConfig
    sample: SampleConfig
    reconstruct: ReconstructConfig
    fourbox: FourBoxConfig
    contrast: ContrastConfig
    convergence: ConvergenceConfig
    seed: int = 1
    output_dir: str | None = None

    @property
    def softening(self) -> float:
        if self.physics.softening is not None:
            return self.physics.softening
        return 2.0 * self.grid_obj.dx

    @property
    def grid_obj(self) -> Grid1D:
        return Grid1D(self.grid.x_min, self.grid.x_max, self.grid.n)

    def echo(self) -> dict:
        """Plain-dict echo of every resolved field, for the manifest."""
        def section(obj):
            out = {}
            for name in obj.__dataclass_fields__:
                val = getattr(obj, name)
                out[name] = list(val) if isinstance(val, tuple) else val
            return out
        return {
            "experiment": self.experiment,
            "grid": section(self.grid),
            "physics": {**section(self.physics), "softening_resolved": self.softening},
            "time": section(self.time),
            "state": section(self.state),
            "potential": section(self.potential),
            "sample": section(self.sample),
            "reconstruct": section(self.reconstruct),
            "fourbox": section(self.fourbox),
            "contrast": section(self.contrast),
            "convergence": section(self.convergence),
            "seed": self.seed,
            "output_dir": self.output_dir,
        }


_SECTIONS = {
    "grid": GridConfig,
    "physics": PhysicsConfig,
    "time": TimeConfig,
    "state": StateConfig,
    "potential": PotentialConfig,
    "sample": SampleConfig,
    "reconstruct": ReconstructConfig,
    "fourbox": FourBoxConfig,
    "contrast": ContrastConfig,
    "convergence": ConvergenceConfig,
}
_SCALARS = {"experiment", "seed", "output_dir"}

_FLOAT_FIELDS = {
    ("grid", "x_min"), ("grid", "x_max"),
    ("physics", "mass"), ("physics", "hbar"), ("physics", "q1q2"),
    ("physics", "softening"), ("physics", "self_coupling"),
    ("time", "dt"), ("time", "t_final"),
    ("state", "center"), ("state", "sigma"), ("state", "k0"), ("state", "width"),
    ("potential", "omega"), ("potential", "center"),
    ("reconstruct", "floor_fraction"),
    ("fourbox", "width"), ("fourbox", "well_omega"), ("fourbox", "region_half_width"),
    ("contrast", "width"), ("contrast", "well_omega"),
    ("contrast", "strong_threshold_dx"),
}


def _coerce(section: str, key: str, value):
    if value is None:
        return None
    if (section, key) in _FLOAT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"{section}.{key}: expected a number, got {value!r}")
        return float(value)
    if isinstance(value, list):
        return tuple(
            float(v) if isinstance(v, (int, float)) and not isinstance(v, bool) else v
            for v in value
        )
    return value


def _build_section(name: str, cls, raw: dict):
    known = set(cls.__dataclass_fields__)
    for key in raw:
        if key not in known:
            raise ParseError(f"unknown key '{name}.{key}'")
    kwargs = {k: _coerce(name, k, v) for k, v in raw.items()}
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ValidationError(f"{name}: {exc}") from exc


def parse_config(source, experiment: str | None = None) -> RunConfig:
    """Build a validated RunConfig from a YAML file path or inline YAML text.

    Unknown keys raise ParseError naming the offending key; constraint
    violations raise ValidationError naming the field. ``experiment`` (from
    the CLI subcommand) fills a missing experiment key and must agree with an
    explicit one.
    """
    if isinstance(source, Path) or (isinstance(source, str) and os.path.exists(source)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ParseError(f"malformed YAML{where}: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ParseError("config root must be a mapping")

    for key in raw:
        if key not in _SECTIONS and key not in _SCALARS:
            raise ParseError(f"unknown key '{key}'")
    sections = {}
    for name, cls in _SECTIONS.items():
        body = raw.get(name, {})
        if body is None:
            body = {}
        if not isinstance(body, dict):
            raise ParseError(f"section '{name}' must be a mapping")
        sections[name] = _build_section(name, cls, body)

    declared = raw.get("experiment")
    if declared is not None and experiment is not None and declared != experiment:
        raise ValidationError(
            f"experiment: config says {declared!r} but the subcommand is {experiment!r}"
        )
    exp = declared or experiment
    if exp is None:
        raise ValidationError("experiment: missing (no subcommand and no config key)")
    if exp not in EXPERIMENTS:
        raise ValidationError(f"experiment: {exp!r} is not one of {EXPERIMENTS}")

    seed = raw.get("seed", 1)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ValidationError("seed: expected a nonnegative integer")
    output_dir = raw.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        raise ValidationError("output_dir: expected a string path")

    cfg = RunConfig(
        experiment=exp,
        seed=seed,
        output_dir=output_dir,
        **sections,
    )
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    g = cfg.grid
    if g.n < 16 or (g.n & (g.n - 1)) != 0:
        raise ValidationError(f"grid.n: must be a power of two >= 16, got {g.n}")
    if not g.x_max > g.x_min:
        raise ValidationError("grid.x_max: must exceed grid.x_min")
    p = cfg.physics
    if p.mass <= 0:
        raise ValidationError("physics.mass: must be positive")
    if p.hbar <= 0:
        raise ValidationError("physics.hbar: must be positive")
    if p.softening is not None and p.softening <= 0:
        raise ValidationError("physics.softening: must be positive")
    if p.self_coupling < 0:
        raise ValidationError("physics.self_coupling: must be >= 0")
    t = cfg.time
    if t.dt <= 0:
        raise ValidationError("time.dt: must be positive")
    if t.t_final <= 0:
        raise ValidationError("time.t_final: must be positive")
    n_steps = round(t.t_final / t.dt)
    if n_steps < 1 or abs(n_steps * t.dt - t.t_final) > 1e-9 * t.t_final:
        raise ValidationError("time.dt: must divide time.t_final")
    if not isinstance(t.stride, int) or t.stride < 1 or n_steps % t.stride != 0:
        raise ValidationError("time.stride: must be a positive divisor of the step count")
    if cfg.seed < 0 or cfg.seed >= 2 ** 64:
        raise ValidationError("seed: must fit in an unsigned 64-bit integer")
    if cfg.state.kind not in ("gaussian", "twobox", "box"):
        raise ValidationError(f"state.kind: unknown kind {cfg.state.kind!r}")
    if cfg.potential.kind not in ("none", "harmonic"):
        raise ValidationError(f"potential.kind: unknown kind {cfg.potential.kind!r}")
    if cfg.fourbox.mode not in ("product", "entangled"):
        raise ValidationError(f"fourbox.mode: must be 'product' or 'entangled'")
    if len(cfg.fourbox.centers) != 4:
        raise ValidationError("fourbox.centers: exactly four centers required")
    if len(cfg.contrast.centers) != 2:
        raise ValidationError("contrast.centers: exactly two centers required")
    if 0.0 not in cfg.contrast.lambdas:
        raise ValidationError("contrast.lambdas: must include 0")
    if cfg.sample.n_trajectories < 1:
        raise ValidationError("sample.n_trajectories: must be >= 1")
    if cfg.sample.cell_factor < 1:
        raise ValidationError("sample.cell_factor: must be >= 1")
    if cfg.grid.n % cfg.sample.cell_factor != 0:
        raise ValidationError("sample.cell_factor: must divide grid.n")
    if cfg.convergence.rungs < 2:
        raise ValidationError("convergence.rungs: must be >= 2")


# ---------------------------------------------------------------------------
# experiment runners (each returns a list of (check name, passed, detail))

def _initial_state(cfg: RunConfig, grid: Grid1D):
    s, p = cfg.state, cfg.physics
    if s.kind == "gaussian":
        return gaussian_packet(grid, s.center, s.sigma, s.k0, p.mass, p.hbar)
    if s.kind == "box":
        return box_ground_state(grid, s.center, s.width, p.mass, p.hbar)
    return two_box_superposition(grid, s.centers, s.width, p.mass, p.hbar)


def _external_potential(cfg: RunConfig, grid: Grid1D):
    if cfg.potential.kind == "harmonic":
        return 0.5 * cfg.physics.mass * cfg.potential.omega ** 2 * (grid.x - cfg.potential.center) ** 2
    return None


def _run_evolve(cfg: RunConfig, outdir: Path):
    grid = cfg.grid_obj
    state = _initial_state(cfg, grid)
    potential = PotentialSpec(
        softening=cfg.softening,
        external=_external_potential(cfg, grid),
        self_coupling=cfg.physics.self_coupling,
    )
    result = evolve(state, potential, cfg.time.t_final, cfg.time.dt, cfg.time.stride)
    rows = []
    for t, st in zip(result.times, result.states):
        rho = np.abs(st.amp) ** 2
        for xi, ri in zip(grid.x, rho):
            rows.append((_fmt(t), _fmt(xi), _fmt(ri)))
    _write_table(outdir / "snapshots.csv", "t,x,rho", rows)
    _write_table(
        outdir / "norms.csv", "t,norm",
        [(_fmt(t), _fmt(n)) for t, n in zip(result.times, result.norms)],
    )
    drift = result.max_norm_deviation
    return [("norm_drift_below_1e-9", drift <= 1e-9, f"max |norm - 1| = {drift:.3e}")]


def _run_sample(cfg: RunConfig, outdir: Path):
    grid = cfg.grid_obj
    state = _initial_state(cfg, grid)
    n_steps = round(cfg.time.t_final / cfg.time.dt)
    if cfg.sample.stationary:
        result = stationary_evolution(state, cfg.time.dt * cfg.time.stride,
                                      n_steps // cfg.time.stride + 1)
    else:
        potential = PotentialSpec(
            softening=cfg.softening,
            external=_external_potential(cfg, grid),
            self_coupling=cfg.physics.self_coupling,
        )
        result = evolve(state, potential, cfg.time.t_final, cfg.time.dt, cfg.time.stride)
    trajectories = [
        sample_trajectory(result, cfg.seed + i)
        for i in range(cfg.sample.n_trajectories)
    ]
    cell_width = cfg.sample.cell_factor * grid.dx
    slab_draws = cfg.sample.slab_draws or trajectories[0].n_draws
    slab_length = slab_draws * trajectories[0].dt

    max_residual = 0.0
    partition_rows = []
    for i, traj in enumerate(trajectories):
        export_trajectory(traj, outdir / f"trajectory_{i:03d}.csv")
        table = cell_measures(traj, cell_width, slab_length)
        max_residual = max(max_residual, table.partition_residual())
        sums = table.measures.sum(axis=1)
        for s in range(table.n_slabs):
            partition_rows.append(
                (str(i), str(s), _fmt(sums[s]), _fmt(table.slab_length),
                 _fmt(abs(sums[s] - table.slab_length) / table.slab_length))
            )
    _write_table(outdir / "partition.csv",
                 "trajectory,slab,measure_sum,slab_length,rel_deviation",
                 partition_rows)

    checks = [(
        "partition_identity_below_1e-12", max_residual <= 1e-12,
        f"max per-slab relative deviation = {max_residual:.3e}",
    )]

    if len(trajectories) >= 2:
        ens = ensemble_density(trajectories, cell_width, slab_length)
        model = np.abs(result.states[0].amp) ** 2  # density at the first snapshot
        coarse_model = model.reshape(-1, cfg.sample.cell_factor).mean(axis=1)
        rows = []
        for s in range(ens.mean.shape[0]):
            for j in range(ens.mean.shape[1]):
                rows.append((
                    _fmt(ens.times[s]), _fmt(ens.x[j]), _fmt(ens.mean[s, j]),
                    _fmt(ens.stderr[s, j]), _fmt(coarse_model[j]),
                ))
        _write_table(outdir / "empirical_density.csv",
                     "slab_t,x,rho_hat,stderr,rho_model", rows)
    return checks


def _run_reconstruct(cfg: RunConfig, outdir: Path):
    grid = cfg.grid_obj
    state = _initial_state(cfg, grid)
    rho = density_from_wavefunction(state)
    flux = flux_from_wavefunction(state)
    floor = cfg.reconstruct.floor_fraction * float(np.max(rho.values))
    vel = velocity_field(rho, flux, rho_floor=floor)
    rebuilt = reconstruct_wavefunction(rho, vel, cfg.physics.mass, cfg.physics.hbar)
    distance = global_phase_distance(state, rebuilt)
    rows = []
    for i in range(grid.n):
        rows.append((
            _fmt(grid.x[i]), _fmt(rho.values[i]),
            str(int(vel.defined[i])), _fmt(vel.values[i]),
            _fmt(rebuilt.amp[i].real), _fmt(rebuilt.amp[i].imag),
        ))
    _write_table(outdir / "reconstruction.csv",
                 "x,rho,defined,v,rebuilt_re,rebuilt_im", rows)
    return [(
        "round_trip_below_1e-8", distance <= 1e-8,
        f"global-phase-minimized L2 distance = {distance:.3e}",
    )]


def _run_fourbox(cfg: RunConfig, outdir: Path):
    grid = cfg.grid_obj
    fb = cfg.fourbox
    scenario = FourBoxScenario(
        centers=fb.centers, width=fb.width, q1q2=cfg.physics.q1q2,
        softening=cfg.softening, mode=fb.mode,
    )
    m, hbar = cfg.physics.mass, cfg.physics.hbar
    state = build_four_box(scenario, grid, grid, m, hbar)
    branches = four_box_branches(scenario, grid, grid, m, hbar)
    potential_pair = PotentialSpec(softening=cfg.softening, q1q2=cfg.physics.q1q2)
    matrix = branch_interaction_matrix(state, branches, potential_pair)
    write_branch_matrix_table(matrix, outdir / "branch_matrix.csv")

    purity, schmidt = schmidt_purity(state)
    checks = [(
        "branch_matrix_completeness_below_1e-10",
        matrix.completeness_error() <= 1e-10,
        f"relative completeness error = {matrix.completeness_error():.3e}",
    )]
    if fb.mode == "product":
        checks.append(("product_purity_within_1e-10", abs(purity - 1.0) <= 1e-10,
                       f"purity = {purity:.12f}"))
    else:
        checks.append(("entangled_schmidt_number_2_within_1e-6",
                       abs(schmidt - 2.0) <= 1e-6, f"schmidt number = {schmidt:.8f}"))
        if cfg.physics.q1q2 != 0.0 and scenario.min_gap >= 10.0 * cfg.softening:
            within = min(abs(v) for v in matrix.diagonal().values())
            cross = matrix.max_cross_magnitude()
            ok = cross <= 1e-6 * within
            checks.append(("cross_branch_suppressed_below_1e-6",
                           ok, f"max cross = {cross:.3e}, min within = {within:.3e}"))

    summary = {
        "mode": fb.mode,
        "labels": list(matrix.labels),
        "diagonal_energies": {k: float(v) for k, v in matrix.diagonal().items()},
        "total": matrix.total,
        "direct_expectation": matrix.direct_expectation,
        "completeness_error": matrix.completeness_error(),
        "max_cross_magnitude": matrix.max_cross_magnitude(),
        "purity": purity,
        "schmidt_number": schmidt,
    }

    if fb.track:
        omega = fb.well_omega if fb.well_omega is not None else matched_well_omega(fb.width, m, hbar)
        wells = holding_wells(grid, fb.centers, omega, m)
        potential = PotentialSpec(
            softening=cfg.softening, q1q2=cfg.physics.q1q2, external=wells,
        )
        result = evolve(state, potential, cfg.time.t_final, cfg.time.dt, cfg.time.stride)
        c1, c2, c3, c4 = fb.centers
        hw = fb.region_half_width
        regions = [
            Region("A1", c1 - hw, c1 + hw, axis=0),
            Region("A2", c2 - hw, c2 + hw, axis=0),
            Region("B1", c3 - hw, c3 + hw, axis=1),
            Region("B2", c4 - hw, c4 + hw, axis=1),
        ]
        tracking = packet_center_tracking(result, regions)
        write_tracking_table(tracking, outdir / "centers.csv")
        summary["leakage_labels"] = list(tracking.leakage_labels)
        checks.append(("tracking_containment_99pc",
                       len(tracking.leakage_labels) == 0,
                       f"regions flagged: {list(tracking.leakage_labels)}"))

    with (outdir / "summary.yaml").open("w", encoding="utf-8") as fh:
        yaml.safe_dump(summary, fh, sort_keys=True)
    return checks


def _run_contrast(cfg: RunConfig, outdir: Path):
    grid = cfg.grid_obj
    ct = cfg.contrast
    m, hbar = cfg.physics.mass, cfg.physics.hbar
    if ct.free:
        omega = None
        half_width = 0.45 * grid.length  # wide windows, clear of the seam
    else:
        omega = ct.well_omega if ct.well_omega is not None else matched_well_omega(ct.width, m, hbar)
        half_width = None
    report = self_interaction_contrast(
        grid, ct.centers, ct.width, ct.lambdas,
        softening=cfg.softening, t_final=cfg.time.t_final, dt=cfg.time.dt,
        record_stride=cfg.time.stride, well_omega=omega,
        region_half_width=half_width, m=m, hbar=hbar,
    )
    rows = [
        (_fmt(lam), _fmt(d), _fmt(d / grid.dx))
        for lam, d in zip(report.lambdas, report.displacements)
    ]
    _write_table(outdir / "contrast.csv", "lambda,displacement,displacement_dx", rows)
    for lam, tracking in zip(report.lambdas, report.trackings):
        write_tracking_table(tracking, outdir / f"centers_lambda_{lam:g}.csv")
    zero = report.displacement_at_zero()
    checks = [
        ("zero_coupling_displacement_below_2dx", zero <= 2.0 * grid.dx,
         f"displacement at 0 = {zero / grid.dx:.3f} dx"),
        ("displacement_nondecreasing_within_1dx", report.is_nondecreasing(grid.dx),
         f"displacements/dx = {np.round(report.displacements / grid.dx, 3).tolist()}"),
    ]
    strong = float(np.max(report.displacements))
    checks.append((
        "strong_coupling_displacement_above_threshold",
        strong >= ct.strong_threshold_dx * grid.dx,
        f"max displacement = {strong / grid.dx:.2f} dx, "
        f"threshold {ct.strong_threshold_dx} dx",
    ))
    return checks


def _run_convergence(cfg: RunConfig, outdir: Path):
    cv = cfg.convergence
    p = cfg.physics
    norms = []
    rows = []
    for rung in range(cv.rungs):
        n = cv.base_n * 2 ** rung
        dt = cfg.time.dt / 2 ** rung
        grid = Grid1D(cfg.grid.x_min, cfg.grid.x_max, n)
        psi = gaussian_packet(grid, cfg.state.center, cv.sigma, cv.k0, p.mass, p.hbar)
        potential = PotentialSpec(softening=cfg.softening)
        result = evolve(psi, potential, cfg.time.t_final, dt, cfg.time.stride)
        _, res = continuity_residual(result)
        norms.append(float(res.max()))
        ratio = norms[-2] / norms[-1] if rung > 0 else float("nan")
        rows.append((str(rung), str(n), _fmt(dt), _fmt(dt * cfg.time.stride),
                     _fmt(norms[-1]), _fmt(ratio) if rung > 0 else ""))
    _write_table(outdir / "convergence.csv",
                 "rung,n,dt,snapshot_spacing,residual_norm,ratio", rows)
    ratios = [norms[i] / norms[i + 1] for i in range(len(norms) - 1)]
    ok = all(3.5 <= r <= 4.5 for r in ratios)
    return [(
        "residual_ratio_in_3.5_to_4.5", ok,
        f"ratios = {[round(r, 3) for r in ratios]}",
    )]


_RUNNERS = {
    "evolve": _run_evolve,
    "sample": _run_sample,
    "reconstruct": _run_reconstruct,
    "fourbox": _run_fourbox,
    "contrast": _run_contrast,
    "convergence": _run_convergence,
}


@dataclass(frozen=True)
class RunOutcome:
    status: int
    outdir: Path
    checks: list = field(default_factory=list)


def run(cfg: RunConfig, out_override: str | None = None,
        seed_override: int | None = None) -> RunOutcome:
    """Execute one experiment, write artifacts and the manifest.

    Returns status 0 exactly when every invariant check passed.
    """
    if seed_override is not None:
        cfg = RunConfig(**{**{k: getattr(cfg, k) for k in cfg.__dataclass_fields__},
                           "seed": seed_override})
    outdir = Path(out_override or cfg.output_dir or f"runs/{cfg.experiment}")
    outdir.mkdir(parents=True, exist_ok=True)

    started = time.time()
    checks = _RUNNERS[cfg.experiment](cfg, outdir)
    wall = time.time() - started

    status = 0 if all(passed for _, passed, _ in checks) else 1
    manifest = {
        "experiment": cfg.experiment,
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.echo(),
        "checks": [
            {"name": name, "passed": bool(passed), "detail": detail}
            for name, passed, detail in checks
        ],
        "status": "pass" if status == 0 else "fail",
        "wall_time_s": round(wall, 3),
    }
    with (outdir / "manifest.yaml").open("w", encoding="utf-8") as fh:
        yaml.safe_dump(manifest, fh, sort_keys=True)
    emit_plot_data(outdir)
    return RunOutcome(status=status, outdir=outdir, checks=checks)


# ---------------------------------------------------------------------------
# plot-data emission

def _read_table(path: Path) -> tuple[list[str], list[list[str]]]:
    if not path.exists():
        raise MissingArtifactError(f"missing artifact {path}")
    lines = path.read_text(encoding="utf-8").strip().splitlines()
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


def emit_plot_data(run_dir) -> list[Path]:
    """Project a completed run's tables into plot-ready long-format files.

    One fig_*.csv per figure kind; raises MissingArtifactError when the run
    directory lacks the tables its experiment should have produced.
    """
    run_dir = Path(run_dir)
    manifest_path = run_dir / "manifest.yaml"
    if not manifest_path.exists():
        raise MissingArtifactError(f"missing artifact {manifest_path}")
    manifest = yaml.safe_load(manifest_path.read_text(encoding="utf-8"))
    experiment = manifest["experiment"]
    written = []

    if experiment in ("evolve", "convergence"):
        src = "snapshots.csv" if experiment == "evolve" else "convergence.csv"
        header, rows = _read_table(run_dir / src)
        dest = run_dir / ("fig_density_snapshots.csv" if experiment == "evolve"
                          else "fig_convergence.csv")
        _write_table(dest, ",".join(header), rows)
        written.append(dest)
    if experiment == "sample":
        header, rows = _read_table(run_dir / "trajectory_000.csv")
        t_col, x_col = header.index("t"), header.index("x")
        dest = run_dir / "fig_trajectory_scatter.csv"
        _write_table(dest, "t,x", [(r[t_col], r[x_col]) for r in rows])
        written.append(dest)
        overlay = run_dir / "empirical_density.csv"
        if overlay.exists():
            header, rows = _read_table(overlay)
            dest = run_dir / "fig_density_overlay.csv"
            _write_table(dest, ",".join(header), rows)
            written.append(dest)
    if experiment == "reconstruct":
        header, rows = _read_table(run_dir / "reconstruction.csv")
        dest = run_dir / "fig_reconstruction.csv"
        _write_table(dest, ",".join(header), rows)
        written.append(dest)
    if experiment == "fourbox":
        centers = run_dir / "centers.csv"
        if centers.exists():
            header, rows = _read_table(centers)
            labels = []
            for r in rows:
                if r[1] not in labels:
                    labels.append(r[1])
            by_time: dict[str, dict[str, str]] = {}
            order = []
            for r in rows:
                if r[0] not in by_time:
                    by_time[r[0]] = {}
                    order.append(r[0])
                by_time[r[0]][r[1]] = r[2]
            dest = run_dir / "fig_center_tracks.csv"
            _write_table(
                dest,
                "t," + ",".join(f"center_{lab}" for lab in labels),
                [[t] + [by_time[t][lab] for lab in labels] for t in order],
            )
            written.append(dest)
    if experiment == "contrast":
        header, rows = _read_table(run_dir / "contrast.csv")
        dest = run_dir / "fig_contrast_displacement.csv"
        _write_table(dest, ",".join(header), rows)
        written.append(dest)
    return written


# ---------------------------------------------------------------------------
# entry point

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rdmsim",
        description="Deterministic experiments on the random-discontinuous-motion picture",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="YAML config file (defaults apply if omitted)")
        p.add_argument("--out", help="output directory override")
        p.add_argument("--seed", type=int, help="seed override")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config if args.config else "{}", args.experiment)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    seed_override = args.seed
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            seed_override = int(env_seed)
        except ValueError:
            print(f"config error: {SEED_ENV_VAR} must be an integer", file=sys.stderr)
            return 2

    outcome = run(cfg, out_override=args.out, seed_override=seed_override)
    for name, passed, detail in outcome.checks:
        print(f"[{'pass' if passed else 'FAIL'}] {name}: {detail}")
    if outcome.status != 0:
        failures = [
            {"name": name, "detail": detail}
            for name, passed, detail in outcome.checks if not passed
        ]
        print(yaml.safe_dump({"failed_checks": failures}, sort_keys=True),
              file=sys.stderr)
    print(f"artifacts in {outcome.outdir}")
    return outcome.status


if __name__ == "__main__":
    sys.exit(main())
