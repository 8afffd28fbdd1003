"""Simulator for the random-discontinuous-motion particle picture.

Propagates one- and two-particle wave functions spectrally, samples
position trajectories from |psi|^2, rebuilds densities and the wave
function itself from those trajectories, and runs the four-box branch
experiments that probe which wave packets interact and which do not.
"""

from .dynamics import (
    EvolutionResult,
    PotentialSpec,
    evolve,
    hartree_self_potential,
    schmidt_purity,
    soft_coulomb,
    stationary_evolution,
    strang_step,
)
from .errors import RdmError
from .fields import (
    Density2D,
    DensityField,
    FluxField,
    VelocityField,
    configuration_density,
    continuity_residual,
    density_from_wavefunction,
    flux_from_wavefunction,
    product_factorization_check,
    velocity_field,
)
from .grids import (
    Grid1D,
    WaveFunction1D,
    WaveFunction2D,
    box_ground_state,
    gaussian_packet,
    inner_product,
    normalize,
)
from .reconstruction import (
    PhaseField,
    global_phase_distance,
    phase_from_velocity,
    reconstruct_wavefunction,
)
from .sampling import (
    CellMeasureTable,
    EnsembleDensity,
    Trajectory,
    cell_measures,
    empirical_density,
    ensemble_density,
    export_trajectory,
    sample_cell_indices_2d,
    sample_trajectory,
)
from .scenarios import (
    Branch,
    BranchInteractionMatrix,
    ContrastReport,
    FourBoxScenario,
    Region,
    TrackingResult,
    branch_interaction_matrix,
    build_four_box,
    center_displacements,
    four_box_branches,
    holding_wells,
    matched_well_omega,
    packet_center_tracking,
    self_interaction_contrast,
    two_box_superposition,
)

__version__ = "0.1.0"
