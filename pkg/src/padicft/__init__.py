"""Discretized p-adic statistical field theory on the finite groups G_l."""

__version__ = "0.1.0"

from .errors import (
    CapacityError,
    DivergentIntegral,
    InvalidSpec,
    NotHermitian,
    NotLizorkin,
    PadicFTError,
    SingularSystem,
    TooLarge,
)
from .gibbs import (
    EstimatorResult,
    FreeMeasure,
    SampleBatch,
    characteristic_functional,
    consistency_check,
    exact_covariance,
    gaussian_moment,
    mc_moment,
    pairing_variance,
    propagator_values,
    sample_free,
)
from .interacting import (
    InteractionSpec,
    correlation,
    e_int,
    functional_derivative_check,
    generating_functional,
    partition_interacting,
    perturbative_correlation,
    perturbative_Z,
    wick_rotated_Z,
)
from .landau import (
    GLParams,
    MinimizeConfig,
    MinimizeResult,
    constant_solution_residual,
    gl_energy,
    gl_gradient,
    minimize,
    ssb_scan,
)
from .lattice import (
    Lattice,
    ModelParams,
    assemble_A,
    assemble_U,
    assemble_W,
    dft,
    embed_field,
    energy_free_coord,
    energy_free_momentum,
    idft,
    lizorkin_project,
    solve_free_source,
)
from .padic import (
    ExactNorm,
    GridPoint,
    PrimeConfig,
    character,
    enumerate_grid,
    frac_part_pairing,
    point_norm,
    scalar_ord,
    split_plus_minus,
    sub_mod,
)
from .radial import (
    KernelSpec,
    continuum_propagator,
    d_const,
    mass_ball_integral,
    shell_volume,
    symbol,
)
from .wick import wick_pairings
