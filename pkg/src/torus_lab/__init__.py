"""Spectral laboratory for Sobolev-norm inequalities of the 3D periodic Navier-Stokes and Euler equations."""
from .exceptions import (
    BlowUpDetected,
    CFLViolation,
    DegenerateFieldError,
    InadmissibleIndexError,
    LatticeMismatchError,
    SnapshotFormatError,
    ZeroMeanError,
)
from .spectral_core import (
    Lattice,
    PhysicalField,
    SpectralField,
    dealiased_product,
    direct_convolution,
    iter_triads,
    leray_project,
    random_solenoidal,
    read_snapshot,
    taylor_green,
    to_physical,
    to_spectral,
    write_snapshot,
)
from .norm_audit import (
    AuditResult,
    carlson_integral_constant,
    carlson_majorant_audit,
    euler_integral_constant,
    f1_majorant_audit,
    fr_norm,
    interpolation_audit,
    lattice_reciprocal_sum_audit,
    sobolev_norm,
    write_audit_csv,
)
from .trilinear import (
    TrilinearBreakdown,
    cancellation_residual,
    lemma_chain_audit,
    nonlinear_term,
    trilinear_direct,
    trilinear_fast,
)
from .evolution import (
    SolverConfig,
    Trajectory,
    comparison_ode_oracle,
    energy_identity_audit,
    euler_rate_audit,
    existence_time_bound,
    rate_report,
    run,
    step,
)

__version__ = "0.1.0"
