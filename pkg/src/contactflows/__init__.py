"""Contact Hamiltonian flows on dually flat spaces.

Lift dynamics on Legendre submanifolds of contact manifolds (in Darboux
coordinates, lambda = dz - p.dx) to the ambient space so that the defect
coordinates decay exponentially, integrate the lifted flows, and check the
associated invariants: contact identities, phase compressibility, canonical
divergences, Pythagorean relations, and conservation in the extended
(dissipation-absorbing) lift.
"""

from .errors import (
    CompressibilityMismatchError,
    ContactFlowsError,
    DimensionMismatchError,
    EvaluationError,
    IntegrationAbort,
    NewtonConvergenceError,
    NonMetricExtensionError,
    OutsideInvariantChartError,
    PythagoreanConfigError,
    ScenarioError,
    StrictConvexityError,
)
from .extended import (
    ExtendedLiftSpec,
    ExtendedPoint,
    embed_extended,
    extended_invariant_density,
    extended_lifted_field,
    restricted_extended_field,
    tilde_deltas,
    tilde_hamiltonian,
    tilde_potential_value,
)
from .geometry import (
    CanonicalPoint,
    ContactHamiltonian,
    TangentVector,
    contact_form_pairing,
    hamiltonian_vector_field,
    phase_compressibility,
    reeb_field,
    verify_contact_identities,
)
from .integrate import (
    IntegratorConfig,
    Trajectory,
    exponential_map,
    fit_decay_rate,
    integrate_lift,
    integrate_on_submanifold,
)
from .lifts import (
    DriftField,
    LiftSpec,
    RestoringFunction,
    build_hamiltonian,
    delta_velocities,
    geodesic_drift_phi,
    geodesic_drift_psi,
    gradient_drift_phi,
    gradient_drift_psi,
    invariant_density,
    lifted_field,
    linear_drift,
    linear_restoring,
    onsager_drift,
    restricted_field_phi,
    restricted_field_psi,
    rotational_drift,
    stability_certificate,
)
from .models import (
    CircuitParams,
    OnsagerParams,
    SpinParams,
    onsager_spec,
    rc_spec,
    rc_thermal_spec,
    rl_spec,
    rl_thermal_spec,
    rlc_spec,
    rlc_thermal_spec,
    spin_spec,
)
from .potentials import (
    ConvexPotential,
    DuallyFlatWorkspace,
    canonical_divergence,
    delta_phi,
    delta_psi,
    embed_phi,
    embed_psi,
    legendre_transform,
    pythagorean_residual,
    quadratic_potential,
    separable_potential,
    spin_potential,
)
from .scenario import (
    InvariantCheck,
    InvariantReport,
    Scenario,
    divergence_table,
    parse_scenario,
    run_scenario,
    write_trajectory_csv,
)

__version__ = "0.1.0"
