"""Steering inequalities and one-sided device-independent certification of
graph states, Schmidt states and generalized W states."""

__version__ = "0.1.0"

from .linalg import (
    gen_pauli_x,
    gen_pauli_z,
    kron,
    mat_power,
    hermitize,
    max_eigenvalue,
    partial_trace,
    fidelity,
    max_norm,
    omega,
    random_state,
    random_unitary,
)
from .states import (
    Multigraph,
    SchmidtParams,
    WParams,
    graph_state,
    schmidt_state,
    w_state,
    stabilizer,
    verify_stabilized,
)
from .operators import (
    Scenario,
    SteeringFunctional,
    graph_steering_functional,
    schmidt_steering_functional,
    w_steering_functional,
    schmidt_coefficients,
    w_coefficients,
    projector_Pl,
    build_functional,
    reference_state,
    parse_scenario,
)
from .bounds import (
    BoundReport,
    quantum_value,
    lhs_upper_graph,
    lhs_upper_schmidt,
    lhs_exact_enumeration,
    bound_report,
)
from .correlations import (
    CorrelationTable,
    LHSModel,
    born_table,
    lhs_table,
    generalized_expectations,
    functional_value_from_table,
    depolarize,
)
from .certifier import (
    CertificationReport,
    stabilization_residuals,
    graph_commutation_residual,
    anticommutation_residual,
    canonical_form,
    extract_and_compare,
    w_amplitude_recovery,
    scrambled_instance,
)
from .exceptions import (
    SteerCertError,
    DimensionError,
    NotUnitaryError,
    NotHermitianError,
    InvalidGraphError,
    InvalidParamsError,
    UnsupportedFamilyError,
    EnumerationCapError,
    NotCertifiableError,
)
