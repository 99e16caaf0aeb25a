"""Entanglement entropy, observational entropy and unitary work extraction."""

__version__ = "0.1.0"

from .entropy import (
    Measurement,
    OutcomeDistribution,
    ProductMeasurement,
    SchmidtDecomposition,
    entanglement_entropy,
    observational_entropy,
    outcome_distribution,
    schmidt,
    von_neumann_entropy,
)
from .localopt import (
    LocalMinResult,
    OptimizerConfig,
    haar_random_unitary,
    minimize_obs_entropy_product,
    quantum_correlation_entropy,
)
from .protocol import (
    ConvergenceReport,
    ProtocolConfig,
    WorkSamples,
    certify,
    convergence_study,
    cooling_diagnostic,
    extraction_unitary,
    random_phase_unitary,
    simulate_extraction,
)
from .qstate import (
    DensityMatrix,
    PureState,
    SpectralDecomposition,
    dephase,
    partial_trace,
    spectral,
    tensor_power,
    tensor_product,
    validate_density,
)
from .thermo import (
    Hamiltonian,
    ThermalState,
    entanglement_ergotropy,
    ergotropy,
    observational_ergotropy,
    passive_transform,
    solve_beta,
    thermal_entropy,
    thermal_state,
)
