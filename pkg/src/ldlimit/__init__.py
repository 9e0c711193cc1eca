"""Low-density limit of repeated quantum interactions, checked numerically."""
from .bath import BathSpec, CouplingPoint, GibbsWeights, discrete_noise, gibbs_weights
from .dynamics import (
    QuantumChannel,
    collision_scattering_check,
    iterate,
    limit_conjugation,
    reduced_error_sweep,
    sector_simulate,
    step_channel,
)
from .gns import CoefficientTable, gns_basis, gns_coefficients, lambda_scaling_table
from .interaction import (
    StepUnitary,
    SystemSpec,
    assemble_hamiltonian,
    q1_instance,
    random_instance,
    scattering_matrix,
    step_unitary,
)
from .limit import assemble_limit_generator, hp_structure_check, sweep_and_fit
from .matrixcore import mat_exp, partial_trace_bath, trace_norm
from .noisealg import aggregated_ito_check, chain_noise_operator, ito_product, verify_chain_actions
from .rates import RateFit, fit_rate, geometric_grid

__version__ = "0.1.0"
