"""Dissipative atom-cavity passage simulator.

Evolves small atom-photon states under time-dependent conditional
(non-Hermitian) Hamiltonians as atoms move through an optical cavity,
and evaluates the fidelity and no-photon success probability of the
entangling passages, together with the matching closed-form results.
"""

from .analysis import (
    AnalysisError,
    BrightEigensystem,
    DFBasis,
    ThreeAtomDF,
    adiabatic_rates,
    analytic_no_photon_probability,
    bright_eigensystem,
    dark_amplitude_decay,
    dark_state,
    df_subspace,
    eliminated_amplitudes,
    stop_fidelity,
    three_atom_df_decomposition,
    zeno_projector_distance,
)
from .dynamics import (
    DynamicsError,
    EvolutionResult,
    IntegrationError,
    IntegratorSettings,
    TimeDependentHamiltonian,
    fidelity,
    integrate_conditional,
    integrate_fixed_step,
    integrate_piecewise,
    no_photon_probability,
    population,
    reference_evolve,
)
from .experiments import (
    RunResult,
    ScenarioSpec,
    SweepRow,
    SweepSpec,
    run_effective_two_atom,
    run_scenario,
    run_three_atom,
    run_two_atom_direct,
    run_two_atom_lambda,
    sweep,
)
from .kernels import available_backends, get_backend
from .model import (
    ConstantVelocityTrajectory,
    CouplingProfile,
    EffectiveParams,
    LaserProfile,
    LaserSchedule,
    ModelError,
    ShapedVelocityTrajectory,
    SystemConfig,
    build_h_cond_lambda,
    build_h_cond_two_level,
    build_h_eff,
    build_h_int,
    coupling_at,
    effective_params,
    laser_at,
    positions_at,
    velocity_at,
)
from .qcore import (
    Basis,
    Operator,
    QCoreError,
    StateVector,
    build_basis,
    matrix_exponential_propagator,
    null_space,
)

__version__ = "0.1.0"
