//! Qudit monitoring: unitary observables built from Heisenberg–Weyl
//! operators, noisy-CNOT system–environment interactions, monitoring maps,
//! and the entropic quantifiers of realism and information flow.

pub mod algebra;
pub mod cli;
pub mod darwinism;
pub mod error;
pub mod monitoring;
pub mod observable;
pub mod output;
pub mod phases;
pub mod qubit;
pub mod weyl;

pub use algebra::{
    partial_trace, random_density, random_unitary, tensor, trace_distance, von_neumann_entropy, DimensionLayout,
    Operator, C64,
};
pub use darwinism::{
    evolve_dense, info_flow_check, mutual_info_profile, noisy_cnot, reduced_state_dense, reduced_state_structured,
    system_state_after, Backend, EnvironmentModel, FragmentProfile, InfoFlow,
};
pub use error::{QmonError, Result};
pub use monitoring::{
    accessible_info, decompose_irreality, dephase, effective_strength, irreality, monitor, monitor_repeated,
    mutual_information, IrrealityParts, MonitoringSpec, ObservableBasis,
};
pub use observable::{build_t, vacuum_overlap, PhaseVector, UnitaryObservable};
pub use phases::{
    analytic_phases, eta_from_phases, residual_norm, solve_phases, solve_phases_with, EtaReading, NoiseLevel,
    SolverOptions, SolverReport,
};
pub use weyl::Dimension;
