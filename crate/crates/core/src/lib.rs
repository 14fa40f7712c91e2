//! Heat-bath algorithmic cooling of a near-equivalent spin-½ pair through its
//! long-lived singlet state.
//!
//! The population layer ([`state`], [`protocol`]) is generic over [`Scalar`];
//! relaxation ([`kinetics`]) and pulse simulation ([`coherent`]) work in `f64`.

pub mod coherent;
pub mod error;
pub mod expm;
pub mod fit;
pub mod kinetics;
pub mod protocol;
pub mod scalar;
pub mod state;

pub use coherent::{
    ab_spectrum, apsoc_amplitude, composite_pulse_propagator, free_hamiltonian, propagate,
    simulate_permutation, t00_project, DensityOperator, LarmorSign, Propagator, PulseShape,
    SpinOperatorSet,
};
pub use error::{Error, Result};
pub use fit::{fit_monoexponential, ExpFit, FitStatus};
pub use kinetics::{
    calibrate_rates, decay_curve, finite_reset, finite_reset_exact, run_kinetic,
    run_kinetic_enhanced, sweep_tau, KineticProtocolResult, RateMatrix, TauSweep,
};
pub use protocol::{
    closed_form_so, cycle_matrix, enhance_zeeman, ideal_reset, ideal_steady_state,
    permutation_matrix, run_ideal, steady_state_so, PermutationKind, ProtocolSequence, Step,
    TransferLabel, TransferMatrix,
};
pub use scalar::{FirstOrder, Scalar};
pub use state::{
    epsilon, measure_order, thermal_populations, unitary_max_order, OrderObservable,
    PopulationVector, SpinState, SpinSystemParams,
};

/// Populations in double precision.
pub type Populations = PopulationVector<f64>;
/// Transfer matrix in double precision.
pub type Transfer = TransferMatrix<f64>;
/// First-order (high-temperature) expansion in the polarization.
pub type Expanded = FirstOrder<f64>;
/// Exact rational populations.
pub type ExactPopulations = PopulationVector<num_rational::Ratio<i128>>;
