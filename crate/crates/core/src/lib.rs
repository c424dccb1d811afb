//! Quantum state transfer of multi-site encodings through an XY spin chain.

pub mod chain;
pub mod cli;
pub mod encodings;
pub mod error;
pub mod fidelity;
pub mod format;
pub mod optimizer;
pub mod propagator;
pub mod summation;

pub use chain::{make_chain, make_encoding, ChainSpec, EncodingState, ModeTable, PropagatedState};
pub use encodings::{
    encoding_distance, make_psi_k, make_xi_k, optimal_encoding, transfer_block, OptimalEncodingResult, XiParameters,
};
pub use error::{Error, Result};
pub use fidelity::{
    average_fidelity, fidelity_direct, fidelity_field_term, fidelity_xi, fidelity_xi_avg, fidelity_xi_max,
    field_decomposition, max_fidelity_from_components, FidelityComponents, FidelityReport, FieldDecomposition, Variant,
};
pub use optimizer::{
    find_peak, h0_parity_prediction, optimal_field, sweep, EncodingFidelity, FieldOptimum, FnObjective, PeakResult,
    TimeObjective, TopSingularValue, ZeroFieldBehavior,
};
pub use propagator::{
    amplitude, amplitude_row, amplitudes_at, dense_oracle, propagate, reduced_amplitude, ParityClass, ReducedAmplitude,
    SineTable,
};
