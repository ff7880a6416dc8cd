//! Recovering source parameters from click streams.
//!
//! The pieces compose as: [`correlate`] the stream, fit the slow bunching
//! envelope to off-zero bins ([`fit_zeta`]), then invert the zero-lag values
//! ([`extract_sg2`]) and reconstruct the photon-number distribution
//! ([`reconstruct_fock`]). [`analyze`] runs the whole chain.

mod bunching;
mod correlate;
mod extract;
mod photon_number;
mod report;

pub use bunching::{fit_zeta, LagPoint, PlateauModel, ZetaFit};
pub use correlate::{
    correlate, pair_name, port_coincidence, CorrelationSet, Estimate, PortCoincidence,
    AUTO_PAIRS, CROSS_PAIRS, PAIRS,
};
pub use extract::{
    extract_sg2, hbt_from_bypass, hbt_from_correlations, hom_from_stream, hwp_visibility,
    plateau_points, pnr_zero_lag, traditional_coalescence, visibility, HbtExtraction,
    Sg2Extraction,
};
pub use photon_number::{reconstruct_fock, three_fold_efficiency, FockInputs};
pub use report::{
    analyze, verify_stream_origin, write_correlation_csv, Analysis, AnalysisOptions, FockReport,
    LagValue, Sg2Report, ThirdOrder,
};
