//! Calibration of the dispersion parameter and of risk scores.

pub mod phi;
pub mod scores;

pub use phi::{
    calibrate_phi_envelope, calibrate_phi_gini, default_phi_grid, envelope_estimate, gini_curve,
    gini_estimate, log_spaced_phi_grid, simulate_calibration, simulate_envelopes,
    CalibrationTables, EstimateStatus, GiniCurveRow, ObservedNeighborhoodProfile, PhiDiagnostics,
    PhiEnvelope, PhiEstimate, PhiMethod,
};
pub use scores::{
    isotonic_regression, isotonic_regression_bits, pav, platt_scaling, reliability_curve, Binning,
    CalibratorFn, CalibratorKind, ReliabilityBin,
};
