//! Detection and phase readout: FID synthesis and spectra, the two-readout
//! phase experiment, phase estimation and the correction loop.

mod estimate;
mod experiment;
mod fid;

pub use estimate::{
    calibrate_phase, estimate_phase, estimate_phase_magnitude_only, load_signal_records,
    normalize_deg, read_signal_records, relative_error_percent, wrap_deg, CalibrationOptions,
    CalibrationResult, CalibrationStep, PhaseEstimate, SignalRecord, SIGNAL_FLOOR,
};
pub use experiment::{
    measure_phase, phase_experiment_sequence, run_phase_experiment, GateErrorModel, ReadAxis,
};
pub use fid::{acquire_fid, integrate, spectrum, Fid, Spectrum};
