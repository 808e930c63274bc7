//! Simulation and analysis toolkit for nonlinear interferometry with
//! undetected photons.
//!
//! The crate builds one- and two-pair parametric photon states, propagates
//! them through an induced-coherence interferometer (idler phase, partial
//! idler overlap, signal beam splitter, two detectors), and extracts the
//! resulting singles and coincidence fringes. A spectral layer models the
//! joint spectral amplitude of the pairs, interference filtering, Schmidt
//! structure, and the visibility envelope under idler delay; an analysis
//! layer fits fringes and envelopes and generates synthetic count data.
//!
//! Modules:
//! - [`fock`]: sparse multimode Fock states and detection probabilities.
//! - [`elements`]: phase shifters, beam splitters, mode overlap, gain law.
//! - [`interferometer`]: the scenario wiring and scans.
//! - [`spectral`]: joint spectral amplitude, filters, Schmidt, envelopes.
//! - [`analysis`]: sinusoid/envelope fitting, comparator, synthetic counts.

pub mod analysis;
pub mod elements;
pub mod fock;
pub mod interferometer;
pub mod spectral;

pub use analysis::{
    classical_product, fit_envelope, fit_sinusoid, synthesize_counts, visibility, EnvelopeFit,
    FitError, FitResult, PeriodSpec,
};
pub use elements::{
    apply_beam_splitter, apply_overlap, apply_phase, stimulated_gain_ratio, BeamSplitterSpec,
    OverlapSpec,
};
pub use fock::{
    CountPredicate, FockError, FockState, Mode, ModeId, ModeRegistry, Occupation,
    DEFAULT_PHOTON_CAPACITY, DEFAULT_PRUNE_THRESHOLD,
};
pub use interferometer::{
    build_pair_state, emission_check, hom_cross_term, linspace, DetectorSemantics, EmissionRates,
    ExperimentConfig, Interferometer, PointProbabilities, PositionConvention, ScanResult,
};
pub use spectral::{
    angular_frequency, bandwidth_to_angular, fringe_with_envelope, DelayVisibility, FilterArm,
    FilterSpec, FilterShape, JointSpectralAmplitude, JsaModel, SchmidtAnalysis, SpectralError,
    SpectralGrid, SPEED_OF_LIGHT,
};
