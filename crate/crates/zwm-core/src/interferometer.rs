//! The nonlinear-interferometer scenario: pair-source states wired through
//! idler overlap, a signal beam splitter, and two detectors.
//!
//! Topology: two parametric sources share a pump; source 1 emits into
//! (S1, I1), source 2 into (S2, I2). A phase φ sits on the I1 path, the
//! idler modes are overlapped with amplitude γ, and the signal modes meet at
//! a beam splitter whose outputs feed detectors D1 and D2. Detection traces
//! over every idler and ancilla mode, so the idler phase is read out purely
//! from the signal fringes.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::elements::{apply_beam_splitter, apply_overlap, BeamSplitterSpec, OverlapSpec};
use crate::fock::{CountPredicate, FockError, FockState, ModeId, ModeRegistry};

/// How scan positions map to idler optical path difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositionConvention {
    /// Positions are the optical path difference Δ directly.
    OpticalPath,
    /// Positions are mirror displacements d; retro-reflection gives Δ = 2d.
    MirrorDisplacement,
}

/// Detector model used when converting amplitudes to click probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorSemantics {
    /// Click on one or more photons (avalanche detectors).
    Threshold,
    /// Click on exactly one photon (number-resolving readout).
    NumberResolving,
}

/// Full parameter set for one interferometer scenario.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Photon pairs per source term: 1 or 2.
    pub pair_number: u32,
    /// Idler mode-overlap amplitude in [0, 1].
    pub gamma: f64,
    /// Signal beam-splitter transmission amplitude.
    pub bs_transmission: f64,
    pub signal_wavelength_nm: f64,
    pub idler_wavelength_nm: f64,
    /// Scan positions in nanometers, interpreted per `position_convention`.
    pub scan_positions: Vec<f64>,
    pub position_convention: PositionConvention,
    pub detector_semantics: DetectorSemantics,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            pair_number: 2,
            gamma: 1.0,
            bs_transmission: std::f64::consts::FRAC_1_SQRT_2,
            signal_wavelength_nm: 632.8,
            idler_wavelength_nm: 1016.4,
            scan_positions: linspace(0.0, 2.0 * 1016.4, 200),
            position_convention: PositionConvention::OpticalPath,
            detector_semantics: DetectorSemantics::Threshold,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), FockError> {
        if self.pair_number != 1 && self.pair_number != 2 {
            return Err(FockError::InvalidArgument(format!(
                "pair_number must be 1 or 2, got {}",
                self.pair_number
            )));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(FockError::InvalidArgument(format!(
                "gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        if !(0.0..=1.0).contains(&self.bs_transmission) {
            return Err(FockError::InvalidArgument(format!(
                "bs_transmission must lie in [0, 1], got {}",
                self.bs_transmission
            )));
        }
        if !(self.signal_wavelength_nm > 0.0) || !(self.idler_wavelength_nm > 0.0) {
            return Err(FockError::InvalidArgument(
                "wavelengths must be positive".to_string(),
            ));
        }
        if self.scan_positions.iter().any(|p| !p.is_finite()) {
            return Err(FockError::InvalidArgument(
                "scan positions must be finite".to_string(),
            ));
        }
        Ok(())
    }

    /// Optical path difference for one scan position.
    pub fn path_difference(&self, position_nm: f64) -> f64 {
        match self.position_convention {
            PositionConvention::OpticalPath => position_nm,
            PositionConvention::MirrorDisplacement => 2.0 * position_nm,
        }
    }

    /// Idler phase picked up over an optical path difference Δ.
    pub fn idler_phase(&self, position_nm: f64) -> f64 {
        2.0 * std::f64::consts::PI * self.path_difference(position_nm) / self.idler_wavelength_nm
    }
}

/// Uniform grid of `n` values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![start];
    }
    let step = (stop - start) / (n - 1) as f64;
    (0..n).map(|k| start + step * k as f64).collect()
}

/// Detection probabilities at one phase setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointProbabilities {
    pub singles_d1: f64,
    pub singles_d2: f64,
    pub coincidence: f64,
}

/// Position series plus the three detection-probability series of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub positions: Vec<f64>,
    pub singles_d1: Vec<f64>,
    pub singles_d2: Vec<f64>,
    pub coincidence: Vec<f64>,
}

impl ScanResult {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Check the probability semantics: equal lengths, every value in [0, 1].
    pub fn validate_probabilities(&self) -> Result<(), FockError> {
        let n = self.positions.len();
        if self.singles_d1.len() != n || self.singles_d2.len() != n || self.coincidence.len() != n {
            return Err(FockError::InvalidArgument(
                "scan series have mismatched lengths".to_string(),
            ));
        }
        for series in [&self.singles_d1, &self.singles_d2, &self.coincidence] {
            if series.iter().any(|&p| !(0.0..=1.0 + 1e-12).contains(&p)) {
                return Err(FockError::InvalidArgument(
                    "scan values are not probabilities in [0, 1]".to_string(),
                ));
            }
        }
        Ok(())
    }

    /// Positions zipped with one value column, for the fitting layer.
    pub fn series(&self, values: &[f64]) -> Vec<(f64, f64)> {
        self.positions.iter().copied().zip(values.iter().copied()).collect()
    }
}

/// Mode labels used by every interferometer registry.
pub const SIGNAL_1: &str = "S1";
pub const SIGNAL_2: &str = "S2";
pub const IDLER_1: &str = "I1";
pub const IDLER_2: &str = "I2";
pub const ANCILLA: &str = "A1";

/// A configured interferometer with its mode registry resolved.
#[derive(Debug, Clone)]
pub struct Interferometer {
    config: ExperimentConfig,
    registry: std::sync::Arc<ModeRegistry>,
    s1: ModeId,
    s2: ModeId,
    i1: ModeId,
    i2: ModeId,
    ancilla: ModeId,
}

impl Interferometer {
    pub fn new(config: ExperimentConfig) -> Result<Self, FockError> {
        config.validate()?;
        let registry = ModeRegistry::builder()
            .mode(SIGNAL_1, Some(config.signal_wavelength_nm))
            .mode(SIGNAL_2, Some(config.signal_wavelength_nm))
            .mode(IDLER_1, Some(config.idler_wavelength_nm))
            .mode(IDLER_2, Some(config.idler_wavelength_nm))
            .mode(ANCILLA, None)
            .photon_capacity(crate::fock::DEFAULT_PHOTON_CAPACITY)
            .build()?;
        let s1 = registry.id(SIGNAL_1).unwrap();
        let s2 = registry.id(SIGNAL_2).unwrap();
        let i1 = registry.id(IDLER_1).unwrap();
        let i2 = registry.id(IDLER_2).unwrap();
        let ancilla = registry.id(ANCILLA).unwrap();
        Ok(Interferometer {
            config,
            registry,
            s1,
            s2,
            i1,
            i2,
            ancilla,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn registry(&self) -> &std::sync::Arc<ModeRegistry> {
        &self.registry
    }

    /// The N-pair source state for this interferometer's pair number.
    pub fn pair_state(&self, phi_i: f64) -> Result<FockState, FockError> {
        build_pair_state_in(
            &self.registry,
            self.s1,
            self.s2,
            self.i1,
            self.i2,
            self.config.pair_number,
            phi_i,
        )
    }

    /// One interferometer evaluation at a given idler phase.
    pub fn run_point(&self, phi_i: f64) -> Result<PointProbabilities, FockError> {
        self.run_point_with_gamma(phi_i, self.config.gamma)
    }

    /// Same as [`run_point`](Self::run_point) but with an explicit overlap,
    /// used when a delay-dependent envelope modulates the static γ.
    pub fn run_point_with_gamma(
        &self,
        phi_i: f64,
        gamma: f64,
    ) -> Result<PointProbabilities, FockError> {
        let source = self.pair_state(phi_i)?;
        let overlap = OverlapSpec::new(self.i1, self.i2, gamma, self.ancilla)?;
        let after_overlap = apply_overlap(&source, &overlap)?;
        let bs = BeamSplitterSpec::new(self.s1, self.s2, self.config.bs_transmission)?;
        // The merge of indistinguishable idler amplitudes changes the norm of
        // the postselected N-pair sector; probabilities are conditional on
        // that sector, so renormalize before detection.
        let final_state = apply_beam_splitter(&after_overlap, &bs)?.normalized()?;

        let click = match self.config.detector_semantics {
            DetectorSemantics::Threshold => CountPredicate::AtLeast(1),
            DetectorSemantics::NumberResolving => CountPredicate::Exactly(1),
        };
        let traced = [self.i1, self.i2, self.ancilla];
        let singles_d1 =
            final_state.detection_probability(&[(self.s1, click)], &[self.s2, traced[0], traced[1], traced[2]])?;
        let singles_d2 =
            final_state.detection_probability(&[(self.s2, click)], &[self.s1, traced[0], traced[1], traced[2]])?;
        let coincidence = final_state
            .detection_probability(&[(self.s1, click), (self.s2, click)], &traced)?;
        Ok(PointProbabilities {
            singles_d1,
            singles_d2,
            coincidence,
        })
    }

    /// Evaluate the configured scan positions.
    ///
    /// Points are independent pure computations; they run in parallel and are
    /// assembled in position order.
    pub fn scan(&self) -> Result<ScanResult, FockError> {
        if self.config.scan_positions.is_empty() {
            return Err(FockError::InvalidArgument(
                "scan needs at least one position".to_string(),
            ));
        }
        let points: Result<Vec<PointProbabilities>, FockError> = self
            .config
            .scan_positions
            .par_iter()
            .map(|&pos| self.run_point(self.config.idler_phase(pos)))
            .collect();
        let points = points?;
        Ok(ScanResult {
            positions: self.config.scan_positions.clone(),
            singles_d1: points.iter().map(|p| p.singles_d1).collect(),
            singles_d2: points.iter().map(|p| p.singles_d2).collect(),
            coincidence: points.iter().map(|p| p.coincidence).collect(),
        })
    }

    /// Coincidence probability of the isolated one-pair-per-source term after
    /// the signal beam splitter. Balanced splitting suppresses it exactly;
    /// an unbalanced splitter leaves (t² − r²)².
    pub fn hom_cross_term_check(&self) -> Result<f64, FockError> {
        hom_cross_term(self.config.bs_transmission)
    }
}

/// Build the N-pair superposition over a caller-supplied registry.
fn build_pair_state_in(
    registry: &std::sync::Arc<ModeRegistry>,
    s1: ModeId,
    s2: ModeId,
    i1: ModeId,
    i2: ModeId,
    pair_number: u32,
    phi_i: f64,
) -> Result<FockState, FockError> {
    let vacuum = FockState::vacuum(registry.clone());
    match pair_number {
        1 => {
            // (e^{iφ} a†_S1 a†_I1 + a†_S2 a†_I2)|0⟩, normalized.
            let term1 = vacuum
                .apply_creation(s1, 1)?
                .apply_creation(i1, 1)?
                .scaled(Complex64::from_polar(1.0, phi_i));
            let term2 = vacuum.apply_creation(s2, 1)?.apply_creation(i2, 1)?;
            term1.add(&term2)?.normalized()
        }
        2 => {
            // (½ e^{2iφ} a†²_S1 a†²_I1 + ½ a†²_S2 a†²_I2
            //  + e^{iφ} a†_S1 a†_S2 a†_I1 a†_I2)|0⟩, normalized.
            let both_first = vacuum
                .apply_creation(s1, 2)?
                .apply_creation(i1, 2)?
                .scaled(Complex64::from_polar(0.5, 2.0 * phi_i));
            let both_second = vacuum
                .apply_creation(s2, 2)?
                .apply_creation(i2, 2)?
                .scaled(Complex64::new(0.5, 0.0));
            let one_each = vacuum
                .apply_creation(s1, 1)?
                .apply_creation(s2, 1)?
                .apply_creation(i1, 1)?
                .apply_creation(i2, 1)?
                .scaled(Complex64::from_polar(1.0, phi_i));
            both_first.add(&both_second)?.add(&one_each)?.normalized()
        }
        n => Err(FockError::InvalidArgument(format!(
            "pair_number must be 1 or 2, got {n}"
        ))),
    }
}

/// The N-pair source state on a standard (S1, S2, I1, I2, A1) registry.
pub fn build_pair_state(pair_number: u32, phi_i: f64) -> Result<FockState, FockError> {
    let interferometer = Interferometer::new(ExperimentConfig {
        pair_number: if pair_number == 0 { 1 } else { pair_number.min(2) },
        ..ExperimentConfig::default()
    })?;
    build_pair_state_in(
        &interferometer.registry,
        interferometer.s1,
        interferometer.s2,
        interferometer.i1,
        interferometer.i2,
        pair_number,
        phi_i,
    )
}

/// Coincidence probability of the bare cross term
/// a†_S1 a†_S2 a†_I1 a†_I2 |0⟩ after a signal beam splitter with the given
/// transmission amplitude, idlers traced out.
pub fn hom_cross_term(bs_transmission: f64) -> Result<f64, FockError> {
    let interferometer = Interferometer::new(ExperimentConfig {
        bs_transmission,
        ..ExperimentConfig::default()
    })?;
    let vacuum = FockState::vacuum(interferometer.registry.clone());
    let cross = vacuum
        .apply_creation(interferometer.s1, 1)?
        .apply_creation(interferometer.s2, 1)?
        .apply_creation(interferometer.i1, 1)?
        .apply_creation(interferometer.i2, 1)?
        .normalized()?;
    let bs = BeamSplitterSpec::new(interferometer.s1, interferometer.s2, bs_transmission)?;
    let out = apply_beam_splitter(&cross, &bs)?;
    out.detection_probability(
        &[
            (interferometer.s1, CountPredicate::AtLeast(1)),
            (interferometer.s2, CountPredicate::AtLeast(1)),
        ],
        &[interferometer.i1, interferometer.i2, interferometer.ancilla],
    )
}

/// Photon rates at the S2 output of the second source, in units of the
/// blocked singles rate divided by ε².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionRates {
    pub singles_rate_s2: f64,
    pub pair_rate_s2: f64,
}

/// Source-2 emission rates with the I1 path blocked or open.
///
/// In the spontaneous regime the singles rate scales as ε² and the two-photon
/// rate as ε⁴. Unblocking I1 seeds the idler mode with the spontaneous
/// occupancy μ = ε², enhancing both by the first-order stimulated factor
/// 1 + μ, which stays indistinguishable from 1 for ε² ≪ 1: the
/// induced-emission null.
pub fn emission_check(gain_epsilon: f64, blocked: bool) -> Result<EmissionRates, FockError> {
    if !(0.0..1.0).contains(&gain_epsilon) {
        return Err(FockError::InvalidArgument(format!(
            "gain epsilon must lie in [0, 1), got {gain_epsilon}"
        )));
    }
    let eps2 = gain_epsilon * gain_epsilon;
    let enhancement = if blocked {
        1.0
    } else {
        crate::elements::stimulated_gain_ratio(eps2)?
    };
    Ok(EmissionRates {
        singles_rate_s2: eps2 * enhancement,
        pair_rate_s2: eps2 * eps2 * enhancement,
    })
}
