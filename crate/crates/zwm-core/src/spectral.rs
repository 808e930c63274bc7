//! Multimode spectral model: joint spectral amplitude with type-II
//! frequency anti-correlation, interference filtering, Schmidt analysis, and
//! the temporal-mismatch envelope of the coincidence fringe.
//!
//! The amplitude is a double Gaussian: a pump envelope in the sum frequency
//! times a phase-matching factor in the signal detuning (the group-velocity
//! arrangement where phase matching constrains the signal photon). A pump
//! much narrower than the phase-matching width pins ω_i ≈ ω_p − ω_s and
//! produces tight anti-correlation; an arbitrarily broad pump factorizes the
//! amplitude exactly. The envelope versus idler delay is the magnitude of
//! the idler spectral autocorrelation of the filtered joint intensity, fed
//! back into the interferometer as a delay-dependent overlap factor.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::fock::FockError;
use crate::interferometer::{ExperimentConfig, Interferometer, ScanResult};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3; // 2√(2 ln 2)

/// Errors from spectral-model construction and evaluation.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpectralError {
    #[error("spectral axis must be uniformly increasing")]
    NonUniformAxis,
    #[error("grid half-spans ({got_signal:.3e}, {got_idler:.3e}) rad/s do not cover ±3σ of the model (needs {needed_signal:.3e}, {needed_idler:.3e})")]
    Coverage {
        needed_signal: f64,
        needed_idler: f64,
        got_signal: f64,
        got_idler: f64,
    },
    #[error("signal and idler centers imply a pump at {implied_nm:.4} nm but {given_nm:.4} nm was given")]
    EnergyMismatch { implied_nm: f64, given_nm: f64 },
    #[error("filter leaves no spectral weight on the grid")]
    DegenerateOutput,
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Fock(#[from] FockError),
}

/// Convert a wavelength in nm to angular frequency in rad/s.
pub fn angular_frequency(wavelength_nm: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / (wavelength_nm * 1e-9)
}

/// Width of a wavelength interval, expressed in angular frequency at a
/// given center wavelength.
pub fn bandwidth_to_angular(center_nm: f64, width_nm: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT * width_nm / (center_nm * center_nm * 1e-9)
}

/// Uniform angular-frequency axes for the two photons.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    signal: Vec<f64>,
    idler: Vec<f64>,
}

impl SpectralGrid {
    pub fn new(signal: Vec<f64>, idler: Vec<f64>) -> Result<Self, SpectralError> {
        for axis in [&signal, &idler] {
            if axis.len() < 2 {
                return Err(SpectralError::InvalidArgument(
                    "spectral axes need at least two samples".to_string(),
                ));
            }
            let step = axis[1] - axis[0];
            if !(step > 0.0) {
                return Err(SpectralError::NonUniformAxis);
            }
            for w in axis.windows(2) {
                if ((w[1] - w[0]) - step).abs() > 1e-6 * step {
                    return Err(SpectralError::NonUniformAxis);
                }
            }
        }
        Ok(SpectralGrid { signal, idler })
    }

    /// Axes of `n` points centered on the photon frequencies, spanning
    /// ±`half_span` rad/s on each side.
    pub fn centered(
        signal_center: f64,
        idler_center: f64,
        half_span: f64,
        n: usize,
    ) -> Result<Self, SpectralError> {
        let make = |center: f64| {
            crate::interferometer::linspace(center - half_span, center + half_span, n)
        };
        SpectralGrid::new(make(signal_center), make(idler_center))
    }

    pub fn signal_axis(&self) -> &[f64] {
        &self.signal
    }

    pub fn idler_axis(&self) -> &[f64] {
        &self.idler
    }

    pub fn signal_step(&self) -> f64 {
        self.signal[1] - self.signal[0]
    }

    pub fn idler_step(&self) -> f64 {
        self.idler[1] - self.idler[0]
    }

    fn half_span(axis: &[f64]) -> f64 {
        (axis[axis.len() - 1] - axis[0]) / 2.0
    }
}

/// Double-Gaussian model of the two-photon spectral amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct JsaModel {
    pub pump_center_nm: f64,
    /// Pump intensity-spectrum FWHM in nm.
    pub pump_bandwidth_nm: f64,
    /// Intensity sigma of the phase-matching factor along the signal
    /// detuning, rad/s. Free model parameter: wide against the pump width
    /// to reproduce tight anti-correlation.
    pub phasematch_sigma: f64,
    pub signal_center_nm: f64,
    pub idler_center_nm: f64,
}

pub const DEFAULT_PUMP_CENTER_NM: f64 = 390.0;
pub const DEFAULT_PUMP_BANDWIDTH_NM: f64 = 2.0;
pub const DEFAULT_GRID_SIZE: usize = 256;
/// Grid half-span rule: ±4σ of the two Gaussian factors combined.
pub const DEFAULT_SPAN_SIGMAS: f64 = 4.0;
/// Default phase-matching width as a multiple of the pump sigma.
pub const DEFAULT_PHASEMATCH_RATIO: f64 = 6.0;

impl Default for JsaModel {
    fn default() -> Self {
        let pump_sigma = bandwidth_to_angular(DEFAULT_PUMP_CENTER_NM, DEFAULT_PUMP_BANDWIDTH_NM)
            / FWHM_PER_SIGMA;
        JsaModel {
            pump_center_nm: DEFAULT_PUMP_CENTER_NM,
            pump_bandwidth_nm: DEFAULT_PUMP_BANDWIDTH_NM,
            phasematch_sigma: DEFAULT_PHASEMATCH_RATIO * pump_sigma,
            signal_center_nm: 632.8,
            idler_center_nm: 1016.4,
        }
    }
}

impl JsaModel {
    /// Intensity sigma of the pump spectrum in rad/s.
    pub fn pump_sigma(&self) -> f64 {
        bandwidth_to_angular(self.pump_center_nm, self.pump_bandwidth_nm) / FWHM_PER_SIGMA
    }

    /// Grid sized by the ±kσ rule around the photon center frequencies.
    ///
    /// The signal axis needs to cover the phase-matching width; the idler
    /// axis, pinned to the signal through the pump, needs the sum of both
    /// widths.
    pub fn grid(&self, n: usize, span_sigmas: f64) -> Result<SpectralGrid, SpectralError> {
        let make = |center: f64, half: f64| {
            crate::interferometer::linspace(center - half, center + half, n)
        };
        SpectralGrid::new(
            make(
                angular_frequency(self.signal_center_nm),
                span_sigmas * self.phasematch_sigma,
            ),
            make(
                angular_frequency(self.idler_center_nm),
                span_sigmas * (self.pump_sigma() + self.phasematch_sigma),
            ),
        )
    }

    pub fn default_grid(&self) -> Result<SpectralGrid, SpectralError> {
        self.grid(DEFAULT_GRID_SIZE, DEFAULT_SPAN_SIGMAS)
    }

    /// Evaluate the normalized joint spectral amplitude on a grid.
    pub fn build(&self, grid: &SpectralGrid) -> Result<JointSpectralAmplitude, SpectralError> {
        if !(self.pump_bandwidth_nm > 0.0) || !(self.phasematch_sigma > 0.0) {
            return Err(SpectralError::InvalidArgument(
                "pump bandwidth and phase-matching width must be positive".to_string(),
            ));
        }
        let signal_center = angular_frequency(self.signal_center_nm);
        let idler_center = angular_frequency(self.idler_center_nm);
        let pump_center = angular_frequency(self.pump_center_nm);
        let sigma_pump = self.pump_sigma();
        let sigma_pm = self.phasematch_sigma;

        // Energy consistency: the photon centers must add up to the pump.
        let implied = signal_center + idler_center;
        if (implied - pump_center).abs() > sigma_pump {
            let implied_nm =
                2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / implied * 1e9;
            return Err(SpectralError::EnergyMismatch {
                implied_nm,
                given_nm: self.pump_center_nm,
            });
        }

        // Coverage: the ±3σ support region maps onto a ±3σ_pm signal
        // half-width and a ±3(σ_p + σ_pm) idler half-width.
        let needed_signal = 3.0 * sigma_pm;
        let needed_idler = 3.0 * (sigma_pump + sigma_pm);
        let got_signal = SpectralGrid::half_span(grid.signal_axis());
        let got_idler = SpectralGrid::half_span(grid.idler_axis());
        if got_signal < needed_signal || got_idler < needed_idler {
            return Err(SpectralError::Coverage {
                needed_signal,
                needed_idler,
                got_signal,
                got_idler,
            });
        }

        let n_s = grid.signal_axis().len();
        let n_i = grid.idler_axis().len();
        let mut values = DMatrix::from_element(n_s, n_i, Complex64::new(0.0, 0.0));
        for (si, &ws) in grid.signal_axis().iter().enumerate() {
            let nu_s = ws - signal_center;
            for (ii, &wi) in grid.idler_axis().iter().enumerate() {
                // Amplitude Gaussians whose intensity sigmas are σ_p, σ_pm.
                let sum_detuning = ws + wi - pump_center;
                let log_amp = -sum_detuning * sum_detuning / (4.0 * sigma_pump * sigma_pump)
                    - nu_s * nu_s / (4.0 * sigma_pm * sigma_pm);
                values[(si, ii)] = Complex64::new(log_amp.exp(), 0.0);
            }
        }
        let mut jsa = JointSpectralAmplitude {
            grid: grid.clone(),
            values,
        };
        jsa.normalize()?;
        Ok(jsa)
    }
}

/// Discretized complex two-photon spectral amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectralAmplitude {
    grid: SpectralGrid,
    values: DMatrix<Complex64>,
}

/// Passband shape of an interference filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterShape {
    Gaussian,
    Rectangular,
}

/// Which photon the filter sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterArm {
    Signal,
    Idler,
}

/// Interference filter described by its intensity passband.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub center_wavelength_nm: f64,
    pub fwhm_nm: f64,
    pub shape: FilterShape,
}

impl FilterSpec {
    pub fn new(center_wavelength_nm: f64, fwhm_nm: f64, shape: FilterShape) -> Result<Self, SpectralError> {
        if !(fwhm_nm > 0.0) || !(center_wavelength_nm > 0.0) {
            return Err(SpectralError::InvalidArgument(
                "filter center and FWHM must be positive".to_string(),
            ));
        }
        Ok(FilterSpec {
            center_wavelength_nm,
            fwhm_nm,
            shape,
        })
    }

    /// Amplitude transmission at angular frequency `omega`.
    fn amplitude(&self, omega: f64) -> f64 {
        let center = angular_frequency(self.center_wavelength_nm);
        let fwhm = bandwidth_to_angular(self.center_wavelength_nm, self.fwhm_nm);
        let detuning = omega - center;
        match self.shape {
            FilterShape::Gaussian => {
                let sigma = fwhm / FWHM_PER_SIGMA;
                // Intensity Gaussian with the given FWHM; amplitude is its root.
                (-detuning * detuning / (4.0 * sigma * sigma)).exp()
            }
            FilterShape::Rectangular => {
                if detuning.abs() <= fwhm / 2.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Schmidt decomposition summary of a joint amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtAnalysis {
    /// Effective mode count, 1/purity; 1 for a separable amplitude.
    pub schmidt_number: f64,
    /// Heralded single-photon spectral purity Σλ⁴/(Σλ²)².
    pub purity: f64,
    /// Normalized Schmidt coefficients, descending, Σλ² = 1.
    pub coefficients: Vec<f64>,
}

/// Envelope sample: idler delay and the mode-coherence factor at that delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayVisibility {
    pub delay_s: f64,
    pub visibility: f64,
}

impl JointSpectralAmplitude {
    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn values(&self) -> &DMatrix<Complex64> {
        &self.values
    }

    /// ΣΣ |f|² Δω_s Δω_i.
    pub fn power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
            * self.grid.signal_step()
            * self.grid.idler_step()
    }

    fn normalize(&mut self) -> Result<(), SpectralError> {
        let power = self.power();
        if !(power > 1e-300) {
            return Err(SpectralError::DegenerateOutput);
        }
        let scale = Complex64::new(power.sqrt().recip(), 0.0);
        self.values.iter_mut().for_each(|v| *v *= scale);
        Ok(())
    }

    /// Multiply one arm by a filter's amplitude profile.
    ///
    /// With `renormalize` the result is rescaled to unit power, otherwise the
    /// lost spectral weight stays visible in [`power`](Self::power).
    pub fn filtered(
        &self,
        arm: FilterArm,
        filter: &FilterSpec,
        renormalize: bool,
    ) -> Result<JointSpectralAmplitude, SpectralError> {
        let mut out = self.clone();
        match arm {
            FilterArm::Signal => {
                for (si, &ws) in self.grid.signal_axis().iter().enumerate() {
                    let t = Complex64::new(filter.amplitude(ws), 0.0);
                    for ii in 0..self.grid.idler_axis().len() {
                        out.values[(si, ii)] *= t;
                    }
                }
            }
            FilterArm::Idler => {
                for (ii, &wi) in self.grid.idler_axis().iter().enumerate() {
                    let t = Complex64::new(filter.amplitude(wi), 0.0);
                    for si in 0..self.grid.signal_axis().len() {
                        out.values[(si, ii)] *= t;
                    }
                }
            }
        }
        let remaining = out.power();
        if !(remaining / self.power().max(f64::MIN_POSITIVE) > 1e-30) {
            return Err(SpectralError::DegenerateOutput);
        }
        if renormalize {
            out.normalize()?;
        }
        Ok(out)
    }

    /// Pearson correlation coefficient of the joint intensity, used to
    /// quantify frequency anti-correlation.
    pub fn intensity_correlation(&self) -> f64 {
        let mut w_sum = 0.0;
        let mut mean_s = 0.0;
        let mut mean_i = 0.0;
        for (si, &ws) in self.grid.signal_axis().iter().enumerate() {
            for (ii, &wi) in self.grid.idler_axis().iter().enumerate() {
                let w = self.values[(si, ii)].norm_sqr();
                w_sum += w;
                mean_s += w * ws;
                mean_i += w * wi;
            }
        }
        mean_s /= w_sum;
        mean_i /= w_sum;
        let mut var_s = 0.0;
        let mut var_i = 0.0;
        let mut cov = 0.0;
        for (si, &ws) in self.grid.signal_axis().iter().enumerate() {
            for (ii, &wi) in self.grid.idler_axis().iter().enumerate() {
                let w = self.values[(si, ii)].norm_sqr();
                let ds = ws - mean_s;
                let di = wi - mean_i;
                var_s += w * ds * ds;
                var_i += w * di * di;
                cov += w * ds * di;
            }
        }
        cov / (var_s * var_i).sqrt()
    }

    /// Marginal intensity along the idler axis, Σ_s |f|² Δω_s.
    pub fn idler_marginal(&self) -> Vec<f64> {
        let d_s = self.grid.signal_step();
        (0..self.grid.idler_axis().len())
            .map(|ii| {
                (0..self.grid.signal_axis().len())
                    .map(|si| self.values[(si, ii)].norm_sqr())
                    .sum::<f64>()
                    * d_s
            })
            .collect()
    }

    /// Schmidt analysis via singular value decomposition of the discretized
    /// amplitude.
    pub fn schmidt_analysis(&self) -> Result<SchmidtAnalysis, SpectralError> {
        let scale = (self.grid.signal_step() * self.grid.idler_step()).sqrt();
        let m = self.values.map(|v| v * scale);
        let svd = m.svd(false, false);
        let mut coefficients: Vec<f64> = svd.singular_values.iter().copied().collect();
        coefficients.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let sum2: f64 = coefficients.iter().map(|l| l * l).sum();
        if !(sum2 > 0.0) {
            return Err(SpectralError::DegenerateOutput);
        }
        let sum4: f64 = coefficients.iter().map(|l| l.powi(4)).sum();
        let purity = sum4 / (sum2 * sum2);
        let norm = sum2.sqrt();
        for l in &mut coefficients {
            *l /= norm;
        }
        coefficients.retain(|&l| l > 1e-12);
        Ok(SchmidtAnalysis {
            schmidt_number: 1.0 / purity,
            purity,
            coefficients,
        })
    }

    /// Idler-mode coherence factor versus delay:
    /// V(τ) = |ΣΣ |f|² e^{iω_i τ}| / ΣΣ |f|², so V(0) = 1 exactly.
    pub fn coincidence_envelope(&self, delays: &[f64]) -> Vec<DelayVisibility> {
        let marginal = self.idler_marginal();
        let axis = self.grid.idler_axis();
        let total: f64 = marginal.iter().sum();
        delays
            .par_iter()
            .map(|&tau| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, &w) in marginal.iter().zip(axis.iter()) {
                    acc += m * Complex64::from_polar(1.0, w * tau);
                }
                DelayVisibility {
                    delay_s: tau,
                    visibility: acc.norm() / total,
                }
            })
            .collect()
    }

    /// Coherence factor at a single delay.
    pub fn coherence_at(&self, delay_s: f64) -> f64 {
        self.coincidence_envelope(&[delay_s])[0].visibility
    }

    /// Write the amplitude modulus as a CSV matrix with both axes as header
    /// rows/columns. Leading `#` lines carry caller-provided context.
    pub fn write_csv<W: std::io::Write>(
        &self,
        mut writer: W,
        comments: &[String],
        format_value: impl Fn(f64) -> String,
    ) -> std::io::Result<()> {
        for line in comments {
            writeln!(writer, "# {line}")?;
        }
        write!(writer, "signal_omega_rad_s\\idler_omega_rad_s")?;
        for &wi in self.grid.idler_axis() {
            write!(writer, ",{}", format_value(wi))?;
        }
        writeln!(writer)?;
        for (si, &ws) in self.grid.signal_axis().iter().enumerate() {
            write!(writer, "{}", format_value(ws))?;
            for ii in 0..self.grid.idler_axis().len() {
                write!(writer, ",{}", format_value(self.values[(si, ii)].norm()))?;
            }
            writeln!(writer)?;
        }
        Ok(())
    }
}

/// Coincidence fringe under the temporal-mismatch envelope.
///
/// For each scan position the path difference Δ sets both the idler phase
/// and the idler delay τ = Δ/c; the static overlap is scaled by the
/// coherence factor V(τ) before the interferometer point is evaluated.
pub fn fringe_with_envelope(
    config: &ExperimentConfig,
    jsa: &JointSpectralAmplitude,
    positions_nm: &[f64],
) -> Result<ScanResult, SpectralError> {
    if positions_nm.is_empty() {
        return Err(SpectralError::InvalidArgument(
            "envelope scan needs at least one position".to_string(),
        ));
    }
    let interferometer = Interferometer::new(config.clone())?;
    let marginal = jsa.idler_marginal();
    let axis = jsa.grid().idler_axis().to_vec();
    let total: f64 = marginal.iter().sum();

    let points: Result<Vec<_>, SpectralError> = positions_nm
        .par_iter()
        .map(|&pos| {
            let delta_nm = config.path_difference(pos);
            let tau = delta_nm * 1e-9 / SPEED_OF_LIGHT;
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, &w) in marginal.iter().zip(axis.iter()) {
                acc += m * Complex64::from_polar(1.0, w * tau);
            }
            let coherence = acc.norm() / total;
            let gamma_eff = (config.gamma * coherence).clamp(0.0, 1.0);
            let phi = config.idler_phase(pos);
            let point = interferometer.run_point_with_gamma(phi, gamma_eff)?;
            Ok(point)
        })
        .collect();
    let points = points?;
    Ok(ScanResult {
        positions: positions_nm.to_vec(),
        singles_d1: points.iter().map(|p| p.singles_d1).collect(),
        singles_d2: points.iter().map(|p| p.singles_d2).collect(),
        coincidence: points.iter().map(|p| p.coincidence).collect(),
    })
}
