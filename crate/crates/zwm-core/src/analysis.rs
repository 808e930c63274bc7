//! Fringe fitting and scan post-processing: sinusoid fits with free or
//! constrained period, visibility extraction, Gaussian envelope fits,
//! the classical product-of-singles comparator, and Poisson synthetic data.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use crate::interferometer::ScanResult;

/// Errors from fitting and scan arithmetic.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum FitError {
    #[error("fit needs at least {need} points, got {got}")]
    TooFewPoints { got: usize, need: usize },
    #[error("data span {span:.6} covers less than 1.5 fitted periods of {period:.6}")]
    InsufficientSpan { span: f64, period: f64 },
    #[error("fit did not converge: {0}")]
    NonConvergence(String),
    #[error("degenerate fit input: {0}")]
    Degenerate(String),
    #[error("scans are on different position grids")]
    MisalignedGrids,
    #[error("{0}")]
    InvalidArgument(String),
}

/// Period handling for [`fit_sinusoid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PeriodSpec {
    /// Search for the period with a periodogram sweep plus refinement.
    Free,
    /// Search, with the sweep centered on this period in nm.
    Hint(f64),
    /// Do not search: fit the linear parameters at exactly this period.
    Fixed(f64),
}

/// Parameters of y = offset + amplitude·cos(2πx/period + phase).
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub offset: f64,
    /// Non-negative by phase convention.
    pub amplitude: f64,
    /// `None` when the signal is constant and no period is identifiable.
    pub period: Option<f64>,
    pub phase: f64,
    /// amplitude / offset for positive offsets.
    pub visibility: f64,
    pub residual_rms: f64,
    /// Diagonal of the linearized parameter covariance, ordered
    /// (offset, amplitude, phase, period). NaN entries mean the normal
    /// matrix was singular (e.g. zero amplitude).
    pub covariance_diag: Vec<f64>,
}

const MIN_POINTS: usize = 8;
const PERIODOGRAM_POINTS: usize = 200;
const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn span_of(points: &[(f64, f64)]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(x, _) in points {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    hi - lo
}

/// Linear least squares at a fixed angular frequency; returns
/// (offset, cos coefficient, sin coefficient, sse).
fn linear_fit_at(points: &[(f64, f64)], omega: f64) -> (f64, f64, f64, f64) {
    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    for &(x, y) in points {
        let row = Vector3::new(1.0, (omega * x).cos(), (omega * x).sin());
        ata += row * row.transpose();
        aty += row * y;
    }
    let sol = ata
        .lu()
        .solve(&aty)
        .unwrap_or_else(|| Vector3::new(points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64, 0.0, 0.0));
    let mut sse = 0.0;
    for &(x, y) in points {
        let r = y - (sol[0] + sol[1] * (omega * x).cos() + sol[2] * (omega * x).sin());
        sse += r * r;
    }
    (sol[0], sol[1], sol[2], sse)
}

/// Least-squares sinusoid fit.
///
/// Free or hinted periods are initialized by a periodogram over a log-spaced
/// grid of 200 candidate periods spanning a factor of ten either side of the
/// hint (or of the data span), then refined by golden-section search on the
/// profiled residual. Deterministic for fixed input.
pub fn fit_sinusoid(points: &[(f64, f64)], period: PeriodSpec) -> Result<FitResult, FitError> {
    if points.len() < MIN_POINTS {
        return Err(FitError::TooFewPoints {
            got: points.len(),
            need: MIN_POINTS,
        });
    }
    if points.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(FitError::InvalidArgument(
            "positions and values must be finite".to_string(),
        ));
    }
    let span = span_of(points);
    if !(span > 0.0) {
        return Err(FitError::Degenerate(
            "all points share one position".to_string(),
        ));
    }

    // A constant signal has no identifiable period.
    let mean = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let spread = points
        .iter()
        .map(|p| (p.1 - mean).abs())
        .fold(0.0_f64, f64::max);
    if spread <= 1e-12 * mean.abs().max(1.0) {
        return Ok(FitResult {
            offset: mean,
            amplitude: 0.0,
            period: None,
            phase: 0.0,
            visibility: 0.0,
            residual_rms: 0.0,
            covariance_diag: vec![0.0; 4],
        });
    }

    let fitted_period = match period {
        PeriodSpec::Fixed(t) => {
            if !(t > 0.0) {
                return Err(FitError::InvalidArgument(format!(
                    "fixed period must be positive, got {t}"
                )));
            }
            if span < 1.5 * t {
                return Err(FitError::InsufficientSpan { span, period: t });
            }
            t
        }
        PeriodSpec::Free | PeriodSpec::Hint(_) => {
            let center = match period {
                PeriodSpec::Hint(t) if t > 0.0 => t,
                PeriodSpec::Hint(t) => {
                    return Err(FitError::InvalidArgument(format!(
                        "period hint must be positive, got {t}"
                    )))
                }
                _ => span,
            };
            let lo = center / 10.0;
            let hi = center * 10.0;
            let log_lo = lo.ln();
            let log_step = (hi / lo).ln() / (PERIODOGRAM_POINTS - 1) as f64;
            let mut best = (f64::INFINITY, 0usize);
            let mut periods = Vec::with_capacity(PERIODOGRAM_POINTS);
            for k in 0..PERIODOGRAM_POINTS {
                let t = (log_lo + log_step * k as f64).exp();
                let (.., sse) = linear_fit_at(points, 2.0 * std::f64::consts::PI / t);
                periods.push(t);
                if sse < best.0 {
                    best = (sse, k);
                }
            }
            let bracket_lo = periods[best.1.saturating_sub(1)];
            let bracket_hi = periods[(best.1 + 1).min(PERIODOGRAM_POINTS - 1)];
            refine_period(points, bracket_lo, bracket_hi)?
        }
    };

    let omega = 2.0 * std::f64::consts::PI / fitted_period;
    let (offset, a_cos, a_sin, sse) = linear_fit_at(points, omega);
    let amplitude = a_cos.hypot(a_sin);
    let phase = (-a_sin).atan2(a_cos);

    if !matches!(period, PeriodSpec::Fixed(_)) && span < 1.5 * fitted_period {
        return Err(FitError::InsufficientSpan {
            span,
            period: fitted_period,
        });
    }

    let visibility = if offset > 0.0 { amplitude / offset } else { f64::NAN };
    let residual_rms = (sse / points.len() as f64).sqrt();
    let covariance_diag = covariance_diag(points, offset, amplitude, phase, fitted_period, sse);

    Ok(FitResult {
        offset,
        amplitude,
        period: Some(fitted_period),
        phase,
        visibility,
        residual_rms,
        covariance_diag,
    })
}

/// Golden-section search for the period minimizing the profiled residual.
fn refine_period(points: &[(f64, f64)], mut lo: f64, mut hi: f64) -> Result<f64, FitError> {
    let sse_at = |t: f64| linear_fit_at(points, 2.0 * std::f64::consts::PI / t).3;
    let mut a = hi - GOLDEN * (hi - lo);
    let mut b = lo + GOLDEN * (hi - lo);
    let mut fa = sse_at(a);
    let mut fb = sse_at(b);
    for _ in 0..300 {
        if (hi - lo) <= 1e-13 * hi {
            return Ok(0.5 * (lo + hi));
        }
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - GOLDEN * (hi - lo);
            fa = sse_at(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + GOLDEN * (hi - lo);
            fb = sse_at(b);
        }
    }
    Err(FitError::NonConvergence(format!(
        "period bracket [{lo}, {hi}] did not shrink below tolerance in 300 iterations"
    )))
}

fn covariance_diag(
    points: &[(f64, f64)],
    _offset: f64,
    amplitude: f64,
    phase: f64,
    period: f64,
    sse: f64,
) -> Vec<f64> {
    let n = points.len();
    if n <= 4 {
        return vec![f64::NAN; 4];
    }
    let omega = 2.0 * std::f64::consts::PI / period;
    let mut jtj = Matrix4::<f64>::zeros();
    for &(x, _) in points {
        let theta = omega * x + phase;
        let row = Vector4::new(
            1.0,
            theta.cos(),
            -amplitude * theta.sin(),
            amplitude * theta.sin() * omega * x / period,
        );
        jtj += row * row.transpose();
    }
    let sigma2 = sse / (n - 4) as f64;
    match jtj.try_inverse() {
        Some(inv) => (0..4).map(|i| sigma2 * inv[(i, i)]).collect(),
        None => vec![f64::NAN; 4],
    }
}

/// (max − min) / (max + min).
pub fn visibility(max_count: f64, min_count: f64) -> Result<f64, FitError> {
    if !(max_count >= min_count) || !(min_count >= 0.0) || !(max_count > 0.0) {
        return Err(FitError::InvalidArgument(format!(
            "visibility needs max ≥ min ≥ 0 and max > 0, got ({max_count}, {min_count})"
        )));
    }
    Ok((max_count - min_count) / (max_count + min_count))
}

/// Gaussian envelope fitted to per-position fringe visibilities.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeFit {
    pub center: f64,
    pub width_fwhm: f64,
    pub peak_visibility: f64,
    pub residual_rms: f64,
}

/// Fit a Gaussian to the visibilities of (position, max, min) extrema.
///
/// Initialized by an exact log-quadratic solve, then polished with a damped
/// Gauss-Newton loop.
pub fn fit_envelope(extrema: &[(f64, f64, f64)]) -> Result<EnvelopeFit, FitError> {
    if extrema.len() < 4 {
        return Err(FitError::TooFewPoints {
            got: extrema.len(),
            need: 4,
        });
    }
    let mut vis = Vec::with_capacity(extrema.len());
    for &(x, max, min) in extrema {
        let v = visibility(max, min)?;
        vis.push((x, v));
    }
    let v0 = vis[0].1;
    if vis.iter().all(|&(_, v)| (v - v0).abs() <= 1e-12 * v0.max(1e-300)) {
        return Err(FitError::Degenerate(
            "all extrema share one visibility; no envelope to fit".to_string(),
        ));
    }

    // Log-quadratic initialization on the strictly positive points.
    let positive: Vec<(f64, f64)> = vis.iter().copied().filter(|&(_, v)| v > 0.0).collect();
    if positive.len() < 3 {
        return Err(FitError::Degenerate(
            "fewer than three nonzero visibilities".to_string(),
        ));
    }
    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    for &(x, v) in &positive {
        let row = Vector3::new(1.0, x, x * x);
        ata += row * row.transpose();
        aty += row * v.ln();
    }
    let q = ata
        .lu()
        .solve(&aty)
        .ok_or_else(|| FitError::Degenerate("log-quadratic solve failed".to_string()))?;
    if !(q[2] < 0.0) {
        return Err(FitError::Degenerate(
            "visibilities are not peaked".to_string(),
        ));
    }
    let mut center = -q[1] / (2.0 * q[2]);
    let mut sigma = (-1.0 / (2.0 * q[2])).sqrt();
    let mut peak = (q[0] - q[1] * q[1] / (4.0 * q[2])).exp();

    // Damped Gauss-Newton on the Gaussian itself.
    let model = |c: f64, s: f64, p: f64, x: f64| {
        let d = (x - c) / s;
        p * (-0.5 * d * d).exp()
    };
    let sse = |c: f64, s: f64, p: f64| {
        vis.iter()
            .map(|&(x, v)| {
                let r = v - model(c, s, p, x);
                r * r
            })
            .sum::<f64>()
    };
    let mut current = sse(center, sigma, peak);
    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..200 {
        let mut jtj = Matrix3::<f64>::zeros();
        let mut jtr = Vector3::<f64>::zeros();
        for &(x, v) in &vis {
            let m = model(center, sigma, peak, x);
            let d = x - center;
            let row = Vector3::new(
                m * d / (sigma * sigma),
                m * d * d / (sigma * sigma * sigma),
                m / peak,
            );
            jtj += row * row.transpose();
            jtr += row * (v - m);
        }
        let mut damped = jtj;
        for i in 0..3 {
            damped[(i, i)] *= 1.0 + lambda;
        }
        let Some(step) = damped.lu().solve(&jtr) else {
            lambda *= 10.0;
            continue;
        };
        let trial = (center + step[0], (sigma + step[1]).abs(), peak + step[2]);
        let trial_sse = sse(trial.0, trial.1, trial.2);
        if trial_sse <= current {
            let rel_step = step.norm() / (1.0 + center.abs() + sigma + peak.abs());
            center = trial.0;
            sigma = trial.1;
            peak = trial.2;
            current = trial_sse;
            lambda = (lambda * 0.3).max(1e-12);
            if rel_step < 1e-13 {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                converged = true; // stuck at a minimum the damping cannot leave
                break;
            }
        }
    }
    if !converged {
        return Err(FitError::NonConvergence(
            "envelope refinement did not settle in 200 iterations".to_string(),
        ));
    }
    Ok(EnvelopeFit {
        center,
        width_fwhm: 2.0 * (2.0_f64.ln() * 2.0).sqrt() * sigma,
        peak_visibility: peak,
        residual_rms: (current / vis.len() as f64).sqrt(),
    })
}

/// Pointwise product of two singles scans on the same position grid: the
/// classical post-processing comparator.
pub fn classical_product(
    singles_d1: &[(f64, f64)],
    singles_d2: &[(f64, f64)],
) -> Result<Vec<(f64, f64)>, FitError> {
    if singles_d1.len() != singles_d2.len() {
        return Err(FitError::MisalignedGrids);
    }
    singles_d1
        .iter()
        .zip(singles_d2.iter())
        .map(|(&(x1, y1), &(x2, y2))| {
            if x1 != x2 {
                Err(FitError::MisalignedGrids)
            } else {
                Ok((x1, y1 * y2))
            }
        })
        .collect()
}

/// Poisson-distributed synthetic counts with means proportional to the scan
/// probabilities, `total_events / n_points` events per point at unit
/// probability. Deterministic per seed.
pub fn synthesize_counts(scan: &ScanResult, total_events: u64, seed: u64) -> ScanResult {
    let n = scan.positions.len().max(1);
    let events_per_point = total_events as f64 / n as f64;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut sample_series = |probs: &[f64]| -> Vec<f64> {
        probs
            .iter()
            .map(|&p| {
                let lambda = p.max(0.0) * events_per_point;
                if lambda > 0.0 {
                    Poisson::new(lambda).expect("positive mean").sample(&mut rng)
                } else {
                    0.0
                }
            })
            .collect()
    };
    ScanResult {
        positions: scan.positions.clone(),
        singles_d1: sample_series(&scan.singles_d1),
        singles_d2: sample_series(&scan.singles_d2),
        coincidence: sample_series(&scan.coincidence),
    }
}
