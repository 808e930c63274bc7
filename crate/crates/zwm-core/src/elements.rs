//! Linear-optical transformations on Fock states.
//!
//! Phase shifters, beam splitters, and the partial-mode-overlap channel used
//! to model imperfect idler alignment, plus the first-order stimulated-gain
//! law used by the induced-emission null check.

use num_complex::Complex64;

use crate::fock::{FockError, FockState, ModeId};

/// Two-mode beam splitter.
///
/// Convention: the reflected arm acquires a factor i, so the creation
/// operators transform as a† → t·a† + i·r·b† and b† → t·b† + i·r·a† with
/// r = √(1 − t²). Detection probabilities are convention-independent.
#[derive(Debug, Clone, Copy)]
pub struct BeamSplitterSpec {
    pub mode_a: ModeId,
    pub mode_b: ModeId,
    transmission: f64,
}

impl BeamSplitterSpec {
    pub fn new(mode_a: ModeId, mode_b: ModeId, transmission_amplitude: f64) -> Result<Self, FockError> {
        if mode_a == mode_b {
            return Err(FockError::InvalidArgument(
                "beam splitter needs two distinct modes".to_string(),
            ));
        }
        if !(0.0..=1.0).contains(&transmission_amplitude) {
            return Err(FockError::InvalidArgument(format!(
                "transmission amplitude must lie in [0, 1], got {transmission_amplitude}"
            )));
        }
        Ok(BeamSplitterSpec {
            mode_a,
            mode_b,
            transmission: transmission_amplitude,
        })
    }

    pub fn balanced(mode_a: ModeId, mode_b: ModeId) -> Result<Self, FockError> {
        Self::new(mode_a, mode_b, std::f64::consts::FRAC_1_SQRT_2)
    }

    pub fn transmission_amplitude(&self) -> f64 {
        self.transmission
    }

    pub fn reflection_amplitude(&self) -> f64 {
        (1.0 - self.transmission * self.transmission).max(0.0).sqrt()
    }
}

/// Partial spatio-temporal overlap of one idler mode onto another.
///
/// A photon created in `source` is found downstream in `target` with
/// amplitude `gamma` and in the orthogonal `ancilla` mode with amplitude
/// √(1 − γ²). With an unoccupied `target` this is a lossless two-mode
/// rotation (and doubles as a loss channel when `target == source`); when
/// `target` is already occupied the exact polynomial expansion produces the
/// bosonic enhancement of merged terms, so the norm may grow and callers
/// renormalize before reading probabilities.
#[derive(Debug, Clone, Copy)]
pub struct OverlapSpec {
    pub source: ModeId,
    pub target: ModeId,
    pub gamma: f64,
    pub ancilla: ModeId,
}

impl OverlapSpec {
    pub fn new(
        source: ModeId,
        target: ModeId,
        gamma: f64,
        ancilla: ModeId,
    ) -> Result<Self, FockError> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(FockError::InvalidArgument(format!(
                "gamma must lie in [0, 1], got {gamma}"
            )));
        }
        if ancilla == source || ancilla == target {
            return Err(FockError::InvalidArgument(
                "overlap ancilla must be distinct from source and target".to_string(),
            ));
        }
        Ok(OverlapSpec {
            source,
            target,
            gamma,
            ancilla,
        })
    }
}

/// Phase shifter: each term with n photons in `mode` gains e^{i n φ}.
pub fn apply_phase(state: &FockState, mode: ModeId, phi: f64) -> Result<FockState, FockError> {
    state.registry().mode(mode)?;
    let terms = state
        .terms()
        .map(|(occ, amp)| {
            let n = f64::from(occ.count(mode));
            (occ.clone(), amp * Complex64::from_polar(1.0, n * phi))
        })
        .collect::<Vec<_>>();
    FockState::from_terms(state.registry().clone(), terms)
}

/// Beam-splitter mode transformation, exact to all photon numbers.
pub fn apply_beam_splitter(
    state: &FockState,
    spec: &BeamSplitterSpec,
) -> Result<FockState, FockError> {
    let t = Complex64::new(spec.transmission_amplitude(), 0.0);
    let ir = Complex64::new(0.0, spec.reflection_amplitude());
    state.substitute_modes(&[
        (spec.mode_a, vec![(spec.mode_a, t), (spec.mode_b, ir)]),
        (spec.mode_b, vec![(spec.mode_b, t), (spec.mode_a, ir)]),
    ])
}

/// Rewrite a†_source → γ·a†_target + √(1−γ²)·a†_ancilla in every term.
///
/// The ancilla must be unoccupied in every input term.
pub fn apply_overlap(state: &FockState, spec: &OverlapSpec) -> Result<FockState, FockError> {
    for (occ, _) in state.terms() {
        if occ.count(spec.ancilla) > 0 {
            let label = state.registry().mode(spec.ancilla)?.label.clone();
            return Err(FockError::OccupiedAncilla(label));
        }
    }
    let gamma = Complex64::new(spec.gamma, 0.0);
    let leak = Complex64::new((1.0 - spec.gamma * spec.gamma).max(0.0).sqrt(), 0.0);
    state.substitute_modes(&[(
        spec.source,
        vec![(spec.target, gamma), (spec.ancilla, leak)],
    )])
}

/// First-order bosonic enhancement of the pair-emission rate when the idler
/// mode is seeded with mean photon number `seed_mean_photons`: the ratio of
/// seeded to unseeded rates is exactly 1 + μ.
pub fn stimulated_gain_ratio(seed_mean_photons: f64) -> Result<f64, FockError> {
    if seed_mean_photons < 0.0 || !seed_mean_photons.is_finite() {
        return Err(FockError::InvalidArgument(format!(
            "seed mean photon number must be finite and non-negative, got {seed_mean_photons}"
        )));
    }
    Ok(1.0 + seed_mean_photons)
}
