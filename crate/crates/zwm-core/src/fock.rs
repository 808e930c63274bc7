//! Sparse multimode bosonic Fock states.
//!
//! States are stored as a map from occupation vectors to complex amplitudes,
//! truncated at a configurable total photon number. Two-pair interferometer
//! states occupy at most a few dozen basis terms, so the sparse map is both
//! exact and cheap. All operations are pure: they borrow the input state and
//! return a new one.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

/// Default cap on the total photon number of any stored basis term.
///
/// Two pairs plus ancilla headroom; overflow is an error rather than a silent
/// truncation because truncation would corrupt normalization.
pub const DEFAULT_PHOTON_CAPACITY: u32 = 6;

/// Amplitudes with magnitude below this are dropped when states are rebuilt.
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 1e-14;

/// Tolerance used by normalization checks.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Errors from Fock-state construction and algebra.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum FockError {
    #[error("mode registry must contain at least one mode")]
    EmptyRegistry,
    #[error("duplicate mode label `{0}`")]
    DuplicateLabel(String),
    #[error("mode `{label}`: wavelength must be positive, got {value}")]
    InvalidWavelength { label: String, value: f64 },
    #[error("operation needs {needed} photons in a term but the registry capacity is {capacity}")]
    CapacityExceeded { capacity: u32, needed: u32 },
    #[error("states belong to different mode registries")]
    RegistryMismatch,
    #[error("mode id {0} is not registered")]
    UnknownMode(usize),
    #[error("detected and undetected mode sets overlap")]
    OverlappingDetectionSets,
    #[error("ancilla mode `{0}` is occupied")]
    OccupiedAncilla(String),
    #[error("{0}")]
    InvalidArgument(String),
}

/// Handle to a mode inside a [`ModeRegistry`].
///
/// Plain index; only meaningful together with the registry it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeId(pub(crate) usize);

impl ModeId {
    /// Position of the mode in the registry.
    pub fn index(&self) -> usize {
        self.0
    }
}

/// A registered optical mode: short label plus optional wavelength metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub label: String,
    /// Wavelength in nanometers, used for phase/scan conversion. `None` for
    /// abstract modes such as loss ancillas.
    pub wavelength_nm: Option<f64>,
}

/// Named optical modes plus the photon-number truncation they share.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeRegistry {
    modes: Vec<Mode>,
    photon_capacity: u32,
}

impl ModeRegistry {
    pub fn builder() -> ModeRegistryBuilder {
        ModeRegistryBuilder {
            modes: Vec::new(),
            photon_capacity: DEFAULT_PHOTON_CAPACITY,
        }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Maximum total photon number of any basis term.
    pub fn photon_capacity(&self) -> u32 {
        self.photon_capacity
    }

    pub fn mode(&self, id: ModeId) -> Result<&Mode, FockError> {
        self.modes.get(id.0).ok_or(FockError::UnknownMode(id.0))
    }

    /// Look a mode up by label.
    pub fn id(&self, label: &str) -> Option<ModeId> {
        self.modes.iter().position(|m| m.label == label).map(ModeId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ModeId> + '_ {
        (0..self.modes.len()).map(ModeId)
    }

    fn check_mode(&self, id: ModeId) -> Result<(), FockError> {
        if id.0 < self.modes.len() {
            Ok(())
        } else {
            Err(FockError::UnknownMode(id.0))
        }
    }
}

/// Builder validating labels and wavelengths before a registry exists.
pub struct ModeRegistryBuilder {
    modes: Vec<Mode>,
    photon_capacity: u32,
}

impl ModeRegistryBuilder {
    pub fn mode(mut self, label: &str, wavelength_nm: Option<f64>) -> Self {
        self.modes.push(Mode {
            label: label.to_string(),
            wavelength_nm,
        });
        self
    }

    pub fn photon_capacity(mut self, capacity: u32) -> Self {
        self.photon_capacity = capacity;
        self
    }

    pub fn build(self) -> Result<Arc<ModeRegistry>, FockError> {
        if self.modes.is_empty() {
            return Err(FockError::EmptyRegistry);
        }
        for (i, mode) in self.modes.iter().enumerate() {
            if self.modes[..i].iter().any(|m| m.label == mode.label) {
                return Err(FockError::DuplicateLabel(mode.label.clone()));
            }
            if let Some(w) = mode.wavelength_nm {
                if !(w > 0.0) {
                    return Err(FockError::InvalidWavelength {
                        label: mode.label.clone(),
                        value: w,
                    });
                }
            }
        }
        Ok(Arc::new(ModeRegistry {
            modes: self.modes,
            photon_capacity: self.photon_capacity,
        }))
    }
}

/// Photon counts per registered mode, in registry order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occupation(Vec<u8>);

impl Occupation {
    pub fn zeros(modes: usize) -> Self {
        Occupation(vec![0; modes])
    }

    pub fn from_counts(counts: Vec<u8>) -> Self {
        Occupation(counts)
    }

    pub fn count(&self, mode: ModeId) -> u32 {
        u32::from(self.0[mode.0])
    }

    pub fn counts(&self) -> &[u8] {
        &self.0
    }

    /// Total photon number of the term.
    pub fn total(&self) -> u32 {
        self.0.iter().map(|&c| u32::from(c)).sum()
    }

    fn with_added(&self, mode: ModeId, k: u32) -> Occupation {
        let mut out = self.clone();
        out.0[mode.0] += k as u8;
        out
    }

    fn with_cleared(&self, mode: ModeId) -> Occupation {
        let mut out = self.clone();
        out.0[mode.0] = 0;
        out
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "⟩")
    }
}

/// Detector-side predicate on the photon count of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountPredicate {
    /// Number-resolving detection: exactly `k` photons.
    Exactly(u32),
    /// Threshold detection: `k` or more photons.
    AtLeast(u32),
}

impl CountPredicate {
    pub fn matches(&self, count: u32) -> bool {
        match *self {
            CountPredicate::Exactly(k) => count == k,
            CountPredicate::AtLeast(k) => count >= k,
        }
    }
}

/// Sparse superposition of occupation-number basis states.
///
/// Amplitudes are double-precision complex. The map is ordered, so iteration
/// and therefore every downstream computation is deterministic.
#[derive(Debug, Clone)]
pub struct FockState {
    registry: Arc<ModeRegistry>,
    terms: BTreeMap<Occupation, Complex64>,
}

/// Exact factorial for the small photon numbers the truncation allows.
pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

impl FockState {
    /// The vacuum: a single all-zero term with amplitude 1.
    pub fn vacuum(registry: Arc<ModeRegistry>) -> FockState {
        let mut terms = BTreeMap::new();
        terms.insert(
            Occupation::zeros(registry.len()),
            Complex64::new(1.0, 0.0),
        );
        FockState { registry, terms }
    }

    /// Build a state from explicit (occupation, amplitude) pairs.
    pub fn from_terms(
        registry: Arc<ModeRegistry>,
        terms: impl IntoIterator<Item = (Occupation, Complex64)>,
    ) -> Result<FockState, FockError> {
        let mut map = BTreeMap::new();
        for (occ, amp) in terms {
            if occ.counts().len() != registry.len() {
                return Err(FockError::InvalidArgument(format!(
                    "occupation vector has {} entries for a {}-mode registry",
                    occ.counts().len(),
                    registry.len()
                )));
            }
            let total = occ.total();
            if total > registry.photon_capacity() {
                return Err(FockError::CapacityExceeded {
                    capacity: registry.photon_capacity(),
                    needed: total,
                });
            }
            *map.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        let mut state = FockState {
            registry,
            terms: map,
        };
        state.prune(DEFAULT_PRUNE_THRESHOLD);
        Ok(state)
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, &Complex64)> {
        self.terms.iter()
    }

    /// Amplitude of one basis term (zero when absent).
    pub fn amplitude(&self, occ: &Occupation) -> Complex64 {
        self.terms
            .get(occ)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Drop terms with |amplitude| below `threshold`.
    pub fn prune(&mut self, threshold: f64) {
        self.terms.retain(|_, amp| amp.norm() >= threshold);
    }

    /// Unit-norm copy of the state.
    pub fn normalized(&self) -> Result<FockState, FockError> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(FockError::InvalidArgument(
                "cannot normalize a zero state".to_string(),
            ));
        }
        let mut out = self.scaled(Complex64::new(1.0 / norm, 0.0));
        out.prune(DEFAULT_PRUNE_THRESHOLD);
        Ok(out)
    }

    /// Multiply every amplitude by `factor`.
    pub fn scaled(&self, factor: Complex64) -> FockState {
        FockState {
            registry: self.registry.clone(),
            terms: self
                .terms
                .iter()
                .map(|(occ, amp)| (occ.clone(), amp * factor))
                .collect(),
        }
    }

    /// Term-wise sum of two states over the same registry.
    pub fn add(&self, other: &FockState) -> Result<FockState, FockError> {
        self.check_same_registry(other)?;
        let mut terms = self.terms.clone();
        for (occ, amp) in &other.terms {
            *terms.entry(occ.clone()).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        let mut state = FockState {
            registry: self.registry.clone(),
            terms,
        };
        state.prune(DEFAULT_PRUNE_THRESHOLD);
        Ok(state)
    }

    fn check_same_registry(&self, other: &FockState) -> Result<(), FockError> {
        if Arc::ptr_eq(&self.registry, &other.registry) || self.registry == other.registry {
            Ok(())
        } else {
            Err(FockError::RegistryMismatch)
        }
    }

    /// Apply `(a†_mode)^power`.
    ///
    /// Each term |…n…⟩ picks up the factor √((n+1)(n+2)…(n+power)). The
    /// output is intentionally left unnormalized.
    pub fn apply_creation(&self, mode: ModeId, power: u32) -> Result<FockState, FockError> {
        self.registry.check_mode(mode)?;
        if power == 0 {
            return Ok(self.clone());
        }
        let capacity = self.registry.photon_capacity();
        let mut terms = BTreeMap::new();
        for (occ, amp) in &self.terms {
            let needed = occ.total() + power;
            if needed > capacity {
                return Err(FockError::CapacityExceeded { capacity, needed });
            }
            let n = occ.count(mode);
            let factor: f64 = (1..=power).map(|k| f64::from(n + k)).product::<f64>().sqrt();
            terms.insert(occ.with_added(mode, power), amp * factor);
        }
        Ok(FockState {
            registry: self.registry.clone(),
            terms,
        })
    }

    /// ⟨self|other⟩.
    pub fn inner_product(&self, other: &FockState) -> Result<Complex64, FockError> {
        self.check_same_registry(other)?;
        let (small, large, conj_small) = if self.terms.len() <= other.terms.len() {
            (&self.terms, &other.terms, true)
        } else {
            (&other.terms, &self.terms, false)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (occ, amp) in small {
            if let Some(other_amp) = large.get(occ) {
                if conj_small {
                    acc += amp.conj() * other_amp;
                } else {
                    acc += other_amp.conj() * amp;
                }
            }
        }
        Ok(acc)
    }

    /// Probability that every detected mode satisfies its count predicate.
    ///
    /// Modes in `undetected` (and any mode not named at all) are traced out:
    /// the sum over basis terms runs freely over their occupations. The two
    /// sets must not overlap.
    pub fn detection_probability(
        &self,
        detected: &[(ModeId, CountPredicate)],
        undetected: &[ModeId],
    ) -> Result<f64, FockError> {
        for (mode, _) in detected {
            self.registry.check_mode(*mode)?;
        }
        for mode in undetected {
            self.registry.check_mode(*mode)?;
        }
        for (i, (mode, _)) in detected.iter().enumerate() {
            if detected[..i].iter().any(|(m, _)| m == mode) {
                return Err(FockError::InvalidArgument(format!(
                    "mode `{}` listed twice in detected set",
                    self.registry.mode(*mode)?.label
                )));
            }
            if undetected.contains(mode) {
                return Err(FockError::OverlappingDetectionSets);
            }
        }
        let mut prob = 0.0;
        for (occ, amp) in &self.terms {
            if detected
                .iter()
                .all(|(mode, pred)| pred.matches(occ.count(*mode)))
            {
                prob += amp.norm_sqr();
            }
        }
        Ok(prob)
    }

    /// Simultaneously rewrite creation operators of the listed modes as
    /// linear combinations of creation operators, exactly expanding the
    /// resulting operator polynomial.
    ///
    /// Every substituted occupation (a†_j)^n is replaced by
    /// (Σ_k c_k a†_k)^n via the multinomial theorem, with the bosonic
    /// √(n!) conversions between amplitudes and polynomial coefficients
    /// handled per term. Total photon number is conserved, so the registry
    /// capacity cannot be exceeded.
    pub fn substitute_modes(
        &self,
        substitutions: &[(ModeId, Vec<(ModeId, Complex64)>)],
    ) -> Result<FockState, FockError> {
        for (source, replacement) in substitutions {
            self.registry.check_mode(*source)?;
            for (target, _) in replacement {
                self.registry.check_mode(*target)?;
            }
        }
        for (i, (source, _)) in substitutions.iter().enumerate() {
            if substitutions[..i].iter().any(|(m, _)| m == source) {
                return Err(FockError::InvalidArgument(format!(
                    "mode `{}` substituted twice",
                    self.registry.mode(*source)?.label
                )));
            }
        }

        let mut terms: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (occ, amp) in &self.terms {
            // Polynomial coefficient of the monomial ∏ (a†_i)^{n_i}.
            let norm_in: f64 = occ.counts().iter().map(|&n| factorial(u32::from(n))).product();
            let coeff = amp / norm_in.sqrt();

            // Occupations of untouched modes stay as the expansion base.
            let mut base = occ.clone();
            let mut active: Vec<(&Vec<(ModeId, Complex64)>, u32)> = Vec::new();
            for (source, replacement) in substitutions {
                let n = occ.count(*source);
                base = base.with_cleared(*source);
                if n > 0 {
                    active.push((replacement, n));
                }
            }

            // Cartesian product of the multinomial expansions of each factor.
            let mut partial: Vec<(Occupation, Complex64)> = vec![(base, coeff)];
            for (replacement, power) in active {
                let mut next = Vec::new();
                for (occ_so_far, coeff_so_far) in &partial {
                    expand_power(
                        replacement,
                        power,
                        occ_so_far,
                        *coeff_so_far,
                        &mut next,
                    );
                }
                partial = next;
            }

            for (new_occ, c) in partial {
                let norm_out: f64 = new_occ
                    .counts()
                    .iter()
                    .map(|&n| factorial(u32::from(n)))
                    .product();
                let amp_out = c * norm_out.sqrt();
                *terms
                    .entry(new_occ)
                    .or_insert(Complex64::new(0.0, 0.0)) += amp_out;
            }
        }
        let mut state = FockState {
            registry: self.registry.clone(),
            terms,
        };
        state.prune(DEFAULT_PRUNE_THRESHOLD);
        Ok(state)
    }
}

/// Expand (Σ_k c_k a†_k)^power into monomials, appending each
/// (occupation-increment, coefficient) pair onto `out` combined with the
/// partial product accumulated so far.
fn expand_power(
    replacement: &[(ModeId, Complex64)],
    power: u32,
    occ_so_far: &Occupation,
    coeff_so_far: Complex64,
    out: &mut Vec<(Occupation, Complex64)>,
) {
    fn recurse(
        replacement: &[(ModeId, Complex64)],
        remaining: u32,
        idx: usize,
        occ: &Occupation,
        coeff: Complex64,
        power: u32,
        out: &mut Vec<(Occupation, Complex64)>,
    ) {
        if idx == replacement.len() - 1 {
            // Last replacement mode absorbs what is left of the power.
            let (mode, c) = replacement[idx];
            let k = remaining;
            let multinomial_tail = c.powu(k) / factorial(k);
            out.push((
                occ.with_added(mode, k),
                coeff * multinomial_tail * factorial(power),
            ));
            return;
        }
        let (mode, c) = replacement[idx];
        for k in 0..=remaining {
            let factor = c.powu(k) / factorial(k);
            recurse(
                replacement,
                remaining - k,
                idx + 1,
                &occ.with_added(mode, k),
                coeff * factor,
                power,
                out,
            );
        }
    }
    if replacement.is_empty() {
        // Substituting by the zero combination annihilates occupied terms.
        if power == 0 {
            out.push((occ_so_far.clone(), coeff_so_far));
        }
        return;
    }
    recurse(replacement, power, 0, occ_so_far, coeff_so_far, power, out);
}
