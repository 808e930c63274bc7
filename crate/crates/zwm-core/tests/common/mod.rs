//! Dense truncated-basis oracle.
//!
//! Everything here recomputes the physics through an independent route:
//! states are dense vectors over the exhaustively enumerated Fock basis,
//! optical elements are explicit matrices (generators exponentiated by
//! scaling-and-squaring, mode merges from the √binomial rule), and partial
//! traces go through the full density matrix. None of it touches the sparse
//! polynomial machinery under test.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use zwm_core::{FockState, Occupation};

pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Exhaustive enumeration of occupation vectors with total ≤ `n_max`.
pub struct DenseBasis {
    pub modes: usize,
    pub n_max: u32,
    pub occs: Vec<Vec<u8>>,
    index: std::collections::HashMap<Vec<u8>, usize>,
}

impl DenseBasis {
    pub fn new(modes: usize, n_max: u32) -> Self {
        let mut occs = Vec::new();
        let mut current = vec![0u8; modes];
        enumerate(&mut occs, &mut current, 0, n_max);
        occs.sort();
        let index = occs
            .iter()
            .enumerate()
            .map(|(i, occ)| (occ.clone(), i))
            .collect();
        DenseBasis {
            modes,
            n_max,
            occs,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.occs.len()
    }

    pub fn index_of(&self, occ: &[u8]) -> usize {
        self.index[occ]
    }

    /// Dense vector of a sparse state.
    pub fn to_dense(&self, state: &FockState) -> CVec {
        let mut v = CVec::from_element(self.len(), czero());
        for (occ, amp) in state.terms() {
            v[self.index_of(occ.counts())] = *amp;
        }
        v
    }

    /// Largest amplitude difference between a sparse state and a dense vector.
    pub fn max_deviation(&self, state: &FockState, dense: &CVec) -> f64 {
        let v = self.to_dense(state);
        (v - dense).iter().map(|d| d.norm()).fold(0.0, f64::max)
    }

    /// Matrix of a†_mode on the truncated basis. Source terms that would
    /// exceed the truncation are dropped, so use inputs with headroom.
    pub fn creation_matrix(&self, mode: usize) -> CMat {
        self.creation_matrix_real(mode).map(|x| Complex64::new(x, 0.0))
    }

    fn creation_matrix_real(&self, mode: usize) -> RMat {
        let mut m = RMat::zeros(self.len(), self.len());
        for (col, occ) in self.occs.iter().enumerate() {
            let total: u32 = occ.iter().map(|&c| u32::from(c)).sum();
            if total + 1 > self.n_max {
                continue;
            }
            let mut out = occ.clone();
            out[mode] += 1;
            let n = f64::from(occ[mode]);
            m[(self.index_of(&out), col)] = (n + 1.0).sqrt();
        }
        m
    }

    /// Diagonal phase operator e^{i n φ} on one mode.
    pub fn phase_matrix(&self, mode: usize, phi: f64) -> CMat {
        let mut m = CMat::from_element(self.len(), self.len(), czero());
        for (i, occ) in self.occs.iter().enumerate() {
            m[(i, i)] = Complex64::from_polar(1.0, f64::from(occ[mode]) * phi);
        }
        m
    }

    /// Beam splitter U = exp(iθ(a†b + b†a)) with t = cos θ, giving
    /// a† → t a† + i r b†.
    pub fn beam_splitter_matrix(&self, mode_a: usize, mode_b: usize, transmission: f64) -> CMat {
        let theta = transmission.clamp(0.0, 1.0).acos();
        let adag = self.creation_matrix_real(mode_a);
        let bdag = self.creation_matrix_real(mode_b);
        let generator = (&adag * bdag.transpose() + &bdag * adag.transpose()).map(|x| x * theta);
        let (re, im) = imaginary_matrix_exp(&generator);
        CMat::from_fn(self.len(), self.len(), |i, j| {
            Complex64::new(re[(i, j)], im[(i, j)])
        })
    }

    /// Real rotation R = exp(θ(b†a − a†b)) with cos θ = γ, giving
    /// a† → γ a† + √(1−γ²) b†.
    pub fn rotation_matrix(&self, mode_a: usize, mode_b: usize, gamma: f64) -> CMat {
        self.rotation_matrix_real(mode_a, mode_b, gamma)
            .map(|x| Complex64::new(x, 0.0))
    }

    fn rotation_matrix_real(&self, mode_a: usize, mode_b: usize, gamma: f64) -> RMat {
        let theta = gamma.clamp(0.0, 1.0).acos();
        let adag = self.creation_matrix_real(mode_a);
        let bdag = self.creation_matrix_real(mode_b);
        let generator = (&bdag * adag.transpose() - &adag * bdag.transpose()).map(|x| x * theta);
        real_matrix_exp(&generator)
    }

    /// Merge of all `source` photons into `target`:
    /// |n_s, n_t⟩ → √C(n_s + n_t, n_s) |0, n_s + n_t⟩.
    pub fn merge_matrix(&self, source: usize, target: usize) -> CMat {
        self.merge_matrix_real(source, target)
            .map(|x| Complex64::new(x, 0.0))
    }

    fn merge_matrix_real(&self, source: usize, target: usize) -> RMat {
        let mut m = RMat::zeros(self.len(), self.len());
        for (col, occ) in self.occs.iter().enumerate() {
            let ns = u32::from(occ[source]);
            let nt = u32::from(occ[target]);
            let mut out = occ.clone();
            out[source] = 0;
            out[target] = (ns + nt) as u8;
            m[(self.index_of(&out), col)] += binomial(ns + nt, ns).sqrt();
        }
        m
    }

    /// The overlap channel as merge ∘ rotation-into-ancilla:
    /// a†_source → γ a†_target + √(1−γ²) a†_ancilla.
    pub fn overlap_matrix(&self, source: usize, target: usize, gamma: f64, ancilla: usize) -> CMat {
        (self.merge_matrix_real(source, target) * self.rotation_matrix_real(source, ancilla, gamma))
            .map(|x| Complex64::new(x, 0.0))
    }

    /// Probability that the detected modes satisfy exact/at-least predicates,
    /// all other modes summed over.
    pub fn detection_probability(
        &self,
        dense: &CVec,
        detected: &[(usize, DensePredicate)],
    ) -> f64 {
        let mut p = 0.0;
        for (i, occ) in self.occs.iter().enumerate() {
            let hit = detected.iter().all(|(mode, pred)| {
                let n = u32::from(occ[*mode]);
                match pred {
                    DensePredicate::Exactly(k) => n == *k,
                    DensePredicate::AtLeast(k) => n >= *k,
                }
            });
            if hit {
                p += dense[i].norm_sqr();
            }
        }
        p
    }

    /// Density matrix of a pure dense state.
    pub fn density(&self, dense: &CVec) -> CMat {
        dense * dense.adjoint()
    }

    /// Partial trace onto the listed modes, returning the reduced density
    /// matrix over a fresh enumeration of the kept modes.
    pub fn partial_trace(&self, rho: &CMat, keep: &[usize]) -> (DenseBasis, CMat) {
        let sub = DenseBasis::new(keep.len(), self.n_max);
        let mut reduced = CMat::from_element(sub.len(), sub.len(), czero());
        let project =
            |occ: &[u8]| -> Vec<u8> { keep.iter().map(|&m| occ[m]).collect::<Vec<u8>>() };
        let environment = |occ: &[u8]| -> Vec<u8> {
            (0..self.modes)
                .filter(|m| !keep.contains(m))
                .map(|m| occ[m])
                .collect()
        };
        for (p, occ_p) in self.occs.iter().enumerate() {
            for (q, occ_q) in self.occs.iter().enumerate() {
                if environment(occ_p) == environment(occ_q) {
                    let i = sub.index_of(&project(occ_p));
                    let j = sub.index_of(&project(occ_q));
                    reduced[(i, j)] += rho[(p, q)];
                }
            }
        }
        (sub, reduced)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum DensePredicate {
    Exactly(u32),
    AtLeast(u32),
}

fn enumerate(out: &mut Vec<Vec<u8>>, current: &mut Vec<u8>, mode: usize, budget: u32) {
    if mode == current.len() {
        out.push(current.clone());
        return;
    }
    for n in 0..=budget {
        current[mode] = n as u8;
        enumerate(out, current, mode + 1, budget - n);
    }
    current[mode] = 0;
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k.min(n));
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * f64::from(n - i) / f64::from(i + 1);
    }
    acc
}

/// Real matrix exponential by scaling and squaring with a Taylor kernel.
pub fn real_matrix_exp(m: &RMat) -> RMat {
    let n = m.nrows();
    let norm = m.iter().map(|x| x.abs()).fold(0.0, f64::max) * n as f64;
    let scalings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m.map(|x| x / 2f64.powi(scalings as i32));
    let mut result = RMat::identity(n, n);
    let mut term = RMat::identity(n, n);
    for k in 1..=25 {
        term = (&term * &scaled).map(|x| x / k as f64);
        result += &term;
    }
    for _ in 0..scalings {
        result = &result * &result;
    }
    result
}

/// exp(iH) for real H, returned as (real part, imaginary part). The complex
/// arithmetic is split into real matrix products so the fast f64 kernels
/// apply; Taylor with scaling and squaring.
pub fn imaginary_matrix_exp(h: &RMat) -> (RMat, RMat) {
    let n = h.nrows();
    let norm = h.iter().map(|x| x.abs()).fold(0.0, f64::max) * n as f64;
    let scalings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = h.map(|x| x / 2f64.powi(scalings as i32));

    let mul = |are: &RMat, aim: &RMat, bre: &RMat, bim: &RMat| -> (RMat, RMat) {
        (are * bre - aim * bim, are * bim + aim * bre)
    };

    // exp(i·scaled) by Taylor: term ← term · (i·scaled) / k.
    let mut result_re = RMat::identity(n, n);
    let mut result_im = RMat::zeros(n, n);
    let mut term_re = RMat::identity(n, n);
    let mut term_im = RMat::zeros(n, n);
    let zero = RMat::zeros(n, n);
    for k in 1..=25 {
        let (re, im) = mul(&term_re, &term_im, &zero, &scaled);
        term_re = re.map(|x| x / k as f64);
        term_im = im.map(|x| x / k as f64);
        result_re += &term_re;
        result_im += &term_im;
    }
    for _ in 0..scalings {
        let (re, im) = mul(&result_re, &result_im, &result_re, &result_im);
        result_re = re;
        result_im = im;
    }
    (result_re, result_im)
}

/// Random-ish but deterministic normalized dense state from a seed.
pub fn pseudo_random_state(basis: &DenseBasis, seed: u64) -> CVec {
    let mut v = CVec::from_element(basis.len(), czero());
    let mut x = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1);
    let mut next = || {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    for i in 0..basis.len() {
        v[i] = Complex64::new(next(), next());
    }
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.map(|a| a / norm)
}

/// Rebuild a sparse state from a dense vector for driving the implementation
/// with oracle-generated inputs.
pub fn to_sparse(
    basis: &DenseBasis,
    registry: &std::sync::Arc<zwm_core::ModeRegistry>,
    dense: &CVec,
) -> FockState {
    let terms = basis
        .occs
        .iter()
        .enumerate()
        .filter(|(i, _)| dense[*i] != czero())
        .map(|(i, occ)| (Occupation::from_counts(occ.clone()), dense[i]));
    FockState::from_terms(registry.clone(), terms).expect("dense vector fits the registry")
}

/// Poisson probability mass function, iteratively to avoid overflow.
pub fn poisson_pmf(mean: f64, n: u32) -> f64 {
    let mut p = (-mean).exp();
    for k in 1..=n {
        p *= mean / f64::from(k);
    }
    p
}

/// Assert helper: |a − b| within tolerance with a labelled message.
pub fn assert_close(label: &str, a: f64, b: f64, tol: f64) {
    assert!(
        (a - b).abs() <= tol,
        "{label}: {a} vs {b} (|Δ| = {:.3e} > {tol:.3e})",
        (a - b).abs()
    );
}
