//! Property tests for the state algebra, element unitarity, pipeline
//! invariants, and fit round-trips.

mod common;

use common::DenseBasis;
use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::Arc;
use zwm_core::{
    apply_beam_splitter, apply_overlap, apply_phase, fit_sinusoid, visibility, BeamSplitterSpec,
    CountPredicate, ExperimentConfig, FockState, Interferometer, ModeRegistry, Occupation,
    OverlapSpec, PeriodSpec,
};

fn registry4() -> Arc<ModeRegistry> {
    ModeRegistry::builder()
        .mode("a", None)
        .mode("b", None)
        .mode("c", None)
        .mode("d", None)
        .photon_capacity(4)
        .build()
        .unwrap()
}

/// Sparse state over the 4-mode, 4-photon basis built from proptest-chosen
/// (basis index, amplitude) pairs. Occupation of the listed `forbidden`
/// modes is zeroed so overlap preconditions hold.
fn arb_state(forbidden: &'static [usize]) -> impl Strategy<Value = FockState> {
    let entries = prop::collection::vec(
        (0usize..70, -1.0f64..1.0, -1.0f64..1.0),
        1..6,
    );
    entries.prop_map(move |entries| {
        let reg = registry4();
        let basis = DenseBasis::new(4, 4);
        let terms = entries.into_iter().map(|(idx, re, im)| {
            let mut occ = basis.occs[idx % basis.len()].clone();
            for &m in forbidden {
                occ[m] = 0;
            }
            (Occupation::from_counts(occ), Complex64::new(re, im))
        });
        let state = FockState::from_terms(reg.clone(), terms).unwrap();
        if state.norm() < 1e-6 {
            FockState::vacuum(reg)
        } else {
            state
        }
    })
}

proptest! {
    #[test]
    fn normalize_reaches_unit_norm(state in arb_state(&[])) {
        let normalized = state.normalized().unwrap();
        prop_assert!((normalized.norm_sqr() - 1.0).abs() < 1e-12);
        for (_, amp) in normalized.terms() {
            prop_assert!(amp.norm() >= zwm_core::DEFAULT_PRUNE_THRESHOLD);
        }
    }

    #[test]
    fn creation_commutes_on_distinct_modes(
        state in arb_state(&[]),
        mode_a in 0usize..4,
        mode_b in 0usize..4,
        power_a in 1u32..=2,
        power_b in 1u32..=2,
    ) {
        prop_assume!(mode_a != mode_b);
        let reg = state.registry().clone();
        let a = reg.ids().nth(mode_a).unwrap();
        let b = reg.ids().nth(mode_b).unwrap();
        let ab = state.apply_creation(a, power_a).and_then(|s| s.apply_creation(b, power_b));
        let ba = state.apply_creation(b, power_b).and_then(|s| s.apply_creation(a, power_a));
        match (ab, ba) {
            (Ok(ab), Ok(ba)) => {
                prop_assert_eq!(ab.num_terms(), ba.num_terms());
                for (occ, amp) in ab.terms() {
                    let other = ba.amplitude(occ);
                    prop_assert!(
                        (amp - other).norm() <= 1e-15 * amp.norm().max(1.0),
                        "occ {occ}: {amp} vs {other}"
                    );
                }
            }
            (Err(e1), Err(e2)) => {
                let both_capacity = matches!(e1, zwm_core::FockError::CapacityExceeded { .. })
                    && matches!(e2, zwm_core::FockError::CapacityExceeded { .. });
                prop_assert!(both_capacity, "unexpected errors: {e1:?} / {e2:?}");
            }
            _ => prop_assert!(false, "one order overflowed, the other did not"),
        }
    }

    #[test]
    fn detection_partition_sums_to_one(state in arb_state(&[]), mode in 0usize..4) {
        let state = state.normalized().unwrap();
        let reg = state.registry().clone();
        let m = reg.ids().nth(mode).unwrap();
        let mut total = 0.0;
        for k in 0..=4u32 {
            total += state.detection_probability(&[(m, CountPredicate::Exactly(k))], &[]).unwrap();
        }
        prop_assert!((total - 1.0).abs() < 1e-12, "partition sums to {total}");
    }

    #[test]
    fn phase_and_splitter_preserve_norm(
        state in arb_state(&[]),
        phi in -10.0f64..10.0,
        t in 0.0f64..=1.0,
    ) {
        let state = state.normalized().unwrap();
        let reg = state.registry().clone();
        let a = reg.id("a").unwrap();
        let b = reg.id("b").unwrap();
        let phased = apply_phase(&state, a, phi).unwrap();
        prop_assert!((phased.norm_sqr() - 1.0).abs() < 1e-12);
        let split = apply_beam_splitter(&state, &BeamSplitterSpec::new(a, b, t).unwrap()).unwrap();
        prop_assert!((split.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_preserves_norm_with_empty_target(
        state in arb_state(&[2, 3]),
        gamma in 0.0f64..=1.0,
    ) {
        // Target (c) and ancilla (d) unoccupied: the overlap is a rotation.
        let state = state.normalized().unwrap();
        let reg = state.registry().clone();
        let spec = OverlapSpec::new(
            reg.id("a").unwrap(),
            reg.id("c").unwrap(),
            gamma,
            reg.id("d").unwrap(),
        ).unwrap();
        let out = apply_overlap(&state, &spec).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12, "norm² {}", out.norm_sqr());
    }

    #[test]
    fn run_point_outputs_are_probabilities(
        pair_number in 1u32..=2,
        gamma in 0.0f64..=1.0,
        phi in -7.0f64..7.0,
        t in 0.05f64..=1.0,
    ) {
        let interferometer = Interferometer::new(ExperimentConfig {
            pair_number,
            gamma,
            bs_transmission: t,
            ..ExperimentConfig::default()
        }).unwrap();
        let p = interferometer.run_point(phi).unwrap();
        for value in [p.singles_d1, p.singles_d2, p.coincidence] {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&value), "{value}");
        }
        prop_assert!(p.coincidence <= p.singles_d1.min(p.singles_d2) + 1e-12);
    }

    #[test]
    fn visibility_scale_invariant(
        max in 1e-6f64..1e6,
        ratio in 0.0f64..=1.0,
        scale in 1e-3f64..1e3,
    ) {
        let min = max * ratio;
        let v1 = visibility(max, min).unwrap();
        let v2 = visibility(scale * max, scale * min).unwrap();
        prop_assert!((v1 - v2).abs() < 1e-9);
    }

    #[test]
    fn sinusoid_fit_roundtrip(
        offset in 0.5f64..20.0,
        rel_amp in 0.05f64..1.0,
        period in 50.0f64..2000.0,
        phase in -3.0f64..3.0,
    ) {
        let amplitude = offset * rel_amp;
        let points: Vec<(f64, f64)> = (0..96)
            .map(|k| {
                let x = k as f64 * period / 24.0; // four periods
                (x, offset + amplitude * (2.0 * std::f64::consts::PI * x / period + phase).cos())
            })
            .collect();
        let fit = fit_sinusoid(&points, PeriodSpec::Free).unwrap();
        let recovered = fit.period.unwrap();
        prop_assert!((recovered - period).abs() / period < 1e-9, "period {recovered} vs {period}");
        prop_assert!((fit.amplitude - amplitude).abs() / amplitude < 1e-8);
        prop_assert!((fit.offset - offset).abs() / offset < 1e-9);
        let wrapped = (fit.phase - phase).rem_euclid(2.0 * std::f64::consts::PI);
        let phase_err = wrapped.min(2.0 * std::f64::consts::PI - wrapped);
        prop_assert!(phase_err < 1e-7, "phase error {phase_err}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pipeline_invariant_under_global_phase(
        gamma in 0.0f64..=1.0,
        phi in -7.0f64..7.0,
        global in -3.0f64..3.0,
    ) {
        let interferometer = Interferometer::new(ExperimentConfig {
            gamma,
            ..ExperimentConfig::default()
        }).unwrap();
        let base = interferometer.run_point(phi).unwrap();

        let reg = interferometer.registry().clone();
        let source = interferometer
            .pair_state(phi)
            .unwrap()
            .scaled(Complex64::from_polar(1.0, global));
        let spec = OverlapSpec::new(
            reg.id("I1").unwrap(),
            reg.id("I2").unwrap(),
            gamma,
            reg.id("A1").unwrap(),
        ).unwrap();
        let bs = BeamSplitterSpec::balanced(reg.id("S1").unwrap(), reg.id("S2").unwrap()).unwrap();
        let out = apply_beam_splitter(&apply_overlap(&source, &spec).unwrap(), &bs)
            .unwrap()
            .normalized()
            .unwrap();
        let coincidence = out.detection_probability(
            &[
                (reg.id("S1").unwrap(), CountPredicate::AtLeast(1)),
                (reg.id("S2").unwrap(), CountPredicate::AtLeast(1)),
            ],
            &[reg.id("I1").unwrap(), reg.id("I2").unwrap(), reg.id("A1").unwrap()],
        ).unwrap();
        prop_assert!((coincidence - base.coincidence).abs() < 1e-12);
    }
}
