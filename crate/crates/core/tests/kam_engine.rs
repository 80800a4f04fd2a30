mod common;

use common::random_real_series;
use lrkam::error::KamError;
use lrkam::kam::*;
use lrkam::models::long_range_pairwise;
use lrkam::series::{poisson_bracket, MassVector, MonomialKey, TFSeries};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const XI: [f64; 3] = [1.0, 4.38, 1.88];

fn affine(seed: u64) -> TFSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_real_series(&mut rng, 3, 16, 3, 1);
    p.truncate(|k| k.alpha_norm1() <= 1 && !k.is_constant()).0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cohomological_residual_vanishes(seed in any::<u64>()) {
        let m = MassVector::exponential(1.0, 3).unwrap();
        let q = affine(seed);
        let sol = solve_with_bound(&q, &XI, 1e-3).unwrap();
        let n = TFSeries::frequency_part(&XI, &m);
        let resid = &(&poisson_bracket(&n, &sol.generator, &m) + &q) - &q.average();
        prop_assert!(resid.max_abs() <= 1e-13 * q.max_abs().max(1e-300));
        prop_assert!(sol.generator.is_real(1e-14));
    }

    #[test]
    fn truncation_is_a_partition(seed in any::<u64>()) {
        let m = MassVector::exponential(1.0, 3).unwrap();
        let sched = KamSchedule::build(1e-6, 0.5, 1.0, 1.0, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_real_series(&mut rng, 3, 20, 6, 3);
        let t = kam_truncate(&p, 0, &sched, &m).unwrap();
        prop_assert!((&(&t.q + &t.r) - &p).max_abs() == 0.0);
        for (k, _) in t.q.iter() {
            prop_assert!(k.alpha_norm1() <= 1);
            prop_assert!(in_truncation(k, 0, &sched, &m));
        }
    }
}

#[test]
fn resonant_frequency_is_rejected() {
    let m = MassVector::exponential(1.0, 3).unwrap();
    let xi = [1.0, 1.0, 2.5];
    let h = long_range_pairwise(&xi, &m, 1e-6);
    let sched = KamSchedule::build(1e-6, 0.5, 1.4, 0.25, 2).unwrap();
    let err = run_iteration(&h, &xi, &sched, &m, &KamConfig::default()).unwrap_err();
    match err {
        KamError::SmallDivisorViolation { support, l, value, .. } => {
            assert_eq!(support, vec![1, 2]);
            assert_eq!(l.iter().map(|v| v.abs()).collect::<Vec<_>>(), vec![1, 1]);
            assert_eq!(value, 0.0);
        }
        e => panic!("unexpected {e:?}"),
    }
}

#[test]
fn zero_perturbation_is_trivial() {
    let m = MassVector::exponential(1.0, 3).unwrap();
    let sched = KamSchedule::build(1e-6, 0.5, 1.0, 1.0, 3).unwrap();
    let h = TFSeries::frequency_part(&XI, &m);
    let run = run_iteration(&h, &XI, &sched, &m, &KamConfig::default()).unwrap();
    assert_eq!(run.records.len(), 3);
    for r in &run.records {
        assert_eq!(r.norm_p, 0.0);
        assert_eq!(r.norm_g, 0.0);
        assert_eq!(r.shift_inf_norm, 0.0);
    }
    assert_eq!(run.state.frequency, XI.to_vec());
    assert!(run.convergence_fit().is_none());
}

#[test]
fn angle_free_linear_part_becomes_a_shift() {
    let m = MassVector::exponential(1.0, 3).unwrap();
    let sched = KamSchedule::build(1e-6, 0.5, 1.0, 1.0, 1).unwrap();
    let c = 3e-7;
    let mut h = TFSeries::frequency_part(&XI, &m);
    h.add_term(MonomialKey::single(2, 0, 1), Complex64::new(c * m.weight(2), 0.0));
    let run = run_iteration(&h, &XI, &sched, &m, &KamConfig::default()).unwrap();
    assert!(run.state.remainder.is_empty());
    assert!((run.state.frequency[1] - XI[1] - c).abs() < 1e-8 * c);
    assert_eq!(run.state.frequency[0], XI[0]);
    assert!((run.records[0].shift_inf_norm - c).abs() < 1e-8 * c);
}

#[test]
fn one_step_beats_the_next_threshold() {
    let m = MassVector::exponential(1.0, 3).unwrap();
    let eps = 1e-6;
    let h = long_range_pairwise(&XI, &m, eps);
    let sched = KamSchedule::build(eps, 0.5, 1.4, 0.25, 1).unwrap();
    let run = run_iteration(&h, &XI, &sched, &m, &KamConfig::default()).unwrap();
    let r = &run.records[0];
    assert!(r.norm_p_next <= r.eps_next, "{} > {}", r.norm_p_next, r.eps_next);
    assert!(r.norm_g <= 10.0 * r.eps_n.powf(11.0 / 12.0));
    assert!(r.shift_inf_norm <= r.eps_n.sqrt() / 1.4);
}

#[test]
fn bookkeeping_reassembles_the_hamiltonian() {
    let m = MassVector::exponential(1.0, 3).unwrap();
    let sched = KamSchedule::build(1e-6, 0.5, 1.4, 0.25, 1).unwrap();
    let h = long_range_pairwise(&XI, &m, 1e-6);
    let state = IterationState::from_hamiltonian(&h, &XI, &m);
    let t = kam_truncate(&state.remainder, 0, &sched, &m).unwrap();
    let back = &(&state.normal_part(&m) + &t.q) + &t.r;
    assert_eq!((&back - &h).max_abs(), 0.0);
}

#[test]
fn stage_table_has_standard_columns() {
    let m = MassVector::exponential(1.0, 3).unwrap();
    let sched = KamSchedule::build(1e-6, 0.5, 1.4, 0.25, 2).unwrap();
    let h = long_range_pairwise(&XI, &m, 1e-6);
    let run = run_iteration(&h, &XI, &sched, &m, &KamConfig::default()).unwrap();
    let mut buf = Vec::new();
    write_stage_csv(&mut buf, &run.records, false).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 3);
    let mut again = Vec::new();
    let run2 = run_iteration(&h, &XI, &sched, &m, &KamConfig::default()).unwrap();
    write_stage_csv(&mut again, &run2.records, false).unwrap();
    assert_eq!(text.as_bytes(), &again[..]);
}
