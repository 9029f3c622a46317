use expattn::dynamics::{renormalize_with_report, BandStatus, DEFAULT_RIDGE};
use expattn::instances::{psd_with_condition, uniform_vector};
use expattn::sampling::{block_rng, gaussian_ensemble};
use expattn::{
    equilibrium_affine_check, layer_step, moments, renormalize, simulate, simulate_observed,
    AttentionConfig, DMatrix, DVector, EquilibriumMonitor, Error, IntrinsicMeasure, MeasurePolicy,
    ParamEnsemble, Phase, PsdMatrix, RenormSpec,
};
use proptest::prelude::*;
use rand::Rng;

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

#[test]
fn sample_moments_fall_within_sampling_bands() {
    let mean = v(&[1.0, -2.0, 0.5]);
    let cov =
        PsdMatrix::from_row_major(3, &[2.0, 0.3, 0.0, 0.3, 1.0, -0.2, 0.0, -0.2, 0.5]).unwrap();
    let n = 100_000;
    let e = gaussian_ensemble(&mean, &cov, n, 42).unwrap();
    let m = moments(&e).unwrap();
    let band = 4.0 / (n as f64).sqrt();
    for i in 0..3 {
        let sd = cov.matrix()[(i, i)].sqrt();
        assert!((m.mean[i] - mean[i]).abs() <= band * sd);
        for j in 0..3 {
            let scale = (cov.matrix()[(i, i)] * cov.matrix()[(j, j)]).sqrt() * 2f64.sqrt();
            assert!((m.cov.matrix()[(i, j)] - cov.matrix()[(i, j)]).abs() <= band * scale);
        }
    }
}

#[test]
fn renormalize_examples() {
    let mut rng = block_rng(1, 0);
    let data: Vec<f64> = (0..40).map(|_| rng.random_range(-3.0..3.0)).collect();
    let e = ParamEnsemble::from_flat(2, data).unwrap();
    let white = renormalize(&e, &RenormSpec::standard(2)).unwrap();
    let m = moments(&white).unwrap();
    assert!(m.mean.amax() <= 1e-10);
    assert!((m.cov.matrix() - DMatrix::identity(2, 2)).amax() <= 1e-10);

    let target = RenormSpec::new(m.mean.clone(), m.cov.clone(), 0.0).unwrap();
    let again = renormalize(&white, &target).unwrap();
    let diff = white
        .as_flat()
        .iter()
        .zip(again.as_flat())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(diff <= 1e-10);
}

#[test]
fn rank_deficient_input_is_ridged() {
    let mut rng = block_rng(2, 0);
    let pts: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
    let e = ParamEnsemble::from_flat(5, pts).unwrap();
    let spec = RenormSpec::standard(5);
    assert_eq!(spec.ridge(), DEFAULT_RIDGE);
    let (out, report) = renormalize_with_report(&e, &spec).unwrap();
    assert!(report.ridge_applied);
    assert_eq!(report.rank, 2);
    let m = moments(&out).unwrap();
    // spanned subspace of the centered input
    let centered = DMatrix::from_fn(5, 3, |i, j| e.member(j)[i] - moments(&e).unwrap().mean[i]);
    let svd = centered.svd(true, false);
    let u = svd.u.unwrap();
    let basis = u.columns(0, 2);
    let restricted = basis.transpose() * m.cov.matrix() * basis;
    assert!((restricted - DMatrix::identity(2, 2)).amax() <= 1e-6);
    assert!(matches!(
        renormalize(&e, &spec.with_ridge(0.0).unwrap()),
        Err(Error::SingularCovariance { rank: 2, dim: 5 })
    ));
}

#[test]
fn pointwise_map_layer_doubles_then_rescales() {
    let e = gaussian_ensemble(&DVector::zeros(3), &PsdMatrix::identity(3), 2000, 3).unwrap();
    let spec = RenormSpec::standard(3);
    let out = layer_step(
        1,
        &e,
        &MeasurePolicy::pointwise_map(PsdMatrix::identity(3)),
        &AttentionConfig::default(),
        Some(&spec),
    )
    .unwrap();
    // the carrier is N(mean, cov) of the sample, so A is eta -> m + (I + C) eta
    let m = moments(&e).unwrap();
    let expand = DMatrix::identity(3, 3) + m.cov.matrix();
    for (x, y) in e.members().zip(out.after_attention.members()) {
        let want = &m.mean + &expand * v(x);
        assert!((v(y) - want).amax() < 1e-12);
    }
    assert_eq!(out.records[0].phase, Phase::AfterAttention);
    assert_eq!(out.records[1].phase, Phase::AfterRenorm);
    let band = 4.0 * (3.0 / 2000f64).sqrt();
    assert!((out.records[0].cov_trace / 4.0 - 3.0).abs() <= 4.0 * band);
    assert!(out.records[1].mean_dist_to_target <= 1e-12);
    assert!(out.records[1].cov_dist_to_target <= 1e-10);
}

#[test]
fn zero_step_layer_is_renormalization_alone() {
    let mut rng = block_rng(4, 0);
    let data: Vec<f64> = (0..60).map(|_| rng.random_range(-2.0..2.0)).collect();
    let e = ParamEnsemble::from_flat(3, data).unwrap();
    let cfg = AttentionConfig {
        step_size: 0.0,
        ..AttentionConfig::default()
    };
    let h = IntrinsicMeasure::discrete(&[v(&[1.0, 2.0, 3.0])]).unwrap();
    let spec = RenormSpec::new(
        v(&[0.5, 0.0, -1.0]),
        PsdMatrix::from_diagonal(&[1.0, 2.0, 0.5]).unwrap(),
        0.0,
    )
    .unwrap();
    let out = layer_step(1, &e, &MeasurePolicy::FixedMeasure(h), &cfg, Some(&spec)).unwrap();
    assert_eq!(out.after_attention, e);
    assert_eq!(out.ensemble, renormalize(&e, &spec).unwrap());
}

#[test]
fn single_key_shift_is_removed_by_renormalization() {
    let mut rng = block_rng(5, 0);
    let data: Vec<f64> = (0..80).map(|_| rng.random_range(-2.0..2.0)).collect();
    let raw = ParamEnsemble::from_flat(2, data).unwrap();
    let m = moments(&raw).unwrap();
    let centered = ParamEnsemble::from_flat(
        2,
        raw.members()
            .flat_map(|x| [x[0] - m.mean[0], x[1] - m.mean[1]])
            .collect(),
    )
    .unwrap();
    let key = v(&[3.0, -1.0]);
    let policy = MeasurePolicy::FixedMeasure(
        IntrinsicMeasure::discrete(std::slice::from_ref(&key)).unwrap(),
    );
    let spec = RenormSpec::standard(2);
    let out = layer_step(
        1,
        &centered,
        &policy,
        &AttentionConfig::default(),
        Some(&spec),
    )
    .unwrap();
    for (x, y) in centered.members().zip(out.after_attention.members()) {
        assert!((v(y) - v(x) - &key).amax() < 1e-15);
    }
    let whitened = renormalize(&centered, &spec).unwrap();
    let diff = whitened
        .as_flat()
        .iter()
        .zip(out.ensemble.as_flat())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(diff < 1e-12);
}

#[test]
fn simulate_emits_two_records_per_step() {
    let e = gaussian_ensemble(&DVector::zeros(2), &PsdMatrix::identity(2), 64, 6).unwrap();
    let policy = MeasurePolicy::SelfPatterns;
    let cfg = AttentionConfig::default();
    let spec = RenormSpec::standard(2);
    let one = simulate(&e, &policy, &cfg, Some(&spec), 1).unwrap();
    let step = layer_step(1, &e, &policy, &cfg, Some(&spec)).unwrap();
    assert_eq!(one.records, step.records.to_vec());
    let many = simulate(&e, &policy, &cfg, Some(&spec), 7).unwrap();
    assert_eq!(many.records.len(), 14);
    for (i, r) in many.records.iter().enumerate() {
        assert_eq!(r.step, i / 2 + 1);
    }
    assert_eq!(many, simulate(&e, &policy, &cfg, Some(&spec), 7).unwrap());
    assert!(simulate(&e, &policy, &cfg, Some(&spec), 0).is_err());
}

#[test]
fn simulate_reports_the_failing_step() {
    // ridge 0 and a collapsed ensemble: renormalization fails on step 1
    let e = ParamEnsemble::from_flat(2, vec![1.0, 1.0, 2.0, 2.0, 3.0, 3.0]).unwrap();
    let spec = RenormSpec::standard(2).with_ridge(0.0).unwrap();
    let err = simulate(
        &e,
        &MeasurePolicy::SelfPatterns,
        &AttentionConfig::default(),
        Some(&spec),
        3,
    )
    .unwrap_err();
    assert!(matches!(err, Error::AtStep { step: 1, .. }), "{err:?}");
}

#[test]
fn equilibrium_examples() {
    let r = equilibrium_affine_check(&DVector::zeros(4), &PsdMatrix::identity(4)).unwrap();
    assert!((&r.intermediate_cov - DMatrix::identity(4, 4) * 4.0).amax() < 1e-15);
    assert!(r.passed());

    let r = equilibrium_affine_check(
        &v(&[1.0, 0.0]),
        &PsdMatrix::from_diagonal(&[2.0, 0.5]).unwrap(),
    )
    .unwrap();
    // 50-digit reference: equilibrium (1/2, 0), diag(1/2, 2); after attention (5/2, 0), 9/2 I
    assert!((&r.final_mean - v(&[0.5, 0.0])).amax() <= 1e-12);
    assert!((&r.final_cov - DMatrix::from_diagonal(&v(&[0.5, 2.0]))).amax() <= 1e-12);
    assert!((&r.intermediate_mean - v(&[2.5, 0.0])).amax() <= 1e-12);
    assert!((&r.intermediate_cov - DMatrix::identity(2, 2) * 4.5).amax() <= 1e-12);
}

#[test]
fn equilibrium_holds_for_conditioned_carriers() {
    let mut rng = block_rng(7, 0);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let dim = rng.random_range(1..=6);
        let cond = 10f64.powf(rng.random_range(0.0..=4.0));
        let scale = 10f64.powf(rng.random_range(-1.0..=0.5));
        let s = psd_with_condition(&mut rng, dim, scale, cond);
        let mu = if i == 0 {
            DVector::zeros(dim)
        } else {
            uniform_vector(&mut rng, dim, -2.0, 2.0)
        };
        let r = equilibrium_affine_check(&mu, &s).unwrap();
        worst = worst.max(r.max_error());
    }
    assert!(worst <= 1e-10, "{worst}");
}

#[test]
fn equilibrium_run_stays_in_band() {
    let dim = 4;
    let n = 4096;
    let sigma = PsdMatrix::identity(dim);
    let mu = DVector::zeros(dim);
    let init = gaussian_ensemble(&mu, &sigma, n, 7).unwrap();
    let mut monitor = EquilibriumMonitor::new(&mu, &sigma).unwrap();
    let spec = RenormSpec::standard(dim);
    simulate_observed(
        &init,
        &MeasurePolicy::pointwise_map(sigma.clone()),
        &AttentionConfig::default(),
        Some(&spec),
        50,
        |out| monitor.observe(out).unwrap(),
    )
    .unwrap();
    let verdict = monitor.verdict(n);
    assert_eq!(verdict.status, BandStatus::Within, "{verdict:?}");
    assert_eq!(verdict.expansion_violations, 0);
}

#[test]
fn wrong_target_leaves_the_band() {
    let dim = 2;
    let n = 1024;
    let sigma = PsdMatrix::identity(dim);
    let mu = DVector::zeros(dim);
    let init = gaussian_ensemble(&mu, &sigma, n, 3).unwrap();
    let mut monitor = EquilibriumMonitor::new(&mu, &sigma).unwrap();
    let spec = RenormSpec::new(
        mu.clone(),
        PsdMatrix::scaled_identity(dim, 2.0).unwrap(),
        0.0,
    )
    .unwrap();
    simulate_observed(
        &init,
        &MeasurePolicy::pointwise_map(sigma.clone()),
        &AttentionConfig::default(),
        Some(&spec),
        5,
        |out| monitor.observe(out).unwrap(),
    )
    .unwrap();
    assert_eq!(monitor.verdict(n).status, BandStatus::Outside);
}

#[test]
fn tiny_ensembles_are_inconclusive() {
    let sigma = PsdMatrix::identity(2);
    let mu = DVector::zeros(2);
    let init = gaussian_ensemble(&mu, &sigma, 2, 1).unwrap();
    let mut monitor = EquilibriumMonitor::new(&mu, &sigma).unwrap();
    simulate_observed(
        &init,
        &MeasurePolicy::pointwise_map(sigma.clone()),
        &AttentionConfig::default(),
        Some(&RenormSpec::standard(2)),
        1,
        |out| monitor.observe(out).unwrap(),
    )
    .unwrap();
    assert_eq!(monitor.verdict(2).status, BandStatus::Inconclusive);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn renormalize_hits_its_target_and_is_idempotent(seed in any::<u64>(), dim in 1usize..6, extra in 1usize..40) {
        let mut rng = block_rng(seed, 0);
        let n = dim + 1 + extra;
        let data: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let e = ParamEnsemble::from_flat(dim, data).unwrap();
        let cov = psd_with_condition(&mut rng, dim, 0.5, 20.0);
        let spec = RenormSpec::new(uniform_vector(&mut rng, dim, -1.0, 1.0), cov.clone(), DEFAULT_RIDGE).unwrap();
        let (out, report) = renormalize_with_report(&e, &spec).unwrap();
        prop_assert!(!report.ridge_applied);
        let m = moments(&out).unwrap();
        prop_assert!((&m.mean - spec.target_mean()).amax() <= 1e-8);
        prop_assert!((m.cov.matrix() - cov.matrix()).amax() <= 1e-8);
        let twice = renormalize(&out, &spec).unwrap();
        for (a, b) in out.as_flat().iter().zip(twice.as_flat()) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }
}
