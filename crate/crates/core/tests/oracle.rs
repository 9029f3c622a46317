use expattn::instances::{random_measure, random_psd, uniform_vector, Variant};
use expattn::oracle::{
    fd_gradient, fd_hessian, grid_sup, mc_log_partition, FiniteDiffSpec, McSpec,
};
use expattn::sampling::block_rng;
use expattn::{
    hessian_log_partition, log_partition, DMatrix, DVector, Error, IntrinsicMeasure, NaturalParam,
    PsdMatrix,
};
use proptest::prelude::*;
use rand::Rng;

fn g_of(h: &IntrinsicMeasure) -> impl Fn(&DVector<f64>) -> f64 + '_ {
    move |x| log_partition(h, &NaturalParam::from_vector(x.clone()).unwrap()).unwrap()
}

#[test]
fn gaussian_gradient_by_differences() {
    let mu = DVector::from_vec(vec![0.2, -1.0, 0.7]);
    let s = PsdMatrix::from_row_major(3, &[1.0, 0.4, 0.0, 0.4, 2.0, -0.3, 0.0, -0.3, 0.6]).unwrap();
    let h = IntrinsicMeasure::gaussian(mu.clone(), s.clone()).unwrap();
    let eta = DVector::from_vec(vec![1.5, -0.5, 0.25]);
    let fd = fd_gradient(g_of(&h), &eta, FiniteDiffSpec::default()).unwrap();
    let want = &mu + s.matrix() * &eta;
    let rel = (&fd - &want).amax() / want.amax().max(1.0);
    assert!(rel <= 1e-6);
}

#[test]
fn second_differences_of_discrete_measure() {
    let mut rng = block_rng(1, 0);
    for _ in 0..20 {
        let dim = rng.random_range(1..=5);
        let h = random_measure(&mut rng, Variant::Discrete, dim, 8, false).unwrap();
        let eta = uniform_vector(&mut rng, dim, -2.0, 2.0);
        let fd = fd_hessian(g_of(&h), &eta, FiniteDiffSpec::new(1e-4).unwrap()).unwrap();
        let exact = hessian_log_partition(&h, &NaturalParam::from_vector(eta).unwrap()).unwrap();
        assert!((&fd - exact.matrix()).amax() <= 1e-4);
        assert_eq!(fd, fd.transpose());
    }
}

#[test]
fn monte_carlo_examples() {
    let h = IntrinsicMeasure::gaussian(DVector::zeros(2), PsdMatrix::identity(2)).unwrap();
    let spec = McSpec::new(1_000_000, 5).unwrap();
    let zero = mc_log_partition(&h, &DVector::zeros(2), spec).unwrap();
    assert!(zero.estimate.abs() <= 4.0 * zero.std_error);
    let eta = DVector::from_vec(vec![2f64.sqrt(), 2f64.sqrt()]);
    let est = mc_log_partition(&h, &eta, spec).unwrap();
    assert!((est.estimate - 2.0).abs() <= 4.0 * est.std_error, "{est:?}");
}

#[test]
fn monte_carlo_error_shrinks_like_root_n() {
    let h = IntrinsicMeasure::shared_cov_mixture(
        vec![0.3, 0.7],
        vec![
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![-0.5, 0.5]),
        ],
        PsdMatrix::from_diagonal(&[0.5, 0.3]).unwrap(),
    )
    .unwrap();
    let eta = DVector::from_vec(vec![0.8, -0.4]);
    let se: Vec<f64> = [10_000, 100_000, 1_000_000]
        .iter()
        .map(|&n| {
            mc_log_partition(&h, &eta, McSpec::new(n, 11).unwrap())
                .unwrap()
                .std_error
        })
        .collect();
    for w in se.windows(2) {
        let ratio = w[0] / w[1] / 10f64.sqrt();
        assert!((0.5..=2.0).contains(&ratio), "{se:?}");
    }
}

#[test]
fn monte_carlo_agrees_with_closed_forms() {
    let mut rng = block_rng(2, 0);
    let spec = McSpec::new(1_000_000, 13).unwrap();
    for i in 0..20 {
        let variant = [Variant::Gaussian, Variant::SharedCov, Variant::General][i % 3];
        let dim = rng.random_range(1..=3);
        let h = random_measure(&mut rng, variant, dim, 4, false).unwrap();
        let eta = uniform_vector(&mut rng, dim, -0.5, 0.5);
        let mc = mc_log_partition(&h, &eta, spec).unwrap();
        let exact = g_of(&h)(&eta);
        assert!(
            (mc.estimate - exact).abs() <= 4.0 * mc.std_error,
            "{}: {mc:?} vs {exact}",
            variant.name()
        );
    }
}

#[test]
fn grid_conjugate_of_two_points() {
    let h =
        IntrinsicMeasure::discrete(&[DVector::from_vec(vec![1.0]), DVector::from_vec(vec![-1.0])])
            .unwrap();
    let g = g_of(&h);
    let best = grid_sup(|x| -g(x), &[(-10.0, 10.0)], 1e-4).unwrap();
    assert!((best.value + 2f64.ln()).abs() <= 1e-6);
}

#[test]
fn grid_conjugate_of_a_gaussian_in_two_dimensions() {
    let mut rng = block_rng(3, 0);
    let s = random_psd(&mut rng, 2, 0.5, 2.0);
    let mu = DVector::from_vec(vec![0.3, -0.2]);
    let h = IntrinsicMeasure::gaussian(mu.clone(), s.clone()).unwrap();
    let star = DVector::from_vec(vec![0.9, 0.4]);
    let g = g_of(&h);
    let res = 5e-3;
    let best = grid_sup(|x| x.dot(&star) - g(x), &[(-3.0, 3.0), (-3.0, 3.0)], res).unwrap();
    let inv = s.inverse().unwrap();
    let d = &star - &mu;
    let exact = 0.5 * d.dot(&(&inv * &d));
    let argmax = &inv * &d;
    assert!((&best.argmax - &argmax).amax() <= res);
    // curvature at most 2 on this grid cell: value error below |S| res^2
    assert!((best.value - exact).abs() <= 2.0 * res * res);
    assert!(best.value <= exact + 1e-12);
}

#[test]
fn mc_refuses_discrete_measures() {
    let h = IntrinsicMeasure::discrete(&[DVector::from_vec(vec![0.0])]).unwrap();
    let r = mc_log_partition(&h, &DVector::zeros(1), McSpec::new(1000, 0).unwrap());
    assert!(matches!(r, Err(Error::UnsupportedMeasure { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn differences_are_exact_on_quadratics(
        a in prop::collection::vec(-3.0f64..3.0, 9),
        b in prop::collection::vec(-3.0f64..3.0, 3),
        c in -5.0f64..5.0,
        eta in prop::collection::vec(-2.0f64..2.0, 3),
        step in prop::sample::select(vec![1e-5, 1e-4, 1e-3, 1e-2]),
    ) {
        let a = DMatrix::from_row_slice(3, 3, &a);
        let s = (&a + a.transpose()) * 0.5;
        let b = DVector::from_vec(b);
        let f = |x: &DVector<f64>| 0.5 * x.dot(&(&s * x)) + b.dot(x) + c;
        let eta = DVector::from_vec(eta);
        let spec = FiniteDiffSpec::new(step).unwrap();
        let fd = fd_gradient(f, &eta, spec).unwrap();
        let want = &s * &eta + &b;
        prop_assert!((fd - want).amax() <= 1e-9);
    }
}
