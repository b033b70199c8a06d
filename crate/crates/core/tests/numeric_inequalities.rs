use delayed_oco::delay_model::{realize_schedule, DelayRegime, DelayRegimeSpec};
use delayed_oco::geometry::{
    minimize_quadratic_on_ball, project_ball, project_ball_mahalanobis, sm_rank_one_update, BallDomain, PsdMatrix,
    PROJECTION_TOL,
};
use delayed_oco::rng::rng_from_seed;
use delayed_oco::{Matrix, Vector};
use delayed_oco_testkit as oracle;
use proptest::prelude::*;
use rand::Rng;

/// `argmin_{‖x‖ ≤ R} ⟨w, x⟩ + xᵀAx + bᵀx` through the library's ball solver.
fn ftrl_point(a: &Matrix, w: &Vector, b: &Vector, radius: f64) -> Vector {
    minimize_quadratic_on_ball(&(a * 2.0), &-(w + b), radius, 1e-12)
        .unwrap()
        .x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn stability_with_shared_regularizer(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = rng_from_seed(seed);
        let floor = rng.random_range(0.01..2.0);
        let a = oracle::random_spd(&mut rng, n, floor);
        let radius = rng.random_range(0.1..3.0);
        let b = oracle::random_vector(&mut rng, n, 3.0);
        let w1 = oracle::random_vector(&mut rng, n, 5.0);
        let w2 = oracle::random_vector(&mut rng, n, 5.0);
        let psd = PsdMatrix::new(a.clone()).unwrap().with_inverse().unwrap();
        let dom = BallDomain::new(n, radius).unwrap();
        let ainv = a.clone().try_inverse().unwrap();
        let z1 = project_ball_mahalanobis(&(-(&ainv * (&w1 + &b)) / 2.0), &psd, &dom, PROJECTION_TOL).unwrap();
        let z2 = project_ball_mahalanobis(&(-(&ainv * (&w2 + &b)) / 2.0), &psd, &dom, PROJECTION_TOL).unwrap();
        let lhs = oracle::norm_in(&a, &(&z1 - &z2));
        let rhs = 0.5 * oracle::dual_norm_in(&a, &(&w1 - &w2));
        prop_assert!(lhs <= rhs + 1e-8, "lhs {lhs} rhs {rhs}");
    }

    #[test]
    fn stability_with_distinct_regularizers(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = rng_from_seed(seed);
        let (f1, f2) = (rng.random_range(0.01..1.0), rng.random_range(0.01..1.0));
        let a1 = oracle::random_spd(&mut rng, n, f1);
        let a2 = oracle::random_spd(&mut rng, n, f2);
        let (b1, b2) = (oracle::random_vector(&mut rng, n, 2.0), oracle::random_vector(&mut rng, n, 2.0));
        let (c1, c2) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let (w1, w2) = (oracle::random_vector(&mut rng, n, 4.0), oracle::random_vector(&mut rng, n, 4.0));
        let radius = rng.random_range(0.1..3.0);
        let psi = |a: &Matrix, b: &Vector, c: f64, x: &Vector| x.dot(&(a * x)) + b.dot(x) + c;
        let z1 = ftrl_point(&a1, &w1, &b1, radius);
        let z2 = ftrl_point(&a2, &w2, &b2, radius);
        let d = &z1 - &z2;
        let lhs = oracle::norm_in(&a1, &d).powi(2) + oracle::norm_in(&a2, &d).powi(2);
        let rhs = (&w1 - &w2).dot(&(&z2 - &z1))
            + (psi(&a1, &b1, c1, &z2) - psi(&a2, &b2, c2, &z2))
            - (psi(&a1, &b1, c1, &z1) - psi(&a2, &b2, c2, &z1));
        prop_assert!(lhs <= rhs + 1e-7, "lhs {lhs} rhs {rhs}");
    }

    #[test]
    fn delayed_elliptical_potential(seed in any::<u64>(), n in 1usize..=5, horizon in 1usize..=100) {
        let mut rng = rng_from_seed(seed);
        let phi = rng.random_range(0.1..3.0);
        let big_l = rng.random_range(0.1..2.0);
        let regime = match rng.random_range(0..3) {
            0 => DelayRegime::Uniform { lo: 0, hi: rng.random_range(0..10) },
            1 => DelayRegime::HeavyTail { base: Box::new(DelayRegime::Uniform { lo: 0, hi: 5 }), p: 0.1 },
            _ => DelayRegime::Fixed(rng.random_range(0..20)),
        };
        let sched = realize_schedule(&DelayRegimeSpec { kind: regime, seed: rng.random() }, horizon).unwrap();
        let a: Vec<Vector> = (0..horizon).map(|_| oracle::random_in_ball(&mut rng, n, big_l)).collect();
        let mut eta = vec![rng.random_range(0.1..2.0)];
        for _ in 0..horizon {
            let last = *eta.last().unwrap();
            eta.push(last + rng.random_range(0.0..0.5));
        }
        // gram[t] = φ Σ_{τ≤t} a_τ a_τᵀ, so A_t = η_t I + gram[t].
        let mut gram = vec![Matrix::zeros(n, n)];
        for v in &a {
            let next = gram.last().unwrap() + v * v.transpose() * phi;
            gram.push(next);
        }
        let a_mat = |t: usize| Matrix::identity(n, n) * eta[t] + &gram[t];
        let (mut lhs_prev, mut lhs_cur) = (0.0, 0.0);
        for t in 1..=horizon {
            let m = sched.missing_at(t).unwrap();
            let prev = a_mat(t - 1);
            let cur = a_mat(t);
            let sum_prev: f64 = m.iter().map(|&tau| oracle::dual_norm_in(&prev, &a[tau - 1])).sum();
            let sum_cur: f64 = m.iter().map(|&tau| oracle::dual_norm_in(&cur, &a[tau - 1])).sum();
            lhs_prev += oracle::dual_norm_in(&prev, &a[t - 1]) * sum_prev;
            lhs_cur += oracle::dual_norm_in(&cur, &a[t - 1]) * sum_cur;
        }
        let dmax = sched.stats().perceived_dmax[horizon - 1] as f64;
        let nf = n as f64;
        let log = (phi * big_l * big_l * horizon as f64 / (eta[0] * nf)).ln_1p();
        let rhs_cur = 2.0 * nf * dmax / phi * log;
        let rhs_prev = rhs_cur * (phi * big_l * big_l / eta[0] + 1.0);
        prop_assert!(rhs_prev - lhs_prev >= 0.0, "first: lhs {lhs_prev} rhs {rhs_prev}");
        prop_assert!(rhs_cur - lhs_cur >= 0.0, "second: lhs {lhs_cur} rhs {rhs_cur}");
    }

    #[test]
    fn mahalanobis_projection_with_isotropic_metric_is_euclidean(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = rng_from_seed(seed);
        let eta = rng.random_range(0.01..10.0);
        let dom = BallDomain::new(n, rng.random_range(0.1..3.0)).unwrap();
        let x = oracle::random_vector(&mut rng, n, 5.0);
        let a = PsdMatrix::scaled_identity(n, eta).unwrap();
        let p = project_ball_mahalanobis(&x, &a, &dom, PROJECTION_TOL).unwrap();
        prop_assert!((p - project_ball(&x, &dom)).amax() <= 1e-8);
    }

    #[test]
    fn ball_quadratic_matches_generic_minimizer(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = rng_from_seed(seed);
        let floor = rng.random_range(0.01..1.0);
        let h = oracle::random_spd(&mut rng, n, floor);
        let b = oracle::random_vector(&mut rng, n, 5.0);
        let radius = rng.random_range(0.1..3.0);
        let f = |x: &Vector| 0.5 * x.dot(&(&h * x)) - b.dot(x);
        let g = |x: &Vector| &h * x - &b;
        let ours = minimize_quadratic_on_ball(&h, &b, radius, PROJECTION_TOL).unwrap().x;
        let reference = oracle::minimize(f, g, &Vector::zeros(n), Some(radius), 20_000);
        prop_assert!(ours.norm() <= radius + 1e-9);
        prop_assert!(f(&ours) <= f(&reference) + 1e-7, "ours {} reference {}", f(&ours), f(&reference));
    }
}

#[test]
fn sherman_morrison_chain_tracks_dense_inverse() {
    let mut rng = rng_from_seed(17);
    let n = 6;
    let mut a = PsdMatrix::scaled_identity(n, 1.0).unwrap();
    let mut dense = Matrix::identity(n, n);
    for _ in 0..100 {
        let v = oracle::random_vector(&mut rng, n, 1.0);
        let c = rng.random_range(0.1..2.0);
        a = sm_rank_one_update(&a, &v, c).unwrap();
        dense += &v * v.transpose() * c;
    }
    let inv = dense.try_inverse().unwrap();
    assert!((a.inverse().unwrap() - inv).amax() <= 1e-7);
}

#[test]
fn reference_minimizer_solves_ball_quadratic() {
    let mut rng = rng_from_seed(3);
    let a = oracle::random_spd(&mut rng, 3, 0.5);
    let c = Vector::from_vec(vec![5.0, 0.0, 0.0]);
    let f = |x: &Vector| 0.5 * (x - &c).dot(&(&a * (x - &c)));
    let g = |x: &Vector| &a * (x - &c);
    let x = oracle::minimize(f, g, &Vector::zeros(3), Some(1.0), 5000);
    assert!((x.norm() - 1.0).abs() < 1e-9);
    let inside = oracle::minimize(f, g, &Vector::zeros(3), None, 5000);
    assert!((inside - &c).norm() < 1e-6);
}

#[test]
fn reference_subset_split_on_countdown() {
    let d: Vec<usize> = (1..=6).map(|t| 6 - t).collect();
    assert_eq!(oracle::sigma_max(&d), 5);
    assert_eq!(oracle::sigma_max_subset_min(&d), 5);
}
