use super::*;
use crate::covariance::eigen_floor;
use crate::linalg::hermitian_eigenvalues;
use crate::oracle::{enumerate_designs, support_sinr_db, EnumerateOptions};
use crate::signal::{exact_covariances, SourceSpec};
use approx::assert_relative_eq;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scenario_six_jammers() -> Scenario {
    let desired = SourceSpec::new(90.0, 0.0).unwrap();
    let jammers = [40.0, 85.0, 95.0, 135.0, 140.0, 160.0]
        .iter()
        .map(|&d| SourceSpec::new(d, 20.0).unwrap())
        .collect();
    Scenario::new(desired, jammers, 1.0).unwrap()
}

fn random_scenario(rng: &mut ChaCha8Rng, jammers: usize) -> Scenario {
    let desired = SourceSpec::new(30.0 + 120.0 * rng.random::<f64>(), 0.0).unwrap();
    let jam = (0..jammers)
        .map(|_| {
            SourceSpec::new(
                30.0 + 120.0 * rng.random::<f64>(),
                5.0 + 10.0 * rng.random::<f64>(),
            )
            .unwrap()
        })
        .collect();
    Scenario::new(desired, jam, 1.0).unwrap()
}

fn random_hermitian_pd(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let mut h = &g * g.adjoint();
    for i in 0..n {
        h[(i, i)] += Complex64::new(0.5, 0.0);
    }
    crate::linalg::hermitianize(&mut h);
    h
}

fn random_stacked(rng: &mut ChaCha8Rng, dim: usize) -> RVector {
    RVector::from_fn(dim, |_, _| rng.random::<f64>() - 0.5)
}

#[test]
fn augment_real_input_is_block_diagonal() {
    let a = CMatrix::from_fn(3, 3, |p, q| Complex64::new(1.0 / (1.0 + p as f64 + q as f64), 0.0));
    let aug = real_augment(&a).unwrap();
    let m = aug.matrix();
    for p in 0..3 {
        for q in 0..3 {
            assert_eq!(m[(p, q)], a[(p, q)].re);
            assert_eq!(m[(3 + p, 3 + q)], a[(p, q)].re);
            assert_eq!(m[(p, 3 + q)], 0.0);
            assert_eq!(m[(3 + p, q)], 0.0);
        }
    }
}

#[test]
fn augment_scalar() {
    let a = CMatrix::from_element(1, 1, Complex64::new(2.0, 0.0));
    let aug = real_augment(&a).unwrap();
    assert_eq!(aug.matrix().as_slice(), &[2.0, 0.0, 0.0, 2.0]);
    assert_eq!(aug.n(), 1);
}

#[test]
fn augment_doubles_the_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_hermitian_pd(&mut rng, 5);
    let aug = real_augment(&a).unwrap();
    let complex_vals = hermitian_eigenvalues(&a);
    let mut real_vals = aug.matrix().clone().symmetric_eigen().eigenvalues;
    real_vals.as_mut_slice().sort_by(f64::total_cmp);
    for i in 0..5 {
        assert_relative_eq!(real_vals[2 * i], complex_vals[i], max_relative = 1e-10);
        assert_relative_eq!(real_vals[2 * i + 1], complex_vals[i], max_relative = 1e-10);
    }
}

#[test]
fn augment_preserves_quadratic_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..25 {
        let a = random_hermitian_pd(&mut rng, 6);
        let aug = real_augment(&a).unwrap();
        let w = CVector::from_fn(6, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let stacked = RVector::from_fn(12, |i, _| if i < 6 { w[i].re } else { w[i - 6].im });
        let complex_form = (w.adjoint() * &a * &w)[(0, 0)].re;
        let real_form = (aug.matrix() * &stacked).dot(&stacked);
        let bound = 1e-10 * a.norm() * w.norm_squared().max(1.0);
        assert!((complex_form - real_form).abs() <= bound);
    }
}

#[test]
fn augment_rejects_non_hermitian() {
    let mut a = CMatrix::identity(3, 3);
    a[(0, 1)] = Complex64::new(0.3, 0.0);
    assert!(real_augment(&a).is_err());
}

#[test]
fn linearize_at_origin_is_zero() {
    let r = RMatrix::identity(4, 4).map(|v: f64| -v);
    let (m, b) = linearize(&r, &RVector::zeros(4));
    assert_eq!(m.norm(), 0.0);
    assert_eq!(b, 0.0);
}

#[test]
fn linearize_tangency_and_majorization() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let scenario = scenario_six_jammers();
    let grid = ArrayGrid::half_wavelength(5).unwrap();
    let cov = exact_covariances(&scenario, &grid).unwrap();
    let r_bar = real_augment(&cov.r_s).unwrap().matrix().map(|v| -v);
    for _ in 0..10 {
        let w = random_stacked(&mut rng, 10);
        let (m, b) = linearize(&r_bar, &w);
        let quad = (&r_bar * &w).dot(&w);
        assert!((m.dot(&w) + b - quad).abs() < 1e-12 * quad.abs().max(1.0));
        // Concave quadratic sits below its tangent everywhere.
        for _ in 0..100 {
            let v = random_stacked(&mut rng, 10).map(|x| 4.0 * x);
            let qv = (&r_bar * &v).dot(&v);
            assert!(m.dot(&v) + b >= qv - 1e-9);
        }
    }
}

#[test]
fn reweight_examples() {
    let mut w = RVector::zeros(8);
    w[1] = 0.95; // sensor 1 has pair (0.95, 0)
    let h = reweight(&w, 0.05, &[]).unwrap();
    assert_relative_eq!(h.values()[0], 20.0, epsilon = 1e-12);
    assert_relative_eq!(h.values()[1], 1.0, epsilon = 1e-12);

    let pinned = reweight(&w, 0.05, &[0]).unwrap();
    assert_eq!(pinned.values()[0], 0.0);
    assert!(pinned.values()[1] > 0.0);
    assert_eq!(pinned.prefixed(), &[0]);
}

#[test]
fn reweight_rejects_bad_epsilon() {
    let w = RVector::zeros(4);
    assert!(reweight(&w, 0.0, &[]).is_err());
}

#[test]
fn support_extraction() {
    // One dominant group, the rest exactly zero.
    let mut w = RVector::zeros(10);
    w[2] = 1.0;
    w[7] = -0.5;
    assert_eq!(extract_support(&w, 1e-3).unwrap(), vec![2]);

    // All groups equal: everything survives.
    let w = RVector::from_element(10, 0.3);
    assert_eq!(extract_support(&w, 1e-3).unwrap(), vec![0, 1, 2, 3, 4]);

    // All-zero vector has no support.
    assert!(matches!(
        extract_support(&RVector::zeros(10), 1e-3),
        Err(Error::EmptySupport)
    ));
}

#[test]
fn subproblem_closed_form_mu_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = random_hermitian_pd(&mut rng, 4);
    let aug = real_augment(&a).unwrap();
    let m = random_stacked(&mut rng, 8);
    let h = PenaltyWeights::ones_with_prefixed(4, &[]).unwrap();
    let w = solve_subproblem(&m, 0.7, 0.0, &h, &aug).unwrap();

    // Direct formula.
    let r = aug.matrix();
    let chol = nalgebra::Cholesky::new(r.clone()).unwrap();
    let rim = chol.solve(&m);
    let expect = -&rim / rim.dot(&m).sqrt();
    assert!((w - expect).norm() < 1e-10);
}

#[test]
fn subproblem_zero_gradient_with_penalty_returns_origin() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_hermitian_pd(&mut rng, 3);
    let aug = real_augment(&a).unwrap();
    let h = PenaltyWeights::ones_with_prefixed(3, &[]).unwrap();
    let w = solve_subproblem(&RVector::zeros(6), 0.0, 1.5, &h, &aug).unwrap();
    assert!(w.norm() < 1e-5, "norm {}", w.norm());
}

#[test]
fn subproblem_stays_feasible_and_beats_sampling() {
    // The solver's minimum should undercut random feasible points.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..10 {
        let n = 4;
        let a = random_hermitian_pd(&mut rng, n);
        let aug = real_augment(&a).unwrap();
        let m = random_stacked(&mut rng, 2 * n).map(|v| 3.0 * v);
        let mu = 0.5 + rng.random::<f64>();
        let h = reweight(&random_stacked(&mut rng, 2 * n), 0.05, &[]).unwrap();
        let w = solve_subproblem(&m, 0.0, mu, &h, &aug).unwrap();
        let q = (aug.matrix() * &w).dot(&w);
        assert!(q <= 1.0 + 1e-9, "infeasible: {q}");
        let ours = penalized_objective(&m, &w, mu, h.values());
        for _ in 0..200 {
            let v = random_stacked(&mut rng, 2 * n);
            let qv = (aug.matrix() * &v).dot(&v);
            let v = v.map(|x| x / qv.sqrt().max(1.0));
            let theirs = penalized_objective(&m, &v, mu, h.values());
            assert!(
                ours <= theirs + 1e-6 * theirs.abs().max(1.0),
                "trial {trial}: sampled point beat the solver"
            );
        }
    }
}

fn design_on_exact(
    scenario: &Scenario,
    grid: &ArrayGrid,
    p: usize,
    prefixed: &[usize],
    seed: u64,
) -> DesignResult {
    let cov = exact_covariances(scenario, grid).unwrap();
    let config = ScaConfig {
        seed,
        ..ScaConfig::default()
    };
    sca_design(
        &cov.r_x,
        scenario.desired.doa_deg,
        p,
        &config,
        prefixed,
        grid,
        scenario,
    )
    .unwrap()
}

#[test]
fn design_small_instance_close_to_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let grid = ArrayGrid::half_wavelength(10).unwrap();
    let mut close = 0;
    let trials = 10;
    for t in 0..trials {
        let scenario = random_scenario(&mut rng, 3);
        let result = design_on_exact(&scenario, &grid, 4, &[], t as u64);
        assert_eq!(result.support.len(), 4);
        let report =
            enumerate_designs(&scenario, &grid, 4, &[], &EnumerateOptions::default()).unwrap();
        assert!(result.sinr_db <= report.best_sinr_db + 1e-9);
        assert!(result.sinr_db >= report.worst_sinr_db - 1e-9);
        if result.sinr_db >= report.best_sinr_db - 1.5 {
            close += 1;
        }
    }
    assert!(close >= 8, "only {close}/{trials} within 1.5 dB of optimum");
}

#[test]
fn design_hybrid_contains_prefixed() {
    let grid = ArrayGrid::half_wavelength(12).unwrap();
    let scenario = scenario_six_jammers();
    let prefixed = crate::oracle::nested_prefix(2, 4); // {0,1,2,5,8,11}
    let result = design_on_exact(&scenario, &grid, 8, &prefixed, 3);
    assert_eq!(result.support.len(), 8);
    for k in &prefixed {
        assert!(result.support.contains(k), "prefixed {k} missing");
    }
}

#[test]
fn design_support_is_scale_invariant() {
    let grid = ArrayGrid::half_wavelength(12).unwrap();
    let scenario = scenario_six_jammers();
    let cov = exact_covariances(&scenario, &grid).unwrap();
    let config = ScaConfig {
        seed: 11,
        ..ScaConfig::default()
    };
    let base = sca_design(&cov.r_x, 90.0, 5, &config, &[], &grid, &scenario).unwrap();
    for scale in [0.0625, 16.0, 2.5] {
        let scaled = cov.r_x.map(|v| v * scale);
        let result = sca_design(&scaled, 90.0, 5, &config, &[], &grid, &scenario).unwrap();
        assert_eq!(result.support, base.support, "support moved at c={scale}");
        // Weights rescale by 1/sqrt(c) through the unit-quadratic-form
        // normalization.
        let ratio = base.weights[0].norm() / result.weights[0].norm();
        assert_relative_eq!(ratio, scale.sqrt(), max_relative = 1e-6);
    }
}

#[test]
fn design_weights_are_optimal_on_support() {
    // On exact covariances the analytic weights attain the support's
    // eigenvalue bound.
    let grid = ArrayGrid::half_wavelength(12).unwrap();
    let scenario = scenario_six_jammers();
    let cov = exact_covariances(&scenario, &grid).unwrap();
    let result = design_on_exact(&scenario, &grid, 6, &[], 5);

    let r_s_sub = linalg::restrict(&cov.r_s, &result.support);
    let r_i_sub = linalg::restrict(&cov.r_i, &result.support);
    let achieved = oracle::output_sinr_db(&result.weights, &r_s_sub, &r_i_sub).unwrap();
    let bound = 10.0
        * oracle::max_sinr_eigen(&r_i_sub, &r_s_sub)
            .unwrap()
            .log10();
    assert!(
        (achieved - bound).abs() < 1e-8,
        "achieved {achieved}, bound {bound}"
    );
    assert_relative_eq!(result.sinr_db, bound, epsilon = 1e-8);

    // And the reported SINR matches the independent support oracle.
    let oracle_db = support_sinr_db(&scenario, &grid, &result.support).unwrap();
    assert_relative_eq!(result.sinr_db, oracle_db, epsilon = 1e-10);
}

#[test]
fn design_monotone_surrogate_descent() {
    // Within one fixed-mu reweighted loop the solved surrogate objective
    // must not increase (up to solver tolerance).
    let grid = ArrayGrid::half_wavelength(12).unwrap();
    let scenario = scenario_six_jammers();
    let cov = exact_covariances(&scenario, &grid).unwrap();
    let config = ScaConfig {
        seed: 1,
        keep_trace: true,
        ..ScaConfig::default()
    };
    let result = sca_design(&cov.r_x, 90.0, 5, &config, &[], &grid, &scenario).unwrap();
    let trace = result.trace.as_ref().unwrap();
    let mut checked = 0;
    let mut prev: Option<(f64, f64)> = None; // (mu, objective)
    for point in trace.iter().filter(|p| p.phase == Phase::Reweight) {
        if let Some((mu, obj)) = prev {
            if mu == point.mu {
                assert!(
                    point.surrogate_objective <= obj + 1e-6 * obj.abs().max(1.0),
                    "surrogate rose from {obj} to {} at mu={mu}",
                    point.surrogate_objective
                );
                checked += 1;
            }
        }
        prev = Some((point.mu, point.surrogate_objective));
    }
    assert!(checked > 0, "trace contained no reweighted steps");
}

#[test]
fn design_support_size_shrinks_with_mu() {
    // Across a mu sweep the converged support size is non-increasing for
    // at least 95% of adjacent pairs.
    let grid = ArrayGrid::half_wavelength(14).unwrap();
    let scenario = scenario_six_jammers();
    let cov = exact_covariances(&scenario, &grid).unwrap();
    let r_norm = {
        let tr: f64 = cov.r_x.diagonal().iter().map(|v| v.re).sum();
        cov.r_x.map(|v| v * (14.0 / tr))
    };
    let s = crate::signal::steering_vector(90.0, &grid).unwrap();
    let r_bar = real_augment(&(&s * s.adjoint())).unwrap().matrix().map(|v| -v);
    let aug = real_augment(&r_norm).unwrap();
    let solver = SubproblemSolver::new(aug.matrix().clone()).unwrap();
    let config = ScaConfig::default();

    // Start from the unpenalized optimum.
    let mut w = {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut w = random_unit_start(&mut rng, 28);
        for _ in 0..40 {
            let (m, _) = linearize(&r_bar, &w);
            w = solver.solve(&m, 0.0, &[]).unwrap();
        }
        w
    };

    let mut tracer = Tracer { points: None };
    let mut sizes = Vec::new();
    let n_points = 21;
    for i in 0..n_points {
        let mu = 0.01 * (5.0f64 / 0.01).powf(i as f64 / (n_points - 1) as f64);
        let (w_mu, support, _) =
            reweighted_loop(&solver, &r_bar, &w, mu, &config, &[], &mut tracer).unwrap();
        w = w_mu;
        sizes.push(support.len());
    }
    let violations = sizes.windows(2).filter(|p| p[1] > p[0]).count();
    let pairs = sizes.len() - 1;
    assert!(
        violations as f64 <= 0.05 * pairs as f64,
        "{violations}/{pairs} non-monotone steps: {sizes:?}"
    );
    // The sweep actually sparsifies.
    assert!(sizes[0] > sizes[n_points - 1]);
}

#[test]
fn design_on_floored_estimate_still_hits_p() {
    // Run the full estimate pipeline shape: noisy covariance, floored.
    let grid = ArrayGrid::half_wavelength(12).unwrap();
    let scenario = scenario_six_jammers();
    let block = crate::signal::generate_snapshots(&scenario, &grid, 300, 17).unwrap();
    let est = crate::covariance::masked_sample_covariance(&block, &grid).unwrap();
    let floored = eigen_floor(est.matrix(), 1.0).unwrap();
    let config = ScaConfig {
        seed: 9,
        ..ScaConfig::default()
    };
    let result = sca_design(&floored, 90.0, 6, &config, &[], &grid, &scenario).unwrap();
    assert_eq!(result.support.len(), 6);
    assert!(result.sinr_db.is_finite());
}

#[test]
fn design_rejects_bad_inputs() {
    let grid = ArrayGrid::half_wavelength(6).unwrap();
    let scenario = scenario_six_jammers();
    let cov = exact_covariances(&scenario, &grid).unwrap();
    let config = ScaConfig::default();
    assert!(sca_design(&cov.r_x, 90.0, 0, &config, &[], &grid, &scenario).is_err());
    assert!(sca_design(&cov.r_x, 90.0, 7, &config, &[], &grid, &scenario).is_err());
    assert!(
        sca_design(&cov.r_x, 90.0, 2, &config, &[0, 1, 2], &grid, &scenario).is_err()
    );
    let bad_config = ScaConfig {
        mu_lo: 2.0,
        mu_hi: 1.0,
        ..ScaConfig::default()
    };
    assert!(sca_design(&cov.r_x, 90.0, 3, &bad_config, &[], &grid, &scenario).is_err());
}

#[test]
fn design_p_equals_n_selects_everything() {
    let grid = ArrayGrid::half_wavelength(8).unwrap();
    let scenario = scenario_six_jammers();
    let result = design_on_exact(&scenario, &grid, 8, &[], 1);
    assert_eq!(result.support, (0..8).collect::<Vec<_>>());
    assert_eq!(result.mu_final, 0.0);
}
