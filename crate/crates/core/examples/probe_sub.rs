use maxsinr_core::linalg::{RVector};
use maxsinr_core::sca::{real_augment, reweight, solve_subproblem, PenaltyWeights};
use maxsinr_core::signal::{exact_covariances, ArrayGrid, Scenario, SourceSpec};

fn main() {
    let grid = ArrayGrid::half_wavelength(12).unwrap();
    let desired = SourceSpec::new(90.0, 0.0).unwrap();
    let jammers = [40.0, 85.0, 95.0, 135.0, 140.0, 160.0]
        .iter()
        .map(|&d| SourceSpec::new(d, 20.0).unwrap())
        .collect();
    let scenario = Scenario::new(desired, jammers, 1.0).unwrap();
    let cov = exact_covariances(&scenario, &grid).unwrap();
    let tr: f64 = cov.r_x.diagonal().iter().map(|v| v.re).sum();
    let r_norm = cov.r_x.map(|v| v * (12.0 / tr));
    let aug = real_augment(&r_norm).unwrap();

    let s = maxsinr_core::signal::steering_vector(90.0, &grid).unwrap();
    let r_s = (&s) * s.adjoint();
    let r_bar = real_augment(&r_s).unwrap().matrix().map(|v| -v);

    // mu = 0 solution first
    let h0 = PenaltyWeights::ones_with_prefixed(12, &[]).unwrap();
    let mut w = RVector::from_fn(24, |i, _| ((i * 37 + 11) % 17) as f64 / 17.0 - 0.5);
    for it in 0..30 {
        let m = (&r_bar * &w).map(|v| 2.0 * v);
        w = solve_subproblem(&m, 0.0, 0.0, &h0, &aug).unwrap();
        let obj = (&r_bar * &w).dot(&w);
        if it % 10 == 0 { println!("mu0 it {it} obj {obj:.6}"); }
    }
    // now a penalized solve
    let m = (&r_bar * &w).map(|v| 2.0 * v);
    let h = reweight(&w, 0.05, &[]).unwrap();
    println!("h range: {:?}", h.values().iter().fold((f64::MAX,f64::MIN),|(lo,hi),&v|(lo.min(v),hi.max(v))));
    match solve_subproblem(&m, 0.0, 0.5, &h, &aug) {
        Ok(w1) => println!("penalized solve ok, |w| = {}", w1.norm()),
        Err(e) => println!("penalized solve FAILED: {e}"),
    }
}
