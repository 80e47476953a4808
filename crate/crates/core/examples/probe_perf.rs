use maxsinr_core::sca::{sca_design, ScaConfig};
use maxsinr_core::signal::{exact_covariances, ArrayGrid, Scenario, SourceSpec};
use std::time::Instant;

fn main() {
    for n in [12usize, 24, 36] {
        let grid = ArrayGrid::half_wavelength(n).unwrap();
        let desired = SourceSpec::new(90.0, 0.0).unwrap();
        let jammers = [40.0, 85.0, 95.0, 135.0, 140.0, 160.0]
            .iter()
            .map(|&d| SourceSpec::new(d, 20.0).unwrap())
            .collect();
        let scenario = Scenario::new(desired, jammers, 1.0).unwrap();
        let cov = exact_covariances(&scenario, &grid).unwrap();
        let config = ScaConfig { seed: 3, ..ScaConfig::default() };
        let p = n * 4 / 9;
        let t0 = Instant::now();
        let result = sca_design(&cov.r_x, 90.0, p, &config, &[], &grid, &scenario).unwrap();
        println!(
            "N={n} P={p}: {:?}, iters={}, sinr={:.2} dB, mu={:.4}, exact_p={}",
            t0.elapsed(),
            result.iterations,
            result.sinr_db,
            result.mu_final,
            result.exact_p()
        );
    }
}
