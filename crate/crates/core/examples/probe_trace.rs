use maxsinr_core::sca::{sca_design, Phase, ScaConfig};
use maxsinr_core::signal::{exact_covariances, ArrayGrid, Scenario, SourceSpec};

fn main() {
    let n = 12;
    let grid = ArrayGrid::half_wavelength(n).unwrap();
    let desired = SourceSpec::new(90.0, 0.0).unwrap();
    let jammers = [40.0, 85.0, 95.0, 135.0, 140.0, 160.0]
        .iter()
        .map(|&d| SourceSpec::new(d, 20.0).unwrap())
        .collect();
    let scenario = Scenario::new(desired, jammers, 1.0).unwrap();
    let cov = exact_covariances(&scenario, &grid).unwrap();
    let config = ScaConfig { seed: 3, keep_trace: true, ..ScaConfig::default() };
    let result = sca_design(&cov.r_x, 90.0, 5, &config, &[], &grid, &scenario).unwrap();
    let trace = result.trace.unwrap();
    // summarize per mu: iterations and final support size
    let mut cur_mu = f64::NAN;
    let mut iters = 0;
    let mut last_size = 0;
    let mut last_obj = 0.0;
    for p in trace.iter().filter(|p| p.phase == Phase::Reweight) {
        if p.mu != cur_mu {
            if !cur_mu.is_nan() {
                println!("mu={cur_mu:.4}: iters={iters} final_size={last_size} obj={last_obj:.3}");
            }
            cur_mu = p.mu;
            iters = 0;
        }
        iters += 1;
        last_size = p.support_size;
        last_obj = p.surrogate_objective;
    }
    println!("mu={cur_mu:.4}: iters={iters} final_size={last_size} obj={last_obj:.3}");
    println!("final support {:?} sinr {:.2}", result.support, result.sinr_db);
}
