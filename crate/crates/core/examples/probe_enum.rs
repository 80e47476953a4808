use maxsinr_core::oracle::{enumerate_designs, nested_prefix, EnumerateOptions};
use maxsinr_core::signal::{ArrayGrid, Scenario, SourceSpec};
use std::time::Instant;

fn main() {
    let grid = ArrayGrid::half_wavelength(36).unwrap();
    let desired = SourceSpec::new(90.0, 0.0).unwrap();
    let jammers = [40.0, 85.0, 95.0, 135.0, 140.0, 160.0]
        .iter()
        .map(|&d| SourceSpec::new(d, 20.0).unwrap())
        .collect();
    let scenario = Scenario::new(desired, jammers, 1.0).unwrap();
    let prefixed = nested_prefix(5, 6);
    let t0 = Instant::now();
    let report =
        enumerate_designs(&scenario, &grid, 16, &prefixed, &EnumerateOptions::default()).unwrap();
    println!("examined {} in {:?}", report.configs_examined, t0.elapsed());
    println!("best  {:.4} dB  support {:?}", report.best_sinr_db, report.best_support);
    println!("worst {:.4} dB  support {:?}", report.worst_sinr_db, report.worst_support);
}
