use maxsinr_core::oracle::{enumerate_designs, EnumerateOptions};
use maxsinr_core::signal::{ArrayGrid, Scenario, SourceSpec};

fn main() {
    let grid = ArrayGrid::half_wavelength(12).unwrap();
    let desired = SourceSpec::new(90.0, 0.0).unwrap();
    let jammers = [40.0, 85.0, 95.0, 135.0, 140.0, 160.0]
        .iter()
        .map(|&d| SourceSpec::new(d, 20.0).unwrap())
        .collect();
    let scenario = Scenario::new(desired, jammers, 1.0).unwrap();
    let report = enumerate_designs(&scenario, &grid, 5, &[], &EnumerateOptions::default()).unwrap();
    println!(
        "N=12 P=5: best {:.2} dB {:?}, worst {:.2} dB",
        report.best_sinr_db, report.best_support, report.worst_sinr_db
    );
}
