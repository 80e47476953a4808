//! Array geometry, source scenarios, and the narrowband snapshot model.
//!
//! A scenario is one desired source plus a set of jammers, all narrowband
//! plane waves on a uniform linear candidate grid, in circular complex
//! Gaussian noise. Powers are stated in dB relative to the unit noise
//! floor and stored linearly.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

/// Default inter-element spacing in wavelengths (half wavelength).
pub const DEFAULT_SPACING_WL: f64 = 0.5;

/// Uniform candidate grid of `n_sensors` points with an activity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGrid {
    n_sensors: usize,
    spacing_wl: f64,
    active: Vec<bool>,
}

impl ArrayGrid {
    /// Grid with every sensor active.
    pub fn new(n_sensors: usize, spacing_wl: f64) -> Result<Self> {
        if n_sensors < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 sensors, got {n_sensors}"
            )));
        }
        if !(spacing_wl > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "spacing must be positive, got {spacing_wl}"
            )));
        }
        Ok(Self {
            n_sensors,
            spacing_wl,
            active: vec![true; n_sensors],
        })
    }

    /// Half-wavelength grid with every sensor active.
    pub fn half_wavelength(n_sensors: usize) -> Result<Self> {
        Self::new(n_sensors, DEFAULT_SPACING_WL)
    }

    /// Grid with the given activity mask.
    pub fn with_active(n_sensors: usize, spacing_wl: f64, active: Vec<bool>) -> Result<Self> {
        if active.len() != n_sensors {
            return Err(Error::InvalidParameter(format!(
                "activity mask has {} entries for {} sensors",
                active.len(),
                n_sensors
            )));
        }
        let mut grid = Self::new(n_sensors, spacing_wl)?;
        grid.active = active;
        Ok(grid)
    }

    /// Same grid with only the sensors in `support` active.
    pub fn with_support(&self, support: &[usize]) -> Result<Self> {
        let mut active = vec![false; self.n_sensors];
        for &idx in support {
            if idx >= self.n_sensors {
                return Err(Error::InvalidParameter(format!(
                    "support index {idx} outside grid of {} sensors",
                    self.n_sensors
                )));
            }
            active[idx] = true;
        }
        Ok(Self {
            n_sensors: self.n_sensors,
            spacing_wl: self.spacing_wl,
            active,
        })
    }

    pub fn n_sensors(&self) -> usize {
        self.n_sensors
    }

    pub fn spacing_wl(&self) -> f64 {
        self.spacing_wl
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.n_sensors).filter(|&i| self.active[i]).collect()
    }

    pub fn n_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}

/// One plane-wave source: direction of arrival and power.
///
/// Angles are in degrees with broadside at 90; power is dB relative to the
/// unit noise floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub doa_deg: f64,
    pub power_db: f64,
}

impl SourceSpec {
    pub fn new(doa_deg: f64, power_db: f64) -> Result<Self> {
        if !(doa_deg > 0.0 && doa_deg < 180.0) {
            return Err(Error::DoaOutOfRange(doa_deg));
        }
        Ok(Self { doa_deg, power_db })
    }

    /// Source power on a linear scale.
    pub fn power_linear(&self) -> f64 {
        10f64.powf(self.power_db / 10.0)
    }
}

/// Desired source, jammers, and the noise floor (linear scale).
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub desired: SourceSpec,
    pub jammers: Vec<SourceSpec>,
    pub noise_power: f64,
}

impl Scenario {
    pub fn new(desired: SourceSpec, jammers: Vec<SourceSpec>, noise_power: f64) -> Result<Self> {
        if !(noise_power > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise power must be positive, got {noise_power}"
            )));
        }
        Ok(Self {
            desired,
            jammers,
            noise_power,
        })
    }

    /// Short provenance tag used when snapshots are dumped to disk.
    pub fn id_tag(&self) -> String {
        format!("doa{}-j{}", self.desired.doa_deg, self.jammers.len())
    }
}

/// Block of `T` array snapshots on the full grid (one column per snapshot).
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotBlock {
    data: CMatrix,
    seed: u64,
    scenario_id: String,
}

impl SnapshotBlock {
    pub fn new(data: CMatrix, seed: u64, scenario_id: String) -> Result<Self> {
        if data.ncols() == 0 {
            return Err(Error::InvalidParameter(
                "snapshot block needs at least one snapshot".into(),
            ));
        }
        Ok(Self {
            data,
            seed,
            scenario_id,
        })
    }

    /// Sensors-by-snapshots data matrix.
    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn n_sensors(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_snapshots(&self) -> usize {
        self.data.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn scenario_id(&self) -> &str {
        self.scenario_id.as_str()
    }
}

/// Steering vector for a plane wave from `doa_deg` on the full grid.
///
/// Entry `n` is `exp(j 2 pi d n cos(theta))` with `d` in wavelengths, so the
/// first entry is exactly 1 and every entry has unit modulus.
pub fn steering_vector(doa_deg: f64, grid: &ArrayGrid) -> Result<CVector> {
    if !(doa_deg > 0.0 && doa_deg < 180.0) {
        return Err(Error::DoaOutOfRange(doa_deg));
    }
    let phase_step = 2.0 * PI * grid.spacing_wl() * (doa_deg * PI / 180.0).cos();
    Ok(CVector::from_fn(grid.n_sensors(), |n, _| {
        Complex64::from_polar(1.0, phase_step * n as f64)
    }))
}

/// Exact second-order statistics of a scenario on the full grid.
#[derive(Debug, Clone)]
pub struct ExactCovariances {
    /// Desired-source covariance, rank one.
    pub r_s: CMatrix,
    /// Interference-plus-noise covariance, positive definite.
    pub r_i: CMatrix,
    /// Received-data covariance `R_s + R_i`.
    pub r_x: CMatrix,
}

/// Builds the exact covariance triple `(R_s, R_i, R_x)` for a scenario.
pub fn exact_covariances(scenario: &Scenario, grid: &ArrayGrid) -> Result<ExactCovariances> {
    let n = grid.n_sensors();
    let s = steering_vector(scenario.desired.doa_deg, grid)?;
    let sigma2 = scenario.desired.power_linear();
    let r_s = (&s * s.adjoint()).map(|x| x * sigma2);

    let mut r_i = CMatrix::from_diagonal(&DVector::from_element(
        n,
        Complex64::new(scenario.noise_power, 0.0),
    ));
    for jam in &scenario.jammers {
        let i_k = steering_vector(jam.doa_deg, grid)?;
        let p_k = jam.power_linear();
        r_i += (&i_k * i_k.adjoint()).map(|x| x * p_k);
    }

    let r_x = &r_s + &r_i;
    Ok(ExactCovariances { r_s, r_i, r_x })
}

/// Draws one circular complex Gaussian sample of variance `power`.
fn complex_gaussian(rng: &mut ChaCha8Rng, power: f64) -> Complex64 {
    let scale = (power / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * scale, im * scale)
}

/// Simulates `t` snapshots of the narrowband model on the full grid.
///
/// Each column is `b_s s(theta) + sum_k b_k i(theta_k) + v` with independent
/// circular complex Gaussian amplitudes and noise. The same `(scenario,
/// grid, t, seed)` always reproduces the block bit-exactly.
pub fn generate_snapshots(
    scenario: &Scenario,
    grid: &ArrayGrid,
    t: usize,
    seed: u64,
) -> Result<SnapshotBlock> {
    if t == 0 {
        return Err(Error::InvalidParameter(
            "snapshot count must be at least 1".into(),
        ));
    }
    let n = grid.n_sensors();
    let s = steering_vector(scenario.desired.doa_deg, grid)?;
    let jammer_steering: Vec<CVector> = scenario
        .jammers
        .iter()
        .map(|jam| steering_vector(jam.doa_deg, grid))
        .collect::<Result<_>>()?;
    let source_power = scenario.desired.power_linear();
    let jammer_powers: Vec<f64> = scenario.jammers.iter().map(|j| j.power_linear()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = CMatrix::zeros(n, t);
    for col in 0..t {
        let b_s = complex_gaussian(&mut rng, source_power);
        let mut column: CVector = s.map(|e| e * b_s);
        for (i_k, &p_k) in jammer_steering.iter().zip(&jammer_powers) {
            let b_k = complex_gaussian(&mut rng, p_k);
            column += i_k.map(|e| e * b_k);
        }
        for row in 0..n {
            column[row] += complex_gaussian(&mut rng, scenario.noise_power);
        }
        data.set_column(col, &column);
    }

    SnapshotBlock::new(data, seed, scenario.id_tag())
}
