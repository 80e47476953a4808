//! Ground-truth evaluators and exhaustive baselines.
//!
//! The optimum beamformer for a known scenario has a closed form: the output
//! SINR over a sensor set equals the largest eigenvalue of `R_i^-1 R_s`
//! restricted to that set, attained by the weights `R_i^-1 s`. These
//! evaluators, together with exhaustive enumeration over supports, provide
//! the reference every designed array is scored against.


use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::parallel;
use crate::signal::{exact_covariances, steering_vector, ArrayGrid, Scenario};

/// Largest eigenvalue of `R_i^-1 R_s` (linear SINR scale).
///
/// `r_i` must be positive definite; `r_s` Hermitian PSD.
pub fn max_sinr_eigen(r_i: &CMatrix, r_s: &CMatrix) -> Result<f64> {
    linalg::require_hermitian(r_i, 1e-9 * r_i.norm().max(1.0))?;
    linalg::require_hermitian(r_s, 1e-9 * r_s.norm().max(1.0))?;
    if r_i.nrows() != r_s.nrows() {
        return Err(Error::InvalidParameter(format!(
            "dimension mismatch: {} vs {}",
            r_i.nrows(),
            r_s.nrows()
        )));
    }
    // Whiten: eigenvalues of L^-1 R_s L^-H match those of R_i^-1 R_s.
    let chol = linalg::cholesky(r_i)?;
    let l = chol.l();
    let mut left = r_s.clone();
    l.solve_lower_triangular_mut(&mut left); // L^-1 R_s
    let mut white = left.adjoint();
    l.solve_lower_triangular_mut(&mut white); // L^-1 R_s L^-H
    let vals = linalg::hermitian_eigenvalues(&white);
    Ok(vals[vals.len() - 1])
}

/// Fast path for rank-one `R_s = sigma2 * s s^H`: returns `sigma2 s^H R_i^-1 s`.
pub fn max_sinr_rank_one(r_i: &CMatrix, s: &CVector, sigma2: f64) -> Result<f64> {
    let chol = linalg::cholesky(r_i)?;
    let x = chol.solve(s);
    Ok(sigma2 * s.dotc(&x).re)
}

/// MaxSINR weights `R_i^-1 s` (unnormalized; SINR is scale invariant).
pub fn optimal_weights(r_i: &CMatrix, s: &CVector) -> Result<CVector> {
    let chol = linalg::cholesky(r_i)?;
    Ok(chol.solve(s))
}

/// Output SINR of a weight vector in dB.
pub fn output_sinr_db(w: &CVector, r_s: &CMatrix, r_i: &CMatrix) -> Result<f64> {
    if w.norm() == 0.0 {
        return Err(Error::InvalidParameter(
            "weight vector must be nonzero".into(),
        ));
    }
    let num = linalg::quadratic_form(r_s, w);
    let den = linalg::quadratic_form(r_i, w);
    Ok(10.0 * (num / den).log10())
}

/// Achievable SINR (dB) of a sensor support under the exact scenario.
pub fn support_sinr_db(scenario: &Scenario, grid: &ArrayGrid, support: &[usize]) -> Result<f64> {
    let cov = exact_covariances(scenario, grid)?;
    let s = steering_vector(scenario.desired.doa_deg, grid)?;
    let r_i_sub = linalg::restrict(&cov.r_i, support);
    let s_sub = linalg::restrict_vector(&s, support);
    let sinr = max_sinr_rank_one(&r_i_sub, &s_sub, scenario.desired.power_linear())?;
    Ok(10.0 * sinr.log10())
}

/// Two-level nested array: dense prefix of `n1` sensors plus `n2` sensors at
/// every `(n1+1)`-th position. Fully augmentable on a grid of `(n1+1)*n2`.
pub fn nested_prefix(n1: usize, n2: usize) -> Vec<usize> {
    assert!(n1 >= 1 && n2 >= 1, "nested array levels must be at least 1");
    let mut idx: Vec<usize> = (0..n1).collect();
    idx.extend((1..=n2).map(|m| (n1 + 1) * m - 1));
    idx.dedup();
    idx
}

/// Histogram of enumerated SINR values on a fixed dB binning.
#[derive(Debug, Clone)]
pub struct SinrHistogram {
    /// Left edge of the first bin, dB.
    pub lo_db: f64,
    /// Bin width, dB.
    pub bin_width_db: f64,
    /// Counts per bin; the last bin absorbs everything at or above its edge.
    pub counts: Vec<u64>,
    /// Values below `lo_db`.
    pub underflow: u64,
}

impl SinrHistogram {
    fn new(lo_db: f64, bin_width_db: f64, bins: usize) -> Self {
        Self {
            lo_db,
            bin_width_db,
            counts: vec![0; bins],
            underflow: 0,
        }
    }

    fn record(&mut self, sinr_db: f64) {
        if sinr_db < self.lo_db {
            self.underflow += 1;
            return;
        }
        let bin = ((sinr_db - self.lo_db) / self.bin_width_db) as usize;
        let last = self.counts.len() - 1;
        self.counts[bin.min(last)] += 1;
    }

    fn merge(&mut self, other: &SinrHistogram) {
        self.underflow += other.underflow;
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn total(&self) -> u64 {
        self.underflow + self.counts.iter().sum::<u64>()
    }
}

/// Outcome of exhaustive enumeration over admissible supports.
#[derive(Debug, Clone)]
pub struct EnumerationReport {
    pub best_support: Vec<usize>,
    pub worst_support: Vec<usize>,
    pub best_sinr_db: f64,
    pub worst_sinr_db: f64,
    pub configs_examined: u64,
    pub histogram: SinrHistogram,
    /// Per-support rows `(support, sinr_db)` in lexicographic order, kept
    /// only when requested.
    pub rows: Option<Vec<(Vec<usize>, f64)>>,
}

/// Knobs for [`enumerate_designs`].
#[derive(Debug, Clone)]
pub struct EnumerateOptions {
    /// Hard cap on the number of supports examined.
    pub budget: u64,
    /// Keep every `(support, sinr)` row for CSV export.
    pub collect_rows: bool,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        Self {
            budget: 10_000_000,
            collect_rows: false,
        }
    }
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    acc
}

/// Lexicographically `rank`-th k-combination of `0..n` (combinatorial number
/// system).
fn unrank_combination(mut rank: u128, n: usize, k: usize) -> Vec<usize> {
    let mut combo = Vec::with_capacity(k);
    let mut next = 0usize;
    for slot in 0..k {
        let remaining = k - slot - 1;
        let mut candidate = next;
        loop {
            let after = binomial((n - candidate - 1) as u64, remaining as u64);
            if rank < after {
                break;
            }
            rank -= after;
            candidate += 1;
        }
        combo.push(candidate);
        next = candidate + 1;
    }
    combo
}

/// Advances `combo` to the next k-combination of `0..n` in lex order.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

struct ChunkResult {
    best: (f64, Vec<usize>),
    worst: (f64, Vec<usize>),
    histogram: SinrHistogram,
    rows: Option<Vec<(Vec<usize>, f64)>>,
}

/// Evaluates the achievable SINR of every admissible P-support containing
/// `prefixed`, using exact scenario covariances.
///
/// Supports are scanned in lexicographic order of their free part; ties on
/// SINR keep the lexicographically earlier support. With the `parallel`
/// feature the scan is chunked across the rayon pool (merge order preserves
/// the tie-break).
pub fn enumerate_designs(
    scenario: &Scenario,
    grid: &ArrayGrid,
    p: usize,
    prefixed: &[usize],
    opts: &EnumerateOptions,
) -> Result<EnumerationReport> {
    enumerate_impl(scenario, grid, p, prefixed, opts, false)
}

/// Sequential variant of [`enumerate_designs`]; the benches compare the two.
pub fn enumerate_designs_sequential(
    scenario: &Scenario,
    grid: &ArrayGrid,
    p: usize,
    prefixed: &[usize],
    opts: &EnumerateOptions,
) -> Result<EnumerationReport> {
    enumerate_impl(scenario, grid, p, prefixed, opts, true)
}

fn enumerate_impl(
    scenario: &Scenario,
    grid: &ArrayGrid,
    p: usize,
    prefixed: &[usize],
    opts: &EnumerateOptions,
    force_sequential: bool,
) -> Result<EnumerationReport> {
    let n = grid.n_sensors();
    if p == 0 || p > n {
        return Err(Error::InvalidParameter(format!(
            "cannot select {p} sensors from a grid of {n}"
        )));
    }
    let mut prefixed_sorted = prefixed.to_vec();
    prefixed_sorted.sort_unstable();
    prefixed_sorted.dedup();
    if prefixed_sorted.len() != prefixed.len() {
        return Err(Error::InvalidParameter(
            "prefixed set contains duplicates".into(),
        ));
    }
    if let Some(&bad) = prefixed_sorted.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidParameter(format!(
            "prefixed sensor {bad} outside grid of {n}"
        )));
    }
    if prefixed_sorted.len() > p {
        return Err(Error::InvalidParameter(format!(
            "{} prefixed sensors exceed the selection size {p}",
            prefixed_sorted.len()
        )));
    }

    let free_slots: Vec<usize> = (0..n).filter(|i| !prefixed_sorted.contains(i)).collect();
    let k = p - prefixed_sorted.len();
    let total = binomial(free_slots.len() as u64, k as u64);
    if total > opts.budget as u128 {
        return Err(Error::BudgetExceeded {
            required: total,
            budget: opts.budget as u128,
        });
    }
    let total = total as u64;

    let cov = exact_covariances(scenario, grid)?;
    let s = steering_vector(scenario.desired.doa_deg, grid)?;
    let sigma2 = scenario.desired.power_linear();

    // Bins cover 40 dB below the interference-free array gain bound.
    let bound_db = 10.0 * (sigma2 * p as f64 / scenario.noise_power).log10();
    let hist_lo = bound_db - 40.0;
    let hist_bins = 161; // 0.25 dB per bin

    let evaluate = |free_combo: &[usize], support_buf: &mut Vec<usize>| -> (Vec<usize>, f64) {
        support_buf.clear();
        support_buf.extend_from_slice(&prefixed_sorted);
        support_buf.extend(free_combo.iter().map(|&i| free_slots[i]));
        support_buf.sort_unstable();
        let r_i_sub = linalg::restrict(&cov.r_i, support_buf);
        let s_sub = linalg::restrict_vector(&s, support_buf);
        let sinr = max_sinr_rank_one(&r_i_sub, &s_sub, sigma2)
            .expect("restricted R_i inherits positive definiteness");
        (support_buf.clone(), 10.0 * sinr.log10())
    };

    let scan_chunk = |start: u64, len: u64| -> ChunkResult {
        let mut combo = unrank_combination(start as u128, free_slots.len(), k);
        let mut best = (f64::NEG_INFINITY, Vec::new());
        let mut worst = (f64::INFINITY, Vec::new());
        let mut histogram = SinrHistogram::new(hist_lo, 0.25, hist_bins);
        let mut rows = opts.collect_rows.then(|| Vec::with_capacity(len as usize));
        let mut support_buf = Vec::with_capacity(p);
        for i in 0..len {
            let (support, sinr_db) = evaluate(&combo, &mut support_buf);
            histogram.record(sinr_db);
            if sinr_db > best.0 {
                best = (sinr_db, support.clone());
            }
            if sinr_db < worst.0 {
                worst = (sinr_db, support.clone());
            }
            if let Some(rows) = rows.as_mut() {
                rows.push((support, sinr_db));
            }
            if i + 1 < len {
                let more = next_combination(&mut combo, free_slots.len());
                debug_assert!(more);
            }
        }
        ChunkResult {
            best,
            worst,
            histogram,
            rows,
        }
    };

    let n_chunks = if force_sequential {
        1
    } else {
        chunk_count(total)
    };
    let chunk_len = total.div_ceil(n_chunks.max(1) as u64);
    let bounds: Vec<(u64, u64)> = (0..n_chunks)
        .map(|c| {
            let start = c as u64 * chunk_len;
            let len = chunk_len.min(total.saturating_sub(start));
            (start, len)
        })
        .filter(|&(_, len)| len > 0)
        .collect();

    let chunks: Vec<ChunkResult> = if force_sequential {
        parallel::map_indexed_sequential(bounds.len(), |c| scan_chunk(bounds[c].0, bounds[c].1))
    } else {
        parallel::map_indexed(bounds.len(), |c| scan_chunk(bounds[c].0, bounds[c].1))
    };

    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut worst = (f64::INFINITY, Vec::new());
    let mut histogram = SinrHistogram::new(hist_lo, 0.25, hist_bins);
    let mut rows = opts.collect_rows.then(Vec::new);
    for chunk in chunks {
        // Strict comparisons keep the lexicographically earliest extremum:
        // chunks arrive in lex order.
        if chunk.best.0 > best.0 {
            best = chunk.best;
        }
        if chunk.worst.0 < worst.0 {
            worst = chunk.worst;
        }
        histogram.merge(&chunk.histogram);
        if let (Some(all), Some(part)) = (rows.as_mut(), chunk.rows) {
            all.extend(part);
        }
    }

    Ok(EnumerationReport {
        best_support: best.1,
        worst_support: worst.1,
        best_sinr_db: best.0,
        worst_sinr_db: worst.0,
        configs_examined: total,
        histogram,
        rows,
    })
}

#[cfg(feature = "parallel")]
fn chunk_count(total: u64) -> usize {
    if total < 1024 {
        1
    } else {
        (rayon::current_num_threads() * 8).max(1)
    }
}

#[cfg(not(feature = "parallel"))]
fn chunk_count(_total: u64) -> usize {
    1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::SourceSpec;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scenario_no_jammers() -> Scenario {
        Scenario::new(SourceSpec::new(90.0, 0.0).unwrap(), vec![], 1.0).unwrap()
    }

    fn random_scenario(rng: &mut ChaCha8Rng, jammers: usize) -> Scenario {
        let desired =
            SourceSpec::new(30.0 + 120.0 * rng.random::<f64>(), rng.random::<f64>() * 10.0)
                .unwrap();
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

    #[test]
    fn white_noise_gain_equals_sensor_count() {
        let grid = ArrayGrid::half_wavelength(16).unwrap();
        let cov = exact_covariances(&scenario_no_jammers(), &grid).unwrap();
        let sinr = max_sinr_eigen(&cov.r_i, &cov.r_s).unwrap();
        assert_relative_eq!(sinr, 16.0, max_relative = 1e-10);
        assert_relative_eq!(10.0 * sinr.log10(), 12.0412, epsilon = 1e-3);
    }

    #[test]
    fn orthogonal_jammer_costs_nothing() {
        // Two sensors, jammer steering orthogonal to the desired steering.
        let grid = ArrayGrid::half_wavelength(2).unwrap();
        let s = steering_vector(90.0, &grid).unwrap();
        // i = (1, -1)/ arbitrary INR: s^H i = 0.
        let i = CVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]);
        let inr = 316.0;
        let r_i = CMatrix::identity(2, 2) + (&i * i.adjoint()).map(|x| x * inr);
        let r_s = &s * s.adjoint();
        let sinr = max_sinr_eigen(&r_i, &r_s).unwrap();
        assert_relative_eq!(sinr, 2.0, max_relative = 1e-10);
    }

    #[test]
    fn rank_one_fast_path_matches_eigen_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let grid = ArrayGrid::half_wavelength(8).unwrap();
        for _ in 0..20 {
            let scenario = random_scenario(&mut rng, 3);
            let cov = exact_covariances(&scenario, &grid).unwrap();
            let s = steering_vector(scenario.desired.doa_deg, &grid).unwrap();
            let a = max_sinr_eigen(&cov.r_i, &cov.r_s).unwrap();
            let b = max_sinr_rank_one(&cov.r_i, &s, scenario.desired.power_linear()).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-9);
        }
    }

    #[test]
    fn weights_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let grid = ArrayGrid::half_wavelength(7).unwrap();
        for _ in 0..20 {
            let scenario = random_scenario(&mut rng, 2);
            let cov = exact_covariances(&scenario, &grid).unwrap();
            let s = steering_vector(scenario.desired.doa_deg, &grid).unwrap();
            let w = optimal_weights(&cov.r_i, &s).unwrap();
            let sinr_w = output_sinr_db(&w, &cov.r_s, &cov.r_i).unwrap();
            let sinr_eig = 10.0 * max_sinr_eigen(&cov.r_i, &cov.r_s).unwrap().log10();
            assert!((sinr_w - sinr_eig).abs() < 1e-8);

            // MVDR equivalence: R_x^-1 s achieves the same SINR as R_i^-1 s.
            let w_x = optimal_weights(&cov.r_x, &s).unwrap();
            let sinr_x = output_sinr_db(&w_x, &cov.r_s, &cov.r_i).unwrap();
            assert!((sinr_x - sinr_eig).abs() < 1e-8);

            // Complex scaling leaves the output SINR unchanged.
            let scaled = w.map(|x| x * Complex64::from_polar(5.0, 1.234));
            let sinr_scaled = output_sinr_db(&scaled, &cov.r_s, &cov.r_i).unwrap();
            assert!((sinr_scaled - sinr_w).abs() < 1e-12);

            // Any other vector does worse.
            let rand_w = CVector::from_fn(7, |_, _| {
                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            let sinr_rand = output_sinr_db(&rand_w, &cov.r_s, &cov.r_i).unwrap();
            assert!(sinr_rand <= sinr_eig + 1e-9);
        }
    }

    #[test]
    fn output_sinr_rejects_zero_weights() {
        let grid = ArrayGrid::half_wavelength(3).unwrap();
        let cov = exact_covariances(&scenario_no_jammers(), &grid).unwrap();
        let w = CVector::zeros(3);
        assert!(output_sinr_db(&w, &cov.r_s, &cov.r_i).is_err());
    }

    #[test]
    fn sinr_scales_linearly_with_source_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let grid = ArrayGrid::half_wavelength(6).unwrap();
        let scenario = random_scenario(&mut rng, 2);
        let cov = exact_covariances(&scenario, &grid).unwrap();
        let base = max_sinr_eigen(&cov.r_i, &cov.r_s).unwrap();
        let scaled = max_sinr_eigen(&cov.r_i, &cov.r_s.map(|x| x * 3.0)).unwrap();
        assert_relative_eq!(scaled, 3.0 * base, max_relative = 1e-10);
    }

    #[test]
    fn nested_prefix_matches_construction() {
        assert_eq!(nested_prefix(1, 1), vec![0, 1]);
        assert_eq!(
            nested_prefix(5, 6),
            vec![0, 1, 2, 3, 4, 5, 11, 17, 23, 29, 35]
        );
        assert_eq!(nested_prefix(2, 3), vec![0, 1, 2, 5, 8]);
    }

    #[test]
    fn combination_unranking_is_consistent() {
        let n = 9;
        let k = 4;
        let mut combo: Vec<usize> = (0..k).collect();
        let mut rank: u128 = 0;
        loop {
            assert_eq!(unrank_combination(rank, n, k), combo);
            rank += 1;
            if !next_combination(&mut combo, n) {
                break;
            }
        }
        assert_eq!(rank, binomial(n as u64, k as u64));
    }

    #[test]
    fn enumeration_small_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let grid = ArrayGrid::half_wavelength(6).unwrap();
        let scenario = random_scenario(&mut rng, 2);
        let report =
            enumerate_designs(&scenario, &grid, 3, &[], &EnumerateOptions::default()).unwrap();
        assert_eq!(report.configs_examined, 20);
        assert_eq!(report.histogram.total(), 20);

        // Independent double loop over all 3-subsets.
        let mut best = f64::NEG_INFINITY;
        let mut worst = f64::INFINITY;
        for a in 0..6 {
            for b in a + 1..6 {
                for c in b + 1..6 {
                    let db = support_sinr_db(&scenario, &grid, &[a, b, c]).unwrap();
                    best = best.max(db);
                    worst = worst.min(db);
                }
            }
        }
        assert_relative_eq!(report.best_sinr_db, best, epsilon = 1e-10);
        assert_relative_eq!(report.worst_sinr_db, worst, epsilon = 1e-10);

        let seq =
            enumerate_designs_sequential(&scenario, &grid, 3, &[], &EnumerateOptions::default())
                .unwrap();
        assert_eq!(seq.best_support, report.best_support);
        assert_relative_eq!(seq.worst_sinr_db, report.worst_sinr_db, epsilon = 1e-12);
    }

    #[test]
    fn enumeration_p_equals_n_is_single_support() {
        let grid = ArrayGrid::half_wavelength(5).unwrap();
        let scenario = scenario_no_jammers();
        let report =
            enumerate_designs(&scenario, &grid, 5, &[], &EnumerateOptions::default()).unwrap();
        assert_eq!(report.configs_examined, 1);
        assert_eq!(report.best_support, vec![0, 1, 2, 3, 4]);
        assert_relative_eq!(report.best_sinr_db, report.worst_sinr_db, epsilon = 1e-12);
    }

    #[test]
    fn enumeration_respects_budget() {
        let grid = ArrayGrid::half_wavelength(36).unwrap();
        let scenario = scenario_no_jammers();
        let err = enumerate_designs(&scenario, &grid, 16, &[], &EnumerateOptions::default());
        match err {
            Err(Error::BudgetExceeded { required, .. }) => {
                assert_eq!(required, binomial(36, 16));
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn adding_sensors_never_hurts() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let grid = ArrayGrid::half_wavelength(9).unwrap();
        for _ in 0..15 {
            let scenario = random_scenario(&mut rng, 3);
            let mut small: Vec<usize> =
                rand::seq::index::sample(&mut rng, 9, 4).into_vec();
            small.sort_unstable();
            let mut large = small.clone();
            for cand in 0..9 {
                if !large.contains(&cand) {
                    large.push(cand);
                    break;
                }
            }
            large.sort_unstable();
            let a = support_sinr_db(&scenario, &grid, &small).unwrap();
            let b = support_sinr_db(&scenario, &grid, &large).unwrap();
            assert!(b >= a - 1e-9, "supersets cannot do worse: {a} vs {b}");
        }
    }
}
