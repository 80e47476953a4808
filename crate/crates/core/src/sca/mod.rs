//! Successive convex approximation for MaxSINR sensor selection.
//!
//! The selection problem — pick `P` of `N` grid sensors and complex weights
//! maximizing output SINR — is solved in real-augmented form. The concave
//! objective is replaced by its tangent at the current iterate, leaving a
//! linear objective over the ellipsoid `w' R_x w <= 1` plus a group
//! sparsity penalty: the mixed l1/l-inf norm over per-sensor
//! (real, imaginary) pairs, reweighted between iterations to sharpen the
//! selection. A binary search over the sparsity parameter `mu` lands the
//! support on exactly `P` sensors; the final weights on that support come
//! from the closed-form MaxSINR solution of the reduced problem.
//!
//! Hybrid designs pin a prefixed sensor subset by zeroing its penalty
//! weights, so those sensors are never driven out of the support.

mod subproblem;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, RMatrix, RVector};
use crate::oracle;
use crate::signal::{steering_vector, ArrayGrid, Scenario};
use subproblem::{penalized_objective, SubproblemSolver};

/// Real symmetric `2N x 2N` embedding of a complex Hermitian matrix.
///
/// Top-left and bottom-right blocks carry the real part, the off-diagonal
/// blocks carry -imag / +imag, so `w^H A w = w~' A~ w~` for the stacked
/// real vector `w~ = [Re w; Im w]` and the spectrum doubles in multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct RealAugmentedForm {
    matrix: RMatrix,
}

impl RealAugmentedForm {
    pub fn matrix(&self) -> &RMatrix {
        &self.matrix
    }

    /// Number of complex dimensions `N` (the matrix is `2N x 2N`).
    pub fn n(&self) -> usize {
        self.matrix.nrows() / 2
    }
}

/// Builds the real-augmented form of a Hermitian matrix.
pub fn real_augment(matrix: &CMatrix) -> Result<RealAugmentedForm> {
    linalg::require_hermitian(matrix, 1e-9 * matrix.norm().max(1.0))?;
    let n = matrix.nrows();
    let mut out = RMatrix::zeros(2 * n, 2 * n);
    for p in 0..n {
        for q in 0..n {
            let v = matrix[(p, q)];
            out[(p, q)] = v.re;
            out[(n + p, n + q)] = v.re;
            out[(p, n + q)] = -v.im;
            out[(n + p, q)] = v.im;
        }
    }
    Ok(RealAugmentedForm { matrix: out })
}

/// Splits a stacked real vector back into complex weights.
pub fn complex_from_stacked(w: &RVector) -> CVector {
    let n = w.len() / 2;
    CVector::from_fn(n, |k, _| Complex64::new(w[k], w[k + n]))
}

/// Euclidean norm of the (real, imaginary) pair of sensor `k`.
fn group_norm(w: &RVector, k: usize) -> f64 {
    let n = w.len() / 2;
    w[k].hypot(w[k + n])
}

/// First-order tangent of the concave quadratic `w' R_bar w` at `w`.
///
/// Returns `(m, b)` with `m = 2 R_bar w` and `b = -w' R_bar w`, so the
/// tangent `m'v + b` touches the quadratic at `w` and majorizes it
/// everywhere when `R_bar` is negative semidefinite.
pub fn linearize(r_bar_s: &RMatrix, w_tilde: &RVector) -> (RVector, f64) {
    let rw = r_bar_s * w_tilde;
    let b = -rw.dot(w_tilde);
    (rw.map(|v| 2.0 * v), b)
}

/// Reweighting state: per-sensor penalty weights with a pinned prefixed set.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyWeights {
    h: Vec<f64>,
    prefixed: Vec<usize>,
}

impl PenaltyWeights {
    /// All-ones weights with the prefixed entries pinned to zero.
    pub fn ones_with_prefixed(n: usize, prefixed: &[usize]) -> Result<Self> {
        let mut h = vec![1.0; n];
        for &k in prefixed {
            if k >= n {
                return Err(Error::InvalidParameter(format!(
                    "prefixed sensor {k} outside grid of {n}"
                )));
            }
            h[k] = 0.0;
        }
        Ok(Self {
            h,
            prefixed: prefixed.to_vec(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.h
    }

    pub fn prefixed(&self) -> &[usize] {
        &self.prefixed
    }
}

/// Inverse-magnitude reweighting `h_k = 1/(||w~_k||_2 + epsilon)`.
///
/// Prefixed entries stay pinned at zero so sparsity is never enforced on
/// them; `epsilon` guards the division for dead groups.
pub fn reweight(w_tilde: &RVector, epsilon: f64, prefixed: &[usize]) -> Result<PenaltyWeights> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "reweighting guard must be positive, got {epsilon}"
        )));
    }
    let n = w_tilde.len() / 2;
    let mut weights = PenaltyWeights::ones_with_prefixed(n, prefixed)?;
    for k in 0..n {
        if weights.h[k] != 0.0 {
            weights.h[k] = 1.0 / (group_norm(w_tilde, k) + epsilon);
        }
    }
    Ok(weights)
}

/// Sensors whose group norm exceeds `gamma` times the largest group norm.
pub fn extract_support(w_tilde: &RVector, gamma: f64) -> Result<Vec<usize>> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sparsity threshold must be positive, got {gamma}"
        )));
    }
    let n = w_tilde.len() / 2;
    let norms: Vec<f64> = (0..n).map(|k| group_norm(w_tilde, k)).collect();
    let max = norms.iter().fold(0.0f64, |a, &b| a.max(b));
    if max == 0.0 {
        return Err(Error::EmptySupport);
    }
    let support: Vec<usize> = (0..n).filter(|&k| norms[k] > gamma * max).collect();
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    Ok(support)
}

/// Minimizes `m'w + b + mu sum_k h_k ||w~_k||_inf` over `w' R_x w <= 1`.
///
/// `b` only shifts the objective value and never moves the minimizer; it is
/// accepted so callers can pass the tangent pair straight through. The
/// solve is certified to a duality gap of 1e-7 (relative to the objective
/// scale). With `mu = 0` the closed form `-R^-1 m / sqrt(m' R^-1 m)`
/// applies; `m = 0` with an active penalty returns the origin.
pub fn solve_subproblem(
    m: &RVector,
    b: f64,
    mu: f64,
    h: &PenaltyWeights,
    r_x_aug: &RealAugmentedForm,
) -> Result<RVector> {
    let _ = b;
    let solver = SubproblemSolver::new(r_x_aug.matrix().clone())?;
    solver.solve(m, mu, h.values())
}

/// Tuning for [`sca_design`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScaConfig {
    /// Binary-search bracket for the sparsity parameter.
    pub mu_lo: f64,
    pub mu_hi: f64,
    /// Relative support threshold.
    pub gamma: f64,
    /// Reweighting guard.
    pub epsilon: f64,
    /// Relative objective-change tolerance of the inner loops.
    pub inner_tol: f64,
    pub max_inner_iters: usize,
    pub max_mu_steps: usize,
    /// Seed for the random initialization.
    pub seed: u64,
    /// Record a per-iteration trace in the result.
    pub keep_trace: bool,
}

impl Default for ScaConfig {
    fn default() -> Self {
        Self {
            mu_lo: 0.01,
            mu_hi: 5.0,
            gamma: 1e-3,
            epsilon: 0.05,
            inner_tol: 1e-5,
            max_inner_iters: 200,
            max_mu_steps: 30,
            seed: 0,
            keep_trace: false,
        }
    }
}

impl ScaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu_lo > 0.0 && self.mu_lo < self.mu_hi) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < mu_lo < mu_hi, got [{}, {}]",
                self.mu_lo, self.mu_hi
            )));
        }
        if !(self.gamma > 0.0 && self.epsilon > 0.0 && self.inner_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "gamma, epsilon and inner_tol must be positive".into(),
            ));
        }
        if self.max_inner_iters == 0 || self.max_mu_steps == 0 {
            return Err(Error::InvalidParameter(
                "iteration limits must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Algorithm phase a trace point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Unpenalized warm-up toward the full-array optimum.
    MuZero,
    /// Reweighted loop at a fixed trial `mu`.
    Reweight,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Phase::MuZero => write!(f, "mu0"),
            Phase::Reweight => write!(f, "reweight"),
        }
    }
}

/// One per-iteration trace record.
#[derive(Debug, Clone, Copy)]
pub struct TracePoint {
    pub phase: Phase,
    pub mu: f64,
    pub iter: usize,
    pub surrogate_objective: f64,
    pub support_size: usize,
}

/// How the design reached exactly `P` sensors when the binary search did
/// not land there on its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fallback {
    /// Started from the sparsest support not exceeding `P` and greedily
    /// added the sensors with the best estimated gain.
    GreedyFill { added: usize },
    /// No trial `mu` reached a support of at most `P`; kept the `P`
    /// largest weight groups of the sparsest attempt.
    TruncatedTopNorm { removed: usize },
}

/// A finished design: support, weights, and diagnostics.
#[derive(Debug, Clone)]
pub struct DesignResult {
    /// Selected sensors, sorted ascending, exactly `P` of them.
    pub support: Vec<usize>,
    /// Complex weights on the support, unit quadratic form against the
    /// design-time covariance estimate.
    pub weights: CVector,
    /// Achievable SINR of the support under the exact evaluation scenario.
    pub sinr_db: f64,
    /// Sparsity parameter that produced the support (0 when the warm-up
    /// solution was already `P`-sparse).
    pub mu_final: f64,
    /// Total inner iterations across all phases.
    pub iterations: usize,
    /// Per-iteration log, when requested.
    pub trace: Option<Vec<TracePoint>>,
    /// Set when the binary search needed a termination fallback.
    pub fallback: Option<Fallback>,
}

impl DesignResult {
    /// Whether the binary search converged to exactly `P` sensors on its own.
    pub fn exact_p(&self) -> bool {
        self.fallback.is_none()
    }
}

struct Tracer {
    points: Option<Vec<TracePoint>>,
}

impl Tracer {
    fn push(&mut self, phase: Phase, mu: f64, iter: usize, objective: f64, support: usize) {
        if let Some(points) = self.points.as_mut() {
            points.push(TracePoint {
                phase,
                mu,
                iter,
                surrogate_objective: objective,
                support_size: support,
            });
        }
    }
}

/// Designs a `P`-sensor array from a covariance estimate.
///
/// `r_x_est` is the (eigen-floored, positive definite) full-grid covariance
/// the selection runs on; `eval_scenario` supplies the exact covariances the
/// returned support is scored against. Prefixed sensors (hybrid designs)
/// are exempt from the sparsity penalty and always end up in the support.
///
/// The estimate is normalized to unit average sensor power internally, so
/// the selected support is invariant to positive rescaling of `r_x_est`.
pub fn sca_design(
    r_x_est: &CMatrix,
    doa_deg: f64,
    p: usize,
    config: &ScaConfig,
    prefixed: &[usize],
    grid: &ArrayGrid,
    eval_scenario: &Scenario,
) -> Result<DesignResult> {
    config.validate()?;
    let n = grid.n_sensors();
    if r_x_est.nrows() != n || r_x_est.ncols() != n {
        return Err(Error::InvalidParameter(format!(
            "covariance is {}x{} for a grid of {n}",
            r_x_est.nrows(),
            r_x_est.ncols()
        )));
    }
    if p == 0 || p > n {
        return Err(Error::InvalidParameter(format!(
            "cannot select {p} sensors from {n}"
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
    if prefixed_sorted.len() > p {
        return Err(Error::InvalidParameter(format!(
            "{} prefixed sensors exceed selection size {p}",
            prefixed_sorted.len()
        )));
    }

    // Normalize by the smallest eigenvalue, i.e. the estimate's noise
    // floor (eigen-floored estimates carry it exactly). The defaults for
    // mu, epsilon and gamma are calibrated on that scale, and the selected
    // support becomes invariant under positive rescaling of the input.
    let eigenvalues = linalg::hermitian_eigenvalues(r_x_est);
    let scale = eigenvalues[0];
    if !(scale > 0.0) {
        return Err(Error::SingularMatrix);
    }
    let r_norm = r_x_est.map(|v| v / scale);

    let s = steering_vector(doa_deg, grid)?;
    let r_s = &s * s.adjoint();
    let r_s_aug = real_augment(&r_s)?;
    let r_bar_s = r_s_aug.matrix().map(|v| -v);
    let r_x_aug = real_augment(&r_norm)?;
    let solver = SubproblemSolver::new(r_x_aug.matrix().clone())?;

    let mut tracer = Tracer {
        points: config.keep_trace.then(Vec::new),
    };
    let mut iterations = 0usize;

    // Unpenalized phase: tangent iteration toward the full-array optimum.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut w = random_unit_start(&mut rng, 2 * n);
    let mut obj_prev = f64::INFINITY;
    for iter in 1..=config.max_inner_iters {
        iterations += 1;
        let (m, b) = linearize(&r_bar_s, &w);
        if m.norm() < 1e-14 {
            // Initialization landed orthogonal to the signal subspace.
            w = random_unit_start(&mut rng, 2 * n);
            continue;
        }
        w = solver.solve(&m, 0.0, &[])?;
        let obj = (&r_bar_s * &w).dot(&w);
        tracer.push(Phase::MuZero, 0.0, iter, m.dot(&w) + b, support_size(&w, config.gamma));
        if (obj - obj_prev).abs() <= config.inner_tol * obj_prev.abs().max(1.0) {
            break;
        }
        obj_prev = obj;
    }

    // Already P-sparse without any penalty (e.g. P = N).
    let warm_support = extract_support(&w, config.gamma)?;
    if warm_support.len() == p {
        return finish(
            r_x_est,
            &s,
            warm_support,
            0.0,
            iterations,
            tracer,
            None,
            eval_scenario,
            grid,
        );
    }

    // Binary search over mu for a support of exactly P sensors. Every
    // trial restarts the reweighted loop from the unpenalized optimum, so
    // each mu is judged on its own rather than through the previous
    // trial's half-pruned iterate.
    let w_full = w.clone();
    let mut lo = config.mu_lo;
    let mut hi = config.mu_hi;
    let mut exact: Option<(f64, Vec<usize>)> = None;
    let mut best_le: Option<(f64, Vec<usize>)> = None; // smallest mu with |S| <= P
    let mut best_gt: Option<(f64, RVector)> = None; // largest mu with |S| > P
    for _ in 0..config.max_mu_steps {
        if hi <= 1.01 * lo {
            break; // support sizes move in steps; a 1% bracket is exhausted
        }
        let mu = (0.5 * (lo.ln() + hi.ln())).exp();
        let (w_mu, support, iters) = reweighted_loop(
            &solver,
            &r_bar_s,
            &w_full,
            mu,
            config,
            &prefixed_sorted,
            &mut tracer,
        )?;
        iterations += iters;
        match support.len().cmp(&p) {
            std::cmp::Ordering::Equal => {
                exact = Some((mu, support));
                break;
            }
            std::cmp::Ordering::Greater => {
                lo = mu;
                if best_gt.as_ref().is_none_or(|(m, _)| mu > *m) {
                    best_gt = Some((mu, w_mu));
                }
            }
            std::cmp::Ordering::Less => {
                hi = mu;
                if best_le.as_ref().is_none_or(|(m, _)| mu < *m) {
                    best_le = Some((mu, support));
                }
            }
        }
    }

    // Terminal candidates, scored by the estimate's implied array gain
    // (the only SINR proxy available at design time).
    let mut candidates: Vec<(f64, Vec<usize>, Option<Fallback>)> = Vec::new();
    if let Some((mu, support)) = exact {
        candidates.push((mu, support, None));
    }
    if let Some((mu, base)) = best_le {
        let added = p - base.len();
        let support = greedy_fill(&r_norm, &s, base, p)?;
        candidates.push((mu, support, Some(Fallback::GreedyFill { added })));
    }
    if candidates.is_empty() {
        if let Some((mu, w_gt)) = best_gt {
            // Even the sparsest attempt kept more than P groups: keep the P
            // strongest (prefixed groups outrank the rest by construction).
            let support = top_norm_support(&w_gt, p, &prefixed_sorted);
            let removed = support_size(&w_gt, config.gamma).saturating_sub(p);
            candidates.push((mu, support, Some(Fallback::TruncatedTopNorm { removed })));
        } else {
            // max_mu_steps = 0 never enters the loop; fill greedily from
            // the prefixed set alone.
            let support = greedy_fill(&r_norm, &s, prefixed_sorted.clone(), p)?;
            candidates.push((0.0, support, Some(Fallback::GreedyFill { added: p })));
        }
    }
    let mut best_candidate: Option<(f64, (f64, Vec<usize>, Option<Fallback>))> = None;
    for cand in candidates {
        let gain = estimated_gain(&r_norm, &s, &cand.1)?;
        if best_candidate.as_ref().is_none_or(|(g, _)| gain > *g) {
            best_candidate = Some((gain, cand));
        }
    }
    let (mu_final, support, fallback) = best_candidate.expect("at least one candidate").1;

    finish(
        r_x_est,
        &s,
        support,
        mu_final,
        iterations,
        tracer,
        fallback,
        eval_scenario,
        grid,
    )
}

fn random_unit_start(rng: &mut ChaCha8Rng, dim: usize) -> RVector {
    RVector::from_fn(dim, |_, _| StandardNormal.sample(rng))
}

/// Dead-solution floor on the unit-quadratic-form scale: any live iterate
/// has a largest group norm of at least `1/sqrt(N lambda_max)`, orders of
/// magnitude above this, while a fully penalized iterate decays to solver
/// noise. Treating the dead case as an empty support keeps the binary
/// search pointed the right way (it is maximally sparse, not full).
const DEAD_NORM_FLOOR: f64 = 1e-6;

fn effective_support(w: &RVector, gamma: f64) -> Vec<usize> {
    let n = w.len() / 2;
    let max = (0..n).fold(0.0f64, |acc, k| acc.max(group_norm(w, k)));
    if max < DEAD_NORM_FLOOR {
        return Vec::new();
    }
    extract_support(w, gamma).unwrap_or_default()
}

fn support_size(w: &RVector, gamma: f64) -> usize {
    effective_support(w, gamma).len()
}

/// Reweighted fixed-mu loop; returns the converged iterate, its support,
/// and the iteration count.
fn reweighted_loop(
    solver: &SubproblemSolver,
    r_bar_s: &RMatrix,
    w_start: &RVector,
    mu: f64,
    config: &ScaConfig,
    prefixed: &[usize],
    tracer: &mut Tracer,
) -> Result<(RVector, Vec<usize>, usize)> {
    let n = solver.n_sensors();
    let mut h = PenaltyWeights::ones_with_prefixed(n, prefixed)?;
    let mut w = w_start.clone();
    let (mut m, mut b) = linearize(r_bar_s, &w);
    let mut prev_obj = f64::INFINITY;
    let mut prev_support: Vec<usize> = Vec::new();
    let mut stable = 0usize;
    let mut iters = 0usize;
    for iter in 1..=config.max_inner_iters {
        iters = iter;
        w = solver.solve(&m, mu, h.values())?;
        let surrogate = penalized_objective(&m, &w, mu, h.values()) + b;
        let support = effective_support(&w, config.gamma);
        tracer.push(Phase::Reweight, mu, iter, surrogate, support.len());

        let obj_settled =
            (surrogate - prev_obj).abs() <= config.inner_tol * prev_obj.abs().max(1.0);
        stable = if support == prev_support { stable + 1 } else { 0 };
        prev_obj = surrogate;
        prev_support = support;
        // The support is the quantity the binary search consumes; once it
        // locks in there is no point polishing the weights further.
        if (obj_settled && stable >= 1) || stable >= 3 {
            break;
        }
        h = reweight(&w, config.epsilon, prefixed)?;
        let lin = linearize(r_bar_s, &w);
        m = lin.0;
        b = lin.1;
    }
    Ok((w, prev_support, iters))
}

/// Estimated array gain `s_S^H R_S^-1 s_S` of a support (monotone in the
/// estimate's implied SINR).
fn estimated_gain(r: &CMatrix, s: &CVector, support: &[usize]) -> Result<f64> {
    let r_sub = linalg::restrict(r, support);
    let s_sub = linalg::restrict_vector(s, support);
    let chol = linalg::cholesky(&r_sub)?;
    Ok(s_sub.dotc(&chol.solve(&s_sub)).re)
}

/// Greedily grows `base` to `p` sensors, adding the candidate with the best
/// estimated gain (ties resolved toward the lowest index).
fn greedy_fill(r: &CMatrix, s: &CVector, mut base: Vec<usize>, p: usize) -> Result<Vec<usize>> {
    let n = r.nrows();
    base.sort_unstable();
    while base.len() < p {
        let mut best: Option<(f64, usize)> = None;
        for cand in 0..n {
            if base.binary_search(&cand).is_ok() {
                continue;
            }
            let mut trial = base.clone();
            trial.push(cand);
            trial.sort_unstable();
            let gain = estimated_gain(r, s, &trial)?;
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, cand));
            }
        }
        let (_, chosen) = best.expect("grid has at least one free sensor");
        base.push(chosen);
        base.sort_unstable();
    }
    Ok(base)
}

/// The `p` sensors with the largest group norms; prefixed sensors are kept
/// unconditionally.
fn top_norm_support(w: &RVector, p: usize, prefixed: &[usize]) -> Vec<usize> {
    let n = w.len() / 2;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let pa = prefixed.contains(&a);
        let pb = prefixed.contains(&b);
        pb.cmp(&pa)
            .then(group_norm(w, b).total_cmp(&group_norm(w, a)))
            .then(a.cmp(&b))
    });
    let mut support: Vec<usize> = order.into_iter().take(p).collect();
    support.sort_unstable();
    support
}

#[allow(clippy::too_many_arguments)]
fn finish(
    r_x_est: &CMatrix,
    s: &CVector,
    support: Vec<usize>,
    mu_final: f64,
    iterations: usize,
    tracer: Tracer,
    fallback: Option<Fallback>,
    eval_scenario: &Scenario,
    grid: &ArrayGrid,
) -> Result<DesignResult> {
    // Closed-form weights on the support: w = R_S^-1 s_S, scaled to unit
    // quadratic form against the design-time estimate.
    let r_sub = linalg::restrict(r_x_est, &support);
    let s_sub = linalg::restrict_vector(s, &support);
    let chol = linalg::cholesky(&r_sub)?;
    let mut weights = chol.solve(&s_sub);
    let qf = weights.dotc(&(&r_sub * &weights)).re;
    if qf > 0.0 {
        weights /= Complex64::new(qf.sqrt(), 0.0);
    }

    let sinr_db = oracle::support_sinr_db(eval_scenario, grid, &support)?;
    Ok(DesignResult {
        support,
        weights,
        sinr_db,
        mu_final,
        iterations,
        trace: tracer.points,
        fallback,
    })
}

#[cfg(test)]
mod tests;
