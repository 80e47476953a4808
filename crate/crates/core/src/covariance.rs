//! Covariance estimation from masked snapshots.
//!
//! Only the active sensors observe data, so the sample covariance is zero
//! outside the active block and carries a mask telling downstream solvers
//! which entries are real measurements. The mask always derives from sensor
//! activity, never from testing entry values: a true correlation that
//! happens to be numerically tiny still counts as observed.

use num_complex::Complex64;
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::signal::{ArrayGrid, SnapshotBlock};

/// Sample covariance restricted to active sensors, zero-filled elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    matrix: CMatrix,
    activity: Vec<bool>,
    snapshots_used: usize,
}

impl CovarianceEstimate {
    /// Validates Hermitian symmetry and that masked-out entries are exactly
    /// zero. The observation mask `Z` is the outer product of `activity`
    /// with itself.
    pub fn new(matrix: CMatrix, activity: Vec<bool>, snapshots_used: usize) -> Result<Self> {
        let n = activity.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::InvalidParameter(format!(
                "matrix is {}x{} but the activity vector has {n} entries",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        linalg::require_hermitian(&matrix, 1e-12 * matrix.norm().max(1.0))?;
        for p in 0..n {
            for q in 0..n {
                if !(activity[p] && activity[q]) && matrix[(p, q)] != Complex64::ZERO {
                    return Err(Error::InvalidParameter(format!(
                        "unobserved entry ({p},{q}) is nonzero"
                    )));
                }
            }
        }
        Ok(Self {
            matrix,
            activity,
            snapshots_used,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn activity(&self) -> &[bool] {
        &self.activity
    }

    pub fn snapshots_used(&self) -> usize {
        self.snapshots_used
    }

    pub fn n(&self) -> usize {
        self.activity.len()
    }

    /// Whether entry `(p, q)` is observed.
    pub fn observed(&self, p: usize, q: usize) -> bool {
        self.activity[p] && self.activity[q]
    }

    /// Dense 0/1 mask matrix `Z`.
    pub fn mask_matrix(&self) -> nalgebra::DMatrix<f64> {
        let n = self.n();
        nalgebra::DMatrix::from_fn(
            n,
            n,
            |p, q| if self.observed(p, q) { 1.0 } else { 0.0 },
        )
    }

    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.activity[i]).collect()
    }
}

/// Achieved correlation lags of an active sensor set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoarrayProfile {
    pub lags: BTreeSet<usize>,
    pub fully_augmentable: bool,
}

/// Pairwise-difference lags of the active sensors; fully augmentable when
/// every lag `0..N-1` is covered.
pub fn coarray_profile(grid: &ArrayGrid) -> CoarrayProfile {
    let active = grid.active_indices();
    let mut lags = BTreeSet::new();
    for (i, &p) in active.iter().enumerate() {
        for &q in &active[i..] {
            lags.insert(q - p);
        }
    }
    let fully_augmentable = (0..grid.n_sensors()).all(|lag| lags.contains(&lag));
    CoarrayProfile {
        lags,
        fully_augmentable,
    }
}

/// Sample covariance over the grid's active sensors, zero-filled to N x N.
pub fn masked_sample_covariance(
    block: &SnapshotBlock,
    grid: &ArrayGrid,
) -> Result<CovarianceEstimate> {
    if block.n_sensors() != grid.n_sensors() {
        return Err(Error::InvalidParameter(format!(
            "block has {} sensor rows, grid has {}",
            block.n_sensors(),
            grid.n_sensors()
        )));
    }
    let active = grid.active_indices();
    if active.is_empty() {
        return Err(Error::NoActiveSensors);
    }
    let t = block.n_snapshots();
    let x_active = block.data().select_rows(active.iter());
    let mut gram = &x_active * x_active.adjoint();
    gram.apply(|v| *v /= t as f64);
    linalg::hermitianize(&mut gram);

    let n = grid.n_sensors();
    let mut full = CMatrix::zeros(n, n);
    for (r, &p) in active.iter().enumerate() {
        for (c, &q) in active.iter().enumerate() {
            full[(p, q)] = gram[(r, c)];
        }
    }
    CovarianceEstimate::new(full, grid.active().to_vec(), t)
}

/// Hermitian Toeplitz estimate by averaging each observed sub-diagonal.
///
/// Requires a fully augmentable source array: errors with the first missing
/// lag otherwise. The average is Toeplitz by construction but not
/// necessarily positive semidefinite.
pub fn toeplitz_average(est: &CovarianceEstimate) -> Result<CMatrix> {
    let n = est.n();
    let mut gen = vec![Complex64::ZERO; n];
    for lag in 0..n {
        let mut acc = Complex64::ZERO;
        let mut count = 0usize;
        for p in 0..n - lag {
            if est.observed(p, p + lag) {
                acc += est.matrix()[(p, p + lag)];
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::MissingLag(lag));
        }
        gen[lag] = acc / count as f64;
    }
    gen[0] = Complex64::new(gen[0].re, 0.0);
    Ok(CMatrix::from_fn(n, n, |p, q| {
        if q >= p {
            gen[q - p]
        } else {
            gen[p - q].conj()
        }
    }))
}

/// Raises every eigenvalue below `noise_floor` to the floor, keeping the
/// eigenvectors. The result is positive definite with `lambda_min >= floor`.
pub fn eigen_floor(matrix: &CMatrix, noise_floor: f64) -> Result<CMatrix> {
    if !(noise_floor > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise floor must be positive, got {noise_floor}"
        )));
    }
    linalg::require_hermitian(matrix, 1e-9 * matrix.norm().max(1.0))?;
    let (mut vals, vecs) = linalg::hermitian_eigen(matrix);
    if vals[0] >= noise_floor {
        return Ok(matrix.clone());
    }
    for v in vals.iter_mut() {
        if *v < noise_floor {
            *v = noise_floor;
        }
    }
    Ok(linalg::assemble_hermitian(&vals, &vecs))
}
