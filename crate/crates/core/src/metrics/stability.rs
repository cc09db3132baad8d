use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen_extremes;
use crate::trajectory::{GramAccumulator, Trajectory};

/// Eigenvalue summary of a Gram (or block information) matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityDiagnostics {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `ln(lambda_max) / lambda_min`; infinite while the matrix is singular.
    pub ratio_stat: f64,
}

impl StabilityDiagnostics {
    pub fn from_matrix(matrix: &DMatrix<f64>) -> Self {
        let (lo, hi) = symmetric_eigen_extremes(matrix);
        Self::from_extremes(lo, hi)
    }

    pub fn from_extremes(lambda_min: f64, lambda_max: f64) -> Self {
        let ratio_stat = if lambda_min > 0.0 {
            lambda_max.ln() / lambda_min
        } else {
            f64::INFINITY
        };
        Self {
            lambda_min,
            lambda_max,
            ratio_stat,
        }
    }
}

/// Diagnostics of the trajectory's Gram matrix after each of `checkpoints`
/// (step counts, increasing).
pub fn stability_report(traj: &Trajectory, checkpoints: &[usize]) -> Result<Vec<StabilityDiagnostics>> {
    check_checkpoints(checkpoints, traj.len())?;
    let mut acc = GramAccumulator::new(traj.dim());
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut done = 0;
    for &n in checkpoints {
        for (x, y) in &traj.steps()[done..n] {
            acc.update(x, *y)?;
        }
        done = n;
        out.push(StabilityDiagnostics::from_matrix(acc.gram()));
    }
    Ok(out)
}

/// Diagnostics for each diagonal block of size `block` of `gram`, such as the
/// per-arm information `I_{n,i}` of a contextual bandit.
pub fn block_stability(gram: &DMatrix<f64>, block: usize) -> Result<Vec<StabilityDiagnostics>> {
    if block == 0 || !gram.nrows().is_multiple_of(block) || !gram.is_square() {
        return Err(Error::Dimension {
            expected: block,
            got: gram.nrows(),
        });
    }
    Ok((0..gram.nrows() / block)
        .map(|i| {
            let sub = gram.view((i * block, i * block), (block, block)).into_owned();
            StabilityDiagnostics::from_matrix(&sub)
        })
        .collect())
}

pub(crate) fn check_checkpoints(checkpoints: &[usize], len: usize) -> Result<()> {
    if checkpoints.is_empty() {
        return Err(Error::Config("at least one checkpoint is required".into()));
    }
    if checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("checkpoints must be positive and strictly increasing".into()));
    }
    if let Some(&last) = checkpoints.last() {
        if last > len {
            return Err(Error::Config(format!("checkpoint {last} exceeds trajectory length {len}")));
        }
    }
    Ok(())
}
