use crate::error::{Error, Result};
use crate::trajectory::{Covariate, Trajectory};

/// Autoregressive design: `x_1` is fixed, afterwards `x_i = y_{i−1}`.
pub fn lai_wei_select(history: &Trajectory, x1: f64) -> Result<Covariate> {
    if history.dim() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: history.dim(),
        });
    }
    Covariate::scalar(history.last_outcome().unwrap_or(x1))
}
