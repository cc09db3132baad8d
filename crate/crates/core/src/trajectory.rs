//! Sampling histories and their running sufficient statistics.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen_extremes;

/// A covariate vector with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariate(Vec<f64>);

impl Covariate {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("covariate must have dimension >= 1".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite covariate entry {v}")));
        }
        Ok(Self(values))
    }

    /// The `i`-th standard basis vector of dimension `dim`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Self(v)
    }

    pub fn scalar(x: f64) -> Result<Self> {
        Self::new(vec![x])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    /// Index of the single unit entry if this is a basis vector.
    pub fn basis_index(&self) -> Option<usize> {
        let mut found = None;
        for (i, &v) in self.0.iter().enumerate() {
            if v == 1.0 && found.is_none() {
                found = Some(i);
            } else if v != 0.0 {
                return None;
            }
        }
        found
    }
}

/// Ordered `(covariate, outcome)` history of fixed covariate dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    steps: Vec<(Covariate, f64)>,
}

impl Trajectory {
    pub fn new(dim: usize) -> Self {
        Self { dim, steps: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[(Covariate, f64)] {
        &self.steps
    }

    pub fn last_outcome(&self) -> Option<f64> {
        self.steps.last().map(|(_, y)| *y)
    }

    /// Append a step without touching any accumulator.
    pub fn push(&mut self, x: Covariate, y: f64) -> Result<()> {
        check_step(self.dim, &x, y)?;
        self.steps.push((x, y));
        Ok(())
    }
}

fn check_step(dim: usize, x: &Covariate, y: f64) -> Result<()> {
    if x.dim() != dim {
        return Err(Error::Dimension {
            expected: dim,
            got: x.dim(),
        });
    }
    if !y.is_finite() {
        return Err(Error::Domain(format!("non-finite outcome {y}")));
    }
    Ok(())
}

/// Running `XᵀX`, `Xᵀy` and step count.
#[derive(Debug, Clone, PartialEq)]
pub struct GramAccumulator {
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    count: u64,
}

impl GramAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            gram: DMatrix::zeros(dim, dim),
            xty: DVector::zeros(dim),
            count: 0,
        }
    }

    /// Build directly from sufficient statistics.
    pub fn from_parts(gram: DMatrix<f64>, xty: DVector<f64>, count: u64) -> Result<Self> {
        if !gram.is_square() || gram.nrows() != xty.len() {
            return Err(Error::Dimension {
                expected: gram.nrows(),
                got: xty.len(),
            });
        }
        Ok(Self { gram, xty, count })
    }

    pub fn dim(&self) -> usize {
        self.xty.len()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn xty(&self) -> &DVector<f64> {
        &self.xty
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Rank-one update with `(x, y)`.
    pub fn update(&mut self, x: &Covariate, y: f64) -> Result<()> {
        check_step(self.dim(), x, y)?;
        let v = x.values();
        let p = v.len();
        for i in 0..p {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            for j in 0..p {
                self.gram[(i, j)] += vi * v[j];
            }
            self.xty[i] += vi * y;
        }
        self.count += 1;
        Ok(())
    }

    /// Smallest and largest eigenvalues of the Gram matrix.
    pub fn eigen_extremes(&self) -> Result<(f64, f64)> {
        if self.count == 0 {
            return Err(Error::Empty);
        }
        Ok(symmetric_eigen_extremes(&self.gram))
    }
}

/// Record one sampling round in both the trajectory and its accumulator.
pub fn append_step(
    traj: &mut Trajectory,
    acc: &mut GramAccumulator,
    x: Covariate,
    y: f64,
) -> Result<()> {
    if acc.dim() != traj.dim() {
        return Err(Error::Dimension {
            expected: traj.dim(),
            got: acc.dim(),
        });
    }
    check_step(traj.dim(), &x, y)?;
    acc.update(&x, y)?;
    traj.steps.push((x, y));
    Ok(())
}
