//! Noisy certainty-equivalent control for LQR.
//!
//! At step `n` the controller plays `K̂ x + w` where `K̂` is the LQR gain of
//! the current dynamics estimate and `w ~ N(0, τ² n^{β−1} ln^α(n+1) I_d)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::RandomSource;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcecConfig {
    pub tau2: f64,
    /// Exploration decay exponent, in `[1/2, 1)`.
    pub beta_exp: f64,
    /// Logarithmic exponent, positive.
    pub alpha_exp: f64,
    /// Steps of pure-noise excitation before the first gain is computed.
    pub warmup: u64,
    pub riccati_tol: f64,
    pub riccati_max_iter: usize,
}

impl Default for NcecConfig {
    fn default() -> Self {
        Self {
            tau2: 1.0,
            beta_exp: 0.5,
            alpha_exp: 1.0,
            warmup: 10,
            riccati_tol: 1e-9,
            riccati_max_iter: 10_000,
        }
    }
}

impl NcecConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.tau2 > 0.0) || !self.tau2.is_finite() {
            errs.push(format!("ncec tau2 must be positive, got {}", self.tau2));
        }
        if !(0.5..1.0).contains(&self.beta_exp) {
            errs.push(format!("ncec beta_exp must lie in [0.5, 1), got {}", self.beta_exp));
        }
        if !(self.alpha_exp > 0.0) || !self.alpha_exp.is_finite() {
            errs.push(format!("ncec alpha_exp must be positive, got {}", self.alpha_exp));
        }
        if !(self.riccati_tol > 0.0) || self.riccati_max_iter == 0 {
            errs.push("riccati tolerance and iteration cap must be positive".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

/// Exploration-noise variance at 1-based step `n`.
pub fn exploration_variance(cfg: &NcecConfig, n: u64) -> f64 {
    let n = n.max(1) as f64;
    cfg.tau2 * n.powf(cfg.beta_exp - 1.0) * (n + 1.0).ln().powf(cfg.alpha_exp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    /// `K = −(R + BᵀPB)⁻¹BᵀPA`, shape `d×k`.
    pub gain: DMatrix<f64>,
    pub p: DMatrix<f64>,
    /// Equivalent number of fixed-point iterations `P ← Q + AᵀPA − AᵀPB(R + BᵀPB)⁻¹BᵀPA`.
    pub iterations: usize,
}

/// Stabilizing solution of the discrete algebraic Riccati equation with
/// identity state and action costs.
///
/// Runs the doubling form of the fixed-point iteration started from `P = 0`:
/// after `j` doublings `H_j` equals the `2^j`-th fixed-point iterate, so a cap
/// of `max_iter` fixed-point steps becomes `⌈log₂ max_iter⌉` doublings.
/// Convergence is declared when successive iterates differ by at most
/// `tol · max(1, ‖P‖_max)`; divergence or the cap gives a domain error.
pub fn riccati_gain(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<RiccatiSolution> {
    let (k, d) = (a.nrows(), b.ncols());
    if !a.is_square() || b.nrows() != k {
        return Err(Error::Dimension {
            expected: k,
            got: b.nrows(),
        });
    }
    let eye = DMatrix::<f64>::identity(k, k);
    let max_doublings = (max_iter.max(1) as f64).log2().ceil() as usize;
    let mut ak = a.clone();
    let mut g = b * b.transpose();
    let mut h = eye.clone();
    for j in 1..=max_doublings {
        let w = (&eye + &g * &h).lu();
        let (Some(wa), Some(wg)) = (w.solve(&ak), w.solve(&(&g * ak.transpose()))) else {
            return Err(Error::Domain("Riccati doubling step is singular".into()));
        };
        let h_next = &h + ak.transpose() * &h * &wa;
        let h_next = (&h_next + h_next.transpose()) * 0.5;
        g = &g + &ak * wg;
        g = (&g + g.transpose()) * 0.5;
        ak = &ak * wa;
        let scale = h_next.amax();
        if !scale.is_finite() || scale > 1e15 {
            return Err(Error::Domain(format!("Riccati iteration diverged after {} steps", 1usize << j)));
        }
        let delta = (&h_next - &h).amax();
        h = h_next;
        if delta <= tol * scale.max(1.0) {
            let s = DMatrix::<f64>::identity(d, d) + b.transpose() * &h * b;
            let chol = s
                .cholesky()
                .ok_or_else(|| Error::Domain("Riccati inner matrix lost definiteness".into()))?;
            let gain = -chol.solve(&(b.transpose() * &h * a));
            return Ok(RiccatiSolution {
                gain,
                p: h,
                iterations: 1 << j,
            });
        }
    }
    Err(Error::Domain(format!("Riccati iteration did not converge in {max_iter} steps")))
}

/// Stepwise NCEC controller.
#[derive(Debug, Clone)]
pub struct Ncec {
    cfg: NcecConfig,
    action_dim: usize,
    gain: Option<DMatrix<f64>>,
    riccati_failures: u64,
}

impl Ncec {
    pub fn new(cfg: NcecConfig, action_dim: usize) -> Result<Self> {
        cfg.validate()?;
        if action_dim == 0 {
            return Err(Error::Config("action dimension must be at least 1".into()));
        }
        Ok(Self {
            cfg,
            action_dim,
            gain: None,
            riccati_failures: 0,
        })
    }

    pub fn config(&self) -> &NcecConfig {
        &self.cfg
    }

    pub fn gain(&self) -> Option<&DMatrix<f64>> {
        self.gain.as_ref()
    }

    /// Number of steps where the Riccati iteration failed and the previous
    /// gain was reused.
    pub fn riccati_failures(&self) -> u64 {
        self.riccati_failures
    }

    /// Action at 1-based `step` given the current `(Â, B̂)` estimate, if any.
    pub fn select(
        &mut self,
        estimate: Option<(&DMatrix<f64>, &DMatrix<f64>)>,
        state: &DVector<f64>,
        step: u64,
        rng: &mut RandomSource,
    ) -> DVector<f64> {
        let sd = exploration_variance(&self.cfg, step).sqrt();
        let noise = DVector::from_fn(self.action_dim, |_, _| sd * rng.standard_normal());
        if step <= self.cfg.warmup {
            return noise;
        }
        if let Some((a, b)) = estimate {
            match riccati_gain(a, b, self.cfg.riccati_tol, self.cfg.riccati_max_iter) {
                Ok(sol) => self.gain = Some(sol.gain),
                Err(_) => self.riccati_failures += 1,
            }
        }
        match &self.gain {
            Some(k) if k.ncols() == state.len() => k * state + noise,
            _ => noise,
        }
    }
}

/// Ridge least-squares estimate of `(A, B)` from observed transitions, plus
/// the Gram matrix `G_n` of stacked `(state, action)` vectors.
#[derive(Debug, Clone)]
pub struct DynamicsEstimator {
    state_dim: usize,
    gram: DMatrix<f64>,
    cross: DMatrix<f64>,
}

impl DynamicsEstimator {
    pub fn new(state_dim: usize, action_dim: usize) -> Self {
        let q = state_dim + action_dim;
        Self {
            state_dim,
            gram: DMatrix::zeros(q, q),
            cross: DMatrix::zeros(q, state_dim),
        }
    }

    pub fn update(&mut self, state: &DVector<f64>, action: &DVector<f64>, next: &DVector<f64>) {
        let z = DVector::from_iterator(
            self.gram.nrows(),
            state.iter().chain(action.iter()).copied(),
        );
        self.gram += &z * z.transpose();
        self.cross += &z * next.transpose();
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn estimate(&self, ridge: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let q = self.gram.nrows();
        let reg = &self.gram + DMatrix::identity(q, q) * ridge;
        let chol = reg.cholesky().ok_or(Error::Singular { lambda_min: 0.0 })?;
        let theta_t = chol.solve(&self.cross).transpose();
        let k = self.state_dim;
        Ok((
            theta_t.columns(0, k).into_owned(),
            theta_t.columns(k, q - k).into_owned(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn open_loop_stable_gives_zero_gain() {
        let a = DMatrix::zeros(2, 2);
        let b = DMatrix::identity(2, 2);
        let sol = riccati_gain(&a, &b, 1e-9, 10_000).unwrap();
        assert!(sol.gain.amax() < 1e-15);
        assert!((sol.p - DMatrix::<f64>::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn scalar_riccati_closed_form() {
        // P = 1 + a²P − a²P²/(1+P) with a = b = 1 gives P² − P − 1 = 0
        let a = DMatrix::from_element(1, 1, 1.0);
        let sol = riccati_gain(&a, &a, 1e-12, 10_000).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((sol.p[(0, 0)] - phi).abs() < 1e-9);
        assert!((sol.gain[(0, 0)] + phi / (1.0 + phi)).abs() < 1e-9);
    }

    #[test]
    fn doubling_matches_plain_fixed_point() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.3, 1.0]);
        let mut p = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..5000 {
            let s = 1.0 + (b.transpose() * &p * &b)[(0, 0)];
            let pb = &p * &b;
            p = DMatrix::identity(2, 2) + a.transpose() * &p * &a
                - a.transpose() * &pb * pb.transpose() * &a / s;
        }
        let sol = riccati_gain(&a, &b, 1e-12, 10_000).unwrap();
        assert!((sol.p - p).amax() < 1e-8);
    }

    #[test]
    fn unstabilizable_diverges() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        assert!(riccati_gain(&a, &b, 1e-9, 10_000).is_err());
    }

    #[test]
    fn closed_loop_is_stable() {
        let a = DMatrix::from_row_slice(2, 2, &[1.1, 0.3, 0.0, 0.5]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let sol = riccati_gain(&a, &b, 1e-9, 10_000).unwrap();
        let closed = &a + &b * &sol.gain;
        let rho = closed
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(rho < 1.0);
    }

    #[test]
    fn warmup_noise_variance() {
        let cfg = NcecConfig::default();
        let mut c = Ncec::new(cfg, 1).unwrap();
        let mut rng = RandomSource::new(4, 0);
        let state = DVector::from_vec(vec![3.0, -1.0]);
        let n = 10_000;
        let step = 5;
        let xs: Vec<f64> = (0..n).map(|_| c.select(None, &state, step, &mut rng)[0]).collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let target = exploration_variance(&cfg, step);
        // variance of a sample second moment is 2σ⁴/n
        assert!((var - target).abs() < 4.0 * target * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn noiseless_certainty_equivalence() {
        let cfg = NcecConfig {
            tau2: 1e-300,
            warmup: 0,
            ..NcecConfig::default()
        };
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.3]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 0.5]);
        let mut c = Ncec::new(cfg, 1).unwrap();
        let state = DVector::from_vec(vec![1.0, 2.0]);
        let u = c.select(Some((&a, &b)), &state, 100, &mut RandomSource::new(1, 1));
        let k = riccati_gain(&a, &b, 1e-9, 10_000).unwrap().gain;
        assert!((u - k * state).amax() < 1e-12);
    }

    #[test]
    fn zero_gain_gives_pure_noise() {
        let cfg = NcecConfig {
            warmup: 0,
            ..NcecConfig::default()
        };
        let a = DMatrix::zeros(2, 2);
        let b = DMatrix::identity(2, 2);
        let mut c = Ncec::new(cfg, 2).unwrap();
        let state = DVector::from_vec(vec![5.0, -5.0]);
        let mut r1 = RandomSource::new(9, 0);
        let mut r2 = RandomSource::new(9, 0);
        let u = c.select(Some((&a, &b)), &state, 50, &mut r1);
        let sd = exploration_variance(&cfg, 50).sqrt();
        let w = DVector::from_fn(2, |_, _| sd * r2.standard_normal());
        assert!((u - w).amax() < 1e-12);
    }

    #[test]
    fn riccati_failure_falls_back() {
        let cfg = NcecConfig {
            warmup: 0,
            tau2: 1e-300,
            ..NcecConfig::default()
        };
        let mut c = Ncec::new(cfg, 1).unwrap();
        let good_a = DMatrix::from_row_slice(2, 2, &[0.9, 0.0, 0.0, 0.5]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let state = DVector::from_vec(vec![1.0, 1.0]);
        let mut rng = RandomSource::new(0, 0);
        let u1 = c.select(Some((&good_a, &b)), &state, 1, &mut rng);
        let bad_a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let u2 = c.select(Some((&bad_a, &b)), &state, 2, &mut rng);
        assert_eq!(c.riccati_failures(), 1);
        assert!((u1 - u2).amax() < 1e-12);
    }

    #[test]
    fn invalid_hyperparameters() {
        for cfg in [
            NcecConfig { tau2: 0.0, ..NcecConfig::default() },
            NcecConfig { beta_exp: 1.0, ..NcecConfig::default() },
            NcecConfig { beta_exp: 0.4, ..NcecConfig::default() },
            NcecConfig { alpha_exp: 0.0, ..NcecConfig::default() },
        ] {
            assert!(Ncec::new(cfg, 1).is_err());
        }
    }

    #[test]
    fn estimator_recovers_dynamics() {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.3]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 0.5]);
        let mut est = DynamicsEstimator::new(2, 1);
        let mut rng = RandomSource::new(5, 0);
        let mut x = DVector::zeros(2);
        for _ in 0..20_000 {
            let u = DVector::from_vec(vec![rng.standard_normal()]);
            let next = &a * &x + &b * &u + DVector::from_fn(2, |_, _| 0.1 * rng.standard_normal());
            est.update(&x, &u, &next);
            x = next;
        }
        let (ah, bh) = est.estimate(1e-6).unwrap();
        assert!((ah - a).amax() < 0.01);
        assert!((bh - b).amax() < 0.01);
    }
}
