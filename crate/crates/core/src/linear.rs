//! LMS and RLS online filters with optional contraction scaling.

use nalgebra::{DMatrix, DVector};

use crate::contraction::{applied_factor, FactorPolicy};
use crate::error::{Error, Result};
use crate::learner::{OnlineLearner, StepOutcome};
use crate::numeric::{check_dim, dot, linf_norm, matrix_l1_norm, LabeledSample, WeightState};

/// Widrow-Hoff filter: `w ← w + f·μ·e·x` where `f = 1` without a policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Lms {
    weights: WeightState,
    mu: f64,
    policy: Option<FactorPolicy>,
    steps_taken: usize,
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::invalid(format!("step size must be positive, got {mu}")));
    }
    Ok(())
}

impl Lms {
    pub fn new(dim: usize, mu: f64, policy: Option<FactorPolicy>) -> Result<Self> {
        Self::from_state(WeightState::zeros(dim), mu, policy, 0)
    }

    /// Resumes from explicit weights; `steps_taken > 0` means the next update
    /// is not treated as the first one.
    pub fn from_state(
        weights: WeightState,
        mu: f64,
        policy: Option<FactorPolicy>,
        steps_taken: usize,
    ) -> Result<Self> {
        check_mu(mu)?;
        if weights.is_empty() {
            return Err(Error::invalid("LMS needs at least one weight"));
        }
        Ok(Self {
            weights,
            mu,
            policy,
            steps_taken,
        })
    }

    pub fn weights(&self) -> &WeightState {
        &self.weights
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }
}

impl OnlineLearner for Lms {
    fn step(&mut self, s: &LabeledSample) -> Result<StepOutcome> {
        check_dim(self.weights.len(), s.dim(), "LMS input")?;
        let prediction = dot(self.weights.as_slice(), &s.x);
        let error = s.t - prediction;
        let factor = applied_factor(
            self.policy.as_ref(),
            self.steps_taken == 0,
            self.weights.l1(),
            linf_norm(&s.x)?,
        )?;
        self.weights.add_scaled(factor * self.mu * error, &s.x)?;
        self.steps_taken += 1;
        Ok(StepOutcome {
            prediction,
            error,
            factor,
        })
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.weights.len(), x.len(), "LMS input")?;
        Ok(dot(self.weights.as_slice(), x))
    }

    fn weight_l1(&self) -> f64 {
        self.weights.l1()
    }

    fn linear_weights(&self) -> Option<&[f64]> {
        Some(self.weights.as_slice())
    }
}

/// Exponentially weighted recursive least squares.
///
/// ```text
/// k = P x / (λ + xᵀ P x)
/// w ← w + f_w · k · e
/// P ← (P − f_P · k xᵀ P) / λ
/// ```
///
/// With a policy, `f_w` is built from ‖w‖₁ and `f_P` from the entrywise
/// ‖P‖₁, both normalized by ‖x‖∞ and both taken before the update.
#[derive(Debug, Clone, PartialEq)]
pub struct Rls {
    weights: WeightState,
    p: DMatrix<f64>,
    lambda: f64,
    policy: Option<FactorPolicy>,
    steps_taken: usize,
}

/// Per-step diagnostics of an RLS update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlsFactors {
    pub weight: f64,
    pub inverse_correlation: f64,
}

impl Rls {
    /// Starts from `w = 0` and `P = I / delta`.
    pub fn new(dim: usize, lambda: f64, delta: f64, policy: Option<FactorPolicy>) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::invalid(format!("delta must be positive, got {delta}")));
        }
        Self::from_state(
            WeightState::zeros(dim),
            DMatrix::identity(dim, dim) / delta,
            lambda,
            policy,
            0,
        )
    }

    pub fn from_state(
        weights: WeightState,
        p: DMatrix<f64>,
        lambda: f64,
        policy: Option<FactorPolicy>,
        steps_taken: usize,
    ) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::invalid(format!(
                "forgetting factor must lie in (0, 1], got {lambda}"
            )));
        }
        let d = weights.len();
        if d == 0 || p.nrows() != d || p.ncols() != d {
            return Err(Error::invalid(format!(
                "P must be {d}x{d}, got {}x{}",
                p.nrows(),
                p.ncols()
            )));
        }
        matrix_l1_norm(&p)?;
        Ok(Self {
            weights,
            p,
            lambda,
            policy,
            steps_taken,
        })
    }

    pub fn weights(&self) -> &WeightState {
        &self.weights
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// One recursion; returns the outcome and both applied factors.
    pub fn step_detailed(&mut self, s: &LabeledSample) -> Result<(StepOutcome, RlsFactors)> {
        let d = self.weights.len();
        check_dim(d, s.dim(), "RLS input")?;
        let x = DVector::from_column_slice(&s.x);
        let prediction = dot(self.weights.as_slice(), &s.x);
        let error = s.t - prediction;

        let px = &self.p * &x;
        let denom = self.lambda + x.dot(&px);
        if !(denom > 0.0) || !denom.is_finite() {
            return Err(Error::NumericalBreakdown(format!(
                "lambda + x'Px = {denom} is not positive"
            )));
        }
        let k = px / denom;

        let first = self.steps_taken == 0;
        let x_inf = linf_norm(&s.x)?;
        let p_l1 = matrix_l1_norm(&self.p)
            .map_err(|_| Error::Divergence("non-finite P".into()))?;
        let fw = applied_factor(self.policy.as_ref(), first, self.weights.l1(), x_inf)?;
        let fp = applied_factor(self.policy.as_ref(), first, p_l1, x_inf)?;

        let xt_p = x.transpose() * &self.p;
        let mut next_p = (&self.p - (&k * xt_p) * fp) / self.lambda;
        // Restore exact symmetry lost to rounding.
        let sym = (&next_p + next_p.transpose()) * 0.5;
        next_p = sym;
        if next_p.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence("non-finite P".into()));
        }

        self.weights.add_scaled(fw * error, k.as_slice())?;
        self.p = next_p;
        self.steps_taken += 1;
        Ok((
            StepOutcome {
                prediction,
                error,
                factor: fw,
            },
            RlsFactors {
                weight: fw,
                inverse_correlation: fp,
            },
        ))
    }
}

impl OnlineLearner for Rls {
    fn step(&mut self, s: &LabeledSample) -> Result<StepOutcome> {
        self.step_detailed(s).map(|(o, _)| o)
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.weights.len(), x.len(), "RLS input")?;
        Ok(dot(self.weights.as_slice(), x))
    }

    fn weight_l1(&self) -> f64 {
        self.weights.l1()
    }

    fn linear_weights(&self) -> Option<&[f64]> {
        Some(self.weights.as_slice())
    }
}
