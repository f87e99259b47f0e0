//! Stochastic subgradient solvers for the LASSO and Dantzig-selector
//! objectives.
//!
//! The reported objectives use the unsquared residual norm:
//!
//! ```text
//! J_lasso   = ‖t − Xw‖₂ + λ‖w‖₁
//! J_dantzig = ‖t − Xw‖∞ + λ‖w‖₁
//! ```
//!
//! The per-sample step descends the squared-residual form,
//! `g = −(t − xᵀw)·x + λ·sign(w)` with `sign(0) = 0`, and applies
//! `w ← w − f·μ·g`.

use crate::contraction::{applied_factor, FactorPolicy};
use crate::error::{Error, Result};
use crate::learner::{OnlineLearner, StepOutcome};
use crate::numeric::{check_dim, dot, linf_norm, sign, LabeledSample, WeightState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SparseObjective {
    Lasso,
    Dantzig,
}

impl SparseObjective {
    pub fn as_str(&self) -> &'static str {
        match self {
            SparseObjective::Lasso => "lasso",
            SparseObjective::Dantzig => "dantzig",
        }
    }
}

fn residuals(w: &[f64], samples: &[LabeledSample]) -> Result<Vec<f64>> {
    samples
        .iter()
        .map(|s| {
            check_dim(w.len(), s.dim(), "objective sample")?;
            Ok(s.t - dot(w, &s.x))
        })
        .collect()
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(())
}

fn l1(w: &[f64]) -> f64 {
    w.iter().map(|v| v.abs()).sum()
}

pub fn lasso_objective(w: &[f64], samples: &[LabeledSample], lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let r = residuals(w, samples)?;
    Ok(r.iter().map(|v| v * v).sum::<f64>().sqrt() + lambda * l1(w))
}

pub fn dantzig_objective(w: &[f64], samples: &[LabeledSample], lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let r = residuals(w, samples)?;
    Ok(r.iter().fold(0.0_f64, |m, v| m.max(v.abs())) + lambda * l1(w))
}

fn penalized(residual: f64, x: &[f64], w: &[f64], lambda: f64) -> Vec<f64> {
    x.iter()
        .zip(w)
        .map(|(xi, wi)| -residual * xi + lambda * sign(*wi))
        .collect()
}

/// Descent-oriented stochastic subgradient on one sample.
pub fn lasso_subgradient(w: &[f64], s: &LabeledSample, lambda: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    check_dim(w.len(), s.dim(), "subgradient sample")?;
    Ok(penalized(s.t - dot(w, &s.x), &s.x, w, lambda))
}

/// Subgradient through the batch sample with the largest absolute residual
/// (lowest index on ties); returns that index too.
pub fn dantzig_subgradient(
    w: &[f64],
    batch: &[LabeledSample],
    lambda: f64,
) -> Result<(Vec<f64>, usize)> {
    check_lambda(lambda)?;
    if batch.is_empty() {
        return Err(Error::invalid("Dantzig subgradient needs a nonempty batch"));
    }
    let r = residuals(w, batch)?;
    let mut best = 0;
    for (i, v) in r.iter().enumerate().skip(1) {
        if v.abs() > r[best].abs() {
            best = i;
        }
    }
    Ok((penalized(r[best], &batch[best].x, w, lambda), best))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSgd {
    weights: WeightState,
    mu: f64,
    lambda_reg: f64,
    policy: Option<FactorPolicy>,
    objective: SparseObjective,
    batch_size: usize,
    steps_taken: usize,
}

impl SparseSgd {
    pub fn new(
        dim: usize,
        mu: f64,
        lambda_reg: f64,
        objective: SparseObjective,
        policy: Option<FactorPolicy>,
    ) -> Result<Self> {
        Self::from_state(WeightState::zeros(dim), mu, lambda_reg, objective, policy, 0)
    }

    pub fn from_state(
        weights: WeightState,
        mu: f64,
        lambda_reg: f64,
        objective: SparseObjective,
        policy: Option<FactorPolicy>,
        steps_taken: usize,
    ) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::invalid(format!("step size must be positive, got {mu}")));
        }
        check_lambda(lambda_reg)?;
        if weights.is_empty() {
            return Err(Error::invalid("need at least one weight"));
        }
        Ok(Self {
            weights,
            mu,
            lambda_reg,
            policy,
            objective,
            batch_size: 32,
            steps_taken,
        })
    }

    /// Residual batch size used by Dantzig drivers.
    pub fn with_batch_size(mut self, batch_size: usize) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        self.batch_size = batch_size;
        Ok(self)
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn objective(&self) -> SparseObjective {
        self.objective
    }

    pub fn lambda_reg(&self) -> f64 {
        self.lambda_reg
    }

    pub fn weights(&self) -> &WeightState {
        &self.weights
    }

    /// One subgradient step. LASSO takes exactly one sample; Dantzig takes a
    /// nonempty batch and steps through its worst-residual sample.
    pub fn sgd_step(&mut self, samples: &[LabeledSample]) -> Result<StepOutcome> {
        let w = self.weights.as_slice();
        let (g, used) = match self.objective {
            SparseObjective::Lasso => {
                if samples.len() != 1 {
                    return Err(Error::invalid(format!(
                        "LASSO step takes one sample, got {}",
                        samples.len()
                    )));
                }
                (lasso_subgradient(w, &samples[0], self.lambda_reg)?, &samples[0])
            }
            SparseObjective::Dantzig => {
                let (g, i) = dantzig_subgradient(w, samples, self.lambda_reg)?;
                (g, &samples[i])
            }
        };
        let prediction = dot(w, &used.x);
        let factor = applied_factor(
            self.policy.as_ref(),
            self.steps_taken == 0,
            self.weights.l1(),
            linf_norm(&used.x)?,
        )?;
        self.weights.add_scaled(-factor * self.mu, &g)?;
        self.steps_taken += 1;
        Ok(StepOutcome {
            prediction,
            error: used.t - prediction,
            factor,
        })
    }
}

impl OnlineLearner for SparseSgd {
    /// A one-sample step; for Dantzig the sample is its own batch.
    fn step(&mut self, s: &LabeledSample) -> Result<StepOutcome> {
        self.sgd_step(std::slice::from_ref(s))
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.weights.len(), x.len(), "input")?;
        Ok(dot(self.weights.as_slice(), x))
    }

    fn weight_l1(&self) -> f64 {
        self.weights.l1()
    }

    fn linear_weights(&self) -> Option<&[f64]> {
        Some(self.weights.as_slice())
    }
}
