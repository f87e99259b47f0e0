//! Gaussian-kernel LMS.
//!
//! [`Klms`] keeps the growing expansion `y(x) = Σ cᵢ·k(Xᵢ, x)`, appending one
//! center per update with coefficient `f·μ·e`. [`RecursiveKlms`] keeps only a
//! running scalar output, `y ← y + f·μ·e·k(X_{n−1}, X_n)`; the two are not
//! algebraically equivalent and are kept side by side for comparison.

use std::collections::VecDeque;

use crate::contraction::{applied_factor, FactorPolicy};
use crate::error::{Error, Result};
use crate::learner::{OnlineLearner, StepOutcome};
use crate::numeric::{check_dim, linf_norm, LabeledSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlmsVariant {
    Sum,
    Recursive,
}

impl KlmsVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            KlmsVariant::Sum => "sum",
            KlmsVariant::Recursive => "recursive",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(KlmsVariant::Sum),
            "recursive" => Ok(KlmsVariant::Recursive),
            other => Err(Error::invalid(format!("unknown KLMS variant `{other}`"))),
        }
    }
}

#[inline]
fn kernel_unchecked(a: &[f64], b: &[f64], sigma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-d2 / sigma).exp()
}

/// `exp(−‖a − b‖² / sigma)`.
pub fn gaussian_kernel(a: &[f64], b: &[f64], sigma: f64) -> Result<f64> {
    check_dim(a.len(), b.len(), "kernel arguments")?;
    check_sigma(sigma)?;
    Ok(kernel_unchecked(a, b, sigma))
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("kernel width must be positive, got {sigma}")));
    }
    Ok(())
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::invalid(format!("step size must be positive, got {mu}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Klms {
    centers: VecDeque<Vec<f64>>,
    coeffs: VecDeque<f64>,
    sigma: f64,
    mu: f64,
    policy: Option<FactorPolicy>,
    max_centers: Option<usize>,
    updates: usize,
}

impl Klms {
    pub fn new(sigma: f64, mu: f64, policy: Option<FactorPolicy>) -> Result<Self> {
        check_sigma(sigma)?;
        check_mu(mu)?;
        Ok(Self {
            centers: VecDeque::new(),
            coeffs: VecDeque::new(),
            sigma,
            mu,
            policy,
            max_centers: None,
            updates: 0,
        })
    }

    /// Evicts the oldest center once more than `max` are stored.
    pub fn with_max_centers(mut self, max: usize) -> Result<Self> {
        if max == 0 {
            return Err(Error::invalid("max_centers must be positive"));
        }
        self.max_centers = Some(max);
        Ok(self)
    }

    /// Builds a model from explicit centers and coefficients.
    pub fn from_parts(
        centers: Vec<Vec<f64>>,
        coeffs: Vec<f64>,
        sigma: f64,
        mu: f64,
        policy: Option<FactorPolicy>,
    ) -> Result<Self> {
        if centers.len() != coeffs.len() {
            return Err(Error::invalid("centers and coefficients differ in length"));
        }
        if let Some(first) = centers.first() {
            for c in &centers {
                check_dim(first.len(), c.len(), "KLMS center")?;
            }
        }
        let mut m = Self::new(sigma, mu, policy)?;
        m.updates = centers.len();
        m.centers = centers.into();
        m.coeffs = coeffs.into();
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> impl Iterator<Item = &[f64]> {
        self.centers.iter().map(|c| c.as_slice())
    }

    pub fn coeffs(&self) -> impl Iterator<Item = f64> + '_ {
        self.coeffs.iter().copied()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn update(&mut self, s: &LabeledSample) -> Result<StepOutcome> {
        let prediction = self.predict(&s.x)?;
        let error = s.t - prediction;
        let factor = match &self.policy {
            Some(p) if !self.centers.is_empty() => {
                let x_inf = linf_norm(&s.x)?;
                if x_inf > 0.0 {
                    crate::contraction::scalar_output_factor(prediction.abs(), x_inf, p)?
                } else {
                    1.0
                }
            }
            _ => 1.0,
        };
        let coeff = factor * self.mu * error;
        if !coeff.is_finite() {
            return Err(Error::Divergence("non-finite KLMS coefficient".into()));
        }
        self.centers.push_back(s.x.clone());
        self.coeffs.push_back(coeff);
        if let Some(max) = self.max_centers {
            while self.centers.len() > max {
                self.centers.pop_front();
                self.coeffs.pop_front();
            }
        }
        self.updates += 1;
        Ok(StepOutcome {
            prediction,
            error,
            factor,
        })
    }
}

impl OnlineLearner for Klms {
    fn step(&mut self, s: &LabeledSample) -> Result<StepOutcome> {
        self.update(s)
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        if let Some(c) = self.centers.front() {
            check_dim(c.len(), x.len(), "KLMS input")?;
        }
        Ok(self
            .centers
            .iter()
            .zip(&self.coeffs)
            .map(|(c, a)| a * kernel_unchecked(c, x, self.sigma))
            .sum())
    }

    /// L1 norm of the expansion coefficients.
    fn weight_l1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }
}

/// Running-output form of KLMS.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursiveKlms {
    sigma: f64,
    mu: f64,
    policy: Option<FactorPolicy>,
    prev_input: Option<Vec<f64>>,
    output: f64,
    steps: usize,
}

impl RecursiveKlms {
    pub fn new(sigma: f64, mu: f64, policy: Option<FactorPolicy>) -> Result<Self> {
        check_sigma(sigma)?;
        check_mu(mu)?;
        Ok(Self {
            sigma,
            mu,
            policy,
            prev_input: None,
            output: 0.0,
            steps: 0,
        })
    }

    /// Records the first input; the output stays at 0.
    pub fn prime(&mut self, x: &[f64]) -> Result<()> {
        if x.is_empty() {
            return Err(Error::invalid("empty input"));
        }
        self.prev_input = Some(x.to_vec());
        Ok(())
    }

    pub fn output(&self) -> f64 {
        self.output
    }

    /// `y(n+1) = y(n) + f·μ·e(n)·k(X_{n−1}, X_n)` with `e(n) = t_n − y(n)`.
    pub fn step_recursive(&mut self, s: &LabeledSample) -> Result<StepOutcome> {
        let prev = self
            .prev_input
            .as_ref()
            .ok_or_else(|| Error::Precondition("recursive KLMS needs a previous input".into()))?;
        check_dim(prev.len(), s.dim(), "recursive KLMS input")?;
        let prediction = self.output;
        let error = s.t - prediction;
        let factor = applied_factor(
            self.policy.as_ref(),
            self.steps == 0,
            prediction.abs(),
            linf_norm(&s.x)?,
        )?;
        let next = prediction + factor * self.mu * error * kernel_unchecked(prev, &s.x, self.sigma);
        if !next.is_finite() {
            return Err(Error::Divergence("non-finite recursive KLMS output".into()));
        }
        self.output = next;
        self.prev_input = Some(s.x.clone());
        self.steps += 1;
        Ok(StepOutcome {
            prediction,
            error,
            factor,
        })
    }
}

impl OnlineLearner for RecursiveKlms {
    /// Primes on the first sample, then follows the recursion.
    fn step(&mut self, s: &LabeledSample) -> Result<StepOutcome> {
        if self.prev_input.is_none() {
            self.prime(&s.x)?;
            return Ok(StepOutcome {
                prediction: self.output,
                error: s.t - self.output,
                factor: 1.0,
            });
        }
        self.step_recursive(s)
    }

    /// The recursion carries no query dependence: every input gets the
    /// current running output.
    fn predict(&self, x: &[f64]) -> Result<f64> {
        if let Some(p) = &self.prev_input {
            check_dim(p.len(), x.len(), "recursive KLMS input")?;
        }
        Ok(self.output)
    }

    fn weight_l1(&self) -> f64 {
        self.output.abs()
    }
}
