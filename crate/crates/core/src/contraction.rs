//! The contraction scaling factor, the fixed-point deviation bound and the
//! step-size design equations.
//!
//! The factor multiplies a learner's error-driven increment:
//!
//! ```text
//! a = ‖w‖₁ / ‖x‖∞        (dual-normalized)   or   a = ‖w‖₁   (raw)
//! f = 1 + (1 − a) / a    (= 1 / a)
//! ```
//!
//! `a` is clamped below at `floor` and `f` is clamped above at `cap`, so an
//! all-zero state yields `f = cap` instead of a division by zero.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorMode {
    /// Uses the norm as is; only meaningful for inputs on the unit sphere.
    Raw,
    /// Divides the norm by the input's ∞-norm (the dual of L1).
    DualNormalized,
}

impl FactorMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            FactorMode::Raw => "raw",
            FactorMode::DualNormalized => "dual_normalized",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(FactorMode::Raw),
            "dual_normalized" | "dual" => Ok(FactorMode::DualNormalized),
            other => Err(Error::invalid(format!("unknown factor mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorPolicy {
    mode: FactorMode,
    floor: f64,
    cap: f64,
}

impl Default for FactorPolicy {
    fn default() -> Self {
        Self {
            mode: FactorMode::DualNormalized,
            floor: 1e-8,
            cap: 1e3,
        }
    }
}

impl FactorPolicy {
    pub fn new(mode: FactorMode, floor: f64, cap: f64) -> Result<Self> {
        if !(floor > 0.0 && floor < 1.0 && cap >= 1.0 && cap.is_finite()) {
            return Err(Error::invalid(format!(
                "factor policy needs 0 < floor < 1 <= cap, got floor={floor} cap={cap}"
            )));
        }
        Ok(Self { mode, floor, cap })
    }

    pub fn raw() -> Self {
        Self {
            mode: FactorMode::Raw,
            ..Self::default()
        }
    }

    pub fn mode(&self) -> FactorMode {
        self.mode
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    fn evaluate(&self, norm: f64, x_inf: f64) -> Result<f64> {
        if !(x_inf > 0.0) {
            return Err(Error::invalid(format!("x_inf must be positive, got {x_inf}")));
        }
        if !(norm >= 0.0) || !norm.is_finite() {
            return Err(Error::invalid(format!("norm must be finite and >= 0, got {norm}")));
        }
        let a = match self.mode {
            FactorMode::Raw => norm,
            FactorMode::DualNormalized => norm / x_inf,
        };
        let a = a.max(self.floor);
        Ok((1.0 + (1.0 - a) / a).min(self.cap))
    }
}

/// Factor for a weight vector or matrix with L1 norm `w_l1` acting on an
/// input whose largest absolute entry is `x_inf`. `x_inf` is ignored in raw
/// mode but must still be positive.
pub fn step_factor(w_l1: f64, x_inf: f64, policy: &FactorPolicy) -> Result<f64> {
    policy.evaluate(w_l1, x_inf)
}

/// Kernel-filter variant: the scalar output magnitude stands in for ‖w‖₁.
pub fn scalar_output_factor(y_abs: f64, x_inf: f64, policy: &FactorPolicy) -> Result<f64> {
    policy.evaluate(y_abs, x_inf)
}

/// Factor a learner actually applies: 1 for baselines, for the first update,
/// and for an all-zero input (whose increment is zero anyway).
pub(crate) fn applied_factor(
    policy: Option<&FactorPolicy>,
    first_update: bool,
    norm: f64,
    x_inf: f64,
) -> Result<f64> {
    match policy {
        Some(p) if !first_update && x_inf > 0.0 => step_factor(norm, x_inf, p),
        _ => Ok(1.0),
    }
}

/// Upper bound `‖T‖ᵐ‖u‖ / (1 − ‖T‖)` on the distance to the fixed point of
/// `x ← T(x) + u` after `m` iterations.
pub fn contraction_bound(t_norm: f64, u_norm: f64, m: u32) -> Result<f64> {
    if !(t_norm >= 0.0) {
        return Err(Error::invalid(format!("operator norm must be >= 0, got {t_norm}")));
    }
    if t_norm >= 1.0 {
        return Err(Error::ContractionViolation(t_norm));
    }
    if !(u_norm >= 0.0) {
        return Err(Error::invalid(format!("residual norm must be >= 0, got {u_norm}")));
    }
    if m == 0 {
        return Err(Error::invalid("iteration count must be positive"));
    }
    Ok(t_norm.powi(m as i32) * u_norm / (1.0 - t_norm))
}

/// Proportionality constants of the convergence-time and MSE-floor design
/// equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignConstants {
    k1: f64,
    k2: f64,
}

impl Default for DesignConstants {
    fn default() -> Self {
        Self { k1: 1.0, k2: 1.0 }
    }
}

impl DesignConstants {
    pub fn new(k1: f64, k2: f64) -> Result<Self> {
        if !(k1 > 0.0 && k1.is_finite() && k2 > 0.0 && k2.is_finite()) {
            return Err(Error::invalid(format!(
                "design constants must be finite and positive, got k1={k1} k2={k2}"
            )));
        }
        Ok(Self { k1, k2 })
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn k2(&self) -> f64 {
        self.k2
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// Smallest step size that converges within `n_max` iterations to a weight
/// L1 norm of `eps`: `k1·eps / (n_max·(1 − eps))`.
pub fn design_min_step(eps: f64, n_max: u64, k: &DesignConstants) -> Result<f64> {
    check_eps(eps)?;
    if n_max == 0 {
        return Err(Error::invalid("n_max must be positive"));
    }
    Ok(k.k1 * eps / (n_max as f64 * (1.0 - eps)))
}

/// Steady-state MSE predicted for step `mu`: `k2·mu·(1 − eps) / eps`,
/// evaluated as `k2·mu·(1/eps − 1)`.
pub fn predicted_mse_floor(mu: f64, eps: f64, k: &DesignConstants) -> Result<f64> {
    check_eps(eps)?;
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::invalid(format!("mu must be positive, got {mu}")));
    }
    Ok(k.k2 * mu * (1.0 / eps - 1.0))
}
