//! Norms, error metrics and the sample containers shared by every learner.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn ensure_finite(v: &[f64], what: &str) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::invalid(format!("{what}: entry {i} is not finite"))),
        None => Ok(()),
    }
}

/// Sum of absolute values.
pub fn l1_norm(v: &[f64]) -> Result<f64> {
    ensure_finite(v, "l1_norm")?;
    Ok(v.iter().map(|x| x.abs()).sum())
}

/// Entrywise L1 norm of a matrix (the matrix flattened to a vector), not the
/// induced operator norm.
pub fn matrix_l1_norm(m: &DMatrix<f64>) -> Result<f64> {
    l1_norm(m.as_slice())
}

/// Largest absolute entry.
pub fn linf_norm(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::invalid("linf_norm of an empty vector"));
    }
    ensure_finite(v, "linf_norm")?;
    Ok(v.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
}

pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::invalid(format!(
            "mse: {} predictions vs {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::invalid("mse of empty vectors"));
    }
    let sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / predictions.len() as f64)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `sign` with `sign(0) = 0`.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub(crate) fn check_dim(expected: usize, got: usize, what: &str) -> Result<()> {
    if expected != got {
        return Err(Error::invalid(format!(
            "{what}: expected dimension {expected}, got {got}"
        )));
    }
    Ok(())
}

/// One input window and its scalar target.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub t: f64,
}

impl LabeledSample {
    pub fn new(x: Vec<f64>, t: f64) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::invalid("sample input is empty"));
        }
        ensure_finite(&x, "sample input")?;
        if !t.is_finite() {
            return Err(Error::invalid("sample target is not finite"));
        }
        Ok(Self { x, t })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Chronologically split train/test samples of a common input dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<LabeledSample>,
    pub test: Vec<LabeledSample>,
    dim: usize,
}

impl Dataset {
    pub fn new(train: Vec<LabeledSample>, test: Vec<LabeledSample>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dataset dimension must be positive"));
        }
        for s in train.iter().chain(&test) {
            check_dim(dim, s.dim(), "dataset sample")?;
        }
        Ok(Self { train, test, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Content fingerprint over the exact bit patterns of every sample.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update((self.dim as u64).to_le_bytes());
        for (tag, set) in [(0u8, &self.train), (1u8, &self.test)] {
            h.update([tag]);
            h.update((set.len() as u64).to_le_bytes());
            for s in set {
                for v in &s.x {
                    h.update(v.to_bits().to_le_bytes());
                }
                h.update(s.t.to_bits().to_le_bytes());
            }
        }
        hex::encode(&h.finalize()[..16])
    }
}

/// Parameter vector with its L1 norm cached.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightState {
    w: Vec<f64>,
    l1: f64,
}

impl WeightState {
    pub fn zeros(dim: usize) -> Self {
        Self {
            w: vec![0.0; dim],
            l1: 0.0,
        }
    }

    pub fn from_vec(w: Vec<f64>) -> Result<Self> {
        let l1 = l1_norm(&w)?;
        Ok(Self { w, l1 })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Adds `scale * direction`; the state is left untouched if any entry
    /// would become non-finite.
    pub fn add_scaled(&mut self, scale: f64, direction: &[f64]) -> Result<()> {
        check_dim(self.w.len(), direction.len(), "weight increment")?;
        let next: Vec<f64> = self
            .w
            .iter()
            .zip(direction)
            .map(|(w, d)| w + scale * d)
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence("non-finite weight".into()));
        }
        self.l1 = next.iter().map(|v| v.abs()).sum();
        self.w = next;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn l1_examples() {
        assert_eq!(l1_norm(&[1.0, -2.0, 3.0]).unwrap(), 6.0);
        assert_eq!(l1_norm(&[0.0; 4]).unwrap(), 0.0);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.5, 0.0]);
        assert_eq!(matrix_l1_norm(&m).unwrap(), 2.5);
        assert!(matches!(l1_norm(&[1.0, f64::NAN]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn linf_examples() {
        assert_eq!(linf_norm(&[-3.0, 2.0]).unwrap(), 3.0);
        assert_eq!(linf_norm(&[0.0]).unwrap(), 0.0);
        assert_eq!(linf_norm(&[0.8, -0.3]).unwrap(), 0.8);
        assert!(linf_norm(&[]).is_err());
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0], &[2.0]).unwrap(), 4.0);
        assert_eq!(mse(&[1.0, -1.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn sample_and_dataset_validation() {
        assert!(LabeledSample::new(vec![], 1.0).is_err());
        assert!(LabeledSample::new(vec![f64::INFINITY], 1.0).is_err());
        let a = LabeledSample::new(vec![1.0, 2.0], 1.0).unwrap();
        let b = LabeledSample::new(vec![1.0], 1.0).unwrap();
        assert!(Dataset::new(vec![a.clone()], vec![b], 2).is_err());
        let d = Dataset::new(vec![a.clone()], vec![a], 2).unwrap();
        assert_eq!(d.fingerprint(), d.clone().fingerprint());
    }

    #[test]
    fn weight_state_rejects_non_finite_increment() {
        let mut w = WeightState::from_vec(vec![1.0, -1.0]).unwrap();
        assert!(w.add_scaled(f64::INFINITY, &[1.0, 0.0]).is_err());
        assert_eq!(w.as_slice(), &[1.0, -1.0]);
        w.add_scaled(0.5, &[2.0, 2.0]).unwrap();
        assert_eq!(w.as_slice(), &[2.0, 0.0]);
        assert_eq!(w.l1(), 2.0);
    }

    fn vec_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-100.0..100.0f64, len)
    }

    proptest! {
        #[test]
        fn l1_homogeneous(v in vec_strategy(8), a in -10.0..10.0f64) {
            let scaled: Vec<f64> = v.iter().map(|x| a * x).collect();
            let lhs = l1_norm(&scaled).unwrap();
            let rhs = a.abs() * l1_norm(&v).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs));
        }

        #[test]
        fn l1_triangle(u in vec_strategy(6), v in vec_strategy(6)) {
            let s: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
            prop_assert!(l1_norm(&s).unwrap() <= l1_norm(&u).unwrap() + l1_norm(&v).unwrap() + 1e-9);
        }

        #[test]
        fn holder(v in vec_strategy(7), x in vec_strategy(7)) {
            let lhs = dot(&v, &x).abs();
            prop_assert!(lhs <= l1_norm(&v).unwrap() * linf_norm(&x).unwrap() * (1.0 + 1e-12) + 1e-9);
        }

        #[test]
        fn weight_state_l1_cache(v in vec_strategy(5), d in vec_strategy(5), s in -1.0..1.0f64) {
            let mut w = WeightState::from_vec(v).unwrap();
            w.add_scaled(s, &d).unwrap();
            prop_assert!((w.l1() - l1_norm(w.as_slice()).unwrap()).abs() < 1e-12 * (1.0 + w.l1()));
        }
    }
}
