//! Signal chain: BPSK source, FIR channel, memoryless polynomial
//! nonlinearity, AWGN, and tap-delay embedding into a dataset.

use crate::error::{Error, Result};
use crate::numeric::{Dataset, LabeledSample};
use crate::rng::RngStream;

/// Linear channel, then `g(x) = c₀ + c₁x + c₂x²`, then AWGN at `snr_db`
/// measured on the signal where the noise is injected.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub taps: Vec<f64>,
    pub nonlinearity: [f64; 3],
    /// `f64::INFINITY` disables the noise.
    pub snr_db: f64,
}

impl ChannelSpec {
    pub const IDENTITY_NONLINEARITY: [f64; 3] = [0.0, 1.0, 0.0];

    pub fn linear(taps: Vec<f64>, snr_db: f64) -> Self {
        Self {
            taps,
            nonlinearity: Self::IDENTITY_NONLINEARITY,
            snr_db,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps.is_empty() || self.taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("channel taps must be nonempty and finite"));
        }
        if self.nonlinearity.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("nonlinearity coefficients must be finite"));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::invalid("snr_db must be a number or +inf"));
        }
        Ok(())
    }

    pub fn transmit(&self, symbols: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
        self.validate()?;
        let y = apply_fir(symbols, &self.taps)?;
        let y = apply_nonlinearity(&y, &self.nonlinearity);
        add_awgn(&y, self.snr_db, rng)
    }
}

/// `n` equiprobable symbols from {−1, +1}.
pub fn gen_bpsk(n: usize, rng: &mut RngStream) -> Vec<f64> {
    (0..n).map(|_| if rng.coin() { 1.0 } else { -1.0 }).collect()
}

/// `y[n] = Σₖ taps[k]·signal[n − k]` with zeros before the start; the output
/// has the input's length.
pub fn apply_fir(signal: &[f64], taps: &[f64]) -> Result<Vec<f64>> {
    if taps.is_empty() {
        return Err(Error::invalid("FIR needs at least one tap"));
    }
    Ok((0..signal.len())
        .map(|n| {
            taps.iter()
                .take(n + 1)
                .enumerate()
                .map(|(k, h)| h * signal[n - k])
                .sum()
        })
        .collect())
}

pub fn apply_nonlinearity(signal: &[f64], coeffs: &[f64; 3]) -> Vec<f64> {
    let [c0, c1, c2] = *coeffs;
    signal.iter().map(|&x| c0 + x * (c1 + c2 * x)).collect()
}

/// Adds white Gaussian noise of variance `P·10^(−snr_db/10)`, `P` being the
/// empirical mean square of `signal`.
pub fn add_awgn(signal: &[f64], snr_db: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    if snr_db == f64::INFINITY {
        return Ok(signal.to_vec());
    }
    if !snr_db.is_finite() {
        return Err(Error::invalid(format!("invalid SNR {snr_db}")));
    }
    if signal.is_empty() {
        return Err(Error::invalid("cannot add noise to an empty signal"));
    }
    let power = signal.iter().map(|v| v * v).sum::<f64>() / signal.len() as f64;
    if !(power > 0.0) {
        return Err(Error::invalid("signal has zero power; SNR is undefined"));
    }
    let std = (power * 10f64.powf(-snr_db / 10.0)).sqrt();
    Ok(signal.iter().map(|v| v + std * rng.gaussian()).collect())
}

/// Tap-delay embedding: sample `n` (for `n ≥ delay`) has
/// `x = [r[n], r[n−1], …, r[n−dim+1]]` (zero-padded) and target
/// `t = s[n − delay]`. The first `n_train` samples form the training set,
/// the rest the test set.
pub fn embed(
    received: &[f64],
    transmitted: &[f64],
    dim: usize,
    delay: usize,
    n_train: usize,
) -> Result<Dataset> {
    if dim == 0 {
        return Err(Error::invalid("embedding dimension must be positive"));
    }
    if received.len() != transmitted.len() {
        return Err(Error::invalid("received and transmitted lengths differ"));
    }
    if delay >= received.len() {
        return Err(Error::invalid(format!(
            "delay {delay} must be below the signal length {}",
            received.len()
        )));
    }
    let count = received.len() - delay;
    if n_train > count {
        return Err(Error::invalid(format!(
            "{n_train} training samples requested but only {count} available"
        )));
    }
    let mut samples = (delay..received.len()).map(|n| {
        let x = (0..dim)
            .map(|k| if k <= n { received[n - k] } else { 0.0 })
            .collect();
        LabeledSample::new(x, transmitted[n - delay])
    });
    let train = samples.by_ref().take(n_train).collect::<Result<Vec<_>>>()?;
    let test = samples.collect::<Result<Vec<_>>>()?;
    Dataset::new(train, test, dim)
}

/// Random regression instance: `X` uniform on `[0, 1]`, a planted weight
/// vector with `n_nonzero` entries of magnitude `scale·U[0.5, 1]` and random
/// sign, targets `Xw* + noise_std·N(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRegression {
    pub data: Dataset,
    pub planted: Vec<f64>,
}

pub fn gen_sparse_regression(
    n_train: usize,
    n_test: usize,
    n_features: usize,
    n_nonzero: usize,
    scale: f64,
    noise_std: f64,
    rng: &mut RngStream,
) -> Result<SparseRegression> {
    if n_features == 0 || n_nonzero > n_features {
        return Err(Error::invalid("need 0 < n_nonzero <= n_features"));
    }
    let mut support: Vec<usize> = (0..n_features).collect();
    // Partial Fisher-Yates: the first n_nonzero positions are the support.
    for i in 0..n_nonzero {
        let j = i + rng.below(n_features - i);
        support.swap(i, j);
    }
    let mut planted = vec![0.0; n_features];
    for &i in &support[..n_nonzero] {
        let sign = if rng.coin() { 1.0 } else { -1.0 };
        planted[i] = sign * scale * rng.uniform_in(0.5, 1.0);
    }
    let mut draw = |n: usize| -> Result<Vec<LabeledSample>> {
        (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..n_features).map(|_| rng.uniform()).collect();
                let t = crate::numeric::dot(&x, &planted) + noise_std * rng.gaussian();
                LabeledSample::new(x, t)
            })
            .collect()
    };
    let train = draw(n_train)?;
    let test = draw(n_test)?;
    Ok(SparseRegression {
        data: Dataset::new(train, test, n_features)?,
        planted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bpsk_values_and_balance() {
        let mut rng = RngStream::new(1, 0);
        let s = gen_bpsk(100_000, &mut rng);
        assert!(s.iter().all(|v| *v == 1.0 || *v == -1.0));
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        assert!(mean.abs() <= 0.02, "mean {mean}");
        let mut again = RngStream::new(1, 0);
        assert_eq!(gen_bpsk(100_000, &mut again), s);
    }

    #[test]
    fn fir_examples() {
        let sig = [0.3, -1.0, 2.0];
        assert_eq!(apply_fir(&sig, &[1.0]).unwrap(), sig.to_vec());
        let imp = [1.0, 0.0, 0.0, 0.0];
        assert_eq!(apply_fir(&imp, &[-0.3, 0.8]).unwrap(), vec![-0.3, 0.8, 0.0, 0.0]);
        assert!(apply_fir(&sig, &[]).is_err());
    }

    #[test]
    fn fir_matches_double_loop() {
        let mut rng = RngStream::new(2, 0);
        let sig: Vec<f64> = (0..50).map(|_| rng.gaussian()).collect();
        let taps = [0.4, 0.5, -0.4, 1.0];
        let out = apply_fir(&sig, &taps).unwrap();
        for n in 0..sig.len() {
            let mut acc = 0.0;
            for k in 0..taps.len() {
                if n >= k {
                    acc += taps[k] * sig[n - k];
                }
            }
            assert!((out[n] - acc).abs() < 1e-12);
        }
    }

    #[test]
    fn fir_is_linear() {
        let mut rng = RngStream::new(3, 0);
        let s1: Vec<f64> = (0..40).map(|_| rng.gaussian()).collect();
        let s2: Vec<f64> = (0..40).map(|_| rng.gaussian()).collect();
        let a = 1.7;
        let taps = [-0.3, 0.8, 0.1];
        let mix: Vec<f64> = s1.iter().zip(&s2).map(|(x, y)| a * x + y).collect();
        let lhs = apply_fir(&mix, &taps).unwrap();
        let f1 = apply_fir(&s1, &taps).unwrap();
        let f2 = apply_fir(&s2, &taps).unwrap();
        for i in 0..40 {
            assert!((lhs[i] - (a * f1[i] + f2[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn nonlinearity_examples() {
        let g = [1.0, 0.0, -0.9];
        let h = [1.0, 0.0, -0.5];
        assert_eq!(apply_nonlinearity(&[0.0], &g), vec![1.0]);
        assert!((apply_nonlinearity(&[1.0], &g)[0] - 0.1).abs() < 1e-15);
        assert_eq!(apply_nonlinearity(&[1.0], &h), vec![0.5]);
    }

    #[test]
    fn awgn_examples() {
        let mut rng = RngStream::new(4, 0);
        let sig = gen_bpsk(100_000, &mut rng);
        assert_eq!(add_awgn(&sig, f64::INFINITY, &mut rng).unwrap(), sig);
        assert!(add_awgn(&[0.0, 0.0], 10.0, &mut rng).is_err());
        for snr in [0.0, 10.0, 25.0] {
            let noisy = add_awgn(&sig, snr, &mut rng).unwrap();
            let noise_var = noisy.iter().zip(&sig).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
                / sig.len() as f64;
            let measured = 10.0 * (1.0 / noise_var).log10();
            assert!((measured - snr).abs() < 0.5, "snr {snr} measured {measured}");
        }
        let mut a = RngStream::new(5, 0);
        let mut b = RngStream::new(5, 0);
        assert_eq!(add_awgn(&sig[..100], 20.0, &mut a).unwrap(), add_awgn(&sig[..100], 20.0, &mut b).unwrap());
    }

    #[test]
    fn embed_identity_channel() {
        let mut rng = RngStream::new(6, 0);
        let s = gen_bpsk(30, &mut rng);
        let d = embed(&s, &s, 1, 0, 20).unwrap();
        assert_eq!(d.train.len() + d.test.len(), 30);
        for smp in d.train.iter().chain(&d.test) {
            assert_eq!(smp.x[0], smp.t);
        }
    }

    #[test]
    fn embed_windows_match_indexing() {
        let r: Vec<f64> = (0..12).map(|i| i as f64 + 0.5).collect();
        let s: Vec<f64> = (0..12).map(|i| -(i as f64)).collect();
        let (dim, delay) = (3, 2);
        let d = embed(&r, &s, dim, delay, 4).unwrap();
        assert_eq!(d.train.len(), 4);
        assert_eq!(d.test.len(), 12 - delay - 4);
        for (j, smp) in d.train.iter().chain(&d.test).enumerate() {
            let n = j + delay;
            for k in 0..dim {
                let expected = if n >= k { r[n - k] } else { 0.0 };
                assert_eq!(smp.x[k], expected);
            }
            assert_eq!(smp.t, s[n - delay]);
        }
        assert!(embed(&r, &s, 3, 12, 0).is_err());
        assert!(embed(&r, &s, 3, 2, 11).is_err());
        assert!(embed(&r, &s[..5], 3, 2, 1).is_err());
    }

    #[test]
    fn sparse_instance_shape() {
        let mut rng = RngStream::new(7, 0);
        let inst = gen_sparse_regression(50, 10, 8, 3, 0.3, 0.0, &mut rng).unwrap();
        assert_eq!(inst.planted.iter().filter(|w| **w != 0.0).count(), 3);
        assert!(inst.planted.iter().all(|w| w.abs() <= 0.3));
        for s in &inst.data.train {
            assert!(s.x.iter().all(|v| (0.0..1.0).contains(v)));
            let y: f64 = s.x.iter().zip(&inst.planted).map(|(a, b)| a * b).sum();
            assert!((y - s.t).abs() < 1e-12);
        }
    }
}
