//! Experiment presets and their `key = value` schema.

use std::fmt::Write as _;

use crate::contraction::{FactorMode, FactorPolicy};
use crate::error::{Error, Result};
use crate::kernel::KlmsVariant;
use crate::neural::Activation;

use super::signal::ChannelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Lms,
    Klms,
    Nn,
    Rls,
    Lasso,
    Dantzig,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Lms => "lms",
            Algorithm::Klms => "klms",
            Algorithm::Nn => "nn",
            Algorithm::Rls => "rls",
            Algorithm::Lasso => "lasso",
            Algorithm::Dantzig => "dantzig",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "lms" => Algorithm::Lms,
            "klms" => Algorithm::Klms,
            "nn" => Algorithm::Nn,
            "rls" => Algorithm::Rls,
            "lasso" => Algorithm::Lasso,
            "dantzig" => Algorithm::Dantzig,
            other => return Err(Error::invalid(format!("unknown algorithm `{other}`"))),
        })
    }

    /// Whether the learner is fed from the simulated channel (as opposed to
    /// a synthetic regression instance).
    pub fn uses_channel(&self) -> bool {
        !matches!(self, Algorithm::Lasso | Algorithm::Dantzig)
    }

    /// Curve iterations count epochs rather than updates.
    pub fn is_epoch_based(&self) -> bool {
        matches!(self, Algorithm::Nn)
    }
}

/// Which learners a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantSelector {
    Both,
    Baseline,
    Modified,
}

impl VariantSelector {
    pub fn as_str(&self) -> &'static str {
        match self {
            VariantSelector::Both => "both",
            VariantSelector::Baseline => "baseline",
            VariantSelector::Modified => "modified",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "both" => VariantSelector::Both,
            "baseline" => VariantSelector::Baseline,
            "modified" => VariantSelector::Modified,
            other => return Err(Error::invalid(format!("unknown variant `{other}`"))),
        })
    }

    pub fn runs_baseline(&self) -> bool {
        !matches!(self, VariantSelector::Modified)
    }

    pub fn runs_modified(&self) -> bool {
        !matches!(self, VariantSelector::Baseline)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub name: String,
    pub algorithm: Algorithm,
    pub n_runs: usize,
    pub seed: u64,
    pub variant: VariantSelector,
    pub record_every: usize,
    pub mu: f64,
    pub sigma: f64,
    pub lambda_reg: f64,
    pub embed_dim: usize,
    pub equalizer_delay: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub channel: ChannelSpec,
    pub factor_mode: FactorMode,
    pub factor_floor: f64,
    pub factor_cap: f64,
    pub klms_variant: KlmsVariant,
    /// 0 keeps every center.
    pub max_centers: usize,
    pub rls_forgetting: f64,
    pub rls_delta: f64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub use_bias: bool,
    pub epochs: usize,
    pub n_features: usize,
    pub n_nonzero: usize,
    pub weight_scale: f64,
    pub noise_std: f64,
    pub steps: usize,
    pub batch_size: usize,
}

/// Registry order used by `list`.
pub const PRESET_NAMES: [&str; 7] = ["lms", "klms", "nn-a", "nn-b", "rls", "lasso", "dantzig"];

const NL_G: [f64; 3] = [1.0, 0.0, -0.9];
const NL_H: [f64; 3] = [1.0, 0.0, -0.5];

impl Default for ExperimentPreset {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            algorithm: Algorithm::Lms,
            n_runs: 25,
            seed: 1,
            variant: VariantSelector::Both,
            record_every: 10,
            mu: 0.01,
            sigma: 1.0,
            lambda_reg: 0.01,
            embed_dim: 5,
            equalizer_delay: 2,
            n_train: 1000,
            n_test: 200,
            channel: ChannelSpec::linear(vec![-0.3, 0.8], 25.0),
            factor_mode: FactorMode::DualNormalized,
            factor_floor: 1e-8,
            factor_cap: 1e3,
            klms_variant: KlmsVariant::Sum,
            max_centers: 0,
            rls_forgetting: 1.0,
            rls_delta: 0.01,
            hidden: vec![8],
            activation: Activation::Tanh,
            use_bias: true,
            epochs: 150,
            n_features: 10,
            n_nonzero: 3,
            weight_scale: 0.3,
            noise_std: 0.05,
            steps: 4000,
            batch_size: 32,
        }
    }
}

impl ExperimentPreset {
    pub fn builtin(name: &str) -> Option<Self> {
        let base = Self {
            name: name.to_string(),
            ..Self::default()
        };
        let p = match name {
            "lms" => Self {
                algorithm: Algorithm::Lms,
                mu: 0.4,
                n_runs: 100,
                record_every: 1,
                ..base
            },
            "klms" => Self {
                algorithm: Algorithm::Klms,
                channel: ChannelSpec {
                    taps: vec![-0.3, 0.8],
                    nonlinearity: NL_G,
                    snr_db: 25.0,
                },
                mu: 0.1,
                sigma: 1.0,
                record_every: 20,
                ..base
            },
            "nn-a" => Self {
                algorithm: Algorithm::Nn,
                channel: ChannelSpec {
                    taps: vec![1.0, 0.5],
                    nonlinearity: NL_G,
                    snr_db: 30.0,
                },
                mu: 0.01,
                n_train: 500,
                epochs: 150,
                record_every: 1,
                ..base
            },
            "nn-b" => Self {
                algorithm: Algorithm::Nn,
                channel: ChannelSpec {
                    taps: vec![1.0, 1.0],
                    nonlinearity: NL_H,
                    snr_db: 30.0,
                },
                mu: 0.01,
                n_train: 500,
                epochs: 200,
                record_every: 1,
                ..base
            },
            "rls" => Self {
                algorithm: Algorithm::Rls,
                channel: ChannelSpec::linear(vec![0.4, 0.5, -0.4, 1.0], 20.0),
                embed_dim: 8,
                equalizer_delay: 4,
                lambda_reg: 0.1,
                ..base
            },
            "lasso" => Self {
                algorithm: Algorithm::Lasso,
                mu: 0.002,
                n_train: 200,
                n_test: 50,
                record_every: 20,
                ..base
            },
            "dantzig" => Self {
                algorithm: Algorithm::Dantzig,
                mu: 0.005,
                n_train: 200,
                n_test: 50,
                record_every: 20,
                ..base
            },
            _ => return None,
        };
        Some(p)
    }

    /// One-line description of the experiment a builtin reproduces.
    pub fn provenance(&self) -> String {
        let learner = match self.algorithm {
            Algorithm::Lms => "LMS",
            Algorithm::Klms => "KLMS",
            Algorithm::Nn => "MLP backprop",
            Algorithm::Rls => "RLS",
            Algorithm::Lasso => "LASSO subgradient",
            Algorithm::Dantzig => "Dantzig subgradient",
        };
        if !self.algorithm.uses_channel() {
            return format!(
                "{learner}: uniform random design, {} features, {} planted nonzeros",
                self.n_features, self.n_nonzero
            );
        }
        let ch = &self.channel;
        let nl = if ch.nonlinearity == ChannelSpec::IDENTITY_NONLINEARITY {
            String::new()
        } else {
            format!(", g(x) = {}", polynomial(&ch.nonlinearity))
        };
        format!("{learner}: BPSK through FIR {:?}{nl}, {} dB AWGN", ch.taps, ch.snr_db)
    }

    pub fn factor_policy(&self) -> Result<FactorPolicy> {
        FactorPolicy::new(self.factor_mode, self.factor_floor, self.factor_cap)
    }

    /// Iterations (updates, or epochs for networks) each run performs.
    pub fn iterations(&self) -> usize {
        match self.algorithm {
            Algorithm::Nn => self.epochs,
            Algorithm::Lasso | Algorithm::Dantzig => self.steps,
            _ => self.n_train,
        }
    }

    /// Rows each learning curve will have.
    pub fn checkpoints(&self) -> usize {
        crate::learner::checkpoint_count(self.iterations(), self.record_every)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} must be positive, got {v}")))
            }
        };
        let nonzero = |v: usize, what: &str| {
            if v > 0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} must be positive")))
            }
        };
        nonzero(self.n_runs, "runs")?;
        nonzero(self.record_every, "record_every")?;
        pos(self.mu, "mu")?;
        pos(self.sigma, "sigma")?;
        if !(self.lambda_reg >= 0.0 && self.lambda_reg.is_finite()) {
            return Err(Error::invalid("lambda must be >= 0"));
        }
        nonzero(self.embed_dim, "embed_dim")?;
        nonzero(self.n_train, "n_train")?;
        nonzero(self.n_test, "n_test")?;
        self.channel.validate()?;
        self.factor_policy()?;
        if !(self.rls_forgetting > 0.0 && self.rls_forgetting <= 1.0) {
            return Err(Error::invalid("rls_forgetting must lie in (0, 1]"));
        }
        pos(self.rls_delta, "rls_delta")?;
        if self.hidden.contains(&0) {
            return Err(Error::invalid("hidden layer widths must be positive"));
        }
        nonzero(self.epochs, "epochs")?;
        nonzero(self.n_features, "features")?;
        if self.n_nonzero > self.n_features {
            return Err(Error::invalid("nonzero must not exceed features"));
        }
        pos(self.weight_scale, "weight_scale")?;
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::invalid("noise_std must be >= 0"));
        }
        nonzero(self.steps, "steps")?;
        nonzero(self.batch_size, "batch_size")?;
        Ok(())
    }

    /// Sets one configuration key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let bad = |e: &dyn std::fmt::Display| Error::invalid(format!("`{key}`: {e}"));
        let f = || v.parse::<f64>().map_err(|e| bad(&e));
        let u = || v.parse::<usize>().map_err(|e| bad(&e));
        let floats = || -> Result<Vec<f64>> {
            v.split(',')
                .map(|p| p.trim().parse::<f64>().map_err(|e| bad(&e)))
                .collect()
        };
        match key {
            "preset" => self.name = v.to_string(),
            "algorithm" => self.algorithm = Algorithm::parse(v)?,
            "runs" => self.n_runs = u()?,
            "seed" => self.seed = v.parse().map_err(|e| bad(&e))?,
            "variant" => self.variant = VariantSelector::parse(v)?,
            "record_every" => self.record_every = u()?,
            "mu" => self.mu = f()?,
            "sigma" => self.sigma = f()?,
            "lambda" => self.lambda_reg = f()?,
            "embed_dim" => self.embed_dim = u()?,
            "delay" => self.equalizer_delay = u()?,
            "n_train" => self.n_train = u()?,
            "n_test" => self.n_test = u()?,
            "taps" => self.channel.taps = floats()?,
            "nonlinearity" => {
                let c = floats()?;
                self.channel.nonlinearity = c
                    .try_into()
                    .map_err(|_| Error::invalid("`nonlinearity` takes exactly three coefficients"))?;
            }
            "snr_db" => self.channel.snr_db = f()?,
            "factor_mode" => self.factor_mode = FactorMode::parse(v)?,
            "factor_floor" => self.factor_floor = f()?,
            "factor_cap" => self.factor_cap = f()?,
            "klms_variant" => self.klms_variant = KlmsVariant::parse(v)?,
            "max_centers" => self.max_centers = u()?,
            "rls_forgetting" => self.rls_forgetting = f()?,
            "rls_delta" => self.rls_delta = f()?,
            "hidden" => {
                self.hidden = if v.is_empty() {
                    Vec::new()
                } else {
                    v.split(',')
                        .map(|p| p.trim().parse::<usize>().map_err(|e| bad(&e)))
                        .collect::<Result<_>>()?
                }
            }
            "activation" => self.activation = Activation::parse(v)?,
            "bias" => self.use_bias = v.parse().map_err(|e| bad(&e))?,
            "epochs" => self.epochs = u()?,
            "features" => self.n_features = u()?,
            "nonzero" => self.n_nonzero = u()?,
            "weight_scale" => self.weight_scale = f()?,
            "noise_std" => self.noise_std = f()?,
            "steps" => self.steps = u()?,
            "batch_size" => self.batch_size = u()?,
            other => return Err(Error::invalid(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// Every effective setting as ordered `(key, value)` pairs; feeding them
    /// back through [`set`](Self::set) reproduces the preset exactly.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let join_f = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        vec![
            ("preset", self.name.clone()),
            ("algorithm", self.algorithm.as_str().into()),
            ("runs", self.n_runs.to_string()),
            ("seed", self.seed.to_string()),
            ("variant", self.variant.as_str().into()),
            ("record_every", self.record_every.to_string()),
            ("mu", self.mu.to_string()),
            ("sigma", self.sigma.to_string()),
            ("lambda", self.lambda_reg.to_string()),
            ("embed_dim", self.embed_dim.to_string()),
            ("delay", self.equalizer_delay.to_string()),
            ("n_train", self.n_train.to_string()),
            ("n_test", self.n_test.to_string()),
            ("taps", join_f(&self.channel.taps)),
            ("nonlinearity", join_f(&self.channel.nonlinearity)),
            ("snr_db", self.channel.snr_db.to_string()),
            ("factor_mode", self.factor_mode.as_str().into()),
            ("factor_floor", self.factor_floor.to_string()),
            ("factor_cap", self.factor_cap.to_string()),
            ("klms_variant", self.klms_variant.as_str().into()),
            ("max_centers", self.max_centers.to_string()),
            ("rls_forgetting", self.rls_forgetting.to_string()),
            ("rls_delta", self.rls_delta.to_string()),
            (
                "hidden",
                self.hidden.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(","),
            ),
            ("activation", self.activation.as_str().into()),
            ("bias", self.use_bias.to_string()),
            ("epochs", self.epochs.to_string()),
            ("features", self.n_features.to_string()),
            ("nonzero", self.n_nonzero.to_string()),
            ("weight_scale", self.weight_scale.to_string()),
            ("noise_std", self.noise_std.to_string()),
            ("steps", self.steps.to_string()),
            ("batch_size", self.batch_size.to_string()),
        ]
    }

    /// `key = value` rendering of [`entries`](Self::entries).
    pub fn to_config(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Parses a `key = value` document. A leading `preset = <builtin>` line
    /// starts from that builtin's defaults; otherwise from the generic
    /// defaults. `#` starts a comment.
    pub fn from_config(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::invalid(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut preset = pairs
            .iter()
            .find(|(k, _)| k == "preset")
            .and_then(|(_, v)| Self::builtin(v))
            .unwrap_or_default();
        for (k, v) in &pairs {
            preset.set(k, v)?;
        }
        preset.validate()?;
        Ok(preset)
    }

    /// Short hash of the effective configuration.
    pub fn config_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.to_config().as_bytes());
        hex::encode(&digest[..8])
    }
}

fn polynomial(c: &[f64; 3]) -> String {
    let mut out = String::new();
    for (k, &v) in c.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let mag = v.abs();
        let coeff = if mag == 1.0 && k > 0 { String::new() } else { mag.to_string() };
        let term = match k {
            0 => coeff,
            1 => format!("{coeff}x"),
            _ => format!("{coeff}x^2"),
        };
        if out.is_empty() {
            if v < 0.0 {
                out.push('-');
            }
        } else {
            out.push_str(if v < 0.0 { " - " } else { " + " });
        }
        out.push_str(&term);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_is_valid_and_named() {
        for name in PRESET_NAMES {
            let p = ExperimentPreset::builtin(name).unwrap();
            p.validate().unwrap();
            assert_eq!(p.name, name);
            assert!(p.n_runs >= 25);
        }
        assert!(ExperimentPreset::builtin("nosuch").is_none());
    }

    #[test]
    fn builtin_channels() {
        let lms = ExperimentPreset::builtin("lms").unwrap();
        assert_eq!(lms.channel.taps, vec![-0.3, 0.8]);
        assert_eq!(lms.channel.snr_db, 25.0);
        assert_eq!(lms.channel.nonlinearity, ChannelSpec::IDENTITY_NONLINEARITY);
        let klms = ExperimentPreset::builtin("klms").unwrap();
        assert_eq!(klms.channel.nonlinearity, [1.0, 0.0, -0.9]);
        let a = ExperimentPreset::builtin("nn-a").unwrap();
        assert_eq!((a.channel.taps.clone(), a.channel.snr_db), (vec![1.0, 0.5], 30.0));
        let b = ExperimentPreset::builtin("nn-b").unwrap();
        assert_eq!(b.channel.taps, vec![1.0, 1.0]);
        assert_eq!(b.channel.nonlinearity, [1.0, 0.0, -0.5]);
        let rls = ExperimentPreset::builtin("rls").unwrap();
        assert_eq!(rls.channel.taps, vec![0.4, 0.5, -0.4, 1.0]);
        assert_eq!(rls.channel.snr_db, 20.0);
    }

    #[test]
    fn provenance_lines() {
        let k = ExperimentPreset::builtin("klms").unwrap().provenance();
        assert!(k.contains("g(x) = 1 - 0.9x^2"), "{k}");
        assert!(k.contains("[-0.3, 0.8]"));
        assert_eq!(polynomial(&[0.0, 1.0, 0.0]), "x");
        assert_eq!(polynomial(&[0.0, 0.0, 0.0]), "0");
        assert_eq!(polynomial(&[0.0, -2.0, 0.5]), "-2x + 0.5x^2");
    }

    #[test]
    fn config_round_trip() {
        for name in PRESET_NAMES {
            let mut p = ExperimentPreset::builtin(name).unwrap();
            p.mu = 0.1 + 0.2; // not exactly representable as typed
            p.channel.snr_db = f64::INFINITY;
            let back = ExperimentPreset::from_config(&p.to_config()).unwrap();
            assert_eq!(back, p);
            assert_eq!(back.config_hash(), p.config_hash());
        }
    }

    #[test]
    fn config_parse_errors() {
        assert!(ExperimentPreset::from_config("mu = fast").is_err());
        assert!(ExperimentPreset::from_config("nosuchkey = 1").is_err());
        assert!(ExperimentPreset::from_config("mu").is_err());
        assert!(ExperimentPreset::from_config("mu = -1").is_err());
        assert!(ExperimentPreset::from_config("nonlinearity = 1,2").is_err());
        let p = ExperimentPreset::from_config("# comment\npreset = klms\nruns = 3 # trailing\n").unwrap();
        assert_eq!(p.algorithm, Algorithm::Klms);
        assert_eq!(p.n_runs, 3);
    }

    #[test]
    fn checkpoints_follow_iterations() {
        let p = ExperimentPreset::builtin("lms").unwrap();
        assert_eq!(p.checkpoints(), p.n_train);
        let nn = ExperimentPreset::builtin("nn-a").unwrap();
        assert_eq!(nn.checkpoints(), nn.epochs);
    }
}
