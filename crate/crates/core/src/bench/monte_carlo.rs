//! Paired Monte Carlo comparison of a baseline learner and its
//! contraction-scaled counterpart.

use rayon::prelude::*;

use crate::contraction::FactorPolicy;
use crate::error::{Error, Result};
use crate::kernel::{Klms, KlmsVariant, RecursiveKlms};
use crate::learner::{run_online_with, LearningCurve, ObjectiveSpec, OnlineLearner, Recorder};
use crate::linear::{Lms, Rls};
use crate::neural::{train_epochs, Mlp};
use crate::numeric::{Dataset, LabeledSample};
use crate::rng::RngStream;
use crate::sparse::{SparseObjective, SparseSgd};

use super::preset::{Algorithm, ExperimentPreset};
use super::signal::{embed, gen_bpsk, gen_sparse_regression};

/// Test MSE within this many dB of the reference counts as converged.
pub const MSE_MARGIN_DB: f64 = 0.1;
/// Objective within this relative gap of the best counts as converged.
pub const OBJECTIVE_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Baseline,
    Modified,
}

impl Arm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Arm::Baseline => "baseline",
            Arm::Modified => "modified",
        }
    }
}

/// One arm of one repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmOutcome {
    pub curve: LearningCurve,
    /// Fingerprint of the dataset this arm trained on.
    pub data_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub run: usize,
    pub baseline: Option<ArmOutcome>,
    pub modified: Option<ArmOutcome>,
}

/// Final values of one averaged curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmSummary {
    pub final_train_mse: f64,
    pub final_test_mse: f64,
    pub final_l1: f64,
    pub mean_factor: f64,
    /// First checkpoint at or below the MSE threshold.
    pub iters_to_mse_threshold: Option<usize>,
    pub final_objective: Option<f64>,
    pub iters_to_objective_threshold: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub runs: usize,
    pub config_hash: String,
    /// Baseline final test MSE raised by [`MSE_MARGIN_DB`] (the modified arm
    /// when the baseline was not run).
    pub mse_threshold: f64,
    pub best_objective: Option<f64>,
    pub objective_threshold: Option<f64>,
    pub baseline: Option<ArmSummary>,
    pub modified: Option<ArmSummary>,
}

impl Summary {
    /// Flat `key = value` view; absent values are omitted.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("runs".to_string(), self.runs.to_string()),
            ("config_hash".to_string(), self.config_hash.clone()),
            ("mse_threshold".to_string(), format!("{:e}", self.mse_threshold)),
        ];
        if let Some(b) = self.best_objective {
            out.push(("best_objective".into(), format!("{b:e}")));
        }
        if let Some(t) = self.objective_threshold {
            out.push(("objective_threshold".into(), format!("{t:e}")));
        }
        for (name, arm) in [("baseline", &self.baseline), ("modified", &self.modified)] {
            let Some(a) = arm else { continue };
            let mut push = |k: &str, v: String| out.push((format!("{name}_{k}"), v));
            push("final_train_mse", format!("{:e}", a.final_train_mse));
            push("final_test_mse", format!("{:e}", a.final_test_mse));
            push("final_l1", format!("{:e}", a.final_l1));
            push("mean_factor", format!("{:e}", a.mean_factor));
            push(
                "iters_to_mse_threshold",
                a.iters_to_mse_threshold
                    .map_or_else(|| "none".to_string(), |i| i.to_string()),
            );
            if let Some(o) = a.final_objective {
                push("final_objective", format!("{o:e}"));
            }
            if let Some(i) = a.iters_to_objective_threshold {
                push("iters_to_objective_threshold", i.to_string());
            } else if a.final_objective.is_some() {
                push("iters_to_objective_threshold", "none".into());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub preset: ExperimentPreset,
    pub baseline: Option<LearningCurve>,
    pub modified: Option<LearningCurve>,
    pub runs: Vec<RunOutcome>,
    pub summary: Summary,
}

/// Regularized objective logged for a preset, if any.
pub fn objective_for(preset: &ExperimentPreset) -> Option<ObjectiveSpec> {
    let kind = match preset.algorithm {
        Algorithm::Lms | Algorithm::Rls | Algorithm::Lasso => SparseObjective::Lasso,
        Algorithm::Dantzig => SparseObjective::Dantzig,
        Algorithm::Klms | Algorithm::Nn => return None,
    };
    Some(ObjectiveSpec {
        kind,
        lambda: preset.lambda_reg,
    })
}

/// Dataset of repetition `run`, drawn from stream `(seed, 2·run)`.
pub fn build_dataset(preset: &ExperimentPreset, run: usize) -> Result<Dataset> {
    let mut rng = RngStream::new(preset.seed, 2 * run as u64);
    if preset.algorithm.uses_channel() {
        let len = preset.n_train + preset.n_test + preset.equalizer_delay;
        let symbols = gen_bpsk(len, &mut rng);
        let received = preset.channel.transmit(&symbols, &mut rng)?;
        embed(
            &received,
            &symbols,
            preset.embed_dim,
            preset.equalizer_delay,
            preset.n_train,
        )
    } else {
        Ok(gen_sparse_regression(
            preset.n_train,
            preset.n_test,
            preset.n_features,
            preset.n_nonzero,
            preset.weight_scale,
            preset.noise_std,
            &mut rng,
        )?
        .data)
    }
}

/// Sparse-solver driver: each step draws its samples uniformly with
/// replacement (one for LASSO, `batch_size` for Dantzig).
pub fn run_sparse(
    learner: &mut SparseSgd,
    data: &Dataset,
    steps: usize,
    record_every: usize,
    objective: Option<&ObjectiveSpec>,
    rng: &mut RngStream,
) -> Result<LearningCurve> {
    if record_every == 0 {
        return Err(Error::invalid("record_every must be positive"));
    }
    if data.train.is_empty() || data.test.is_empty() {
        return Err(Error::invalid("sparse runs need nonempty train and test sets"));
    }
    let per_step = match learner.objective() {
        SparseObjective::Lasso => 1,
        SparseObjective::Dantzig => learner.batch_size(),
    };
    let n = data.train.len();
    let mut batch: Vec<LabeledSample> = Vec::with_capacity(per_step);
    let mut rec = Recorder::default();
    for it in 1..=steps {
        batch.clear();
        batch.extend((0..per_step).map(|_| data.train[rng.below(n)].clone()));
        let out = learner.sgd_step(&batch)?;
        rec.push_factor(out.factor);
        if it % record_every == 0 || it == steps {
            rec.checkpoint(it, learner, data, objective)?;
        }
    }
    Ok(LearningCurve::single(rec.rows))
}

fn run_arm(
    preset: &ExperimentPreset,
    data: &Dataset,
    policy: Option<FactorPolicy>,
    mut rng: RngStream,
) -> Result<LearningCurve> {
    let objective = objective_for(preset);
    let obj = objective.as_ref();
    let dim = data.dim();
    let every = preset.record_every;
    match preset.algorithm {
        Algorithm::Lms => {
            let mut l = Lms::new(dim, preset.mu, policy)?;
            run_online_with(&mut l, data, every, obj)
        }
        Algorithm::Rls => {
            let mut l = Rls::new(dim, preset.rls_forgetting, preset.rls_delta, policy)?;
            run_online_with(&mut l, data, every, obj)
        }
        Algorithm::Klms => {
            let mut l: Box<dyn OnlineLearner> = match preset.klms_variant {
                KlmsVariant::Sum => {
                    let k = Klms::new(preset.sigma, preset.mu, policy)?;
                    if preset.max_centers > 0 {
                        Box::new(k.with_max_centers(preset.max_centers)?)
                    } else {
                        Box::new(k)
                    }
                }
                KlmsVariant::Recursive => Box::new(RecursiveKlms::new(preset.sigma, preset.mu, policy)?),
            };
            run_online_with(l.as_mut(), data, every, None)
        }
        Algorithm::Nn => {
            let mut sizes = vec![dim];
            sizes.extend(&preset.hidden);
            sizes.push(1);
            let mut net = Mlp::random(
                &sizes,
                preset.use_bias,
                preset.activation,
                preset.mu,
                policy,
                &mut rng,
            )?;
            let full = train_epochs(&mut net, data, preset.epochs, &mut rng)?;
            // Keep every `record_every`-th epoch and the last one.
            let rows = full
                .rows
                .into_iter()
                .filter(|r| r.iteration % every == 0 || r.iteration == preset.epochs)
                .collect();
            Ok(LearningCurve::single(rows))
        }
        Algorithm::Lasso | Algorithm::Dantzig => {
            let kind = if preset.algorithm == Algorithm::Lasso {
                SparseObjective::Lasso
            } else {
                SparseObjective::Dantzig
            };
            let mut l = SparseSgd::new(dim, preset.mu, preset.lambda_reg, kind, policy)?
                .with_batch_size(preset.batch_size)?;
            run_sparse(&mut l, data, preset.steps, every, obj, &mut rng)
        }
    }
}

/// Runs repetition `run` of `preset`: both requested arms on one shared
/// dataset, each starting from a copy of learner stream `(seed, 2·run+1)`.
pub fn run_single(preset: &ExperimentPreset, run: usize) -> Result<RunOutcome> {
    let wrap = |arm: Arm| {
        move |e: Error| Error::RunFailed {
            seed: preset.seed,
            run,
            arm: arm.as_str(),
            source: Box::new(e),
        }
    };
    let data = build_dataset(preset, run).map_err(wrap(Arm::Baseline))?;
    let fingerprint = data.fingerprint();
    let learner_rng = RngStream::new(preset.seed, 2 * run as u64 + 1);
    let hash = preset.config_hash();
    let arm = |which: Arm, policy: Option<FactorPolicy>| -> Result<ArmOutcome> {
        let mut curve = run_arm(preset, &data, policy, learner_rng.clone()).map_err(wrap(which))?;
        curve.config_hash = hash.clone();
        Ok(ArmOutcome {
            curve,
            data_fingerprint: fingerprint.clone(),
        })
    };
    let baseline = if preset.variant.runs_baseline() {
        Some(arm(Arm::Baseline, None)?)
    } else {
        None
    };
    let modified = if preset.variant.runs_modified() {
        Some(arm(Arm::Modified, Some(preset.factor_policy()?))?)
    } else {
        None
    };
    Ok(RunOutcome {
        run,
        baseline,
        modified,
    })
}

fn average_arm(runs: &[RunOutcome], pick: fn(&RunOutcome) -> Option<&ArmOutcome>) -> Result<Option<LearningCurve>> {
    let curves: Vec<LearningCurve> = runs
        .iter()
        .filter_map(|r| pick(r).map(|a| a.curve.clone()))
        .collect();
    if curves.is_empty() {
        Ok(None)
    } else {
        LearningCurve::average(&curves).map(Some)
    }
}

fn arm_summary(curve: &LearningCurve, mse_threshold: f64, obj_threshold: Option<f64>) -> Option<ArmSummary> {
    let last = curve.last()?;
    let mean_factor = curve.rows.iter().map(|r| r.factor_mean).sum::<f64>() / curve.rows.len() as f64;
    Some(ArmSummary {
        final_train_mse: last.train_mse,
        final_test_mse: last.test_mse,
        final_l1: last.l1_norm,
        mean_factor,
        iters_to_mse_threshold: curve.first_test_below(mse_threshold),
        final_objective: last.objective,
        iters_to_objective_threshold: obj_threshold.and_then(|t| curve.first_objective_below(t)),
    })
}

/// Summary statistics of a pair of averaged curves.
pub fn summarize(
    preset: &ExperimentPreset,
    baseline: Option<&LearningCurve>,
    modified: Option<&LearningCurve>,
) -> Result<Summary> {
    let reference = baseline
        .or(modified)
        .and_then(|c| c.last())
        .ok_or_else(|| Error::invalid("no curve to summarize"))?;
    let mse_threshold = reference.test_mse * 10f64.powf(MSE_MARGIN_DB / 10.0);
    let best_objective = [baseline, modified]
        .into_iter()
        .flatten()
        .filter_map(|c| c.min_objective())
        .min_by(|a, b| a.total_cmp(b));
    let objective_threshold = best_objective.map(|b| b + OBJECTIVE_MARGIN * b.abs());
    let runs = baseline.or(modified).map_or(0, |c| c.runs);
    Ok(Summary {
        runs,
        config_hash: preset.config_hash(),
        mse_threshold,
        best_objective,
        objective_threshold,
        baseline: baseline.and_then(|c| arm_summary(c, mse_threshold, objective_threshold)),
        modified: modified.and_then(|c| arm_summary(c, mse_threshold, objective_threshold)),
    })
}

/// Runs every repetition (concurrently) and averages the curves in run
/// order, so the result does not depend on scheduling.
pub fn run_monte_carlo(preset: &ExperimentPreset) -> Result<MonteCarloReport> {
    preset.validate()?;
    let runs: Vec<RunOutcome> = (0..preset.n_runs)
        .into_par_iter()
        .map(|r| run_single(preset, r))
        .collect::<Result<_>>()?;
    let baseline = average_arm(&runs, |r| r.baseline.as_ref())?;
    let modified = average_arm(&runs, |r| r.modified.as_ref())?;
    let summary = summarize(preset, baseline.as_ref(), modified.as_ref())?;
    Ok(MonteCarloReport {
        preset: preset.clone(),
        baseline,
        modified,
        runs,
        summary,
    })
}
