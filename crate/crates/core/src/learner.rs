//! The online-learner abstraction and the learning-curve recorder.

use crate::error::{Error, Result};
use crate::numeric::{mse, Dataset, LabeledSample};
use crate::sparse::{dantzig_objective, lasso_objective, SparseObjective};

/// What a single update produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Output before the update.
    pub prediction: f64,
    /// `t − prediction`.
    pub error: f64,
    /// Multiplier actually applied to the increment (1 for baselines).
    pub factor: f64,
}

pub trait OnlineLearner {
    fn step(&mut self, sample: &LabeledSample) -> Result<StepOutcome>;

    fn predict(&self, x: &[f64]) -> Result<f64>;

    /// L1 norm of whatever the learner adapts.
    fn weight_l1(&self) -> f64;

    /// Explicit linear weights, when the learner has them.
    fn linear_weights(&self) -> Option<&[f64]> {
        None
    }
}

/// One checkpoint of a learning curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub iteration: usize,
    pub train_mse: f64,
    pub test_mse: f64,
    pub l1_norm: f64,
    /// Mean applied factor over the updates since the previous checkpoint.
    pub factor_mean: f64,
    /// Regularized objective on the training set, for learners with linear
    /// weights when an objective was requested.
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LearningCurve {
    pub rows: Vec<CurveRow>,
    /// Number of Monte Carlo runs averaged into this curve.
    pub runs: usize,
    pub config_hash: String,
}

impl LearningCurve {
    pub fn single(rows: Vec<CurveRow>) -> Self {
        Self {
            rows,
            runs: 1,
            config_hash: String::new(),
        }
    }

    pub fn last(&self) -> Option<&CurveRow> {
        self.rows.last()
    }

    /// Pointwise mean of curves sharing the same checkpoints, accumulated in
    /// the given order.
    pub fn average(curves: &[LearningCurve]) -> Result<LearningCurve> {
        let first = curves
            .first()
            .ok_or_else(|| Error::invalid("no curves to average"))?;
        let n = curves.len() as f64;
        let mut rows = Vec::with_capacity(first.rows.len());
        for (i, proto) in first.rows.iter().enumerate() {
            let mut acc = CurveRow {
                iteration: proto.iteration,
                train_mse: 0.0,
                test_mse: 0.0,
                l1_norm: 0.0,
                factor_mean: 0.0,
                objective: proto.objective.map(|_| 0.0),
            };
            for c in curves {
                let r = c
                    .rows
                    .get(i)
                    .filter(|r| r.iteration == proto.iteration)
                    .ok_or_else(|| Error::invalid("curves have different checkpoints"))?;
                acc.train_mse += r.train_mse;
                acc.test_mse += r.test_mse;
                acc.l1_norm += r.l1_norm;
                acc.factor_mean += r.factor_mean;
                acc.objective = match (acc.objective, r.objective) {
                    (Some(a), Some(b)) => Some(a + b),
                    _ => None,
                };
            }
            acc.train_mse /= n;
            acc.test_mse /= n;
            acc.l1_norm /= n;
            acc.factor_mean /= n;
            acc.objective = acc.objective.map(|o| o / n);
            rows.push(acc);
        }
        Ok(LearningCurve {
            rows,
            runs: curves.iter().map(|c| c.runs).sum(),
            config_hash: first.config_hash.clone(),
        })
    }

    /// First checkpoint whose test MSE is at or below `threshold`.
    pub fn first_test_below(&self, threshold: f64) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.test_mse <= threshold)
            .map(|r| r.iteration)
    }

    /// First checkpoint whose objective is at or below `threshold`.
    pub fn first_objective_below(&self, threshold: f64) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.objective.is_some_and(|o| o <= threshold))
            .map(|r| r.iteration)
    }

    pub fn min_objective(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.objective)
            .min_by(|a, b| a.total_cmp(b))
    }
}

/// Regularized objective to log alongside the MSEs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveSpec {
    pub kind: SparseObjective,
    pub lambda: f64,
}

impl ObjectiveSpec {
    pub fn evaluate(&self, w: &[f64], samples: &[LabeledSample]) -> Result<f64> {
        match self.kind {
            SparseObjective::Lasso => lasso_objective(w, samples, self.lambda),
            SparseObjective::Dantzig => dantzig_objective(w, samples, self.lambda),
        }
    }
}

pub(crate) fn evaluate_mse<F>(samples: &[LabeledSample], predict: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let preds = samples
        .iter()
        .map(|s| predict(&s.x))
        .collect::<Result<Vec<_>>>()?;
    let targets: Vec<f64> = samples.iter().map(|s| s.t).collect();
    mse(&preds, &targets)
}

/// Accumulates factors between checkpoints and builds rows.
#[derive(Debug, Default)]
pub(crate) struct Recorder {
    factor_sum: f64,
    factor_count: usize,
    pub rows: Vec<CurveRow>,
}

impl Recorder {
    pub fn push_factor(&mut self, f: f64) {
        self.factor_sum += f;
        self.factor_count += 1;
    }

    pub fn checkpoint<L: OnlineLearner + ?Sized>(
        &mut self,
        iteration: usize,
        learner: &L,
        data: &Dataset,
        objective: Option<&ObjectiveSpec>,
    ) -> Result<()> {
        let train_mse = evaluate_mse(&data.train, |x| learner.predict(x))?;
        let test_mse = evaluate_mse(&data.test, |x| learner.predict(x))?;
        let objective = match (objective, learner.linear_weights()) {
            (Some(spec), Some(w)) => Some(spec.evaluate(w, &data.train)?),
            _ => None,
        };
        self.checkpoint_values(iteration, train_mse, test_mse, learner.weight_l1(), objective);
        Ok(())
    }

    pub fn checkpoint_values(
        &mut self,
        iteration: usize,
        train_mse: f64,
        test_mse: f64,
        l1_norm: f64,
        objective: Option<f64>,
    ) {
        let factor_mean = if self.factor_count == 0 {
            1.0
        } else {
            self.factor_sum / self.factor_count as f64
        };
        self.factor_sum = 0.0;
        self.factor_count = 0;
        self.rows.push(CurveRow {
            iteration,
            train_mse,
            test_mse,
            l1_norm,
            factor_mean,
            objective,
        });
    }
}

/// Runs one pass over the training samples in order, recording a checkpoint
/// every `record_every` updates and after the last one.
pub fn run_online<L: OnlineLearner + ?Sized>(
    learner: &mut L,
    data: &Dataset,
    record_every: usize,
) -> Result<LearningCurve> {
    run_online_with(learner, data, record_every, None)
}

pub fn run_online_with<L: OnlineLearner + ?Sized>(
    learner: &mut L,
    data: &Dataset,
    record_every: usize,
    objective: Option<&ObjectiveSpec>,
) -> Result<LearningCurve> {
    if record_every == 0 {
        return Err(Error::invalid("record_every must be positive"));
    }
    if data.train.is_empty() {
        return Ok(LearningCurve::single(Vec::new()));
    }
    if data.test.is_empty() {
        return Err(Error::invalid("test set is empty"));
    }
    let mut rec = Recorder::default();
    let n = data.train.len();
    for (i, s) in data.train.iter().enumerate() {
        let out = learner.step(s)?;
        rec.push_factor(out.factor);
        let iteration = i + 1;
        if iteration % record_every == 0 || iteration == n {
            rec.checkpoint(iteration, learner, data, objective)?;
        }
    }
    Ok(LearningCurve::single(rec.rows))
}

/// Number of rows `run_online` produces for `n` updates.
pub fn checkpoint_count(n: usize, record_every: usize) -> usize {
    if record_every == 0 {
        0
    } else {
        n.div_ceil(record_every)
    }
}
