//! Multilayer perceptron trained by per-sample backpropagation, with an
//! optional per-layer contraction factor.
//!
//! Hidden layers share one activation; the output layer is linear and
//! scalar. The per-sample cost is `½(t − y)²`, so a single linear neuron
//! reduces exactly to LMS.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;

use crate::contraction::{applied_factor, FactorPolicy};
use crate::error::{Error, Result};
use crate::learner::{evaluate_mse, LearningCurve, OnlineLearner, Recorder, StepOutcome};
use crate::numeric::{check_dim, linf_norm, matrix_l1_norm, Dataset, LabeledSample};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Logistic,
    Identity,
}

impl Activation {
    pub fn apply(&self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Logistic => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative at pre-activation `z`.
    pub fn derivative(&self, z: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Logistic => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 - s)
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Logistic => "logistic",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "logistic" => Ok(Activation::Logistic),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::invalid(format!("unknown activation `{other}`"))),
        }
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `activations[0]` is the input; `activations[j + 1]` is layer `j`'s output.
    pub activations: Vec<DVector<f64>>,
    pub pre_activations: Vec<DVector<f64>>,
    version: u64,
}

impl ForwardTrace {
    pub fn output(&self) -> f64 {
        self.activations.last().map(|a| a[0]).unwrap_or(0.0)
    }
}

/// Error-descent increments `−∂cost/∂w` per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

impl Gradients {
    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|g| g.iter().all(|v| *v == 0.0))
            && self.biases.iter().all(|g| g.iter().all(|v| *v == 0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<DMatrix<f64>>,
    biases: Option<Vec<DVector<f64>>>,
    activation: Activation,
    mu: f64,
    policy: Option<FactorPolicy>,
    updates: usize,
    version: u64,
}

impl Mlp {
    pub fn new(
        layers: Vec<DMatrix<f64>>,
        biases: Option<Vec<DVector<f64>>>,
        activation: Activation,
        mu: f64,
        policy: Option<FactorPolicy>,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("network needs at least one layer"));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::invalid(format!("step size must be positive, got {mu}")));
        }
        for pair in layers.windows(2) {
            check_dim(pair[0].nrows(), pair[1].ncols(), "adjacent layer sizes")?;
        }
        if layers.last().map(|l| l.nrows()) != Some(1) {
            return Err(Error::invalid("output layer must have a single unit"));
        }
        for l in &layers {
            matrix_l1_norm(l)?;
        }
        if let Some(b) = &biases {
            if b.len() != layers.len() {
                return Err(Error::invalid("one bias vector per layer required"));
            }
            for (l, b) in layers.iter().zip(b) {
                check_dim(l.nrows(), b.len(), "bias length")?;
            }
        }
        Ok(Self {
            layers,
            biases,
            activation,
            mu,
            policy,
            updates: 0,
            version: 0,
        })
    }

    /// Uniform weights in `[−0.5, 0.5] / sqrt(fan_in)`, zero biases.
    /// `sizes` lists the input width, each hidden width and the output width.
    pub fn random(
        sizes: &[usize],
        use_bias: bool,
        activation: Activation,
        mu: f64,
        policy: Option<FactorPolicy>,
        rng: &mut RngStream,
    ) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::invalid("need at least input and output sizes, all positive"));
        }
        let layers: Vec<DMatrix<f64>> = sizes
            .windows(2)
            .map(|w| {
                let scale = 1.0 / (w[0] as f64).sqrt();
                DMatrix::from_fn(w[1], w[0], |_, _| rng.uniform_in(-0.5, 0.5) * scale)
            })
            .collect();
        let biases = use_bias.then(|| sizes[1..].iter().map(|&n| DVector::zeros(n)).collect());
        Self::new(layers, biases, activation, mu, policy)
    }

    pub fn layers(&self) -> &[DMatrix<f64>] {
        &self.layers
    }

    pub fn biases(&self) -> Option<&[DVector<f64>]> {
        self.biases.as_deref()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].ncols()
    }

    fn layer_activation(&self, j: usize) -> Activation {
        if j + 1 == self.layers.len() {
            Activation::Identity
        } else {
            self.activation
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardTrace> {
        check_dim(self.input_dim(), x.len(), "network input")?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        activations.push(DVector::from_column_slice(x));
        for (j, w) in self.layers.iter().enumerate() {
            let mut z = w * &activations[j];
            if let Some(b) = &self.biases {
                z += &b[j];
            }
            let act = self.layer_activation(j);
            activations.push(z.map(|v| act.apply(v)));
            pre_activations.push(z);
        }
        Ok(ForwardTrace {
            activations,
            pre_activations,
            version: self.version,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(self.forward(x)?.output())
    }

    /// Backpropagates the output error `t − y` through `trace`.
    pub fn backprop_deltas(&self, trace: &ForwardTrace, t: f64) -> Result<Gradients> {
        if trace.version != self.version || trace.pre_activations.len() != self.layers.len() {
            return Err(Error::invalid("forward trace does not belong to this network state"));
        }
        let n = self.layers.len();
        let mut weights = vec![DMatrix::zeros(0, 0); n];
        let mut biases = vec![DVector::zeros(0); n];
        let e = t - trace.output();
        let mut delta = DVector::from_element(1, e);
        for j in (0..n).rev() {
            weights[j] = &delta * trace.activations[j].transpose();
            biases[j] = delta.clone();
            if j > 0 {
                let back = self.layers[j].transpose() * &delta;
                let act = self.layer_activation(j - 1);
                delta = back.zip_map(&trace.pre_activations[j - 1], |b, z| b * act.derivative(z));
            }
        }
        Ok(Gradients { weights, biases })
    }

    /// `w(j) ← w(j) + f_j·μ·G_j`; returns the per-layer factors applied.
    pub fn update_weights(&mut self, grads: &Gradients, trace: &ForwardTrace) -> Result<Vec<f64>> {
        if grads.weights.len() != self.layers.len() || trace.version != self.version {
            return Err(Error::invalid("gradients or trace do not match this network"));
        }
        for (g, w) in grads.weights.iter().zip(&self.layers) {
            if g.shape() != w.shape() {
                return Err(Error::invalid("gradient shape mismatch"));
            }
        }
        let first = self.updates == 0;
        let mut factors = Vec::with_capacity(self.layers.len());
        let mut next_layers = self.layers.clone();
        let mut next_biases = self.biases.clone();
        for (j, w) in next_layers.iter_mut().enumerate() {
            let x_inf = linf_norm(trace.activations[j].as_slice())?;
            let f = applied_factor(self.policy.as_ref(), first, matrix_l1_norm(w)?, x_inf)?;
            let step = f * self.mu;
            *w += &grads.weights[j] * step;
            if let Some(b) = next_biases.as_mut() {
                b[j] += &grads.biases[j] * step;
            }
            factors.push(f);
        }
        let finite = next_layers.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && next_biases
                .iter()
                .flatten()
                .all(|b| b.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::Divergence("non-finite network weight".into()));
        }
        self.layers = next_layers;
        self.biases = next_biases;
        self.updates += 1;
        self.version += 1;
        Ok(factors)
    }

    /// Forward, backward and update on one sample; the factor reported is
    /// the mean over layers.
    pub fn train_sample(&mut self, s: &LabeledSample) -> Result<StepOutcome> {
        let trace = self.forward(&s.x)?;
        let grads = self.backprop_deltas(&trace, s.t)?;
        let factors = self.update_weights(&grads, &trace)?;
        let prediction = trace.output();
        Ok(StepOutcome {
            prediction,
            error: s.t - prediction,
            factor: factors.iter().sum::<f64>() / factors.len() as f64,
        })
    }

    /// Sum over layers of the entrywise L1 norm.
    pub fn l1_norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|w| w.iter().map(|v| v.abs()).sum::<f64>())
            .sum()
    }
}

impl OnlineLearner for Mlp {
    fn step(&mut self, s: &LabeledSample) -> Result<StepOutcome> {
        self.train_sample(s)
    }

    fn predict(&self, x: &[f64]) -> Result<f64> {
        Mlp::predict(self, x)
    }

    fn weight_l1(&self) -> f64 {
        self.l1_norm()
    }
}

/// Trains for `epochs` passes, each over the training set in an order
/// shuffled by `rng`, and records one row per epoch.
pub fn train_epochs(
    mlp: &mut Mlp,
    data: &Dataset,
    epochs: usize,
    rng: &mut RngStream,
) -> Result<LearningCurve> {
    if epochs == 0 {
        return Err(Error::invalid("epochs must be at least 1"));
    }
    if data.train.is_empty() {
        return Err(Error::invalid("no training samples"));
    }
    if data.test.is_empty() {
        return Err(Error::invalid("test set is empty"));
    }
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut rec = Recorder::default();
    for epoch in 1..=epochs {
        order.shuffle(rng);
        for &i in &order {
            let out = mlp.train_sample(&data.train[i])?;
            rec.push_factor(out.factor);
        }
        let train = evaluate_mse(&data.train, |x| mlp.predict(x))?;
        let test = evaluate_mse(&data.test, |x| mlp.predict(x))?;
        rec.checkpoint_values(epoch, train, test, mlp.l1_norm(), None);
    }
    Ok(LearningCurve::single(rec.rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::Lms;
    use crate::numeric::WeightState;

    fn sample(x: &[f64], t: f64) -> LabeledSample {
        LabeledSample::new(x.to_vec(), t).unwrap()
    }

    #[test]
    fn single_identity_layer_forward() {
        let net = Mlp::new(
            vec![DMatrix::from_row_slice(1, 2, &[1.0, 0.0])],
            None,
            Activation::Identity,
            0.1,
            None,
        )
        .unwrap();
        assert_eq!(net.predict(&[0.3, 7.0]).unwrap(), 0.3);
        assert!(net.forward(&[1.0]).is_err());
    }

    #[test]
    fn zero_weights_give_zero_hidden_activations() {
        let net = Mlp::new(
            vec![DMatrix::zeros(3, 2), DMatrix::zeros(1, 3)],
            None,
            Activation::Tanh,
            0.1,
            None,
        )
        .unwrap();
        let tr = net.forward(&[0.4, -2.0]).unwrap();
        assert!(tr.activations[1].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn construction_checks_shapes() {
        assert!(Mlp::new(
            vec![DMatrix::zeros(3, 2), DMatrix::zeros(1, 4)],
            None,
            Activation::Tanh,
            0.1,
            None
        )
        .is_err());
        assert!(Mlp::new(vec![DMatrix::zeros(2, 2)], None, Activation::Tanh, 0.1, None).is_err());
        assert!(Mlp::new(vec![DMatrix::zeros(1, 2)], None, Activation::Tanh, -0.1, None).is_err());
    }

    #[test]
    fn zero_error_gives_zero_gradients() {
        let mut rng = RngStream::new(1, 0);
        let net = Mlp::random(&[2, 3, 1], true, Activation::Tanh, 0.1, None, &mut rng).unwrap();
        let tr = net.forward(&[0.2, 0.9]).unwrap();
        let g = net.backprop_deltas(&tr, tr.output()).unwrap();
        assert!(g.is_zero());
    }

    #[test]
    fn single_linear_neuron_gradient_is_lms() {
        let net = Mlp::new(
            vec![DMatrix::from_row_slice(1, 3, &[0.2, -0.1, 0.4])],
            None,
            Activation::Tanh,
            0.1,
            None,
        )
        .unwrap();
        let x = [1.0, 0.5, -2.0];
        let tr = net.forward(&x).unwrap();
        let e = 0.3 - tr.output();
        let g = net.backprop_deltas(&tr, 0.3).unwrap();
        for i in 0..3 {
            assert!((g.weights[0][(0, i)] - e * x[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn stale_trace_rejected() {
        let mut rng = RngStream::new(2, 0);
        let mut net = Mlp::random(&[2, 2, 1], false, Activation::Tanh, 0.1, None, &mut rng).unwrap();
        let tr = net.forward(&[0.1, 0.2]).unwrap();
        let g = net.backprop_deltas(&tr, 1.0).unwrap();
        net.update_weights(&g, &tr).unwrap();
        assert!(net.backprop_deltas(&tr, 1.0).is_err());
        assert!(net.update_weights(&g, &tr).is_err());
    }

    #[test]
    fn zero_gradients_leave_network_unchanged() {
        let mut rng = RngStream::new(3, 0);
        let mut net = Mlp::random(&[2, 4, 1], true, Activation::Tanh, 0.1, Some(FactorPolicy::default()), &mut rng)
            .unwrap();
        let before = net.layers().to_vec();
        let tr = net.forward(&[0.5, -0.5]).unwrap();
        let g = net.backprop_deltas(&tr, tr.output()).unwrap();
        net.update_weights(&g, &tr).unwrap();
        assert_eq!(net.layers(), before.as_slice());
    }

    #[test]
    fn identity_net_reproduces_modified_lms() {
        let w0 = vec![0.3, -0.2, 0.1];
        let policy = Some(FactorPolicy::default());
        let mut net = Mlp::new(
            vec![DMatrix::from_row_slice(1, 3, &w0)],
            None,
            Activation::Identity,
            0.05,
            policy,
        )
        .unwrap();
        let mut lms = Lms::new(3, 0.05, policy).unwrap();
        // Warm both up identically from zero so the factor is active.
        let mut zero_net = Mlp::new(
            vec![DMatrix::zeros(1, 3)],
            None,
            Activation::Identity,
            0.05,
            policy,
        )
        .unwrap();
        let samples = [
            sample(&[1.0, 0.5, -0.3], 0.8),
            sample(&[-0.2, 0.9, 0.4], -0.5),
            sample(&[0.6, -0.7, 1.1], 0.2),
        ];
        for s in &samples {
            let a = zero_net.train_sample(s).unwrap();
            let b = lms.step(s).unwrap();
            assert!((a.factor - b.factor).abs() < 1e-12);
            for i in 0..3 {
                assert!((zero_net.layers()[0][(0, i)] - lms.weights().as_slice()[i]).abs() < 1e-12);
            }
        }
        // And from a nonzero start past the first update.
        let mut lms = Lms::from_state(WeightState::from_vec(w0).unwrap(), 0.05, policy, 1).unwrap();
        net.updates = 1;
        let s = &samples[2];
        let a = net.train_sample(s).unwrap();
        let b = lms.step(s).unwrap();
        assert!((a.factor - b.factor).abs() < 1e-12 && a.factor != 1.0);
        for i in 0..3 {
            assert!((net.layers()[0][(0, i)] - lms.weights().as_slice()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn neutral_factor_matches_baseline() {
        // Every layer with ‖w(j)‖₁ = 1 under raw mode gives f_j = 1.
        let layers = vec![
            DMatrix::from_row_slice(2, 2, &[0.25, -0.25, 0.25, 0.25]),
            DMatrix::from_row_slice(1, 2, &[0.5, -0.5]),
        ];
        let mut base = Mlp::new(layers.clone(), None, Activation::Tanh, 0.1, None).unwrap();
        let mut modi = Mlp::new(layers, None, Activation::Tanh, 0.1, Some(FactorPolicy::raw())).unwrap();
        base.updates = 1;
        modi.updates = 1;
        let s = sample(&[0.7, -0.4], 1.0);
        let a = base.train_sample(&s).unwrap();
        let b = modi.train_sample(&s).unwrap();
        assert_eq!(a, b);
        assert_eq!(base.layers(), modi.layers());
    }

    #[test]
    fn train_epochs_edge_cases() {
        let mut rng = RngStream::new(4, 0);
        let mut net = Mlp::random(&[2, 3, 1], true, Activation::Tanh, 0.1, None, &mut rng).unwrap();
        let test = vec![sample(&[0.0, 1.0], 1.0)];
        let empty = Dataset::new(vec![], test.clone(), 2).unwrap();
        assert!(train_epochs(&mut net, &empty, 1, &mut rng).is_err());

        let s = sample(&[0.3, -0.6], 1.0);
        let one = Dataset::new(vec![s.clone()], test, 2).unwrap();
        assert!(train_epochs(&mut net, &one, 0, &mut rng).is_err());
        let mut a = net.clone();
        let mut b = net.clone();
        let curve = train_epochs(&mut a, &one, 1, &mut rng).unwrap();
        assert_eq!(curve.rows.len(), 1);
        let tr = b.forward(&s.x).unwrap();
        let g = b.backprop_deltas(&tr, s.t).unwrap();
        b.update_weights(&g, &tr).unwrap();
        assert_eq!(a.layers(), b.layers());
        assert_eq!(a.biases(), b.biases());
    }
}
