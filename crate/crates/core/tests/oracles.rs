use contra_core::kernel::gaussian_kernel;
use contra_core::learner::OnlineLearner;
use contra_core::linear::Rls;
use contra_core::neural::{Activation, Mlp};
use contra_core::numeric::LabeledSample;
use contra_core::rng::RngStream;
use contra_core::sparse::{lasso_objective, lasso_subgradient, SparseObjective, SparseSgd};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

fn random_vec(rng: &mut RngStream, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.uniform_in(lo, hi)).collect()
}

#[test]
fn rls_matches_ridge_solution() {
    let mut rng = RngStream::new(11, 0);
    let delta = 0.01;
    for case in 0..10 {
        let dim = 1 + rng.below(8);
        let n = dim + rng.below(50 - dim + 1);
        let xs = DMatrix::from_fn(n, dim, |_, _| rng.uniform_in(-1.0, 1.0));
        let ts = DVector::from_fn(n, |_, _| rng.gaussian());
        let mut rls = Rls::new(dim, 1.0, delta, None).unwrap();
        for i in 0..n {
            let x: Vec<f64> = xs.row(i).iter().copied().collect();
            rls.step(&LabeledSample::new(x, ts[i]).unwrap()).unwrap();
        }
        let a = xs.transpose() * &xs + DMatrix::identity(dim, dim) * delta;
        let w = a.lu().solve(&(xs.transpose() * &ts)).unwrap();
        let err = rls
            .weights()
            .as_slice()
            .iter()
            .zip(w.iter())
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "case {case}: n={n} dim={dim} err={err}");
    }
}

fn mlp_cost(layers: &[DMatrix<f64>], biases: &Option<Vec<DVector<f64>>>, x: &[f64], t: f64) -> f64 {
    let net = Mlp::new(layers.to_vec(), biases.clone(), Activation::Tanh, 0.1, None).unwrap();
    let e = t - net.predict(x).unwrap();
    0.5 * e * e
}

#[test]
fn mlp_gradients_match_finite_differences() {
    let mut rng = RngStream::new(12, 0);
    let h = 1e-6;
    for case in 0..25 {
        let input = 1 + rng.below(5);
        let hidden = 1 + rng.below(6);
        let use_bias = case % 2 == 0;
        let mut net =
            Mlp::random(&[input, hidden, 1], use_bias, Activation::Tanh, 0.1, None, &mut rng).unwrap();
        if let Some(b) = net.biases() {
            // Nonzero biases so their gradients are exercised too.
            let b: Vec<DVector<f64>> = b.iter().map(|v| v.map(|_| rng.uniform_in(-0.5, 0.5))).collect();
            net = Mlp::new(net.layers().to_vec(), Some(b), Activation::Tanh, 0.1, None).unwrap();
        }
        let x = random_vec(&mut rng, input, -1.0, 1.0);
        let t = if rng.coin() { 1.0 } else { -1.0 };
        let trace = net.forward(&x).unwrap();
        let g = net.backprop_deltas(&trace, t).unwrap();

        let layers = net.layers().to_vec();
        let biases = net.biases().map(|b| b.to_vec());
        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        for j in 0..layers.len() {
            for idx in 0..layers[j].len() {
                let mut plus = layers.clone();
                plus[j][idx] += h;
                let mut minus = layers.clone();
                minus[j][idx] -= h;
                numeric.push((mlp_cost(&plus, &biases, &x, t) - mlp_cost(&minus, &biases, &x, t)) / (2.0 * h));
                // Gradients are stored as descent increments.
                analytic.push(-g.weights[j][idx]);
            }
            if let Some(b) = &biases {
                for idx in 0..b[j].len() {
                    let mut plus = b.clone();
                    plus[j][idx] += h;
                    let mut minus = b.clone();
                    minus[j][idx] -= h;
                    numeric.push(
                        (mlp_cost(&layers, &Some(plus), &x, t) - mlp_cost(&layers, &Some(minus), &x, t))
                            / (2.0 * h),
                    );
                    analytic.push(-g.biases[j][idx]);
                }
            }
        }
        let a = DVector::from_vec(analytic);
        let n = DVector::from_vec(numeric);
        let rel = (&a - &n).norm() / a.norm().max(n.norm()).max(1e-12);
        assert!(rel < 1e-5, "case {case}: relative error {rel}");
    }
}

#[test]
fn lasso_subgradient_matches_finite_differences() {
    let mut rng = RngStream::new(13, 0);
    let h = 1e-6;
    for case in 0..25 {
        let dim = 1 + rng.below(6);
        // Keep every coordinate away from the kink at zero.
        let w: Vec<f64> = (0..dim)
            .map(|_| {
                let m = rng.uniform_in(0.1, 1.0);
                if rng.coin() { m } else { -m }
            })
            .collect();
        let s = LabeledSample::new(random_vec(&mut rng, dim, -1.0, 1.0), rng.gaussian()).unwrap();
        let lambda = rng.uniform_in(0.0, 0.5);
        let cost = |w: &[f64]| {
            let r = s.t - w.iter().zip(&s.x).map(|(a, b)| a * b).sum::<f64>();
            0.5 * r * r + lambda * w.iter().map(|v| v.abs()).sum::<f64>()
        };
        let g = lasso_subgradient(&w, &s, lambda).unwrap();
        let num: Vec<f64> = (0..dim)
            .map(|i| {
                let mut p = w.clone();
                p[i] += h;
                let mut m = w.clone();
                m[i] -= h;
                (cost(&p) - cost(&m)) / (2.0 * h)
            })
            .collect();
        let a = DVector::from_vec(g);
        let n = DVector::from_vec(num);
        let rel = (&a - &n).norm() / a.norm().max(n.norm()).max(1e-12);
        assert!(rel < 1e-5, "case {case}: relative error {rel}");
    }
}

#[test]
fn gaussian_gram_is_positive_semidefinite() {
    let mut rng = RngStream::new(14, 0);
    for _ in 0..50 {
        let n = 1 + rng.below(20);
        let d = 1 + rng.below(6);
        let sigma = rng.uniform_in(0.05, 5.0);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| random_vec(&mut rng, d, -2.0, 2.0)).collect();
        let k = DMatrix::from_fn(n, n, |i, j| gaussian_kernel(&pts[i], &pts[j], sigma).unwrap());
        assert_eq!(k, k.transpose());
        let min = SymmetricEigen::new(k).eigenvalues.min();
        assert!(min >= -1e-10, "min eigenvalue {min}");
    }
}

#[test]
fn lasso_sgd_reaches_grid_minimum() {
    let mut rng = RngStream::new(15, 0);
    let planted = [1.0, -0.5, 0.0];
    let samples: Vec<LabeledSample> = (0..50)
        .map(|_| {
            let x = random_vec(&mut rng, 3, -1.0, 1.0);
            let t = x.iter().zip(&planted).map(|(a, b)| a * b).sum::<f64>() + 0.1 * rng.gaussian();
            LabeledSample::new(x, t).unwrap()
        })
        .collect();
    let lambda = 0.01;

    let grid: Vec<f64> = (0..=80).map(|i| -2.0 + 0.05 * i as f64).collect();
    let mut best = f64::INFINITY;
    for &a in &grid {
        for &b in &grid {
            for &c in &grid {
                best = best.min(lasso_objective(&[a, b, c], &samples, lambda).unwrap());
            }
        }
    }

    let mut sgd = SparseSgd::new(3, 0.005, lambda, SparseObjective::Lasso, None).unwrap();
    for _ in 0..10_000 {
        let i = rng.below(samples.len());
        sgd.step(&samples[i]).unwrap();
    }
    let got = lasso_objective(sgd.weights().as_slice(), &samples, lambda).unwrap();
    assert!((got - best).abs() <= 0.05 * best, "sgd {got} vs grid {best}");
}

#[test]
fn baseline_mlp_fits_a_linear_target() {
    let mut rng = RngStream::new(16, 0);
    let w = [0.3, -0.2, 0.1];
    let samples: Vec<LabeledSample> = (0..50)
        .map(|_| {
            let x = random_vec(&mut rng, 3, -1.0, 1.0);
            let t = x.iter().zip(&w).map(|(a, b)| a * b).sum();
            LabeledSample::new(x, t).unwrap()
        })
        .collect();
    let cost = |net: &Mlp| {
        samples
            .iter()
            .map(|s| (s.t - net.predict(&s.x).unwrap()).powi(2))
            .sum::<f64>()
            / samples.len() as f64
    };
    let mut net = Mlp::random(&[3, 4, 1], true, Activation::Tanh, 0.05, None, &mut rng).unwrap();
    let initial = cost(&net);
    for _ in 0..100 {
        for s in &samples {
            net.train_sample(s).unwrap();
        }
    }
    let fin = cost(&net);
    assert!(fin < 0.01 * initial, "initial {initial}, final {fin}");
}
