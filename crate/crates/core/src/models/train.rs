//! Full-batch training with softmax cross-entropy, Adam or SGD, and early
//! stopping on validation loss.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::network::{backward, forward, forward_cached};
use super::{Hyperparameters, ModelParams, Operator, Variant};
use crate::error::{HgxError, Result};
use crate::hypergraph::Hypergraph;

type Mat = DMatrix<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Coefficient of `(1/2) sum ||W||^2` added to the training loss.
    pub weight_decay: f64,
    pub max_epochs: usize,
    /// Epochs without validation-loss improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            weight_decay: 5e-4,
            max_epochs: 300,
            patience: 100,
            seed: 0,
            optimizer: Optimizer::Adam,
        }
    }
}

/// Row indices of the labelled subsets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub test_accuracy: Option<f64>,
    /// Epoch whose parameters were kept (lowest validation loss).
    pub best_epoch: usize,
    pub epochs_run: usize,
    #[serde(skip)]
    pub loss_curve: Vec<EpochLog>,
}

impl Metrics {
    pub fn loss_curve_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss,train_accuracy,val_accuracy\n");
        for e in &self.loss_curve {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.epoch, e.train_loss, e.val_loss, e.train_accuracy, e.val_accuracy
            ));
        }
        out
    }
}

/// Mean softmax cross-entropy over `mask` and its gradient w.r.t. the logits.
fn cross_entropy(logits: &Mat, labels: &[usize], mask: &[usize]) -> (f64, Mat) {
    let mut grad = Mat::zeros(logits.nrows(), logits.ncols());
    let scale = 1.0 / mask.len() as f64;
    let mut loss = 0.0;
    for &i in mask {
        let row = logits.row(i);
        let max = row.max();
        let sum: f64 = row.iter().map(|z| (z - max).exp()).sum();
        let log_norm = max + sum.ln();
        loss += log_norm - row[labels[i]];
        for c in 0..logits.ncols() {
            grad[(i, c)] = (row[c] - log_norm).exp() * scale;
        }
        grad[(i, labels[i])] -= scale;
    }
    (loss * scale, grad)
}

pub fn accuracy(logits: &Mat, labels: &[usize], mask: &[usize]) -> f64 {
    if mask.is_empty() {
        return f64::NAN;
    }
    let correct = mask
        .iter()
        .filter(|&&i| {
            let row = logits.row(i);
            // first maximum wins ties
            let mut best = 0;
            for c in 1..row.len() {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best == labels[i]
        })
        .count();
    correct as f64 / mask.len() as f64
}

fn decay_term(params: &ModelParams, wd: f64) -> f64 {
    0.5 * wd * params.weights.iter().map(|w| w.norm_squared()).sum::<f64>()
}

/// Training loss (cross-entropy over `mask` plus weight decay) and its
/// gradient for every weight matrix.
pub fn loss_and_gradients(
    params: &ModelParams,
    op: &Operator,
    x: &Mat,
    labels: &[usize],
    mask: &[usize],
    weight_decay: f64,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(f64, Vec<Mat>)> {
    if mask.is_empty() {
        return Err(HgxError::InvalidArgument("empty training mask".into()));
    }
    let (logits, cache) = forward_cached(params, op, x, rng)?;
    let (ce, g) = cross_entropy(&logits, labels, mask);
    let mut grads = backward(params, op, &cache, &g);
    for (gw, w) in grads.iter_mut().zip(&params.weights) {
        *gw += w * weight_decay;
    }
    Ok((ce + decay_term(params, weight_decay), grads))
}

fn validate_inputs(params: &ModelParams, n: usize, labels: &[usize], split: &Split) -> Result<()> {
    if labels.len() != n {
        return Err(HgxError::Dimension(format!("{} labels for {n} vertices", labels.len())));
    }
    if split.train.is_empty() {
        return Err(HgxError::InvalidArgument("empty training mask".into()));
    }
    if split.val.is_empty() {
        return Err(HgxError::InvalidArgument("empty validation mask".into()));
    }
    let mut owner = vec![None; n];
    for (name, mask) in [("train", &split.train), ("val", &split.val), ("test", &split.test)] {
        for &i in mask {
            if i >= n {
                return Err(HgxError::InvalidArgument(format!("{name} index {i} out of range")));
            }
            if let Some(prev) = owner[i].replace(name) {
                return Err(HgxError::InvalidArgument(format!(
                    "vertex {i} is in both {prev} and {name}"
                )));
            }
            if labels[i] >= params.output_dim {
                return Err(HgxError::InvalidArgument(format!(
                    "label {} of vertex {i} exceeds {} classes",
                    labels[i], params.output_dim
                )));
            }
        }
    }
    for c in 0..params.output_dim {
        if !split.train.iter().any(|&i| labels[i] == c) {
            return Err(HgxError::InvalidArgument(format!("class {c} has no training example")));
        }
    }
    Ok(())
}

struct Adam {
    m: Vec<Mat>,
    v: Vec<Mat>,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

impl Adam {
    fn new(params: &ModelParams) -> Self {
        let zeros: Vec<Mat> = params.weights.iter().map(|w| Mat::zeros(w.nrows(), w.ncols())).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    fn step(&mut self, params: &mut ModelParams, grads: &[Mat], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        for (i, g) in grads.iter().enumerate() {
            self.m[i] = &self.m[i] * BETA1 + g * (1.0 - BETA1);
            self.v[i] = &self.v[i] * BETA2 + g.component_mul(g) * (1.0 - BETA2);
            let update = self.m[i].zip_map(&self.v[i], |m, v| lr * (m / c1) / ((v / c2).sqrt() + EPS));
            params.weights[i] -= update;
        }
    }
}

/// Builds the propagation operator of `h` (renormalized unless the
/// hyperparameters turn it off), initializes weights from `config.seed` and
/// trains.
pub fn train(
    variant: Variant,
    hyper: Hyperparameters,
    h: &Hypergraph,
    x: &Mat,
    labels: &[usize],
    split: &Split,
    config: &TrainConfig,
) -> Result<(ModelParams, Metrics)> {
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let op = Operator::from_hypergraph(h, hyper.use_renormalization);
    let params = ModelParams::init(variant, hyper, x.ncols(), classes, config.seed)?;
    train_with_operator(params, &op, x, labels, split, config)
}

pub fn train_with_operator(
    mut params: ModelParams,
    op: &Operator,
    x: &Mat,
    labels: &[usize],
    split: &Split,
    config: &TrainConfig,
) -> Result<(ModelParams, Metrics)> {
    validate_inputs(&params, op.n(), labels, split)?;
    if config.learning_rate.is_nan() || config.learning_rate <= 0.0 || config.weight_decay < 0.0 {
        return Err(HgxError::InvalidArgument("learning rate must be positive and weight decay nonnegative".into()));
    }
    if config.patience > config.max_epochs {
        return Err(HgxError::InvalidArgument("patience exceeds max_epochs".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut adam = Adam::new(&params);
    let mut best = (f64::INFINITY, 0usize, params.clone());
    let mut curve = Vec::new();
    for epoch in 1..=config.max_epochs {
        let (train_loss, grads) =
            loss_and_gradients(&params, op, x, labels, &split.train, config.weight_decay, Some(&mut rng))?;
        if !train_loss.is_finite() {
            return Err(HgxError::NonFiniteLoss { epoch });
        }
        match config.optimizer {
            Optimizer::Adam => adam.step(&mut params, &grads, config.learning_rate),
            Optimizer::Sgd => {
                for (w, g) in params.weights.iter_mut().zip(&grads) {
                    *w -= g * config.learning_rate;
                }
            }
        }
        let logits = forward(&params, op, x)?;
        let (val_loss, _) = cross_entropy(&logits, labels, &split.val);
        if !val_loss.is_finite() {
            return Err(HgxError::NonFiniteLoss { epoch });
        }
        curve.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
            train_accuracy: accuracy(&logits, labels, &split.train),
            val_accuracy: accuracy(&logits, labels, &split.val),
        });
        if val_loss < best.0 {
            best = (val_loss, epoch, params.clone());
        } else if epoch - best.1 >= config.patience {
            break;
        }
    }
    let (_, best_epoch, params) = best;
    let logits = forward(&params, op, x)?;
    let metrics = Metrics {
        train_accuracy: accuracy(&logits, labels, &split.train),
        val_accuracy: accuracy(&logits, labels, &split.val),
        test_accuracy: (!split.test.is_empty()).then(|| accuracy(&logits, labels, &split.test)),
        best_epoch,
        epochs_run: curve.len(),
        loss_curve: curve,
    };
    Ok((params, metrics))
}

/// Largest `|analytic - numeric| / max(1, |numeric|)` over every weight entry,
/// with central differences of step `1e-5`. Dropout is disabled.
pub fn gradient_check(
    params: &ModelParams,
    op: &Operator,
    x: &Mat,
    labels: &[usize],
    mask: &[usize],
    weight_decay: f64,
) -> Result<f64> {
    const STEP: f64 = 1e-5;
    let (_, analytic) = loss_and_gradients(params, op, x, labels, mask, weight_decay, None)?;
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for (i, g) in analytic.iter().enumerate() {
        for j in 0..g.len() {
            let orig = probe.weights[i][j];
            probe.weights[i][j] = orig + STEP;
            let (plus, _) = loss_and_gradients(&probe, op, x, labels, mask, weight_decay, None)?;
            probe.weights[i][j] = orig - STEP;
            let (minus, _) = loss_and_gradients(&probe, op, x, labels, mask, weight_decay, None)?;
            probe.weights[i][j] = orig;
            let numeric = (plus - minus) / (2.0 * STEP);
            worst = worst.max((g[j] - numeric).abs() / numeric.abs().max(1.0));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::super::{BetaSchedule, ChebBasis};
    use super::*;
    use crate::fixtures;

    fn small_problem() -> (Operator, Mat, Vec<usize>) {
        let h = fixtures::triangle(-1.0);
        let x = Mat::from_row_slice(3, 4, &[0.3, -1.2, 0.8, 0.1, -0.5, 0.4, 1.1, -0.9, 0.9, 0.2, -0.3, 0.6]);
        (Operator::from_hypergraph(&h, true), x, vec![0, 1, 1])
    }

    fn check(variant: Variant, tweak: impl Fn(&mut Hyperparameters)) -> f64 {
        let (op, x, labels) = small_problem();
        let mut hyper = Hyperparameters::for_variant(variant);
        hyper.hidden = 5;
        hyper.k = 3;
        tweak(&mut hyper);
        let params = ModelParams::init(variant, hyper, 4, 2, 7).unwrap();
        gradient_check(&params, &op, &x, &labels, &[0, 1, 2], 5e-3).unwrap()
    }

    #[test]
    fn gradients_match_finite_differences() {
        for v in Variant::ALL {
            let err = check(v, |_| {});
            assert!(err < 1e-6, "{v:?}: {err:e}");
        }
        assert!(check(Variant::HChebnet, |h| h.cheb_basis = ChebBasis::Chebyshev) < 1e-6);
        assert!(check(Variant::HGcnii, |h| h.beta_schedule = BetaSchedule::LogDecay { lambda: 0.5 }) < 1e-6);
        assert!(check(Variant::HGcn, |h| h.layers = 4) < 1e-6);
        assert!(check(Variant::HAppnp, |h| h.layers = 1) < 1e-6);
    }

    #[test]
    fn cross_entropy_of_uniform_logits() {
        let (loss, g) = cross_entropy(&Mat::zeros(2, 4), &[1, 3], &[0, 1]);
        assert!((loss - 4f64.ln()).abs() < 1e-15);
        assert!((g[(0, 1)] + 0.375).abs() < 1e-15);
        assert!((g[(0, 0)] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn split_validation() {
        let (op, x, labels) = small_problem();
        let params = ModelParams::init(Variant::HGcn, Hyperparameters::for_variant(Variant::HGcn), 4, 2, 0).unwrap();
        let cfg = TrainConfig::default();
        let run = |split: Split| train_with_operator(params.clone(), &op, &x, &labels, &split, &cfg);
        let overlap = Split { train: vec![0, 1], val: vec![1], test: vec![] };
        assert!(run(overlap).is_err());
        let missing_class = Split { train: vec![1], val: vec![0], test: vec![] };
        assert!(run(missing_class).is_err());
        let empty = Split { train: vec![0, 1], val: vec![], test: vec![] };
        assert!(run(empty).is_err());
        let ok = Split { train: vec![0, 1], val: vec![2], test: vec![] };
        let (_, m) = run(ok).unwrap();
        assert!(m.test_accuracy.is_none());
        assert!(m.epochs_run >= m.best_epoch);
    }

    #[test]
    fn non_finite_loss_is_reported() {
        let (op, x, labels) = small_problem();
        let params = ModelParams::init(Variant::HGcn, Hyperparameters::for_variant(Variant::HGcn), 4, 2, 0).unwrap();
        let cfg = TrainConfig { learning_rate: 1e300, optimizer: Optimizer::Sgd, ..TrainConfig::default() };
        let split = Split { train: vec![0, 1], val: vec![2], test: vec![] };
        let err = train_with_operator(params, &op, &x, &labels, &split, &cfg).unwrap_err();
        assert!(matches!(err, HgxError::NonFiniteLoss { .. }), "{err}");
    }
}
