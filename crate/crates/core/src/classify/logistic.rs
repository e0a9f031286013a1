//! L2-regularized logistic regression over sparse rows, trained by
//! full-batch gradient descent with a backtracking line search.

use serde::{Deserialize, Serialize};

use super::{sigmoid, softplus, ClassifyError, SparseVector, TrainReport};
use crate::exec::{self, Execution};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    pub l2: f64,
    pub max_epochs: usize,
    /// Gradient steps between validation evaluations.
    pub eval_every: usize,
    /// Evaluations without improvement before stopping.
    pub patience: usize,
    pub min_delta: f64,
    pub initial_step: f64,
    pub seed: u64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            l2: 1e-4,
            max_epochs: 2000,
            eval_every: 50,
            patience: 5,
            min_delta: 1e-5,
            initial_step: 1.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub report: TrainReport,
}

impl LinearModel {
    pub fn zeros(n_features: usize) -> Self {
        LinearModel { weights: vec![0.0; n_features], bias: 0.0, report: TrainReport::default() }
    }

    pub fn logit(&self, x: &SparseVector) -> Result<f64, ClassifyError> {
        if let Some(max) = x.max_index() {
            if max as usize >= self.weights.len() {
                return Err(ClassifyError::VocabularyMismatch { column: max as usize, features: self.weights.len() });
            }
        }
        Ok(x.dot(&self.weights) + self.bias)
    }

    pub fn probability(&self, x: &SparseVector) -> Result<f64, ClassifyError> {
        self.logit(x).map(sigmoid)
    }
}

/// Mean binary cross-entropy of the data plus `l2 / 2 * |w|^2`.
pub fn objective(weights: &[f64], bias: f64, xs: &[SparseVector], ys: &[u8], l2: f64, execution: Execution) -> f64 {
    let data = exec::chunked_reduce(
        execution,
        xs,
        || 0.0,
        |acc, i, x| {
            let z = x.dot(weights) + bias;
            *acc += softplus(z) - ys[i] as f64 * z;
        },
        |a, b| *a += b,
    );
    data / xs.len() as f64 + 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Objective and its gradient `(d/dw, d/db)`.
pub fn objective_gradient(
    weights: &[f64],
    bias: f64,
    xs: &[SparseVector],
    ys: &[u8],
    l2: f64,
    execution: Execution,
) -> (f64, Vec<f64>, f64) {
    let n = xs.len() as f64;
    let (loss, mut gw, gb) = exec::chunked_reduce(
        execution,
        xs,
        || (0.0, vec![0.0; weights.len()], 0.0),
        |acc, i, x| {
            let z = x.dot(weights) + bias;
            let y = ys[i] as f64;
            acc.0 += softplus(z) - y * z;
            let r = sigmoid(z) - y;
            for (c, v) in x.iter() {
                acc.1[c as usize] += r * v;
            }
            acc.2 += r;
        },
        |a, b| {
            a.0 += b.0;
            a.1.iter_mut().zip(b.1).for_each(|(x, y)| *x += y);
            a.2 += b.2;
        },
    );
    for (g, w) in gw.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    let reg = 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    (loss / n + reg, gw, gb / n)
}

fn check_labels(xs: &[SparseVector], ys: &[u8]) -> Result<(), ClassifyError> {
    if xs.len() != ys.len() {
        return Err(ClassifyError::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    if ys.iter().any(|&y| y > 1) {
        return Err(ClassifyError::InvalidConfig("labels must be 0 or 1".into()));
    }
    Ok(())
}

/// Trains on `(xs, ys)`; early stopping watches the validation loss when a
/// validation set is given and the training objective otherwise.
pub fn train_logistic(
    xs: &[SparseVector],
    ys: &[u8],
    validation: Option<(&[SparseVector], &[u8])>,
    n_features: usize,
    cfg: &LogisticConfig,
    execution: Execution,
) -> Result<LinearModel, ClassifyError> {
    check_labels(xs, ys)?;
    if xs.len() < 2 {
        return Err(ClassifyError::EmptyInput("logistic regression needs at least two samples"));
    }
    if ys.iter().all(|&y| y == ys[0]) {
        return Err(ClassifyError::SingleClass);
    }
    if let Some((vx, vy)) = validation {
        check_labels(vx, vy)?;
    }
    if let Some(max) = xs.iter().filter_map(SparseVector::max_index).max() {
        if max as usize >= n_features {
            return Err(ClassifyError::VocabularyMismatch { column: max as usize, features: n_features });
        }
    }

    let mut model = LinearModel::zeros(n_features);
    let mut report = TrainReport { seed: cfg.seed, ..Default::default() };
    let monitor = |w: &[f64], b: f64| match validation {
        Some((vx, vy)) if !vx.is_empty() => objective(w, b, vx, vy, 0.0, execution),
        _ => objective(w, b, xs, ys, cfg.l2, execution),
    };
    let mut best = (monitor(&model.weights, model.bias), model.weights.clone(), model.bias);
    let mut stale = 0;
    let mut step = cfg.initial_step;

    for epoch in 0..cfg.max_epochs {
        let (loss, gw, gb) = objective_gradient(&model.weights, model.bias, xs, ys, cfg.l2, execution);
        let gnorm2 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        report.train_loss.push(loss);
        if gnorm2 < 1e-20 {
            report.epochs = epoch;
            break;
        }
        // Armijo backtracking from twice the last accepted step.
        step = (step * 2.0).min(cfg.initial_step * 64.0);
        let (mut w_new, mut b_new);
        loop {
            w_new = model.weights.iter().zip(&gw).map(|(w, g)| w - step * g).collect::<Vec<_>>();
            b_new = model.bias - step * gb;
            let trial = objective(&w_new, b_new, xs, ys, cfg.l2, execution);
            if trial <= loss - 0.5 * step * gnorm2 || step < 1e-12 {
                break;
            }
            step *= 0.5;
        }
        model.weights = w_new;
        model.bias = b_new;
        report.epochs = epoch + 1;
        if !report.epochs.is_multiple_of(cfg.eval_every.max(1)) && report.epochs != cfg.max_epochs {
            continue;
        }

        let monitored = monitor(&model.weights, model.bias);
        report.val_loss.push(monitored);
        if monitored < best.0 - cfg.min_delta {
            best = (monitored, model.weights.clone(), model.bias);
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                report.stopped_early = true;
                break;
            }
        }
    }
    if report.epochs > 0 {
        model.weights = best.1;
        model.bias = best.2;
    }
    report.best_val_loss = Some(best.0);
    model.report = report;
    Ok(model)
}
