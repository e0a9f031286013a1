//! Bidirectional LSTM sentence classifier.
//!
//! Tokens are embedded (initialized from a pretrained table, trainable),
//! read left-to-right and right-to-left by two LSTM cells, and the two
//! final hidden states are concatenated into a logistic head. Training
//! minimizes mean binary cross-entropy with Adam and stops early on the
//! validation loss. Gradients are computed by hand-written backpropagation
//! through time; per-sample gradients may be computed in parallel and are
//! summed in sample order, so results do not depend on the thread count.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sigmoid, softplus, word_tokens, Adam, AdamConfig, ClassifyError, EmbeddingTable, TrainReport};
use crate::corpus::LabeledSample;
use crate::exec::{self, Execution};

/// Embedding-row gradients keyed by vocabulary index.
type SparseRows = Vec<(usize, Vec<f64>)>;

pub const UNK: &str = "<unk>";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecurrentConfig {
    pub hidden: usize,
    pub max_len: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_delta: f64,
    pub trainable_embeddings: bool,
    pub seed: u64,
}

impl Default for RecurrentConfig {
    fn default() -> Self {
        RecurrentConfig {
            hidden: 128,
            max_len: 64,
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 30,
            patience: 3,
            min_delta: 1e-5,
            trainable_embeddings: true,
            seed: 0,
        }
    }
}

/// Offsets of each parameter block inside the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub vocab: usize,
    pub dim: usize,
    pub hidden: usize,
}

impl Layout {
    fn gate_rows(&self) -> usize {
        4 * self.hidden
    }
    fn input_width(&self) -> usize {
        self.dim + self.hidden
    }
    fn cell_len(&self) -> usize {
        self.gate_rows() * self.input_width() + self.gate_rows()
    }
    pub fn embedding_len(&self) -> usize {
        self.vocab * self.dim
    }
    /// Start of the forward (0) or backward (1) cell block: weights then biases.
    fn cell(&self, direction: usize) -> usize {
        self.embedding_len() + direction * self.cell_len()
    }
    fn head(&self) -> usize {
        self.embedding_len() + 2 * self.cell_len()
    }
    pub fn total(&self) -> usize {
        self.head() + 2 * self.hidden + 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrentModel {
    pub vocabulary: Vec<String>,
    pub layout: Layout,
    pub params: Vec<f64>,
    pub config: RecurrentConfig,
    pub report: TrainReport,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

/// Per-step activations kept for backpropagation.
struct Step {
    z: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c_prev: Vec<f64>,
    c: Vec<f64>,
}

impl RecurrentModel {
    /// Builds an untrained model whose vocabulary is the embedding table
    /// plus any extra training tokens; extra tokens and `<unk>` start at the
    /// table's OOV vector.
    pub fn new(
        embeddings: &EmbeddingTable,
        extra_tokens: impl IntoIterator<Item = String>,
        config: RecurrentConfig,
    ) -> Self {
        let mut vocabulary: Vec<String> = vec![UNK.to_string()];
        vocabulary.extend(embeddings.tokens().iter().cloned());
        let mut seen: std::collections::HashSet<String> = vocabulary.iter().cloned().collect();
        let mut extra: Vec<String> = extra_tokens.into_iter().filter(|t| seen.insert(t.clone())).collect();
        extra.sort();
        vocabulary.extend(extra);

        let layout = Layout { vocab: vocabulary.len(), dim: embeddings.dim(), hidden: config.hidden };
        let mut params = vec![0.0; layout.total()];
        for (r, tok) in vocabulary.iter().enumerate() {
            params[r * layout.dim..(r + 1) * layout.dim].copy_from_slice(embeddings.lookup(tok));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let k = 1.0 / (config.hidden as f64).sqrt();
        for dir in 0..2 {
            let start = layout.cell(dir);
            let n_w = layout.gate_rows() * layout.input_width();
            for p in &mut params[start..start + n_w] {
                *p = rng.gen_range(-k..k);
            }
            // Forget-gate bias starts at 1.
            let b = start + n_w;
            for p in &mut params[b + layout.hidden..b + 2 * layout.hidden] {
                *p = 1.0;
            }
        }
        let kh = 1.0 / ((2 * config.hidden) as f64).sqrt();
        let head = layout.head();
        for p in &mut params[head..head + 2 * config.hidden] {
            *p = rng.gen_range(-kh..kh);
        }
        let mut model = RecurrentModel {
            vocabulary,
            layout,
            params,
            config,
            report: TrainReport::default(),
            index: HashMap::new(),
        };
        model.rebuild_index();
        model
    }

    /// Restores the token lookup after deserialization.
    pub fn rebuild_index(&mut self) {
        self.index = self.vocabulary.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }

    fn token_id(&self, token: &str) -> usize {
        if self.index.is_empty() {
            return self.vocabulary.iter().position(|t| t == token).unwrap_or(0);
        }
        self.index.get(token).copied().unwrap_or(0)
    }

    /// Token ids for `text`, truncated to `max_len`.
    pub fn encode(&self, text: &str) -> Result<Vec<usize>, ClassifyError> {
        let ids: Vec<usize> = word_tokens(text).iter().take(self.config.max_len).map(|t| self.token_id(t)).collect();
        if ids.is_empty() {
            return Err(ClassifyError::EmptyInput("text has no tokens"));
        }
        Ok(ids)
    }

    fn run_cell(&self, params: &[f64], direction: usize, inputs: &[usize], keep: bool) -> (Vec<f64>, Vec<Step>) {
        let l = self.layout;
        let (h, d, width) = (l.hidden, l.dim, l.input_width());
        let w = &params[l.cell(direction)..l.cell(direction) + l.gate_rows() * width];
        let b = &params[l.cell(direction) + l.gate_rows() * width..l.cell(direction) + l.cell_len()];
        let mut hs = vec![0.0; h];
        let mut cs = vec![0.0; h];
        let mut steps = Vec::with_capacity(if keep { inputs.len() } else { 0 });
        let order: Box<dyn Iterator<Item = &usize>> =
            if direction == 0 { Box::new(inputs.iter()) } else { Box::new(inputs.iter().rev()) };
        for &tok in order {
            let mut z = Vec::with_capacity(width);
            z.extend_from_slice(&params[tok * d..(tok + 1) * d]);
            z.extend_from_slice(&hs);
            let mut a = b.to_vec();
            for (r, ar) in a.iter_mut().enumerate() {
                let row = &w[r * width..(r + 1) * width];
                *ar += row.iter().zip(&z).map(|(x, y)| x * y).sum::<f64>();
            }
            let i: Vec<f64> = a[..h].iter().map(|&x| sigmoid(x)).collect();
            let f: Vec<f64> = a[h..2 * h].iter().map(|&x| sigmoid(x)).collect();
            let g: Vec<f64> = a[2 * h..3 * h].iter().map(|&x| x.tanh()).collect();
            let o: Vec<f64> = a[3 * h..].iter().map(|&x| sigmoid(x)).collect();
            let c: Vec<f64> = (0..h).map(|k| f[k] * cs[k] + i[k] * g[k]).collect();
            hs = (0..h).map(|k| o[k] * c[k].tanh()).collect();
            if keep {
                steps.push(Step { z, i, f, g, o, c_prev: std::mem::take(&mut cs), c: c.clone() });
            }
            cs = c;
        }
        (hs, steps)
    }

    fn logit_with(&self, params: &[f64], ids: &[usize]) -> f64 {
        let (hf, _) = self.run_cell(params, 0, ids, false);
        let (hb, _) = self.run_cell(params, 1, ids, false);
        let head = self.layout.head();
        let h = self.layout.hidden;
        let u = &params[head..head + 2 * h];
        u[..h].iter().zip(&hf).map(|(a, b)| a * b).sum::<f64>()
            + u[h..].iter().zip(&hb).map(|(a, b)| a * b).sum::<f64>()
            + params[head + 2 * h]
    }

    pub fn probability_ids(&self, ids: &[usize]) -> f64 {
        sigmoid(self.logit_with(&self.params, ids))
    }

    pub fn probability(&self, text: &str) -> Result<f64, ClassifyError> {
        Ok(self.probability_ids(&self.encode(text)?))
    }

    /// Loss of one sample and its gradient: dense for cells and head
    /// (indexed from the first cell offset), sparse rows for embeddings.
    fn sample_gradient(&self, params: &[f64], ids: &[usize], y: f64) -> (f64, Vec<f64>, SparseRows) {
        let l = self.layout;
        let (h, d, width) = (l.hidden, l.dim, l.input_width());
        let base = l.embedding_len();
        let mut dense = vec![0.0; l.total() - base];
        let (hf, steps_f) = self.run_cell(params, 0, ids, true);
        let (hb, steps_b) = self.run_cell(params, 1, ids, true);
        let head = l.head();
        let u = &params[head..head + 2 * h];
        let logit = u[..h].iter().zip(&hf).map(|(a, b)| a * b).sum::<f64>()
            + u[h..].iter().zip(&hb).map(|(a, b)| a * b).sum::<f64>()
            + params[head + 2 * h];
        let loss = softplus(logit) - y * logit;
        let dlogit = sigmoid(logit) - y;
        for k in 0..h {
            dense[head - base + k] = dlogit * hf[k];
            dense[head - base + h + k] = dlogit * hb[k];
        }
        dense[head - base + 2 * h] = dlogit;

        let mut emb_rows: Vec<(usize, Vec<f64>)> = Vec::with_capacity(2 * ids.len());
        for (dir, (steps, u_part)) in [(&steps_f, &u[..h]), (&steps_b, &u[h..])].into_iter().enumerate() {
            let w_off = l.cell(dir);
            let b_off = w_off + l.gate_rows() * width;
            let w = &params[w_off..b_off];
            let mut dh: Vec<f64> = u_part.iter().map(|x| dlogit * x).collect();
            let mut dc = vec![0.0; h];
            let positions: Vec<usize> =
                if dir == 0 { (0..ids.len()).collect() } else { (0..ids.len()).rev().collect() };
            for (s, step) in steps.iter().enumerate().rev() {
                let mut da = vec![0.0; 4 * h];
                for k in 0..h {
                    let tc = step.c[k].tanh();
                    let d_o = dh[k] * tc;
                    dc[k] += dh[k] * step.o[k] * (1.0 - tc * tc);
                    let di = dc[k] * step.g[k];
                    let dg = dc[k] * step.i[k];
                    let df = dc[k] * step.c_prev[k];
                    da[k] = di * step.i[k] * (1.0 - step.i[k]);
                    da[h + k] = df * step.f[k] * (1.0 - step.f[k]);
                    da[2 * h + k] = dg * (1.0 - step.g[k] * step.g[k]);
                    da[3 * h + k] = d_o * step.o[k] * (1.0 - step.o[k]);
                    dc[k] *= step.f[k];
                }
                let mut dz = vec![0.0; width];
                for (r, &dar) in da.iter().enumerate() {
                    if dar == 0.0 {
                        continue;
                    }
                    let grow = &mut dense[w_off - base + r * width..w_off - base + (r + 1) * width];
                    for (gw, zv) in grow.iter_mut().zip(&step.z) {
                        *gw += dar * zv;
                    }
                    dense[b_off - base + r] += dar;
                    let row = &w[r * width..(r + 1) * width];
                    for (dzv, wv) in dz.iter_mut().zip(row) {
                        *dzv += dar * wv;
                    }
                }
                emb_rows.push((ids[positions[s]], dz[..d].to_vec()));
                dh = dz[d..].to_vec();
            }
        }
        (loss, dense, emb_rows)
    }

    /// Mean loss over `batch` and its full dense gradient.
    pub fn loss_and_gradient(
        &self,
        params: &[f64],
        batch: &[(Vec<usize>, u8)],
        execution: Execution,
    ) -> (f64, Vec<f64>) {
        let l = self.layout;
        let base = l.embedding_len();
        let per_sample = exec::map(execution, batch, |(ids, y)| self.sample_gradient(params, ids, *y as f64));
        let mut grad = vec![0.0; l.total()];
        let mut loss = 0.0;
        for (sl, dense, rows) in per_sample {
            loss += sl;
            for (g, x) in grad[base..].iter_mut().zip(dense) {
                *g += x;
            }
            for (tok, row) in rows {
                for (g, x) in grad[tok * l.dim..(tok + 1) * l.dim].iter_mut().zip(row) {
                    *g += x;
                }
            }
        }
        let n = batch.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        (loss / n, grad)
    }

    /// Mean loss over a dataset (forward only).
    pub fn mean_loss(&self, data: &[(Vec<usize>, u8)], execution: Execution) -> f64 {
        let losses = exec::map(execution, data, |(ids, y)| {
            let z = self.logit_with(&self.params, ids);
            softplus(z) - *y as f64 * z
        });
        losses.iter().sum::<f64>() / data.len().max(1) as f64
    }

    fn encode_samples(&self, samples: &[LabeledSample]) -> Result<Vec<(Vec<usize>, u8)>, ClassifyError> {
        samples.iter().map(|s| Ok((self.encode(&s.text)?, s.label))).collect()
    }
}

/// Trains a bidirectional LSTM classifier.
pub fn train_recurrent(
    train: &[LabeledSample],
    val: &[LabeledSample],
    embeddings: &EmbeddingTable,
    cfg: &RecurrentConfig,
    execution: Execution,
) -> Result<RecurrentModel, ClassifyError> {
    if train.is_empty() || val.is_empty() {
        return Err(ClassifyError::EmptyInput("recurrent training needs non-empty train and validation splits"));
    }
    if !train.iter().any(|s| s.label == 1) || !train.iter().any(|s| s.label == 0) {
        return Err(ClassifyError::SingleClass);
    }
    if cfg.hidden == 0 || cfg.batch_size == 0 || cfg.max_len == 0 {
        return Err(ClassifyError::InvalidConfig("hidden, batch_size and max_len must be positive".into()));
    }
    let extra = train.iter().flat_map(|s| word_tokens(&s.text));
    let mut model = RecurrentModel::new(embeddings, extra, cfg.clone());
    let train_data = model.encode_samples(train)?;
    let val_data = model.encode_samples(val)?;

    let mut opt = Adam::new(model.params.len(), AdamConfig { learning_rate: cfg.learning_rate, ..Default::default() });
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..train_data.len()).collect();
    let mut report = TrainReport { seed: cfg.seed, ..Default::default() };
    let mut best = (model.mean_loss(&val_data, execution), model.params.clone());
    let mut stale = 0;
    let emb_len = model.layout.embedding_len();

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(Vec<usize>, u8)> = chunk.iter().map(|&i| train_data[i].clone()).collect();
            let (_, mut grad) = model.loss_and_gradient(&model.params, &batch, execution);
            if !cfg.trainable_embeddings {
                grad[..emb_len].iter_mut().for_each(|g| *g = 0.0);
            }
            opt.step(&mut model.params, &grad);
        }
        report.epochs = epoch + 1;
        report.train_loss.push(model.mean_loss(&train_data, execution));
        let v = model.mean_loss(&val_data, execution);
        report.val_loss.push(v);
        if v < best.0 - cfg.min_delta {
            best = (v, model.params.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                report.stopped_early = true;
                break;
            }
        }
    }
    model.params = best.1;
    report.best_val_loss = Some(best.0);
    model.report = report;
    Ok(model)
}
