use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::model::Graph;
use super::params::{Params, INIT_STD};
use super::tape::{Tensor, Var};
use super::train::{data_order, AdamW, TrainOptions};
use crate::error::{Error, Result};
use crate::tokenize::TokenBatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// One label per model; face tokens are mean-pooled.
    Classify,
    /// One label per face.
    Segment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Head only.
    Linear,
    /// Head and the two-stream transformer.
    Partial,
    /// Everything.
    Full,
}

impl Strategy {
    pub fn trains(self, name: &str) -> bool {
        match self {
            Strategy::Linear => name.starts_with("cls."),
            Strategy::Partial => name.starts_with("cls.") || name.starts_with("dual.") || name.starts_with("merged."),
            Strategy::Full => true,
        }
    }
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classify" => Ok(Task::Classify),
            "segment" => Ok(Task::Segment),
            _ => Err(Error::arg(format!("unknown task {s:?} (classify|segment)"))),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Strategy::Linear),
            "partial" => Ok(Strategy::Partial),
            "full" => Ok(Strategy::Full),
            _ => Err(Error::arg(format!("unknown strategy {s:?} (linear|partial|full)"))),
        }
    }
}

/// Per-model or per-face class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Labels {
    PerModel(Vec<usize>),
    PerFace(Vec<Vec<usize>>),
}

impl Labels {
    pub fn num_classes(&self) -> usize {
        let max = match self {
            Labels::PerModel(v) => v.iter().max().copied(),
            Labels::PerFace(v) => v.iter().flatten().max().copied(),
        };
        max.map_or(0, |m| m + 1)
    }

    fn for_model(&self, task: Task, i: usize, batch: &TokenBatch) -> Result<Vec<usize>> {
        match (task, self) {
            (Task::Classify, Labels::PerModel(v)) => Ok(vec![v[i]]),
            (Task::Segment, Labels::PerFace(v)) => {
                if v[i].len() != batch.num_faces {
                    return Err(Error::integrity(format!(
                        "model {i}: {} face labels for {} faces",
                        v[i].len(),
                        batch.num_faces
                    )));
                }
                Ok(v[i].clone())
            }
            _ => Err(Error::integrity(format!("labels do not fit task {task:?}"))),
        }
    }

    fn len(&self) -> usize {
        match self {
            Labels::PerModel(v) => v.len(),
            Labels::PerFace(v) => v.len(),
        }
    }
}

/// Drops the pre-training point heads and adds a fresh linear classifier.
pub fn attach_head(params: &Params, cfg: &ModelConfig, num_classes: usize, seed: u64) -> Result<Params> {
    if num_classes < 2 {
        return Err(Error::arg(format!("need at least 2 classes, got {num_classes}")));
    }
    let mut out = params.clone();
    out.remove_prefix("head.");
    out.remove_prefix("cls.");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, INIT_STD).expect("valid normal");
    let w = (0..cfg.width * num_classes)
        .map(|_| loop {
            let x: f64 = normal.sample(&mut rng);
            if x.abs() <= 2.0 * INIT_STD {
                break x;
            }
        })
        .collect();
    out.insert("cls.w", Tensor::from_vec(cfg.width, num_classes, w));
    out.insert("cls.b", Tensor::zeros(1, num_classes));
    Ok(out)
}

fn logits(g: &mut Graph, batch: &TokenBatch, cfg: &ModelConfig, task: Task) -> Result<Var> {
    let (xf, _) = g.backbone(batch, cfg)?;
    let x = match task {
        Task::Classify => g.tape.mean_rows(xf),
        Task::Segment => xf,
    };
    let w = g.param("cls.w")?;
    let b = g.param("cls.b")?;
    Ok(g.tape.linear(x, w, b))
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in row.iter().enumerate() {
        if *x > row[best] {
            best = i;
        }
    }
    best
}

/// Predicted class per model (classify, one entry) or per face (segment).
pub fn predict(params: &Params, batch: &TokenBatch, cfg: &ModelConfig, task: Task) -> Result<Vec<usize>> {
    let mut g = Graph::new(params);
    let l = logits(&mut g, batch, cfg, task)?;
    let t = g.value(l);
    Ok((0..t.rows).map(|r| argmax(t.row(r))).collect())
}

/// Fraction of correctly predicted labels over all models.
pub fn accuracy(params: &Params, batches: &[TokenBatch], labels: &Labels, cfg: &ModelConfig, task: Task) -> Result<f64> {
    let (mut hit, mut total) = (0usize, 0usize);
    for (i, b) in batches.iter().enumerate() {
        let want = labels.for_model(task, i, b)?;
        let got = predict(params, b, cfg, task)?;
        hit += want.iter().zip(&got).filter(|(a, b)| a == b).count();
        total += want.len();
    }
    Ok(if total == 0 { 0.0 } else { hit as f64 / total as f64 })
}

/// Rate multiplier of the fresh classifier relative to the backbone.
pub const DEFAULT_HEAD_RATE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneOptions {
    pub task: Task,
    pub strategy: Strategy,
    pub head_rate: f64,
    pub train: TrainOptions,
}

impl FinetuneOptions {
    pub fn new(task: Task, strategy: Strategy, train: TrainOptions) -> Self {
        Self {
            task,
            strategy,
            head_rate: DEFAULT_HEAD_RATE,
            train,
        }
    }
}

pub struct FinetuneResult {
    pub params: Params,
    /// `(step, cross-entropy)` per step.
    pub trace: Vec<(usize, f64)>,
}

/// Replaces the point heads by a classifier and trains the subset chosen by
/// `strategy`, one model per step.
pub fn finetune_head(
    params: &Params,
    cfg: &ModelConfig,
    batches: &[TokenBatch],
    labels: &Labels,
    options: &FinetuneOptions,
) -> Result<FinetuneResult> {
    let (task, strategy, head_rate, opts) = (options.task, options.strategy, options.head_rate, &options.train);
    if !(head_rate > 0.0 && head_rate.is_finite()) {
        return Err(Error::arg(format!("head rate must be positive, got {head_rate}")));
    }
    cfg.validate()?;
    opts.validate()?;
    if batches.is_empty() {
        return Err(Error::arg("fine-tuning set is empty"));
    }
    if labels.len() != batches.len() {
        return Err(Error::integrity(format!("{} label entries for {} models", labels.len(), batches.len())));
    }
    let k = labels.num_classes();
    let mut params = match params.get("cls.w") {
        Some(w) if w.cols >= k.max(2) => params.clone(),
        _ => attach_head(params, cfg, k.max(2), opts.seed)?,
    };
    let mut opt = AdamW::new(&params, opts.clone());
    let mut trace = Vec::with_capacity(opts.steps);
    for (step, &i) in data_order(batches.len(), opts.steps, opts.seed, opts.shuffle).iter().enumerate() {
        let batch = &batches[i];
        let y = labels.for_model(task, i, batch)?;
        let grads = {
            let mut g = Graph::new(&params);
            let l = logits(&mut g, batch, cfg, task)?;
            let loss = g.tape.softmax_ce(l, y);
            let value = g.value(loss).data[0];
            if !value.is_finite() {
                return Err(Error::Training { step, loss: value });
            }
            trace.push((step, value));
            g.gradients(loss)?
        };
        opt.step(&mut params, &grads, opts.lr_at(step), &|n| {
            if !strategy.trains(n) {
                0.0
            } else if n.starts_with("cls.") {
                head_rate
            } else {
                1.0
            }
        });
    }
    Ok(FinetuneResult { params, trace })
}
