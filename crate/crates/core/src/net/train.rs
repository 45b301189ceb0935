use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::model::{grad, pretrain_loss, LossParts};
use super::params::{init_params, Params};
use super::tape::Tensor;
use crate::error::{Error, Result};
use crate::sampling::ShapeTargets;
use crate::tokenize::TokenBatch;

pub const DEFAULT_LR: f64 = 1e-4;
pub const DEFAULT_WEIGHT_DECAY: f64 = 0.01;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrainOptions {
    pub steps: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    /// Reshuffle the data order every epoch (seeded); otherwise cycle in order.
    pub shuffle: bool,
    /// Linear ramp over the first steps before the cosine decay.
    #[serde(default)]
    pub warmup_steps: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            steps: 100,
            lr: DEFAULT_LR,
            weight_decay: DEFAULT_WEIGHT_DECAY,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
            shuffle: true,
            warmup_steps: 0,
        }
    }
}

impl TrainOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr >= 0.0
            && self.lr.is_finite()
            && self.weight_decay >= 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0;
        if !ok {
            return Err(Error::arg(format!("invalid optimizer settings {self:?}")));
        }
        Ok(())
    }
}

/// Cosine decay from `lr` at step 0 towards zero at `steps`.
pub fn cosine_lr(lr: f64, step: usize, steps: usize) -> f64 {
    if steps == 0 {
        return lr;
    }
    0.5 * lr * (1.0 + (PI * step as f64 / steps as f64).cos())
}

impl TrainOptions {
    /// Scheduled rate at `step`: linear warmup, then cosine decay.
    pub fn lr_at(&self, step: usize) -> f64 {
        if step < self.warmup_steps {
            return self.lr * (step + 1) as f64 / self.warmup_steps as f64;
        }
        cosine_lr(self.lr, step - self.warmup_steps, self.steps.saturating_sub(self.warmup_steps))
    }
}

/// Adaptive moments with decoupled weight decay:
/// `p <- p * (1 - lr_t * wd) - lr_t * m_hat / (sqrt(v_hat) + eps)`.
pub struct AdamW {
    opts: TrainOptions,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: i32,
}

impl AdamW {
    pub fn new(params: &Params, opts: TrainOptions) -> Self {
        let zeros: Vec<Tensor> = params.iter().map(|(_, t)| Tensor::zeros(t.rows, t.cols)).collect();
        Self {
            opts,
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    /// One update; parameter `name` moves at `lr * rate(name)` and is left
    /// untouched when that multiplier is zero.
    pub fn step(&mut self, params: &mut Params, grads: &Params, lr: f64, rate: &dyn Fn(&str) -> f64) {
        self.t += 1;
        let o = &self.opts;
        let (bc1, bc2) = (1.0 - o.beta1.powi(self.t), 1.0 - o.beta2.powi(self.t));
        for (i, (name, p)) in params.iter_mut().enumerate() {
            let r = rate(name);
            if r == 0.0 {
                continue;
            }
            let lr = lr * r;
            let g = grads.get(name).expect("gradient for every parameter");
            let (m, v) = (&mut self.m[i].data, &mut self.v[i].data);
            for k in 0..p.data.len() {
                m[k] = o.beta1 * m[k] + (1.0 - o.beta1) * g.data[k];
                v[k] = o.beta2 * v[k] + (1.0 - o.beta2) * g.data[k] * g.data[k];
                let update = (m[k] / bc1) / ((v[k] / bc2).sqrt() + o.eps);
                p.data[k] = p.data[k] * (1.0 - lr * o.weight_decay) - lr * update;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub step: usize,
    pub model: usize,
    pub loss: LossParts,
}

pub struct TrainResult {
    pub params: Params,
    pub trace: Vec<LossRecord>,
}

pub type Sample = (TokenBatch, ShapeTargets);

/// Model visiting order for `steps` steps: whole epochs, seeded shuffles.
pub fn data_order(n: usize, steps: usize, seed: u64, shuffle: bool) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_04d3);
    let mut order = Vec::with_capacity(steps + n);
    while order.len() < steps {
        let mut epoch: Vec<usize> = (0..n).collect();
        if shuffle {
            epoch.shuffle(&mut rng);
        }
        order.extend(epoch);
    }
    order.truncate(steps);
    order
}

/// Pre-trains from `init` (or fresh parameters seeded by `opts.seed`),
/// one model per step.
pub fn train(dataset: &[Sample], cfg: &ModelConfig, opts: &TrainOptions, init: Option<Params>) -> Result<TrainResult> {
    if dataset.is_empty() {
        return Err(Error::arg("training set is empty"));
    }
    cfg.validate()?;
    opts.validate()?;
    let mut params = match init {
        Some(p) => p,
        None => init_params(cfg, opts.seed)?,
    };
    let mut opt = AdamW::new(&params, opts.clone());
    let mut trace = Vec::with_capacity(opts.steps);
    for (step, &i) in data_order(dataset.len(), opts.steps, opts.seed, opts.shuffle).iter().enumerate() {
        let (batch, targets) = &dataset[i];
        let (loss, grads) = match grad(&params, batch, targets, cfg) {
            Ok(r) => r,
            Err(Error::Numeric(what)) => {
                log::error!("non-finite value in {what}");
                return Err(Error::Training { step, loss: f64::NAN });
            }
            Err(e) => return Err(e),
        };
        if !loss.total.is_finite() {
            return Err(Error::Training { step, loss: loss.total });
        }
        trace.push(LossRecord { step, model: i, loss });
        opt.step(&mut params, &grads, opts.lr_at(step), &|_| 1.0);
        log::debug!("step {step} model {i} loss {:.6e}", loss.total);
    }
    Ok(TrainResult { params, trace })
}

/// Mean loss over the whole dataset.
pub fn dataset_loss(params: &Params, dataset: &[Sample], cfg: &ModelConfig) -> Result<LossParts> {
    let mut acc = LossParts {
        total: 0.0,
        face: 0.0,
        edge: 0.0,
    };
    for (batch, targets) in dataset {
        let l = pretrain_loss(params, batch, targets, cfg)?;
        acc.face += l.face;
        acc.edge += l.edge;
    }
    let n = dataset.len().max(1) as f64;
    acc.face /= n;
    acc.edge /= n;
    acc.total = acc.face + acc.edge;
    Ok(acc)
}

/// `step,total,face,edge` lines; floats in shortest round-trip form.
pub fn trace_csv(trace: &[LossRecord]) -> String {
    let mut s = String::from("step,total,face,edge\n");
    for r in trace {
        let _ = writeln!(s, "{},{:?},{:?},{:?}", r.step, r.loss.total, r.loss.face, r.loss.edge);
    }
    s
}
