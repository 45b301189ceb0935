use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::{AttentionMode, ModelConfig, Streams};
use super::tape::Tensor;
use crate::error::{Error, Result};
use crate::tokenize::{SEG_POINTS, TRI_POINTS};

pub const INIT_STD: f64 = 0.02;

/// Named weight tensors in a fixed order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Params {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    index: HashMap<String, usize>,
}

impl Params {
    pub fn insert(&mut self, name: impl Into<String>, t: Tensor) {
        let name = name.into();
        if let Some(&i) = self.index.get(&name) {
            self.tensors[i] = t;
            return;
        }
        self.index.insert(name.clone(), self.names.len());
        self.names.push(name);
        self.tensors.push(t);
    }

    pub fn remove_prefix(&mut self, prefix: &str) {
        let keep: Vec<(String, Tensor)> = self
            .iter()
            .filter(|(n, _)| !n.starts_with(prefix))
            .map(|(n, t)| (n.to_string(), t.clone()))
            .collect();
        *self = Params::default();
        for (n, t) in keep {
            self.insert(n, t);
        }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.index.get(name).map(|&i| &self.tensors[i])
    }

    pub fn require(&self, name: &str) -> Result<&Tensor> {
        self.get(name).ok_or_else(|| Error::Config(format!("missing parameter {name}")))
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.index.get(name).map(|&i| &mut self.tensors[i])
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(|n| n.as_str()).zip(&self.tensors)
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.names.iter().map(|n| n.as_str()).zip(self.tensors.iter_mut())
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }
}

struct Init {
    rng: ChaCha8Rng,
    normal: Normal<f64>,
    params: Params,
}

impl Init {
    /// Normal(0, 0.02) truncated to two standard deviations by resampling.
    fn weight(&mut self, name: String, rows: usize, cols: usize) {
        let data = (0..rows * cols)
            .map(|_| loop {
                let x = self.normal.sample(&mut self.rng);
                if x.abs() <= 2.0 * INIT_STD {
                    break x;
                }
            })
            .collect();
        self.params.insert(name, Tensor::from_vec(rows, cols, data));
    }

    fn fill(&mut self, name: String, rows: usize, cols: usize, value: f64) {
        self.params.insert(name, Tensor::from_vec(rows, cols, vec![value; rows * cols]));
    }

    fn linear(&mut self, prefix: &str, fan_in: usize, fan_out: usize) {
        self.weight(format!("{prefix}.w"), fan_in, fan_out);
        self.fill(format!("{prefix}.b"), 1, fan_out, 0.0);
    }

    fn layer_norm(&mut self, prefix: &str, c: usize) {
        self.fill(format!("{prefix}.g"), 1, c, 1.0);
        self.fill(format!("{prefix}.b"), 1, c, 0.0);
    }

    fn block(&mut self, prefix: &str, c: usize, ffn: usize, heads: Option<usize>) {
        self.layer_norm(&format!("{prefix}.ln1"), c);
        for p in ["q", "k", "v", "o"] {
            self.linear(&format!("{prefix}.attn.{p}"), c, c);
        }
        if let Some(h) = heads {
            // bias projection starts at zero: plain attention at step 0
            self.fill(format!("{prefix}.topo.w"), c, h, 0.0);
            self.fill(format!("{prefix}.topo.b"), 1, h, 0.0);
        }
        self.layer_norm(&format!("{prefix}.ln2"), c);
        self.linear(&format!("{prefix}.ffn.fc1"), c, ffn * c);
        self.linear(&format!("{prefix}.ffn.fc2"), ffn * c, c);
    }

    fn tokenizer(&mut self, stream: &str, cfg: &ModelConfig, input: usize) {
        let c = cfg.width;
        self.linear(&format!("{stream}_embed.fc1"), input, c);
        self.linear(&format!("{stream}_embed.fc2"), c, c);
        self.weight(format!("{stream}_tok.agg"), 1, c);
        for l in 0..cfg.tokenizer_layers {
            self.block(&format!("{stream}_tok.layer{l}"), c, cfg.ffn_expansion, None);
        }
    }
}

/// Fresh parameters for `cfg`, deterministic in `seed`.
pub fn init_params(cfg: &ModelConfig, seed: u64) -> Result<Params> {
    cfg.validate()?;
    let mut init = Init {
        rng: ChaCha8Rng::seed_from_u64(seed),
        normal: Normal::new(0.0, INIT_STD).expect("valid normal"),
        params: Params::default(),
    };
    let (c, ffn) = (cfg.width, cfg.ffn_expansion);
    init.tokenizer("face", cfg, TRI_POINTS * 4);
    if cfg.has_edge_stream() {
        init.tokenizer("edge", cfg, SEG_POINTS * 4);
    }
    let topo = (cfg.attention_mode == AttentionMode::Topology).then_some(cfg.dual_heads);
    match cfg.streams {
        Streams::Dual => {
            for l in 0..cfg.dual_layers {
                init.block(&format!("dual.face.layer{l}"), c, ffn, topo);
                init.block(&format!("dual.edge.layer{l}"), c, ffn, topo);
            }
            init.layer_norm("dual.face.ln_f", c);
            init.layer_norm("dual.edge.ln_f", c);
        }
        Streams::FaceOnly => {
            for l in 0..cfg.dual_layers {
                init.block(&format!("dual.face.layer{l}"), c, ffn, None);
            }
            init.layer_norm("dual.face.ln_f", c);
        }
        Streams::Merged => {
            for l in 0..cfg.dual_layers {
                init.block(&format!("merged.layer{l}"), c, ffn, None);
            }
            init.layer_norm("merged.ln_f", c);
        }
    }
    init.linear("head.face", c, cfg.face_slots() * 3);
    if cfg.has_edge_stream() {
        init.linear("head.edge", c, cfg.edge_slots() * 3);
    }
    Ok(init.params)
}
