//! Forward pass: primitive embedding, tokenizer encoders, the two-stream
//! transformer with topology attention, point heads and the masked loss.

use std::collections::HashMap;

use super::config::{AttentionMode, ModelConfig, Streams};
use super::params::Params;
use super::tape::{AttnLayout, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::sampling::ShapeTargets;
use crate::tokenize::{TokenBatch, SEG_POINTS, TRI_POINTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Face,
    Edge,
}

impl Stream {
    fn name(self) -> &'static str {
        match self {
            Stream::Face => "face",
            Stream::Edge => "edge",
        }
    }

    fn layout(self, batch: &TokenBatch) -> (usize, usize, usize, &[f64], &[u8]) {
        match self {
            Stream::Face => (batch.num_faces, batch.caps.face, TRI_POINTS * 4, &batch.face_tensor, &batch.face_mask),
            Stream::Edge => (batch.num_edges, batch.caps.edge, SEG_POINTS * 4, &batch.edge_tensor, &batch.edge_mask),
        }
    }
}

/// Loss terms; `total == face + edge` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub face: f64,
    pub edge: f64,
}

/// A tape plus the parameters loaded onto it.
pub struct Graph<'p> {
    pub tape: Tape,
    params: &'p Params,
    loaded: HashMap<String, Var>,
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p Params) -> Self {
        Self {
            tape: Tape::new(),
            params,
            loaded: HashMap::new(),
        }
    }

    pub fn param(&mut self, name: &str) -> Result<Var> {
        if let Some(v) = self.loaded.get(name) {
            return Ok(*v);
        }
        let t = self.params.require(name)?.clone();
        let v = self.tape.leaf(t);
        self.loaded.insert(name.to_string(), v);
        Ok(v)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        self.tape.value(v)
    }

    fn linear(&mut self, x: Var, prefix: &str) -> Result<Var> {
        let w = self.param(&format!("{prefix}.w"))?;
        let b = self.param(&format!("{prefix}.b"))?;
        Ok(self.tape.linear(x, w, b))
    }

    fn layer_norm(&mut self, x: Var, prefix: &str) -> Result<Var> {
        let g = self.param(&format!("{prefix}.g"))?;
        let b = self.param(&format!("{prefix}.b"))?;
        Ok(self.tape.layer_norm(x, g, b))
    }

    fn attention(&mut self, x: Var, prefix: &str, layout: AttnLayout, bias: Option<Var>) -> Result<Var> {
        let q = self.linear(x, &format!("{prefix}.attn.q"))?;
        let k = self.linear(x, &format!("{prefix}.attn.k"))?;
        let v = self.linear(x, &format!("{prefix}.attn.v"))?;
        let a = self.tape.attention(q, k, v, bias, layout);
        self.linear(a, &format!("{prefix}.attn.o"))
    }

    fn feed_forward(&mut self, x: Var, prefix: &str) -> Result<Var> {
        let h = self.layer_norm(x, &format!("{prefix}.ln2"))?;
        let h = self.linear(h, &format!("{prefix}.ffn.fc1"))?;
        let h = self.tape.gelu(h);
        let h = self.linear(h, &format!("{prefix}.ffn.fc2"))?;
        Ok(self.tape.add(x, h))
    }

    /// Pre-norm block: `x + Attn(LN(x))`, then `x + FFN(LN(x))`.
    fn block(&mut self, x: Var, prefix: &str, layout: AttnLayout) -> Result<Var> {
        let h = self.layer_norm(x, &format!("{prefix}.ln1"))?;
        let a = self.attention(h, prefix, layout, None)?;
        let x = self.tape.add(x, a);
        self.feed_forward(x, prefix)
    }

    /// Per-primitive embeddings, `(N * cap) x C`; padded slots are zero rows.
    pub fn embed_primitives(&mut self, batch: &TokenBatch, stream: Stream) -> Result<Var> {
        let (n, cap, width, data, mask) = stream.layout(batch);
        if data.len() != n * cap * width || mask.len() != n * cap {
            return Err(Error::integrity(format!("{} tensor does not match its shape", stream.name())));
        }
        let x = self.tape.leaf(Tensor::from_vec(n * cap, width, data.to_vec()));
        let prefix = format!("{}_embed", stream.name());
        let h = self.linear(x, &format!("{prefix}.fc1"))?;
        let h = self.tape.gelu(h);
        let h = self.linear(h, &format!("{prefix}.fc2"))?;
        Ok(self.tape.row_scale(h, mask.iter().map(|m| *m as f64).collect()))
    }

    /// Entity tokens `x^0`, `N x C`: each entity's sequence is
    /// `[aggregate; primitives]` and the output is read at the aggregate.
    pub fn encode_entity(&mut self, emb: Var, batch: &TokenBatch, stream: Stream, cfg: &ModelConfig) -> Result<Var> {
        let (n, cap, _, _, mask) = stream.layout(batch);
        let name = stream.name();
        for e in 0..n {
            if mask[e * cap..(e + 1) * cap].iter().all(|m| *m == 0) {
                return Err(Error::integrity(format!("{name} {e} has no valid primitives")));
            }
        }
        let agg = self.param(&format!("{name}_tok.agg"))?;
        let mut index = Vec::with_capacity(n * (cap + 1));
        let mut key_valid = Vec::with_capacity(n * (cap + 1));
        for e in 0..n {
            index.push((0, 0));
            key_valid.push(true);
            for s in 0..cap {
                index.push((1, e * cap + s));
                key_valid.push(mask[e * cap + s] != 0);
            }
        }
        let mut x = self.tape.gather(&[agg, emb], index);
        let layout = AttnLayout {
            heads: cfg.tokenizer_heads,
            blocks: (0..n).map(|e| (e * (cap + 1), cap + 1)).collect(),
            key_valid,
        };
        for l in 0..cfg.tokenizer_layers {
            x = self.block(x, &format!("{name}_tok.layer{l}"), layout.clone())?;
        }
        Ok(self.tape.gather(&[x], (0..n).map(|e| (0, e * (cap + 1))).collect()))
    }

    /// Attention over `x` (already normalized) whose logits for each adjacent
    /// pair gain `sum_s <w_h, comp[s]> + b_h` over the shared complement
    /// entities `s`. Returns the attention output without the residual.
    pub fn topology_attention(
        &mut self,
        x: Var,
        comp: Option<Var>,
        adjacency: &[[usize; 3]],
        prefix: &str,
        heads: usize,
        mode: AttentionMode,
    ) -> Result<Var> {
        let n = self.value(x).rows;
        let layout = AttnLayout {
            heads,
            blocks: vec![(0, n)],
            key_valid: vec![true; n],
        };
        let bias = match (mode, comp) {
            (AttentionMode::Topology, Some(c)) => {
                let nc = self.value(c).rows;
                if let Some(t) = adjacency.iter().find(|t| t[0] >= n || t[1] >= n || t[2] >= nc || t[0] == t[1]) {
                    return Err(Error::integrity(format!("adjacency triple {t:?} out of range for {n} x {nc} tokens")));
                }
                let proj = self.linear(c, &format!("{prefix}.topo"))?;
                let pairs = adjacency.iter().map(|t| (t[0], t[1], t[2])).collect();
                Some(self.tape.pair_bias(proj, pairs, n))
            }
            _ => None,
        };
        self.attention(x, prefix, layout, bias)
    }

    /// Entity tokens for both streams (the edge stream is absent for face_only).
    pub fn entity_tokens(&mut self, batch: &TokenBatch, cfg: &ModelConfig) -> Result<(Var, Option<Var>)> {
        let ef = self.embed_primitives(batch, Stream::Face)?;
        let xf = self.encode_entity(ef, batch, Stream::Face, cfg)?;
        let xe = if cfg.has_edge_stream() {
            let ee = self.embed_primitives(batch, Stream::Edge)?;
            Some(self.encode_entity(ee, batch, Stream::Edge, cfg)?)
        } else {
            None
        };
        Ok((xf, xe))
    }

    /// `L` residual blocks per stream. Both streams read the complement's
    /// previous-layer tokens, then update together.
    pub fn dual_forward(&mut self, xf: Var, xe: Option<Var>, batch: &TokenBatch, cfg: &ModelConfig) -> Result<(Var, Option<Var>)> {
        match (cfg.streams, xe) {
            (Streams::Dual, Some(mut xe)) => {
                let mut xf = xf;
                for l in 0..cfg.dual_layers {
                    let fp = format!("dual.face.layer{l}");
                    let ep = format!("dual.edge.layer{l}");
                    let hf = self.layer_norm(xf, &format!("{fp}.ln1"))?;
                    let af = self.topology_attention(hf, Some(xe), &batch.face_adjacency, &fp, cfg.dual_heads, cfg.attention_mode)?;
                    let he = self.layer_norm(xe, &format!("{ep}.ln1"))?;
                    let ae = self.topology_attention(he, Some(xf), &batch.edge_adjacency, &ep, cfg.dual_heads, cfg.attention_mode)?;
                    let nf = self.tape.add(xf, af);
                    let ne = self.tape.add(xe, ae);
                    xf = self.feed_forward(nf, &fp)?;
                    xe = self.feed_forward(ne, &ep)?;
                }
                Ok((xf, Some(xe)))
            }
            (Streams::FaceOnly, None) => {
                let mut xf = xf;
                for l in 0..cfg.dual_layers {
                    let fp = format!("dual.face.layer{l}");
                    let h = self.layer_norm(xf, &format!("{fp}.ln1"))?;
                    let a = self.topology_attention(h, None, &[], &fp, cfg.dual_heads, AttentionMode::Standard)?;
                    let x = self.tape.add(xf, a);
                    xf = self.feed_forward(x, &fp)?;
                }
                Ok((xf, None))
            }
            (Streams::Merged, Some(xe)) => {
                let (nf, ne) = (self.value(xf).rows, self.value(xe).rows);
                let index = (0..nf).map(|i| (0, i)).chain((0..ne).map(|i| (1, i))).collect();
                let mut x = self.tape.gather(&[xf, xe], index);
                let layout = AttnLayout {
                    heads: cfg.dual_heads,
                    blocks: vec![(0, nf + ne)],
                    key_valid: vec![true; nf + ne],
                };
                for l in 0..cfg.dual_layers {
                    x = self.block(x, &format!("merged.layer{l}"), layout.clone())?;
                }
                let xf = self.tape.gather(&[x], (0..nf).map(|i| (0, i)).collect());
                let xe = self.tape.gather(&[x], (nf..nf + ne).map(|i| (0, i)).collect());
                Ok((xf, Some(xe)))
            }
            (s, xe) => Err(Error::Config(format!(
                "streams {s:?} with {} edge tokens",
                if xe.is_some() { "some" } else { "no" }
            ))),
        }
    }

    /// Final layer norm of each stream.
    pub fn final_tokens(&mut self, xf: Var, xe: Option<Var>, cfg: &ModelConfig) -> Result<(Var, Option<Var>)> {
        match cfg.streams {
            Streams::Merged => {
                // one encoder, one final norm applied row-wise to both parts
                let f = self.layer_norm(xf, "merged.ln_f")?;
                let e = xe.map(|e| self.layer_norm(e, "merged.ln_f")).transpose()?;
                Ok((f, e))
            }
            _ => {
                let f = self.layer_norm(xf, "dual.face.ln_f")?;
                let e = xe.map(|e| self.layer_norm(e, "dual.edge.ln_f")).transpose()?;
                Ok((f, e))
            }
        }
    }

    /// Backbone: final normalized face and edge tokens.
    pub fn backbone(&mut self, batch: &TokenBatch, cfg: &ModelConfig) -> Result<(Var, Option<Var>)> {
        let (xf, xe) = self.entity_tokens(batch, cfg)?;
        let (xf, xe) = self.dual_forward(xf, xe, batch, cfg)?;
        self.final_tokens(xf, xe, cfg)
    }

    /// Point predictions, `N x (slots * 3)` per stream.
    pub fn point_heads(&mut self, xf: Var, xe: Option<Var>) -> Result<(Var, Option<Var>)> {
        let pf = self.linear(xf, "head.face")?;
        let pe = xe.map(|e| self.linear(e, "head.edge")).transpose()?;
        Ok((pf, pe))
    }

    /// Masked per-entity MSE; returns `(total, face, edge)` nodes.
    pub fn pretrain_loss(&mut self, pf: Var, pe: Option<Var>, targets: &ShapeTargets, cfg: &ModelConfig) -> Result<(Var, Var, Var)> {
        check_targets(self.value(pf), targets.num_faces, targets.face_slots, "face")?;
        let face = self.tape.masked_mse(
            pf,
            targets.face_points.clone(),
            targets.face_mask.clone(),
            entity_weights(&targets.face_mask, targets.face_slots),
        );
        let edge = match pe {
            Some(pe) if cfg.edge_supervision => {
                check_targets(self.value(pe), targets.num_edges, targets.edge_slots, "edge")?;
                self.tape.masked_mse(
                    pe,
                    targets.edge_points.clone(),
                    targets.edge_mask.clone(),
                    entity_weights(&targets.edge_mask, targets.edge_slots),
                )
            }
            _ => self.tape.leaf(Tensor::zeros(1, 1)),
        };
        let total = self.tape.add(face, edge);
        Ok((total, face, edge))
    }

    /// Gradients of `root` for every parameter (zero where unused).
    pub fn gradients(&self, root: Var) -> Result<Params> {
        if !self.value(root).data[0].is_finite() {
            return Err(Error::Numeric(self.describe_non_finite()));
        }
        let grads = self.tape.backward(root)?;
        let mut out = Params::default();
        for (name, t) in self.params.iter() {
            let g = self
                .loaded
                .get(name)
                .and_then(|v| grads[v.0].clone())
                .unwrap_or_else(|| Tensor::zeros(t.rows, t.cols));
            out.insert(name, g);
        }
        Ok(out)
    }

    pub fn describe_non_finite(&self) -> String {
        match self.tape.first_non_finite() {
            Some((v, op)) => match self.loaded.iter().find(|(_, pv)| **pv == v) {
                Some((name, _)) => format!("parameter {name}"),
                None => format!("{op} output (node {})", v.0),
            },
            None => "loss".to_string(),
        }
    }
}

fn check_targets(pred: &Tensor, n: usize, slots: usize, stream: &str) -> Result<()> {
    if pred.rows != n || pred.cols != slots * 3 {
        return Err(Error::integrity(format!(
            "{stream} predictions are {}x{}, targets need {n}x{}",
            pred.rows,
            pred.cols,
            slots * 3
        )));
    }
    Ok(())
}

/// `1 / (N_valid * |Omega_j|)` per entity; zero for entities without points.
fn entity_weights(mask: &[u8], slots: usize) -> Vec<f64> {
    if slots == 0 {
        return Vec::new();
    }
    let counts: Vec<usize> = mask.chunks(slots).map(|c| c.iter().filter(|m| **m != 0).count()).collect();
    let valid = counts.iter().filter(|c| **c > 0).count();
    counts
        .iter()
        .map(|&c| if c == 0 { 0.0 } else { 1.0 / (valid as f64 * c as f64) })
        .collect()
}

fn check_batch(batch: &TokenBatch, cfg: &ModelConfig) -> Result<()> {
    cfg.validate()?;
    if batch.entity_counts.len() != 1 {
        return Err(Error::arg(format!("expected one model per batch, got {}", batch.entity_counts.len())));
    }
    if cfg.has_edge_stream() && batch.num_edges == 0 {
        return Err(Error::Config("edge stream configured for a model without edges".into()));
    }
    Ok(())
}

/// Evaluated forward pass.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub face_tokens: Tensor,
    pub edge_tokens: Option<Tensor>,
    pub face_points: Tensor,
    pub edge_points: Option<Tensor>,
}

pub fn forward(params: &Params, batch: &TokenBatch, cfg: &ModelConfig) -> Result<Prediction> {
    check_batch(batch, cfg)?;
    let mut g = Graph::new(params);
    let (xf, xe) = g.backbone(batch, cfg)?;
    let (pf, pe) = g.point_heads(xf, xe)?;
    if g.tape.first_non_finite().is_some() {
        return Err(Error::Numeric(g.describe_non_finite()));
    }
    Ok(Prediction {
        face_tokens: g.value(xf).clone(),
        edge_tokens: xe.map(|v| g.value(v).clone()),
        face_points: g.value(pf).clone(),
        edge_points: pe.map(|v| g.value(v).clone()),
    })
}

/// Loss terms for given predictions.
pub fn loss_from_predictions(face: &Tensor, edge: Option<&Tensor>, targets: &ShapeTargets, cfg: &ModelConfig) -> Result<LossParts> {
    let params = Params::default();
    let mut g = Graph::new(&params);
    let pf = g.tape.leaf(face.clone());
    let pe = edge.map(|e| g.tape.leaf(e.clone()));
    let (t, f, e) = g.pretrain_loss(pf, pe, targets, cfg)?;
    Ok(LossParts {
        total: g.value(t).data[0],
        face: g.value(f).data[0],
        edge: g.value(e).data[0],
    })
}

/// Loss and parameter gradients of `loss_scale * total` (edge term excluded
/// when edge supervision is off).
pub fn grad_scaled(params: &Params, batch: &TokenBatch, targets: &ShapeTargets, cfg: &ModelConfig, loss_scale: f64) -> Result<(LossParts, Params)> {
    check_batch(batch, cfg)?;
    let mut g = Graph::new(params);
    let (xf, xe) = g.backbone(batch, cfg)?;
    let (pf, pe) = g.point_heads(xf, xe)?;
    let (t, f, e) = g.pretrain_loss(pf, pe, targets, cfg)?;
    let parts = LossParts {
        total: g.value(t).data[0],
        face: g.value(f).data[0],
        edge: g.value(e).data[0],
    };
    let root = if loss_scale == 1.0 { t } else { g.tape.scale(t, loss_scale) };
    Ok((parts, g.gradients(root)?))
}

pub fn grad(params: &Params, batch: &TokenBatch, targets: &ShapeTargets, cfg: &ModelConfig) -> Result<(LossParts, Params)> {
    grad_scaled(params, batch, targets, cfg, 1.0)
}

pub fn pretrain_loss(params: &Params, batch: &TokenBatch, targets: &ShapeTargets, cfg: &ModelConfig) -> Result<LossParts> {
    let p = forward(params, batch, cfg)?;
    loss_from_predictions(&p.face_points, p.edge_points.as_ref(), targets, cfg)
}
