use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::DEFAULT_POINTS_PER_PRIMITIVE;
use crate::tokenize::{Caps, DEFAULT_EDGE_CAP, DEFAULT_FACE_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionMode {
    Topology,
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Streams {
    Dual,
    FaceOnly,
    Merged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub width: usize,
    pub tokenizer_layers: usize,
    pub tokenizer_heads: usize,
    pub dual_layers: usize,
    pub dual_heads: usize,
    pub ffn_expansion: usize,
    /// Sample points per primitive; with the caps this fixes the head sizes.
    pub points_per_primitive: usize,
    pub face_cap: usize,
    pub edge_cap: usize,
    pub edge_supervision: bool,
    pub attention_mode: AttentionMode,
    pub streams: Streams,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            width: 128,
            tokenizer_layers: 3,
            tokenizer_heads: 4,
            dual_layers: 6,
            dual_heads: 4,
            ffn_expansion: 4,
            points_per_primitive: DEFAULT_POINTS_PER_PRIMITIVE,
            face_cap: DEFAULT_FACE_CAP,
            edge_cap: DEFAULT_EDGE_CAP,
            edge_supervision: true,
            attention_mode: AttentionMode::Topology,
            streams: Streams::Dual,
        }
    }
}

impl ModelConfig {
    /// Default layer and head counts at a reduced width.
    pub fn with_width(width: usize) -> Self {
        Self {
            width,
            ..Self::default()
        }
    }

    pub fn caps(&self) -> Caps {
        Caps {
            face: self.face_cap,
            edge: self.edge_cap,
        }
    }

    pub fn face_slots(&self) -> usize {
        self.face_cap * self.points_per_primitive
    }

    pub fn edge_slots(&self) -> usize {
        self.edge_cap * self.points_per_primitive
    }

    pub fn has_edge_stream(&self) -> bool {
        self.streams != Streams::FaceOnly
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.width == 0 || self.ffn_expansion == 0 || self.points_per_primitive == 0 {
            return fail("width, ffn_expansion and points_per_primitive must be positive".into());
        }
        if self.face_cap == 0 || self.edge_cap == 0 {
            return fail("caps must be positive".into());
        }
        for (name, heads) in [("tokenizer_heads", self.tokenizer_heads), ("dual_heads", self.dual_heads)] {
            if heads == 0 || self.width % heads != 0 {
                return fail(format!("width {} not divisible by {name} = {heads}", self.width));
            }
        }
        if self.tokenizer_layers == 0 {
            return fail("tokenizer_layers must be at least 1".into());
        }
        if self.dual_layers == 0 {
            return fail("dual_layers must be at least 1".into());
        }
        if self.streams == Streams::FaceOnly && self.attention_mode == AttentionMode::Topology {
            log::info!("face_only streams have no complement; topology bias is inactive");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = crate::util::parse_json(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_validation() {
        let c = ModelConfig::default();
        assert_eq!((c.width, c.tokenizer_layers, c.tokenizer_heads, c.dual_layers, c.dual_heads), (128, 3, 4, 6, 4));
        c.validate().unwrap();
        let bad = ModelConfig { width: 30, ..c.clone() };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let bad = ModelConfig { dual_layers: 0, ..c };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let parsed = ModelConfig::from_json(r#"{"width": 32, "streams": "merged"}"#).unwrap();
        assert_eq!((parsed.width, parsed.streams, parsed.dual_layers), (32, Streams::Merged, 6));
        assert!(ModelConfig::from_json(r#"{"widht": 32}"#).is_err());
    }
}
