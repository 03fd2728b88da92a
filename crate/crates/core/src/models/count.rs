//! Analytic parameter accounting.

use serde::{Deserialize, Serialize};

use super::config::{ModelConfig, ModelKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamBlock {
    pub name: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamCount {
    pub blocks: Vec<ParamBlock>,
    pub total: usize,
}

/// `V·d + Σ (K·Cin·Cout + Cout) + blend + logits`, block by block.
/// The PAD embedding row is counted even though it is never updated.
pub fn param_count(config: &ModelConfig) -> ParamCount {
    let mut blocks = vec![ParamBlock {
        name: "embedding".into(),
        count: config.vocab_size * config.embed_dim,
    }];
    let ch = config.n_channels;
    for (i, (k, cin)) in config.conv_shapes().into_iter().enumerate() {
        blocks.push(ParamBlock {
            name: format!("conv{i}"),
            count: k * cin * ch + ch,
        });
    }
    if config.kind == ModelKind::BlendCnn {
        blocks.push(ParamBlock {
            name: "blend".into(),
            count: config.feature_width() * config.dense_width + config.dense_width,
        });
    }
    blocks.push(ParamBlock {
        name: "logits".into(),
        count: config.head_width() * config.n_classes + config.n_classes,
    });
    let total = blocks.iter().map(|b| b.count).sum();
    ParamCount { blocks, total }
}

impl std::fmt::Display for ParamCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in &self.blocks {
            writeln!(f, "{:<12} {:>12}", b.name, b.count)?;
        }
        write!(f, "{:<12} {:>12}", "total", self.total)
    }
}
