use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Stacked convolutions, each tapped by a pooled branch, blended by a dense layer.
    BlendCnn,
    /// Parallel convolutions of several widths over the embeddings.
    KimCnn,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::BlendCnn => "blendcnn",
            ModelKind::KimCnn => "kimcnn",
        })
    }
}

/// Full architectural description of a student model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// BlendCNN depth.
    pub n_layers: usize,
    pub n_channels: usize,
    /// BlendCNN kernel width (odd).
    pub kernel_width: usize,
    /// KimCNN parallel kernel widths.
    pub kim_widths: Vec<usize>,
    /// BlendCNN blend layer width.
    pub dense_width: usize,
    pub embed_dim: usize,
    pub vocab_size: usize,
    pub n_classes: usize,
    pub seq_len: usize,
    /// KimCNN dropout probability on the pooled features.
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::BlendCnn,
            n_layers: 3,
            n_channels: 100,
            kernel_width: 5,
            kim_widths: vec![3, 4, 5],
            dense_width: 100,
            embed_dim: 100,
            vocab_size: 20_000,
            n_classes: 4,
            seq_len: 128,
            dropout: 0.5,
        }
    }
}

impl ModelConfig {
    pub fn blendcnn(n_layers: usize, vocab_size: usize, n_classes: usize) -> Self {
        Self {
            n_layers,
            vocab_size,
            n_classes,
            ..Self::default()
        }
    }

    pub fn kimcnn(vocab_size: usize, n_classes: usize) -> Self {
        Self {
            kind: ModelKind::KimCnn,
            vocab_size,
            n_classes,
            ..Self::default()
        }
    }

    /// Short display name, e.g. `blendcnn-3` or `kimcnn`.
    pub fn name(&self) -> String {
        match self.kind {
            ModelKind::BlendCnn => format!("blendcnn-{}", self.n_layers),
            ModelKind::KimCnn => "kimcnn".to_string(),
        }
    }

    /// Width of the concatenated pooled features.
    pub fn feature_width(&self) -> usize {
        match self.kind {
            ModelKind::BlendCnn => self.n_layers * self.n_channels,
            ModelKind::KimCnn => self.kim_widths.len() * self.n_channels,
        }
    }

    /// Width feeding the logits layer.
    pub fn head_width(&self) -> usize {
        match self.kind {
            ModelKind::BlendCnn => self.dense_width,
            ModelKind::KimCnn => self.feature_width(),
        }
    }

    /// `(kernel width, input channels)` for each convolution in order.
    pub fn conv_shapes(&self) -> Vec<(usize, usize)> {
        match self.kind {
            ModelKind::BlendCnn => (0..self.n_layers)
                .map(|i| {
                    let cin = if i == 0 { self.embed_dim } else { self.n_channels };
                    (self.kernel_width, cin)
                })
                .collect(),
            ModelKind::KimCnn => self.kim_widths.iter().map(|&k| (k, self.embed_dim)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        let extents = [
            ("n_channels", self.n_channels),
            ("embed_dim", self.embed_dim),
            ("n_classes", self.n_classes),
            ("seq_len", self.seq_len),
        ];
        for (name, v) in extents {
            if v == 0 {
                return fail(format!("{name} must be positive"));
            }
        }
        if self.vocab_size < 2 {
            return fail("vocab_size must cover PAD and UNK".into());
        }
        match self.kind {
            ModelKind::BlendCnn => {
                if self.n_layers == 0 || self.dense_width == 0 {
                    return fail("blendcnn needs n_layers and dense_width > 0".into());
                }
                if self.kernel_width.is_multiple_of(2) {
                    return fail(format!("kernel_width must be odd, got {}", self.kernel_width));
                }
            }
            ModelKind::KimCnn => {
                if self.kim_widths.is_empty() || self.kim_widths.contains(&0) {
                    return fail(format!("invalid kim_widths {:?}", self.kim_widths));
                }
                if !(0.0..1.0).contains(&self.dropout) {
                    return fail(format!("dropout must lie in [0, 1), got {}", self.dropout));
                }
            }
        }
        Ok(())
    }
}
