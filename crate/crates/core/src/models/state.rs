//! Model parameters, initialization, forward and backward passes.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ModelConfig, ModelKind};
use crate::error::{Error, Result};
use crate::numerics::{
    adam_step, affine, affine_backward, conv1d_backward, conv1d_padded, global_max_pool_backward,
    global_max_pool_with_argmax, relu_backward_in_place, relu_in_place, AdamConfig, HasParameters, Parameter, Tensor,
};
use crate::text::{EmbeddingMatrix, Example, PAD_ID};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub kernels: Parameter,
    pub bias: Parameter,
    /// Zero rows prepended; `K − 1 − left_pad` are appended.
    pub left_pad: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Parameter,
    pub b: Parameter,
}

/// Trainable state of either student architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub config: ModelConfig,
    pub embedding: Parameter,
    pub convs: Vec<ConvLayer>,
    /// BlendCNN's blend layer; absent for KimCNN.
    pub blend: Option<Dense>,
    pub logits: Dense,
    pub seed: u64,
    /// Bumped on every optimizer update; forward caches record it.
    version: u64,
}

/// Forward-pass mode. Training mode carries the dropout RNG.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut ChaCha8Rng),
}

struct ExampleCache {
    ids: Vec<u32>,
    embedded: Tensor,
    /// Post-relu output of each convolution over the valid prefix.
    outputs: Vec<Tensor>,
    argmax: Vec<Vec<usize>>,
}

/// Activations saved by [`ModelState::forward`] for the backward pass.
pub struct ForwardCache {
    fingerprint: u64,
    version: u64,
    examples: Vec<ExampleCache>,
    features: Tensor,
    /// Post-relu blend activations (BlendCNN).
    hidden: Option<Tensor>,
    /// Inverted-dropout scale per feature (KimCNN, train mode).
    dropout_mask: Option<Tensor>,
    pub logits: Tensor,
}

fn glorot(rng: &mut ChaCha8Rng, shape: &[usize], fan_in: usize, fan_out: usize) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Tensor::from_fn(shape, |_| rng.random_range(-limit..=limit))
}

/// Order-sensitive hash of the ids and token content of a batch.
pub fn batch_fingerprint(batch: &[&Example]) -> u64 {
    let mut h = DefaultHasher::new();
    for ex in batch {
        ex.id.hash(&mut h);
        ex.token_ids[..ex.valid_len.min(ex.token_ids.len())].hash(&mut h);
        ex.valid_len.hash(&mut h);
    }
    h.finish()
}

impl ModelState {
    /// Glorot-uniform weights, zero biases, and either the given
    /// embeddings or a seeded uniform(±0.05) table.
    pub fn init(config: &ModelConfig, seed: u64, glove: Option<EmbeddingMatrix>) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embedding = match glove {
            Some(m) => {
                if m.vocab_size() != config.vocab_size || m.embed_dim() != config.embed_dim {
                    return Err(Error::Config(format!(
                        "embedding matrix is {}x{}, model expects {}x{}",
                        m.vocab_size(),
                        m.embed_dim(),
                        config.vocab_size,
                        config.embed_dim
                    )));
                }
                m.values
            }
            None => EmbeddingMatrix::random(config.vocab_size, config.embed_dim, rng.random()).values,
        };
        let ch = config.n_channels;
        let convs = config
            .conv_shapes()
            .into_iter()
            .enumerate()
            .map(|(i, (k, cin))| ConvLayer {
                kernels: Parameter::new(
                    format!("conv{i}.kernels"),
                    glorot(&mut rng, &[k, cin, ch], k * cin, k * ch),
                ),
                bias: Parameter::new(format!("conv{i}.bias"), Tensor::zeros(&[ch])),
                left_pad: (k - 1) / 2,
            })
            .collect();
        let features = config.feature_width();
        let blend = (config.kind == ModelKind::BlendCnn).then(|| Dense {
            w: Parameter::new(
                "blend.w",
                glorot(&mut rng, &[features, config.dense_width], features, config.dense_width),
            ),
            b: Parameter::new("blend.b", Tensor::zeros(&[config.dense_width])),
        });
        let head = config.head_width();
        let logits = Dense {
            w: Parameter::new(
                "logits.w",
                glorot(&mut rng, &[head, config.n_classes], head, config.n_classes),
            ),
            b: Parameter::new("logits.b", Tensor::zeros(&[config.n_classes])),
        };
        Ok(Self {
            config: config.clone(),
            embedding: Parameter::new("embedding", embedding),
            convs,
            blend,
            logits,
            seed,
            version: 0,
        })
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    /// Parameters in registration order; each appears exactly once.
    pub fn parameters(&self) -> Vec<&Parameter> {
        let mut out = vec![&self.embedding];
        for c in &self.convs {
            out.push(&c.kernels);
            out.push(&c.bias);
        }
        if let Some(d) = &self.blend {
            out.push(&d.w);
            out.push(&d.b);
        }
        out.push(&self.logits.w);
        out.push(&self.logits.b);
        out
    }

    /// Number of scalar entries across [`Self::parameters`].
    pub fn enumerated_param_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }

    /// Applies Adam to every parameter and clears the gradients.
    pub fn adam_update(&mut self, cfg: &AdamConfig) -> Result<()> {
        for p in self.parameters_mut() {
            adam_step(p, cfg)?;
        }
        self.version += 1;
        Ok(())
    }

    fn check_example(&self, ex: &Example) -> Result<()> {
        if ex.valid_len == 0 {
            return Err(Error::InvalidArgument(format!("example {} has valid_len 0", ex.id)));
        }
        if ex.token_ids.len() > self.config.seq_len || ex.valid_len > ex.token_ids.len() {
            return Err(Error::InvalidArgument(format!(
                "example {} is encoded to length {} (valid {}), model seq_len is {}",
                ex.id,
                ex.token_ids.len(),
                ex.valid_len,
                self.config.seq_len
            )));
        }
        if let Some(&bad) = ex.token_ids.iter().find(|&&t| t as usize >= self.config.vocab_size) {
            return Err(Error::InvalidArgument(format!(
                "example {} has token id {bad} outside vocabulary of {}",
                ex.id, self.config.vocab_size
            )));
        }
        Ok(())
    }

    fn embed(&self, ids: &[u32]) -> Tensor {
        let d = self.config.embed_dim;
        let mut x = Tensor::zeros(&[ids.len(), d]);
        for (t, &id) in ids.iter().enumerate() {
            x.row_mut(t).copy_from_slice(self.embedding.value.row(id as usize));
        }
        x
    }

    /// Runs the convolutional trunk over the valid prefix of one example.
    /// Rows past `valid_len` never enter the computation, so trailing PAD
    /// tokens cannot influence the result.
    fn trunk(&self, ex: &Example, features: &mut [f64]) -> Result<ExampleCache> {
        let ids = ex.token_ids[..ex.valid_len].to_vec();
        let embedded = self.embed(&ids);
        let ch = self.config.n_channels;
        let mut outputs = Vec::with_capacity(self.convs.len());
        let mut argmax = Vec::with_capacity(self.convs.len());
        for (i, conv) in self.convs.iter().enumerate() {
            let input = match self.config.kind {
                ModelKind::BlendCnn if i > 0 => &outputs[i - 1],
                _ => &embedded,
            };
            let mut y = conv1d_padded(input, &conv.kernels.value, &conv.bias.value, conv.left_pad)?;
            relu_in_place(&mut y);
            let (pooled, arg) = global_max_pool_with_argmax(&y, ids.len())?;
            features[i * ch..(i + 1) * ch].copy_from_slice(pooled.data());
            outputs.push(y);
            argmax.push(arg);
        }
        Ok(ExampleCache {
            ids,
            embedded,
            outputs,
            argmax,
        })
    }

    pub fn forward(&self, batch: &[&Example], mode: Mode<'_>) -> Result<ForwardCache> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        let width = self.config.feature_width();
        let mut features = Tensor::zeros(&[batch.len(), width]);
        let mut examples = Vec::with_capacity(batch.len());
        for (b, ex) in batch.iter().enumerate() {
            self.check_example(ex)?;
            examples.push(self.trunk(ex, features.row_mut(b))?);
        }

        let (hidden, dropout_mask, logits) = match &self.blend {
            Some(blend) => {
                let mut h = affine(&features, &blend.w.value, &blend.b.value)?;
                relu_in_place(&mut h);
                let logits = affine(&h, &self.logits.w.value, &self.logits.b.value)?;
                (Some(h), None, logits)
            }
            None => {
                let p = self.config.dropout;
                let mask = match mode {
                    Mode::Train(rng) if p > 0.0 => {
                        let keep = 1.0 / (1.0 - p);
                        Some(Tensor::from_fn(features.shape(), |_| {
                            if rng.random::<f64>() < p {
                                0.0
                            } else {
                                keep
                            }
                        }))
                    }
                    _ => None,
                };
                let logits = match &mask {
                    Some(m) => {
                        let mut dropped = features.clone();
                        for (x, s) in dropped.data_mut().iter_mut().zip(m.data()) {
                            *x *= s;
                        }
                        affine(&dropped, &self.logits.w.value, &self.logits.b.value)?
                    }
                    None => affine(&features, &self.logits.w.value, &self.logits.b.value)?,
                };
                (None, mask, logits)
            }
        };
        logits.ensure_finite("logits")?;
        Ok(ForwardCache {
            fingerprint: batch_fingerprint(batch),
            version: self.version,
            examples,
            features,
            hidden,
            dropout_mask,
            logits,
        })
    }

    /// Eval-mode logits `[B, C]`.
    pub fn predict(&self, batch: &[&Example]) -> Result<Tensor> {
        Ok(self.forward(batch, Mode::Eval)?.logits)
    }

    /// Accumulates exact gradients of a loss with gradient `dlogits` into
    /// every parameter's `grad`. The PAD embedding row always receives 0.
    pub fn backward(&mut self, batch: &[&Example], cache: &ForwardCache, dlogits: &Tensor) -> Result<()> {
        if cache.version != self.version {
            return Err(Error::StaleCache(format!(
                "cache from parameter version {}, model is at {}",
                cache.version, self.version
            )));
        }
        if batch_fingerprint(batch) != cache.fingerprint {
            return Err(Error::StaleCache("batch does not match the cached forward pass".into()));
        }
        if dlogits.shape() != cache.logits.shape() {
            return Err(Error::dim("backward", cache.logits.shape(), dlogits.shape()));
        }

        let head_input = match (&cache.hidden, &cache.dropout_mask) {
            (Some(h), _) => h.clone(),
            (None, Some(mask)) => {
                let mut dropped = cache.features.clone();
                for (x, s) in dropped.data_mut().iter_mut().zip(mask.data()) {
                    *x *= s;
                }
                dropped
            }
            (None, None) => cache.features.clone(),
        };
        let head = affine_backward(&head_input, &self.logits.w.value, dlogits)?;
        self.logits.w.accumulate(&head.dw)?;
        self.logits.b.accumulate(&head.db)?;

        let dfeatures = match (&mut self.blend, &cache.hidden) {
            (Some(blend), Some(hidden)) => {
                let mut dh = head.dx;
                relu_backward_in_place(hidden, &mut dh);
                let g = affine_backward(&cache.features, &blend.w.value, &dh)?;
                blend.w.accumulate(&g.dw)?;
                blend.b.accumulate(&g.db)?;
                g.dx
            }
            _ => {
                let mut df = head.dx;
                if let Some(mask) = &cache.dropout_mask {
                    for (g, s) in df.data_mut().iter_mut().zip(mask.data()) {
                        *g *= s;
                    }
                }
                df
            }
        };

        let ch = self.config.n_channels;
        let d = self.config.embed_dim;
        for (b, ex) in cache.examples.iter().enumerate() {
            let n = ex.ids.len();
            let drow = dfeatures.row(b);
            let mut dembedded = Tensor::zeros(&[n, d]);
            let mut carry: Option<Tensor> = None;
            for i in (0..self.convs.len()).rev() {
                let mut dy = global_max_pool_backward(&ex.argmax[i], &drow[i * ch..(i + 1) * ch], n);
                if let Some(c) = carry.take() {
                    for (a, g) in dy.data_mut().iter_mut().zip(c.data()) {
                        *a += g;
                    }
                }
                relu_backward_in_place(&ex.outputs[i], &mut dy);
                let conv = &mut self.convs[i];
                let input = match self.config.kind {
                    ModelKind::BlendCnn if i > 0 => &ex.outputs[i - 1],
                    _ => &ex.embedded,
                };
                let g = conv1d_backward(input, &conv.kernels.value, &dy, conv.left_pad)?;
                conv.kernels.accumulate(&g.dkernels)?;
                conv.bias.accumulate(&g.dbias)?;
                match self.config.kind {
                    ModelKind::BlendCnn if i > 0 => carry = Some(g.dx),
                    _ => {
                        for (a, x) in dembedded.data_mut().iter_mut().zip(g.dx.data()) {
                            *a += x;
                        }
                    }
                }
            }
            for (t, &id) in ex.ids.iter().enumerate() {
                let row = self.embedding.grad.row_mut(id as usize);
                for (a, g) in row.iter_mut().zip(dembedded.row(t)) {
                    *a += g;
                }
            }
        }
        self.embedding.grad.row_mut(PAD_ID as usize).fill(0.0);
        Ok(())
    }
}

impl HasParameters for ModelState {
    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut out = vec![&mut self.embedding];
        for c in &mut self.convs {
            out.push(&mut c.kernels);
            out.push(&mut c.bias);
        }
        if let Some(d) = &mut self.blend {
            out.push(&mut d.w);
            out.push(&mut d.b);
        }
        out.push(&mut self.logits.w);
        out.push(&mut self.logits.b);
        out
    }
}
