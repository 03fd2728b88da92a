//! Brute-force reference implementations and fixtures shared by the
//! integration tests. Nothing here calls into the library's numerics.

#![allow(dead_code)]

use blendcnn_core::models::ModelConfig;
use blendcnn_core::text::{Example, PAD_ID};
use blendcnn_core::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(
        shape.to_vec(),
        (0..n).map(|_| rng.random_range(-scale..scale)).collect(),
    )
    .unwrap()
}

/// `max |a - b| / max |b|`, the normwise relative error of `a` against the oracle `b`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|y| y.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn scalar_rel_err(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Same-padded 1-D convolution straight from the definition:
/// `out[t][o] = b[o] + Σ_k Σ_i x[t + k - left][i] · w[k][i][o]`, zero outside.
#[allow(clippy::needless_range_loop)]
pub fn conv1d_oracle(x: &[Vec<f64>], w: &[Vec<Vec<f64>>], b: &[f64], left: usize) -> Vec<Vec<f64>> {
    let len = x.len();
    let cout = b.len();
    let mut out = vec![vec![0.0; cout]; len];
    for t in 0..len {
        for o in 0..cout {
            let mut acc = b[o];
            for (k, wk) in w.iter().enumerate() {
                let src = t as isize + k as isize - left as isize;
                if src < 0 || src >= len as isize {
                    continue;
                }
                for (i, xi) in x[src as usize].iter().enumerate() {
                    acc += xi * wk[i][o];
                }
            }
            out[t][o] = acc;
        }
    }
    out
}

pub fn affine_oracle(x: &[Vec<f64>], w: &[Vec<f64>], b: &[f64]) -> Vec<Vec<f64>> {
    x.iter()
        .map(|row| {
            (0..b.len())
                .map(|c| b[c] + row.iter().enumerate().map(|(k, v)| v * w[k][c]).sum::<f64>())
                .collect()
        })
        .collect()
}

pub fn softmax_oracle(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Mean of `-ln p[label]` and its gradient `(p - onehot) / B`.
/// `-ln p[y] = ln(1 + Σ_{j≠y} e^{z_j - z_y})`, which stays accurate when `p[y]` is near 1.
pub fn cross_entropy_oracle(logits: &[Vec<f64>], labels: &[usize]) -> (f64, Vec<Vec<f64>>) {
    let b = logits.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::new();
    for (z, &y) in logits.iter().zip(labels) {
        let p = softmax_oracle(z);
        let others: f64 = z
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != y)
            .map(|(_, v)| (v - z[y]).exp())
            .sum();
        loss += others.ln_1p();
        grad.push(
            p.iter()
                .enumerate()
                .map(|(c, pc)| (pc - if c == y { 1.0 } else { 0.0 }) / b)
                .collect(),
        );
    }
    (loss / b, grad)
}

pub fn mae_oracle(s: &[f64], t: &[f64]) -> (f64, Vec<f64>) {
    let n = s.len() as f64;
    let loss = s.iter().zip(t).map(|(a, b)| (a - b).abs()).sum::<f64>() / n;
    let grad = s
        .iter()
        .zip(t)
        .map(|(a, b)| {
            if a > b {
                1.0 / n
            } else if a < b {
                -1.0 / n
            } else {
                0.0
            }
        })
        .collect();
    (loss, grad)
}

/// One parameter entry through `grads.len()` Adam steps.
pub fn adam_oracle(theta0: f64, grads: &[f64], lr: f64, b1: f64, b2: f64, eps: f64) -> f64 {
    let (mut theta, mut m, mut v) = (theta0, 0.0, 0.0);
    for (i, g) in grads.iter().enumerate() {
        let t = (i + 1) as f64;
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        let m_hat = m / (1.0 - b1.powf(t));
        let v_hat = v / (1.0 - b2.powf(t));
        theta -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    theta
}

pub fn rows(t: &Tensor) -> Vec<Vec<f64>> {
    t.data().chunks(t.dim(t.rank() - 1)).map(|r| r.to_vec()).collect()
}

pub fn kernel_nested(w: &Tensor) -> Vec<Vec<Vec<f64>>> {
    let (k, cin, cout) = (w.dim(0), w.dim(1), w.dim(2));
    (0..k)
        .map(|a| {
            (0..cin)
                .map(|i| (0..cout).map(|o| w.data()[(a * cin + i) * cout + o]).collect())
                .collect()
        })
        .collect()
}

/// Random labeled example with `valid_len` in `1..=max_valid`, padded to `len`.
pub fn random_example(rng: &mut ChaCha8Rng, id: usize, cfg: &ModelConfig, max_valid: usize, len: usize) -> Example {
    let valid_len = rng.random_range(1..=max_valid);
    let mut token_ids: Vec<u32> = (0..valid_len)
        .map(|_| rng.random_range(1..cfg.vocab_size as u32))
        .collect();
    token_ids.resize(len, PAD_ID);
    Example {
        id: format!("ex{id}"),
        token_ids,
        valid_len,
        label: Some(rng.random_range(0..cfg.n_classes)),
        teacher_logits: None,
    }
}

pub fn bits(t: &Tensor) -> Vec<u64> {
    t.data().iter().map(|v| v.to_bits()).collect()
}
