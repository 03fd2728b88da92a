//! Forward operations and their hand-derived gradients.

use super::gemm::{matmul_acc, matmul_nt_acc, matmul_tn_acc};
use super::Tensor;
use crate::error::{Error, Result};

/// `out[r,c] = Σ_k x[r,k]·w[k,c] + b[c]`
pub fn affine(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    x.expect_rank(2, "affine")?;
    w.expect_rank(2, "affine")?;
    if x.dim(1) != w.dim(0) {
        return Err(Error::dim("affine", x.shape(), w.shape()));
    }
    if b.shape() != [w.dim(1)] {
        return Err(Error::dim("affine bias", w.shape(), b.shape()));
    }
    let (rows, inner, cols) = (x.dim(0), x.dim(1), w.dim(1));
    let mut out = Tensor::from_fn(&[rows, cols], |i| b.data()[i % cols]);
    matmul_acc(x.data(), w.data(), out.data_mut(), rows, inner, cols);
    Ok(out)
}

pub struct AffineGrads {
    pub dx: Tensor,
    pub dw: Tensor,
    pub db: Tensor,
}

pub fn affine_backward(x: &Tensor, w: &Tensor, dout: &Tensor) -> Result<AffineGrads> {
    let (rows, inner, cols) = (x.dim(0), x.dim(1), w.dim(1));
    if dout.shape() != [rows, cols] {
        return Err(Error::dim("affine backward", &[rows, cols], dout.shape()));
    }
    let mut dx = Tensor::zeros(&[rows, inner]);
    matmul_nt_acc(dout.data(), w.data(), dx.data_mut(), rows, cols, inner);
    let mut dw = Tensor::zeros(&[inner, cols]);
    matmul_tn_acc(x.data(), dout.data(), dw.data_mut(), inner, rows, cols);
    let mut db = Tensor::zeros(&[cols]);
    for r in 0..rows {
        for (acc, g) in db.data_mut().iter_mut().zip(dout.row(r)) {
            *acc += g;
        }
    }
    Ok(AffineGrads { dx, dw, db })
}

fn check_conv(x: &Tensor, kernels: &Tensor, bias: &Tensor, left_pad: usize) -> Result<()> {
    x.expect_rank(2, "conv1d")?;
    kernels.expect_rank(3, "conv1d")?;
    if x.dim(1) != kernels.dim(1) {
        return Err(Error::dim("conv1d", x.shape(), kernels.shape()));
    }
    if bias.shape() != [kernels.dim(2)] {
        return Err(Error::dim("conv1d bias", kernels.shape(), bias.shape()));
    }
    if left_pad >= kernels.dim(0) {
        return Err(Error::InvalidArgument(format!(
            "conv1d: left padding {left_pad} must be smaller than width {}",
            kernels.dim(0)
        )));
    }
    Ok(())
}

/// Row ranges `(out_start, in_start, rows)` where tap `k` reads in-range input.
fn tap_range(len: usize, k: usize, left_pad: usize) -> Option<(usize, usize, usize)> {
    let shift = k as isize - left_pad as isize;
    let (out_start, in_start) = if shift >= 0 {
        (0, shift as usize)
    } else {
        ((-shift) as usize, 0)
    };
    if out_start >= len || in_start >= len {
        return None;
    }
    let rows = len - out_start.max(in_start);
    Some((out_start, in_start, rows))
}

/// Same-padded 1-D convolution over `x[L, Cin]` with `kernels[K, Cin, Cout]`.
///
/// `out[t,o] = bias[o] + Σ_{k,c} x[t+k−(K−1)/2, c]·kernels[k,c,o]`, with
/// out-of-range rows of `x` read as zero. `K` must be odd.
pub fn conv1d(x: &Tensor, kernels: &Tensor, bias: &Tensor) -> Result<Tensor> {
    kernels.expect_rank(3, "conv1d")?;
    let width = kernels.dim(0);
    if width.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "conv1d: same padding needs an odd kernel width, got {width}"
        )));
    }
    conv1d_padded(x, kernels, bias, (width - 1) / 2)
}

/// Convolution with an explicit left zero-padding; the right side is padded
/// by `K − 1 − left_pad` so the output keeps length `L`. Allows even widths.
pub fn conv1d_padded(x: &Tensor, kernels: &Tensor, bias: &Tensor, left_pad: usize) -> Result<Tensor> {
    check_conv(x, kernels, bias, left_pad)?;
    let (len, cin) = (x.dim(0), x.dim(1));
    let (width, cout) = (kernels.dim(0), kernels.dim(2));
    let mut out = Tensor::from_fn(&[len, cout], |i| bias.data()[i % cout]);
    let tap = cin * cout;
    for k in 0..width {
        if let Some((o, i, rows)) = tap_range(len, k, left_pad) {
            matmul_acc(
                &x.data()[i * cin..(i + rows) * cin],
                &kernels.data()[k * tap..(k + 1) * tap],
                &mut out.data_mut()[o * cout..(o + rows) * cout],
                rows,
                cin,
                cout,
            );
        }
    }
    Ok(out)
}

pub struct ConvGrads {
    pub dx: Tensor,
    pub dkernels: Tensor,
    pub dbias: Tensor,
}

pub fn conv1d_backward(x: &Tensor, kernels: &Tensor, dout: &Tensor, left_pad: usize) -> Result<ConvGrads> {
    let (len, cin) = (x.dim(0), x.dim(1));
    let (width, cout) = (kernels.dim(0), kernels.dim(2));
    if dout.shape() != [len, cout] {
        return Err(Error::dim("conv1d backward", &[len, cout], dout.shape()));
    }
    let mut dx = Tensor::zeros(&[len, cin]);
    let mut dkernels = Tensor::zeros(kernels.shape());
    let tap = cin * cout;
    for k in 0..width {
        if let Some((o, i, rows)) = tap_range(len, k, left_pad) {
            let g = &dout.data()[o * cout..(o + rows) * cout];
            matmul_nt_acc(
                g,
                &kernels.data()[k * tap..(k + 1) * tap],
                &mut dx.data_mut()[i * cin..(i + rows) * cin],
                rows,
                cout,
                cin,
            );
            matmul_tn_acc(
                &x.data()[i * cin..(i + rows) * cin],
                g,
                &mut dkernels.data_mut()[k * tap..(k + 1) * tap],
                cin,
                rows,
                cout,
            );
        }
    }
    let mut dbias = Tensor::zeros(&[cout]);
    for t in 0..len {
        for (acc, g) in dbias.data_mut().iter_mut().zip(dout.row(t)) {
            *acc += g;
        }
    }
    Ok(ConvGrads { dx, dkernels, dbias })
}

pub fn relu(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    relu_in_place(&mut out);
    out
}

pub fn relu_in_place(x: &mut Tensor) {
    for v in x.data_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Masks `dout` in place where the relu output was not positive.
pub fn relu_backward_in_place(output: &Tensor, dout: &mut Tensor) {
    for (g, &y) in dout.data_mut().iter_mut().zip(output.data()) {
        if y <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Column-wise maximum over rows `0..valid_len` of `x[L, C]`.
pub fn global_max_pool(x: &Tensor, valid_len: usize) -> Result<Tensor> {
    global_max_pool_with_argmax(x, valid_len).map(|(out, _)| out)
}

/// Pooled values plus, per channel, the first row attaining the maximum.
pub fn global_max_pool_with_argmax(x: &Tensor, valid_len: usize) -> Result<(Tensor, Vec<usize>)> {
    x.expect_rank(2, "global_max_pool")?;
    if valid_len == 0 || valid_len > x.dim(0) {
        return Err(Error::InvalidArgument(format!(
            "global_max_pool: valid_len {valid_len} outside 1..={}",
            x.dim(0)
        )));
    }
    let channels = x.dim(1);
    let mut best = x.row(0).to_vec();
    let mut arg = vec![0usize; channels];
    for t in 1..valid_len {
        for (c, &v) in x.row(t).iter().enumerate() {
            if v > best[c] {
                best[c] = v;
                arg[c] = t;
            }
        }
    }
    Ok((Tensor::vector(best), arg))
}

/// Routes each channel's gradient to its argmax row of an `[len, C]` input.
pub fn global_max_pool_backward(argmax: &[usize], dout: &[f64], len: usize) -> Tensor {
    let channels = argmax.len();
    let mut dx = Tensor::zeros(&[len, channels]);
    for (c, (&t, &g)) in argmax.iter().zip(dout).enumerate() {
        dx.data_mut()[t * channels + c] = g;
    }
    dx
}

/// Softmax over the last axis; the shape is kept.
pub fn softmax(z: &Tensor) -> Tensor {
    let width = z.dim(z.rank() - 1);
    let data = z.data().chunks(width).flat_map(softmax_slice).collect();
    Tensor::new(z.shape().to_vec(), data).expect("shape unchanged")
}

pub fn softmax_slice(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn log_sum_exp(z: &[f64]) -> f64 {
    let top = argmax(z);
    z[top] + log1p_rest(z, top)
}

/// `ln(1 + Σ_{j≠top} e^{z_j - z_top})`; keeps precision when one entry dominates.
pub(crate) fn log1p_rest(z: &[f64], top: usize) -> f64 {
    let rest: f64 = z
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != top)
        .map(|(_, &v)| (v - z[top]).exp())
        .sum();
    rest.ln_1p()
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in z.iter().enumerate().skip(1) {
        if v > z[best] {
            best = i;
        }
    }
    best
}
