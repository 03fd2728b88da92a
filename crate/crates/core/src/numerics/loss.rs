use super::ops::{argmax, log1p_rest, softmax_slice};
use super::Tensor;
use crate::error::{Error, Result};

/// A scalar loss and its gradient with respect to the input logits.
#[derive(Debug, Clone)]
pub struct Loss {
    pub value: f64,
    pub grad: Tensor,
}

/// Mean over the batch of `−log softmax(logits)[label]`.
pub fn cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<Loss> {
    let labels: Vec<Option<usize>> = labels.iter().copied().map(Some).collect();
    cross_entropy_masked(logits, &labels)
}

/// Cross entropy averaged over the rows that carry a label; unlabeled rows
/// get zero gradient. A batch with no labels yields a zero loss.
pub fn cross_entropy_masked(logits: &Tensor, labels: &[Option<usize>]) -> Result<Loss> {
    logits.expect_rank(2, "cross_entropy")?;
    let (rows, classes) = (logits.dim(0), logits.dim(1));
    if labels.len() != rows {
        return Err(Error::dim("cross_entropy", logits.shape(), &[labels.len()]));
    }
    if let Some(bad) = labels.iter().flatten().find(|&&l| l >= classes) {
        return Err(Error::InvalidArgument(format!(
            "cross_entropy: label {bad} out of range for {classes} classes"
        )));
    }
    let count = labels.iter().flatten().count();
    let mut grad = Tensor::zeros(logits.shape());
    if count == 0 {
        return Ok(Loss { value: 0.0, grad });
    }
    let scale = 1.0 / count as f64;
    let mut total = 0.0;
    for (r, label) in labels.iter().enumerate() {
        let Some(label) = *label else { continue };
        let z = logits.row(r);
        let top = argmax(z);
        total += (z[top] - z[label]) + log1p_rest(z, top);
        let g = grad.row_mut(r);
        for (gi, p) in g.iter_mut().zip(softmax_slice(z)) {
            *gi = p * scale;
        }
        g[label] -= scale;
    }
    Ok(Loss {
        value: total * scale,
        grad,
    })
}

/// Mean absolute error over every entry. The subgradient at a tie is 0.
pub fn mae_loss(student: &Tensor, teacher: &Tensor) -> Result<Loss> {
    if student.shape() != teacher.shape() {
        return Err(Error::dim("mae_loss", student.shape(), teacher.shape()));
    }
    let scale = 1.0 / student.len() as f64;
    let mut total = 0.0;
    let mut grad = Tensor::zeros(student.shape());
    for ((g, &s), &t) in grad.data_mut().iter_mut().zip(student.data()).zip(teacher.data()) {
        let d = s - t;
        total += d.abs();
        *g = if d > 0.0 {
            scale
        } else if d < 0.0 {
            -scale
        } else {
            0.0
        };
    }
    Ok(Loss {
        value: total * scale,
        grad,
    })
}
