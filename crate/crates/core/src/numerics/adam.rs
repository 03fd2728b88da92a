//! Adam with bias correction and a constant learning rate.

use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{Error, Result};

/// A trainable tensor with its gradient buffer and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    pub m: Tensor,
    pub v: Tensor,
    pub step: u64,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let zeros = Tensor::zeros(value.shape());
        Self {
            name: name.into(),
            grad: zeros.clone(),
            m: zeros.clone(),
            v: zeros,
            value,
            step: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    /// Adds `g` into the gradient buffer.
    pub fn accumulate(&mut self, g: &Tensor) -> Result<()> {
        if g.shape() != self.grad.shape() {
            return Err(Error::dim("accumulate", self.grad.shape(), g.shape()));
        }
        for (acc, &x) in self.grad.data_mut().iter_mut().zip(g.data()) {
            *acc += x;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && self.eps > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && self.beta1 > 0.0
            && (0.0..1.0).contains(&self.beta2)
            && self.beta2 > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid Adam settings {self:?}")))
        }
    }
}

/// One bias-corrected Adam update; clears the gradient afterwards.
pub fn adam_step(p: &mut Parameter, cfg: &AdamConfig) -> Result<()> {
    p.grad.ensure_finite(&format!("gradient of {}", p.name))?;
    p.step += 1;
    let t = p.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let value = p.value.data_mut();
    let grad = p.grad.data_mut();
    let m = p.m.data_mut();
    let v = p.v.data_mut();
    for i in 0..value.len() {
        let g = grad[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        value[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        grad[i] = 0.0;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_gradient_first_step() {
        let mut p = Parameter::new("w", Tensor::zeros(&[3]));
        p.grad.fill(1.0);
        let cfg = AdamConfig::default();
        adam_step(&mut p, &cfg).unwrap();
        let want = -cfg.lr / (1.0 + cfg.eps);
        for &x in p.value.data() {
            assert!((x - want).abs() < 1e-18);
        }
        assert_eq!(p.step, 1);
        assert!(p.grad.data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn zero_gradient_leaves_value() {
        let mut p = Parameter::new("w", Tensor::vector(vec![0.25, -4.0]));
        adam_step(&mut p, &AdamConfig::default()).unwrap();
        assert_eq!(p.value.data(), &[0.25, -4.0]);
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let mut p = Parameter::new("blend.w", Tensor::zeros(&[2]));
        p.grad.data_mut()[1] = f64::INFINITY;
        let err = adam_step(&mut p, &AdamConfig::default()).unwrap_err();
        assert!(err.to_string().contains("blend.w"));
        assert_eq!(p.step, 0);
    }

    #[test]
    fn config_validation() {
        assert!(AdamConfig::default().validate().is_ok());
        let bad = AdamConfig {
            beta1: 1.0,
            ..AdamConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
