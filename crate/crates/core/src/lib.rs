//! Compact convolutional text classifiers (BlendCNN, KimCNN) trained from a
//! teacher's logits, with the tooling around them: text ingestion, teacher
//! logit exchange, training loops, parameter accounting and throughput
//! measurement.
//!
//! ```text
//! tokens → embedding → conv₁ → conv₂ → … → convₙ
//!                        │       │          │
//!                      pool    pool       pool      (masked global max)
//!                        └───────┴── concat ┘
//!                                  │
//!                         dense(100) + relu → logits ──MAE── teacher logits
//! ```

pub mod bench;
pub mod distill;
pub mod error;
pub mod experiment;
pub mod models;
pub mod numerics;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
pub use numerics::{AdamConfig, Parameter, Tensor};
