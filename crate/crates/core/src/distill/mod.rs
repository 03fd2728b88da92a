//! Training loops, teacher-logit exchange and evaluation.

mod eval;
mod logits;
mod teacher;
mod train;

pub use eval::{evaluate, read_predictions_csv, score, write_predictions_csv, Evaluation, Prediction};
pub use logits::{attach_logits, infer_logits, read_logits_jsonl, write_logits_jsonl, LogitRecord};
pub use teacher::{make_surrogate_teacher, surrogate_teacher_config, SURROGATE_TEACHER_LAYERS};
pub use train::{train_direct, train_distill, EpochRecord, RunLedger, TrainConfig, TrainMode, TrainOptions};
