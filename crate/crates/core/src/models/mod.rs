//! BlendCNN and KimCNN student models.

mod checkpoint;
mod config;
mod count;
mod state;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, FORMAT_VERSION};
pub use config::{ModelConfig, ModelKind};
pub use count::{param_count, ParamBlock, ParamCount};
pub use state::{batch_fingerprint, ConvLayer, Dense, ForwardCache, Mode, ModelState};
