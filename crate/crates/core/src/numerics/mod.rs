//! Dense numeric core: tensors, the forward operations both student
//! architectures need, their gradients, losses and the Adam update.

mod adam;
mod gemm;
mod gradcheck;
mod loss;
mod ops;
mod tensor;

pub use adam::{adam_step, AdamConfig, Parameter};
pub use gradcheck::{grad_check, relative_error, GradCheckOptions, GradCheckReport, HasParameters};
pub use loss::{cross_entropy, cross_entropy_masked, mae_loss, Loss};
pub use ops::{
    affine, affine_backward, argmax, conv1d, conv1d_backward, conv1d_padded, global_max_pool, global_max_pool_backward,
    global_max_pool_with_argmax, log_sum_exp, relu, relu_backward_in_place, relu_in_place, softmax, softmax_slice,
    AffineGrads, ConvGrads,
};
pub use tensor::Tensor;
