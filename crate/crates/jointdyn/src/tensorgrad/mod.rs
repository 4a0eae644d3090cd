//! Minimal reverse-mode differentiable tensor engine.
//!
//! Provides exactly the operations the prediction network needs — conv2d,
//! its transpose, dense layers, relu, softmax, elementwise products and the
//! two loss kernels — recorded on a [`Tape`] and differentiated by a single
//! reverse sweep. Everything is 64-bit and deterministic: the same seed
//! produces bit-identical forward, backward and update results.

mod adam;
mod conv;
mod gradcheck;
mod tape;
mod tensor;

pub use adam::{adam_step, clip_gradients_global_norm, global_grad_norm, AdamState};
pub use conv::{ConvGeom, DeconvGeom};
pub use gradcheck::{finite_difference_check, rel_err, GradCheckReport, DEFAULT_EPSILON};
pub use tape::{stable_log, stable_log_grad, NodeId, Tape};
pub use tensor::{one_hot, one_hot_index, Tensor};
