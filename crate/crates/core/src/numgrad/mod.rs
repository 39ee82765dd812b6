//! Dense numeric core: row-major matrices, layer passes with explicit backward
//! functions, losses, optimizers, initialization and a finite-difference checker.

mod gradcheck;
mod loss;
mod matrix;
pub mod ops;
mod optim;
mod param;
mod rng;

pub use gradcheck::{grad_check, relative_error, GradCheckOptions, GradCheckReport, ParamCheck};
pub use loss::{cross_entropy_probs, cross_entropy_sigmoid_logits, cross_entropy_softmax_logits, LossGrad, PROB_CLAMP};
pub use matrix::Matrix;
pub use ops::{
    affine, affine_backward, affine_backward_params, dropout, relu, relu_backward, sigmoid, sigmoid_backward, sigmoid_scalar, softmax_vec,
    softmax_vec_backward, DropoutMask,
};
pub use optim::{Optimizer, OptimizerConfig, OptimizerKind};
pub use param::{init_params, InitScheme, Param, Parameterized};
pub use rng::{mix_seed, RngState};
