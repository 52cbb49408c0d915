//! Tensors, deterministic kernels, reverse-mode differentiation, and the
//! finite-difference reference used to validate it.

pub mod finite_diff;
pub mod tape;
pub mod tensor;

pub use finite_diff::{finite_diff_grad, max_rel_err};
pub use tape::{Tape, TapeGrads, ValueId};
pub use tensor::{affine, matvec, softmax, unit_norm, Real, Tensor2, NORM_GUARD, PROB_FLOOR};
