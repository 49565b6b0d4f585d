//! Dense numeric core shared by every learning module.

pub mod adam;
pub mod gradcheck;
pub mod matrix;
pub mod mlp;

pub use adam::AdamState;
pub use gradcheck::grad_check;
pub use matrix::Matrix;
pub use mlp::{Mlp, MlpGradients};
