pub(crate) mod broadcast;
pub(crate) mod kernels;
pub(crate) mod shape;

mod binary;
mod conv;
mod linear;
mod loss;
mod norm;
mod reduce;
mod softmax;
mod unary;

pub use norm::NormMode;
