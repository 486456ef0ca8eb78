//! Dense tensors, truncated SVD and the matrix product state/operator
//! machinery used to store and advance the augmented density tensor.

mod dense;
mod mpo;
mod mps;
mod svd;

pub use dense::Tensor;
pub use mpo::MatrixProductOperator;
pub use mps::{Contracted, MatrixProductState, SiteWeight};
pub use svd::{svd_truncate, SvdResult, TruncationPolicy};
