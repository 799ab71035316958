//! Dense and sparse matrix kernels used by the pipeline.

mod dense;
mod ops;
mod sparse;
mod svd;

pub(crate) use dense::dot;
pub use dense::DenseMatrix;
pub use ops::{
    hadamard, row_col_normalize, row_topk_l2_normalize, threshold_sparsify_log,
    threshold_sparsify_log_sparse,
};
pub use sparse::{dense_spmm, spmm, spmm_transpose, SparseMatrix};
pub use svd::{
    max_principal_sine, numerical_rank, orthonormalize, randomized_svd, subspace_iteration,
    TruncatedSvd, DEFAULT_OVERSAMPLE, DEFAULT_POWER_ITERS,
};
