//! Truncated operator-valued kernels on the free semigroup.
//!
//! A kernel `K(α, β)` is given on all pairs of words of length at most `N`
//! over the alphabet `1..=d`, with `dim_h × dim_h` complex blocks. This crate
//! tests such kernels for positivity and one-step shift dominance, builds
//! their Kolmogorov spaces and compressed shifts, decides whether the level-N
//! boundary is generated by a row contraction on the interior space, and
//! produces global extensions `K̃(α, β) = W* S^α P (S^β)* W` from a truncated
//! row-isometric dilation.
//!
//! Module map:
//!
//! - [`words`]: word enumeration and canonical ordering.
//! - [`numerics`]: Hermitian matrices, PSD tests, rank-revealing factors.
//! - [`kernel`]: kernel storage, Gram assembly, shifted kernel, dominance.
//! - [`kolmogorov`]: factorization, graded subspaces, compressed shifts.
//! - [`consistency`]: boundary operators `T_i` and their checks.
//! - [`dilation`]: truncated dilation and the extended kernel.
//! - [`hausdorff`]: the `d = 1` moment-sequence bridge.
//! - [`fixtures`]: the reference kernels and random kernel generators.

pub mod consistency;
pub mod dilation;
mod error;
pub mod fixtures;
pub mod hausdorff;
pub mod kernel;
pub mod kolmogorov;
pub mod numerics;
pub mod words;

pub use error::{Error, Result};
pub use kernel::TruncatedKernel;
pub use numerics::{CMat, HermitianMatrix, ToleranceConfig, C64};
pub use words::{Word, WordSet};
