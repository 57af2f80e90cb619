//! Guide chapters, compiled so that every listing runs as a doctest.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/array-model.md")]
pub mod array_model {}
#[doc = include_str!("../../../book/src/snapshots.md")]
pub mod snapshots {}
#[doc = include_str!("../../../book/src/partition.md")]
pub mod partition {}
#[doc = include_str!("../../../book/src/propagators.md")]
pub mod propagators {}
#[doc = include_str!("../../../book/src/estimators.md")]
pub mod estimators {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
#[doc = include_str!("../../../book/src/numerics.md")]
pub mod numerics {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
