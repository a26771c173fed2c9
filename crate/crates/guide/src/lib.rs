//! The book's chapters, compiled as doc-tests so every snippet runs against
//! the current API. `cargo test -p dpamp-guide` checks them.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}
#[doc = include_str!("../../../book/src/randomness.md")]
pub mod randomness {}
#[doc = include_str!("../../../book/src/sensitivity.md")]
pub mod sensitivity {}
#[doc = include_str!("../../../book/src/amplification.md")]
pub mod amplification {}
#[doc = include_str!("../../../book/src/sampling.md")]
pub mod sampling {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
