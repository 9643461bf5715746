//! Two-sample testing for populations of symmetric network matrices.
//!
//! Each sample is a `p x p` symmetric matrix whose `q = p(p-1)/2` off-diagonal
//! entries (links) are compared between two groups: a max-type global test of
//! equal mean networks, a link-wise procedure with an estimated-FDP threshold,
//! and a power-enhanced variant that reweights p-values by groups of an
//! auxiliary statistic. `simgen` and `harness` provide the simulation designs
//! and the Monte Carlo loop used to evaluate them.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated forms reject NaN

pub mod error;
pub mod fdr;
pub mod gap;
pub mod global;
pub mod harness;
pub mod netdata;
pub mod normal;
pub mod simgen;
pub mod stats;

pub use error::{Error, Result};
pub use fdr::{run_baseline_test, Method, MultipleTestResult};
pub use gap::{run_enhanced_test, GapConfig};
pub use global::{run_global_test, GlobalTestResult};
pub use netdata::{Group, LinkIndexMap, NetworkSampleStack, SquareMatrix};
pub use stats::LinkStatistics;
