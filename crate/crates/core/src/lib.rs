//! Exact and statistical machinery for forward and inverse Littlewood–Offord
//! problems.
//!
//! The crate is organised around five areas:
//!
//! * [`gap_core`]: generalized arithmetic progressions (GAPs), membership,
//!   properness, Freiman embeddings and the structural lemmas used by the
//!   inverse pipeline.
//! * [`walks`]: exact distributions and concentration probabilities of signed
//!   and lazy random walks.
//! * [`char_bounds`]: character-sum bounds over `F_p`, level sets, dual sets and
//!   iterated sumsets.
//! * [`inverse_engine`]: constructive GAP fitting and the end-to-end discrete
//!   inverse pipelines.
//! * [`continuous`]: small-ball probabilities in `R^d`, the discretized
//!   continuous pipeline and net counting.
//!
//! [`harness`] wires everything to the `lolab` command line tool.

pub mod char_bounds;
pub mod continuous;
pub mod error;
pub mod gap_core;
pub mod harness;
pub mod inverse_engine;
pub mod multiset;
pub mod prime;
pub mod rational;
pub mod walks;

pub use error::{Error, Result};
pub use gap_core::Gap;
pub use multiset::StepMultiset;
pub use rational::Rational;
pub use walks::EtaSpec;

/// Crate version, echoed into every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
