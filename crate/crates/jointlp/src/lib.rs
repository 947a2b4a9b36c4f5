//! Joint linear-programming decoding of LDPC codes over finite-state
//! intersymbol-interference channels.
//!
//! The crate has three layers:
//!
//! * exact joint LP decoding at desk scale: the full primal LP over the
//!   trellis-wise relaxed polytope, solved with a dense simplex method
//!   ([`lpexact`]), together with brute-force ML oracles;
//! * an iterative solver for the same LP with BCJR-like forward/backward
//!   updates and softened check-node updates ([`ijlp`]), including the
//!   turbo-equalization special case and a provably convergent cyclic
//!   schedule;
//! * pseudo-codeword analysis ([`analysis`]) and Monte Carlo machinery
//!   ([`sim`]): generalized Euclidean distances, pairwise error
//!   probabilities, union-bound word-error-rate prediction from harvested
//!   distance spectra, and duality-gap certificates.
//!
//! Channel models (dicode, precoded dicode, class-II partial response) live
//! in [`channel`], binary LDPC codes and the alist interchange format in
//! [`ldpc`], and branch metrics in [`metrics`].
//!
//! A narrative guide with runnable examples is in the `book/` directory of
//! the repository; its code snippets are compiled as doc-tests of this
//! crate.

pub mod analysis;
pub mod channel;
pub mod ijlp;
pub mod ldpc;
pub mod lpexact;
pub mod metrics;
pub mod numerics;
pub mod sim;

mod simplex;

pub use simplex::{SimplexOutcome, StandardLp};

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("channel spec is not deterministic (not a FSISIC): state {state}, input {input} has {count} outgoing edges")]
    NonDeterministicChannel {
        state: usize,
        input: u8,
        count: usize,
    },
    #[error("invalid channel spec: {0}")]
    InvalidChannel(String),
    #[error("invalid code parameters: {0}")]
    InvalidCode(String),
    #[error("code construction failed after {retries} attempts: {reason}")]
    CodeConstruction { retries: usize, reason: String },
    #[error("alist parse error at line {line}, field {field}: {msg}")]
    AlistParse {
        line: usize,
        field: usize,
        msg: String,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("check degree {degree} too large to enumerate configurations (limit {limit})")]
    CheckDegreeTooLarge { degree: usize, limit: usize },
    #[error("numerical abort: {0}")]
    NumericalAbort(String),
    #[error("linear program is infeasible (constraint construction bug?)")]
    LpInfeasible,
    #[error("linear program is unbounded (metric construction bug?)")]
    LpUnbounded,
    #[error("message residual epsilon = {epsilon:.6} exceeds 1/6; primal construction refused")]
    EpsilonTooLarge { epsilon: f64 },
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

// Book chapters double as doc-tests so the guide cannot drift from the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/channels.md")]
    mod channels {}
    #[doc = include_str!("../../../book/src/codes.md")]
    mod codes {}
    #[doc = include_str!("../../../book/src/exact-lp.md")]
    mod exact_lp {}
    #[doc = include_str!("../../../book/src/iterative-decoder.md")]
    mod iterative_decoder {}
    #[doc = include_str!("../../../book/src/convergence.md")]
    mod convergence {}
    #[doc = include_str!("../../../book/src/pseudo-codewords.md")]
    mod pseudo_codewords {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
