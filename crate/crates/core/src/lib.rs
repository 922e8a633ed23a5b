//! Uncertainty-aware decoding for autoregressive language models.
//!
//! The decoder watches the Shannon entropy of each next-token distribution.
//! While it stays at or below a model-specific threshold the base policy
//! (greedy or sampling) runs unchanged; above it, decoding pauses, the top
//! candidates are each rolled out greedily for a few tokens, and the
//! candidate with the best mean log-probability trajectory is emitted.
//!
//! Modules:
//! - [`lm`]: model interface, scripted mocks and the HTTP bridge client
//! - [`signals`]: entropy, probability gap, candidate and rank extraction
//! - [`threshold`]: teacher-forced trace collection and threshold learning
//! - [`decoding`]: greedy, sampling, beam, AdapT and the pause-then-rerank loop
//! - [`analysis`]: Spearman correlation, threshold sweeps, drift candidates
//! - [`harness`]: datasets, execution-based evaluation and parameter sweeps

pub mod analysis;
pub mod decoding;
pub mod error;
pub mod harness;
pub mod lm;
pub mod signals;
pub mod threshold;

pub use error::{Error, Result};
