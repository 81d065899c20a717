//! Risk classification from recorded couple conversations.
//!
//! A corpus is read through [`corpus::SessionSource`], either from disk
//! ([`corpus::DiskCorpus`]) or generated in memory
//! ([`synth::SynthCorpus`]). [`pipeline::extract_table`] turns every
//! speaker-session into one row of acoustic, behavioral, lexical and
//! turn-taking features, diarizing first when the segments carry no
//! speaker roles. [`evaluation::run_experiment`] scores a scenario with
//! leave-one-couple-out cross-validation, and [`analysis::top_correlations`]
//! ranks single features against the degree of risk.
//!
//! ```
//! use dyadrisk::features::Family;
//! use dyadrisk::pipeline::{extract_table, ExtractOptions};
//! use dyadrisk::synth::{SynthCorpus, SynthSpec};
//!
//! let corpus = SynthCorpus::new(SynthSpec { couples: 2, session_s: 60.0, ..SynthSpec::default() }, 1).unwrap();
//! let table = extract_table(&corpus, &[Family::L, Family::T], &ExtractOptions::default()).unwrap();
//! assert_eq!(table.len(), 12);
//! assert_eq!(table.names.len(), 6 + 167);
//! ```

pub mod analysis;
pub mod conversation;
pub mod corpus;
pub mod diarization;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod seed;
pub mod stats;
pub mod synth;
pub mod time;

pub use error::{Error, Result};
