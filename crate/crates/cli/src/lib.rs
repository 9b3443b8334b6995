//! Command line front end for the `evid-core` evidence-combination engine:
//! the evidence file language, the run pipeline, and report rendering.

pub mod dsl;
pub mod report;
pub mod runner;

pub use dsl::{parse_evidence, DslError, EvidenceFile, QuerySpec};
pub use runner::{exit, run, RunConfig};
