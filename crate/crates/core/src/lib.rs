//! Harness for probing text-classification endpoints with handcrafted
//! "ignore the previous instructions" prompt injections and measuring
//! whether standard text-quality metrics notice the subversion.
//!
//! The pipeline: author or load injection cases ([`dataset`]), query a
//! completion, fill-mask, or mock endpoint for pre- and post-injection
//! outputs ([`client`]), score every output pair at the token and sequence
//! level ([`distance`], [`matching`]), persist an append-only run log
//! ([`runlog`]), annotate it by hand ([`harness::annotate_run`]), and
//! aggregate everything into a report with per-metric verdicts ([`report`]).

pub mod client;
pub mod dataset;
pub mod distance;
pub mod harness;
pub mod matching;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod runlog;
pub mod tokenizer;
