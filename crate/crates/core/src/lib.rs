//! Reliability analysis for subjective labeling tasks.
//!
//! The crate measures how well independent raters (people or models)
//! agree with each other: chance-corrected pairwise and multi-rater
//! agreement, cross-group reliability between two disjoint rater pools,
//! and a degradation experiment that checks whether an alternative label
//! set ranks synthetic classifiers the same way the gold labels do.
//! A thin HTTP client can produce machine judgements for a corpus under
//! a fixed prompt and strict reply parsing.

pub mod aggregation;
pub mod agreement;
pub mod annotator;
pub mod error;
pub mod error_analysis;
pub mod ingest;
pub mod model;
pub mod ranking;
pub mod util;
pub mod xrr;

pub use error::{Error, Result};
