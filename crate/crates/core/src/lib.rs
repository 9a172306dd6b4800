//! Dense match summarization for fast robust two-view relative pose estimation.
//!
//! Matches are clustered, each cluster is compressed into a representative
//! correspondence plus a 9×9 reduced measurement matrix, and RANSAC scores or
//! refines hypotheses against the summaries instead of every match.

pub mod clustering;
mod companion;
pub mod geometry;
pub mod ransac;
pub mod solvers;
pub mod summarization;
pub mod harness;
