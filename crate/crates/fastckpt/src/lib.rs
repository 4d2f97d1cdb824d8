//! fastckpt: a checkpoint persistence engine and benchmark harness.
//!
//! The crate models the write path of frequent model checkpointing on
//! NVMe-class storage: serialized tensor streams, aligned staged writes
//! with single/double buffering, byte-granular sharding across a modeled
//! cluster topology, a pipelined training-loop scheduler, and the
//! analytical sizing/bandwidth/recovery formulas behind it all.

pub mod checkpoint;
pub mod ckpt_format;
pub mod cli;
pub mod error;
pub mod partition_planner;
pub mod perf_model;
pub mod pipeline_sim;
pub mod write_engine;

pub use error::{Error, Result};
