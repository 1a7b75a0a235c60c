//! Claims-frequency benchmarking of an automated fleet against a
//! human-driver baseline calibrated to the fleet's operating area.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod cli;
pub mod compare;
pub mod ingestion;
pub mod simulator;
pub mod stats;
pub mod vmt;
