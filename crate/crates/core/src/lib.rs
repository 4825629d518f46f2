#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod corpus;
pub mod error;
pub mod harness;
pub mod hash;
pub mod jsonl;
pub mod metrics;
pub mod parsers;
pub mod scheduler;
pub mod selector;
pub mod training;

pub use error::{Error, Result};
