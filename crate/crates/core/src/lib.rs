//! Text-to-image faithfulness evaluation through question answering.

pub mod backend;
pub mod benchmark;
pub mod cli;
pub mod filter;
pub mod questions;
pub mod scoring;
pub mod stats;
pub mod table;
pub mod text;
