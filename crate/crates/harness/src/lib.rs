//! Reproduction harness for the layerpot close-evaluation schemes.

pub mod config;
pub mod experiments;
pub mod grid;
pub mod reference;
