//! Subcommand implementations.

pub mod certify;
pub mod plot;
pub mod reproduce;
pub mod simulate;
pub mod sweep;
