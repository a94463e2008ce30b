//! Experiment front end for the NoC analysis toolkit.
//!
//! [`config`] loads and validates the TOML experiment description,
//! [`analysis`] turns configured flows into per-hop analytic bound inputs,
//! and [`commands`] implements the four subcommands (`bound`, `simulate`,
//! `sweep`, `qos`), each rendering a CSV string that is byte-identical
//! across repeated runs of the same configuration and seed.

pub mod analysis;
pub mod commands;
pub mod config;
