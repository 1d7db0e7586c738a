//! Experiment runner and file formats for energy-based RANSAC.
//!
//! The estimators live in [`ebransac_core`]; this crate adds parallel
//! multi-start fitting, dataset CSV files, TOML experiment configs and the
//! `ebransac` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod io;
pub mod parallel;

pub use ebransac_core as core;
