//! File formats, remote models and the `attrlab` command-line driver built on
//! `attrlab-core`.

pub mod app;
pub mod cli;
pub mod corpus;
pub mod dump;
pub mod error;
pub mod fsutil;
pub mod heatmap;
pub mod manifest;
pub mod methods;
pub mod modelio;
pub mod models;
pub mod remote;
pub mod report;

pub use error::{AppError, Result};
