//! On-disk formats: frame files for complex sample data, weight
//! containers for trained parameters, and the TOML experiment
//! configuration.

pub mod config;
pub mod frame_file;
pub mod weights;
