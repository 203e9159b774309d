//! Pipeline orchestration: configuration, staged execution with cached
//! artifacts, and synthetic fixture generation.

pub mod config;
pub mod fixtures;
pub mod pipeline;
