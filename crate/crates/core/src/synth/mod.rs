//! Synthetic robots and data streams for tests, profiling and fixtures.

pub mod robots;
pub mod streams;
pub mod tactile;
