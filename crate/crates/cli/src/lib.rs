//! File-based driver for the joint solvers: simulation, fitting, tuning, evaluation and
//! replicated studies.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
