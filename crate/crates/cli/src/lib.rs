//! Command-line front end and HTTP service for UML++ projects.

pub mod api;
pub mod commands;
