//! Config files, field files, CSV reports and the command-line front end.

pub mod cli;
pub mod config;
pub mod csv;
pub mod field_file;
