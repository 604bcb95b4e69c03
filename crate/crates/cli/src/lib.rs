//! Experiment driver, result records, and reporting for the portfolio
//! optimization CLI.

pub mod experiment;
pub mod records;
pub mod report;
