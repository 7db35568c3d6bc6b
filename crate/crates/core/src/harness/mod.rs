//! Experiment plumbing: configuration, surrogate suites, campaigns, tables
//! and report files.

pub mod campaign;
pub mod config;
pub mod suite;
pub mod tables;

pub use campaign::{allocation_csv, allocation_report, expectation_plan, run_campaign, AllocationRow, CampaignReport, CellReport, RunSummary};
pub use config::{CampaignConfig, SurrogatePlan, TablesConfig};
pub use suite::{build_surrogate_suite, QualityRow, SurrogateSuite};
pub use tables::{benchmark_correlations, correlation_table, level_table, level_table_csv, CorrelationTable, LevelRow};
