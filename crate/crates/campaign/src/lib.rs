//! Campaign orchestration for phase-coherence compensation experiments:
//! configuration, execution, CSV/JSON artifacts, plots and the `aurora` CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod output;
pub mod plots;
pub mod runner;

pub use config::{parse_config, parse_config_str, CampaignConfig, ConfigError};
pub use output::{load_result, read_records, write_results, OutputError};
pub use plots::{emit_plots, PlotReport};
pub use runner::{
    run_campaign, run_campaign_with, summarize_records, CampaignError, GroupSummary, ResultSet,
    SummaryOptions, TrialRecord, ZneSubRun,
};
