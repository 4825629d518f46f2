//! Config loading and the subcommands behind the `adaparse` binary.

mod commands;
mod config;
mod plot;

pub use commands::{
    bench_profile, cmd_bench, cmd_eval, cmd_run, cmd_stage, cmd_train, eval_row, eval_table, manifest_label, synthesize,
    EvalRow, TrainSummary,
};
pub use config::{load_config, parse_config, CampaignConfig, ParserSettings, WorkerCounts, ENV_OVERRIDES};
pub use plot::throughput_svg;
