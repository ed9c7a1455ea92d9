//! Two-stage training: stage 1 fits `Q`, `G_x` and the critic jointly; stage 2 fits `G_θ`
//! on the codes of the frozen encoder.

pub mod conditional;
pub mod config;
pub mod eval;
pub mod hierarchical;
pub mod log;

pub use conditional::{running_mean, train_conditional, ConditionalTrainer, TrainReport};
pub use config::{HierarchicalConfig, Stage, TrainConfig};
pub use eval::{
    eval_reconstruction, format_summary, median, write_eval_csv, EvalConfig, EvalRow, EvalSummary, EvalTable,
};
pub use hierarchical::{collect_codes, train_hierarchical, HierarchicalTrainer};
pub use log::{read_csv, write_log, LogRow, LOG_HEADER};

/// Runs the stage named in the config.
pub fn train(config: &TrainConfig) -> crate::Result<TrainReport> {
    match config.stage {
        Stage::Conditional => train_conditional(config),
        Stage::Hierarchical => train_hierarchical(config),
    }
}
