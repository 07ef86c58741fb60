//! Library side of the stepdial CLI: configuration loading and the pipeline
//! stage implementations, exposed for integration tests and fixture
//! tooling.

pub mod config;
pub mod stages;

pub use config::{AnnotatedPath, BackendKind, EvalRunConfig, EvalSplit, PipelineConfig};
pub use stages::{
    build_client, cmd_assemble, cmd_build_instructions, cmd_eval, cmd_gen_dialogues, cmd_ingest,
    cmd_localize, cmd_pipeline, cmd_report, cmd_split, cmd_stats, run_eval, StageContext,
    StageInputMissing,
};
