//! Regenerates the bundled fixture cassettes by running the full pipeline
//! and benchmark against the deterministic scripted backend in record mode.
//!
//! Usage: `cargo run -p stepdial-cli --bin make-fixtures`
//!
//! The scripted backend is a pure function of each request, so the recorded
//! cassettes are reproducible byte-for-byte given unchanged templates and
//! fixture inputs. Rerun this after editing either.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use stepdial_cli::config::{BackendKind, EvalRunConfig, PipelineConfig};
use stepdial_cli::stages::{self, StageContext};
use stepdial_core::llm::{Endpoint, LiveConfig, LlmClient, ScriptedTransport, Transport};

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .expect("workspace root")
}

fn recording_client(cassette: &Path) -> Result<LlmClient> {
    let transport: Arc<dyn Transport> = Arc::new(ScriptedTransport::new());
    let config = LiveConfig::new(Endpoint {
        url: "scripted://offline".into(),
        api_key: String::new(),
    });
    Ok(LlmClient::record(transport, config, cassette)?)
}

fn main() -> Result<()> {
    let root = workspace_root();
    let fixtures = root.join("fixtures");
    let cassettes = fixtures.join("cassettes");
    std::fs::create_dir_all(&cassettes)?;
    for name in ["pipeline.jsonl", "eval.jsonl", "judge.jsonl"] {
        let path = cassettes.join(name);
        if path.exists() {
            std::fs::remove_file(&path)?;
        }
    }

    let staging = tempfile::tempdir().context("staging dir")?;
    let run_dir = staging.path().join("run");

    // Pipeline cassette: run every generation stage against the scripted
    // backend, recording each completion.
    let mut config = PipelineConfig::load(&fixtures.join("pipeline.toml"))?;
    config.run_dir = run_dir.clone();
    config.llm.backend = BackendKind::Record;
    let client = recording_client(&cassettes.join("pipeline.jsonl"))?;
    let ctx = StageContext::with_client(config, client, 2)?;
    stages::cmd_ingest(&ctx)?;
    stages::cmd_build_instructions(&ctx)?;
    stages::cmd_gen_dialogues(&ctx)?;
    stages::cmd_localize(&ctx)?;
    stages::cmd_assemble(&ctx)?;
    stages::cmd_split(&ctx, None)?;
    stages::cmd_stats(&ctx)?;

    // Benchmark cassettes: record both prompt modes into one inference
    // cassette plus the judge cassette.
    let mut run = EvalRunConfig::load(&fixtures.join("eval_run.toml"))?;
    run.dataset = run_dir.join("dataset.jsonl");
    run.backend = BackendKind::Record;
    for mode in ["hint_only", "hint_plus_steps"] {
        run.mode = mode.to_string();
        run.output_dir = staging.path().join(format!("eval-{mode}"));
        let candidate = recording_client(&cassettes.join("eval.jsonl"))?;
        let judge = recording_client(&cassettes.join("judge.jsonl"))?;
        stages::run_eval(&run, &candidate, Some(&judge), 2)?;
    }

    for name in ["pipeline.jsonl", "eval.jsonl", "judge.jsonl"] {
        let lines = std::fs::read_to_string(cassettes.join(name))?
            .lines()
            .count();
        println!("recorded {name}: {lines} entries");
    }
    Ok(())
}
