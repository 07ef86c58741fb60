//! Run configuration: one TOML file per pipeline run plus one per benchmark
//! run. Every key can be overridden by a same-named command-line flag.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use stepdial_core::dataset::SplitRatios;
use stepdial_core::dialogue::SpeechStyle;
use stepdial_core::eval::PromptMode;
use stepdial_core::Split;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Live,
    Replay,
    Record,
}

impl BackendKind {
    pub fn parse(s: &str) -> Option<BackendKind> {
        match s {
            "live" => Some(BackendKind::Live),
            "replay" => Some(BackendKind::Replay),
            "record" => Some(BackendKind::Record),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmSection {
    #[serde(default = "default_backend")]
    pub backend: BackendKind,
    #[serde(default)]
    pub cassette: Option<PathBuf>,
    #[serde(default = "default_model")]
    pub model_id: String,
    #[serde(default = "default_generation_temperature")]
    pub generation_temperature: f64,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    /// 0 disables the rate gate.
    #[serde(default)]
    pub requests_per_minute: u32,
    #[serde(default = "default_timeout")]
    pub request_timeout_s: u64,
}

fn default_backend() -> BackendKind {
    BackendKind::Replay
}
fn default_model() -> String {
    stepdial_core::llm::model_from_env().unwrap_or_else(|| "default-model".to_string())
}
fn default_generation_temperature() -> f64 {
    stepdial_core::llm::GENERATION_TEMPERATURE
}
fn default_max_in_flight() -> usize {
    4
}
fn default_timeout() -> u64 {
    120
}

impl Default for LlmSection {
    fn default() -> Self {
        LlmSection {
            backend: default_backend(),
            cassette: None,
            model_id: default_model(),
            generation_temperature: default_generation_temperature(),
            max_in_flight: default_max_in_flight(),
            requests_per_minute: 0,
            request_timeout_s: default_timeout(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_train")]
    pub train: f64,
    #[serde(default = "default_val")]
    pub val: f64,
    #[serde(default = "default_test")]
    pub test: f64,
}

fn default_seed() -> u64 {
    7
}
fn default_train() -> f64 {
    0.7
}
fn default_val() -> f64 {
    0.1
}
fn default_test() -> f64 {
    0.2
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            seed: default_seed(),
            train: default_train(),
            val: default_val(),
            test: default_test(),
        }
    }
}

impl SplitSection {
    pub fn ratios(&self) -> SplitRatios {
        SplitRatios {
            train: self.train,
            val: self.val,
            test: self.test,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub manifest: PathBuf,
    pub run_dir: PathBuf,
    #[serde(default)]
    pub stoplist: Option<PathBuf>,
    #[serde(default)]
    pub template_dir: Option<PathBuf>,
    /// Styles generated for normal annotated recordings.
    #[serde(default = "default_styles")]
    pub styles: Vec<SpeechStyle>,
    /// Styles generated for narrated recordings.
    #[serde(default = "default_narrated_styles")]
    pub narrated_styles: Vec<SpeechStyle>,
    /// Generate error-mode sessions from error-pool recordings.
    #[serde(default = "default_true")]
    pub error_mode: bool,
    #[serde(default = "default_correction_token")]
    pub correction_token: String,
    /// Drop recordings whose manifest row is not egocentric.
    #[serde(default = "default_true")]
    pub egocentric_only: bool,
    /// Annotated-recording instruction path: consecutive-duplicate merge or
    /// stoplist + adjacency clustering.
    #[serde(default = "default_annotated_path")]
    pub annotated_path: AnnotatedPath,
    #[serde(default)]
    pub llm: LlmSection,
    #[serde(default)]
    pub split: SplitSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotatedPath {
    Merge,
    Cluster,
}

fn default_styles() -> Vec<SpeechStyle> {
    vec![SpeechStyle::Concise, SpeechStyle::Regular]
}
fn default_narrated_styles() -> Vec<SpeechStyle> {
    vec![SpeechStyle::Regular]
}
fn default_true() -> bool {
    true
}
fn default_correction_token() -> String {
    stepdial_core::DEFAULT_CORRECTION_TOKEN.to_string()
}
fn default_annotated_path() -> AnnotatedPath {
    AnnotatedPath::Merge
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config: PipelineConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        // Relative paths resolve against the config file's directory.
        let base = path.parent().unwrap_or(Path::new("."));
        config.manifest = resolve(base, &config.manifest);
        config.run_dir = resolve(base, &config.run_dir);
        config.stoplist = config.stoplist.map(|p| resolve(base, &p));
        config.template_dir = config.template_dir.map(|p| resolve(base, &p));
        config.llm.cassette = config.llm.cassette.map(|p| resolve(base, &p));
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.manifest.exists() {
            bail!("manifest {} does not exist", self.manifest.display());
        }
        if let Some(stoplist) = &self.stoplist {
            if !stoplist.exists() {
                bail!("stoplist {} does not exist", stoplist.display());
            }
        }
        if let Some(dir) = &self.template_dir {
            if !dir.is_dir() {
                bail!("template_dir {} is not a directory", dir.display());
            }
        }
        if self.styles.is_empty() {
            bail!("styles must not be empty");
        }
        self.split
            .ratios()
            .check()
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(())
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Configuration for one benchmark run.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalRunConfig {
    pub dataset: PathBuf,
    pub output_dir: PathBuf,
    pub mode: String,
    #[serde(default = "default_model")]
    pub model_id: String,
    #[serde(default = "default_judge_model")]
    pub judge_model_id: String,
    #[serde(default = "default_backend")]
    pub backend: BackendKind,
    #[serde(default)]
    pub cassette: Option<PathBuf>,
    #[serde(default)]
    pub judge_cassette: Option<PathBuf>,
    /// Which split to evaluate: train, val, test, or all.
    #[serde(default = "default_eval_split")]
    pub split: String,
    #[serde(default = "default_true")]
    pub judge: bool,
    #[serde(default)]
    pub template_dir: Option<PathBuf>,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    #[serde(default)]
    pub requests_per_minute: u32,
    #[serde(default = "default_timeout")]
    pub request_timeout_s: u64,
}

fn default_judge_model() -> String {
    "default-judge".to_string()
}
fn default_eval_split() -> String {
    "test".to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSplit {
    Only(Split),
    All,
}

impl EvalRunConfig {
    pub fn load(path: &Path) -> Result<EvalRunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading run manifest {}", path.display()))?;
        let mut config: EvalRunConfig = toml::from_str(&text)
            .with_context(|| format!("parsing run manifest {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.dataset = resolve(base, &config.dataset);
        config.output_dir = resolve(base, &config.output_dir);
        config.cassette = config.cassette.map(|p| resolve(base, &p));
        config.judge_cassette = config.judge_cassette.map(|p| resolve(base, &p));
        config.template_dir = config.template_dir.map(|p| resolve(base, &p));
        config.prompt_mode()?;
        config.eval_split()?;
        Ok(config)
    }

    pub fn prompt_mode(&self) -> Result<PromptMode> {
        PromptMode::parse(&self.mode)
            .with_context(|| format!("mode {:?} is not hint_only or hint_plus_steps", self.mode))
    }

    pub fn eval_split(&self) -> Result<EvalSplit> {
        match self.split.as_str() {
            "train" => Ok(EvalSplit::Only(Split::Train)),
            "val" => Ok(EvalSplit::Only(Split::Val)),
            "test" => Ok(EvalSplit::Only(Split::Test)),
            "all" => Ok(EvalSplit::All),
            other => bail!("split {other:?} is not train/val/test/all"),
        }
    }
}
