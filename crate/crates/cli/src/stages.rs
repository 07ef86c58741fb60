//! Pipeline stages. Each stage reads the previous stage's file from the run
//! directory and writes its own atomically, so runs are resumable and every
//! intermediate is inspectable.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use stepdial_core::dataset::{
    assemble, compute_stats, read_dataset, stratified_split, write_dataset, write_stats_report,
    Session,
};
use stepdial_core::dialogue::{
    generate, generate_clarifications, insert_clarifications, ActionType, Conversation,
    SpeechStyle,
};
use stepdial_core::eval::{
    aggregate, judge_predictions, run_inference, score_predictions, write_predictions,
    write_report_tables, MetricRecord, PromptMode,
};
use stepdial_core::ingest::{
    classify_recording, load_manifest, validate_timeline, Pool, SourceKind, SourceRecording,
    TimelineViolation,
};
use stepdial_core::instruction::{
    cluster_and_filter_steps, extract_from_narration, normalize_annotated_steps, InstructionSet,
    Provenance, Stoplist,
};
use stepdial_core::llm::{
    ChatOptions, Endpoint, HttpTransport, LiveConfig, LlmClient, LlmContext, TemplateStore,
};
use stepdial_core::localize::{
    attach_clips, emit_cutlist, localize_direct, localize_from_subtitles, StepSpanMap,
};
use stepdial_core::time::format_seconds;

use crate::config::{AnnotatedPath, BackendKind, EvalRunConfig, EvalSplit, PipelineConfig};

/// Error that should surface as exit code 2 with stage context.
#[derive(Debug)]
pub struct StageInputMissing(pub String);

impl std::fmt::Display for StageInputMissing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "stage input missing: {}", self.0)
    }
}

impl std::error::Error for StageInputMissing {}

pub struct StageContext {
    pub config: PipelineConfig,
    pub jobs: usize,
    pub dry_run: bool,
    client: Option<LlmClient>,
    templates: TemplateStore,
    stoplist: Stoplist,
}

impl StageContext {
    /// Builds the context from configuration, constructing the LLM client
    /// the backend calls for. Dry runs never construct a client.
    pub fn from_config(config: PipelineConfig, jobs: usize, dry_run: bool) -> Result<StageContext> {
        let templates = load_templates(config.template_dir.as_deref())?;
        let stoplist = match &config.stoplist {
            Some(path) => Stoplist::from_file(path)?,
            None => Stoplist::builtin(),
        };
        let client = if dry_run {
            None
        } else {
            Some(build_client(
                config.llm.backend,
                config.llm.cassette.as_deref(),
                config.llm.max_in_flight,
                config.llm.requests_per_minute,
                config.llm.request_timeout_s,
            )?)
        };
        Ok(StageContext {
            config,
            jobs: jobs.max(1),
            dry_run,
            client,
            templates,
            stoplist,
        })
    }

    /// Context over an injected client (fixture recording, tests).
    pub fn with_client(config: PipelineConfig, client: LlmClient, jobs: usize) -> Result<StageContext> {
        let templates = load_templates(config.template_dir.as_deref())?;
        let stoplist = match &config.stoplist {
            Some(path) => Stoplist::from_file(path)?,
            None => Stoplist::builtin(),
        };
        Ok(StageContext {
            config,
            jobs: jobs.max(1),
            dry_run: false,
            client: Some(client),
            templates,
            stoplist,
        })
    }

    fn llm(&self, options: ChatOptions) -> Result<LlmContext<'_>> {
        let client = self
            .client
            .as_ref()
            .context("no LLM client available (dry run?)")?;
        Ok(LlmContext {
            client,
            templates: &self.templates,
            options,
        })
    }

    fn generation_options(&self) -> ChatOptions {
        ChatOptions {
            model_id: self.config.llm.model_id.clone(),
            temperature: self.config.llm.generation_temperature,
            max_output_tokens: stepdial_core::llm::GENERATION_MAX_TOKENS,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.config.run_dir.join(name)
    }
}

fn load_templates(dir: Option<&Path>) -> Result<TemplateStore> {
    match dir {
        Some(dir) => TemplateStore::with_overrides(dir)
            .with_context(|| format!("loading templates from {}", dir.display())),
        None => Ok(TemplateStore::builtin()),
    }
}

/// Builds an LLM client for the chosen backend. Replay requires an existing
/// cassette; live and record read the endpoint from the environment.
pub fn build_client(
    backend: BackendKind,
    cassette: Option<&Path>,
    max_in_flight: usize,
    requests_per_minute: u32,
    timeout_s: u64,
) -> Result<LlmClient> {
    let cassette_path = |purpose: &str| {
        cassette
            .map(Path::to_path_buf)
            .ok_or_else(|| anyhow::anyhow!("{purpose} backend needs a cassette path"))
    };
    match backend {
        BackendKind::Replay => {
            let path = cassette_path("replay")?;
            if !path.exists() {
                bail!(StageInputMissing(format!(
                    "replay cassette {}",
                    path.display()
                )));
            }
            Ok(LlmClient::replay_from_path(&path)?)
        }
        BackendKind::Live | BackendKind::Record => {
            let endpoint = Endpoint::from_env()?;
            let mut live = LiveConfig::new(endpoint);
            live.max_in_flight = max_in_flight;
            live.requests_per_minute = (requests_per_minute > 0).then_some(requests_per_minute);
            let transport = Arc::new(HttpTransport::new(Duration::from_secs(timeout_s))?);
            if backend == BackendKind::Live {
                Ok(LlmClient::live(transport, live))
            } else {
                Ok(LlmClient::record(transport, live, &cassette_path("record")?)?)
            }
        }
    }
}

fn require(path: &Path, produced_by: &str) -> Result<()> {
    if !path.exists() {
        bail!(StageInputMissing(format!(
            "{} (run `stepdial {produced_by}` first)",
            path.display()
        )));
    }
    Ok(())
}

pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, content).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    write_atomic(path, &out)
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        items.push(
            serde_json::from_str(line)
                .with_context(|| format!("{} line {}", path.display(), i + 1))?,
        );
    }
    Ok(items)
}

/// Runs `work` over `items` on a bounded pool, preserving input order in the
/// output and failing on the first error.
fn parallel_map<T: Sync, R: Send>(
    jobs: usize,
    items: &[T],
    work: impl Fn(&T) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building worker pool")?;
    let mut indexed: Vec<(usize, Result<R>)> = pool.install(|| {
        items
            .par_iter()
            .enumerate()
            .map(|(i, item)| (i, work(item)))
            .collect()
    });
    indexed.sort_by_key(|(i, _)| *i);
    indexed.into_iter().map(|(_, r)| r).collect()
}

// --- stage 1: ingest -----------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct IngestRecordSummary {
    pub recording_id: String,
    pub task: String,
    pub source_kind: SourceKind,
    pub pool: String,
    pub violations: Vec<TimelineViolation>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IngestSummary {
    pub manifest: String,
    pub recordings: Vec<IngestRecordSummary>,
    pub skipped_non_egocentric: Vec<String>,
}

/// Recordings that later stages process: egocentric (when required) and not
/// in the excluded error pool.
pub fn eligible_recordings(config: &PipelineConfig) -> Result<(Vec<SourceRecording>, Vec<String>)> {
    let all = load_manifest(&config.manifest)?;
    let mut skipped = Vec::new();
    let mut kept = Vec::new();
    for recording in all {
        if config.egocentric_only && !recording.egocentric {
            skipped.push(recording.recording_id.clone());
            continue;
        }
        kept.push(recording);
    }
    Ok((kept, skipped))
}

pub fn cmd_ingest(ctx: &StageContext) -> Result<IngestSummary> {
    let (recordings, skipped) = eligible_recordings(&ctx.config)?;
    let summaries: Vec<IngestRecordSummary> = recordings
        .iter()
        .map(|recording| {
            let report = validate_timeline(recording);
            IngestRecordSummary {
                recording_id: recording.recording_id.clone(),
                task: recording.task.clone(),
                source_kind: recording.source_kind,
                pool: match classify_recording(recording) {
                    Pool::Normal => "normal",
                    Pool::Error => "error",
                    Pool::Excluded => "excluded",
                }
                .to_string(),
                violations: report.violations,
            }
        })
        .collect();
    let summary = IngestSummary {
        manifest: ctx.config.manifest.display().to_string(),
        recordings: summaries,
        skipped_non_egocentric: skipped,
    };
    if !ctx.dry_run {
        write_atomic(&ctx.path("ingest.json"), &serde_json::to_string_pretty(&summary)?)?;
    }
    let invalid = summary
        .recordings
        .iter()
        .filter(|r| !r.violations.is_empty())
        .count();
    println!(
        "ingest: {} recordings ({} with timeline violations, {} skipped non-egocentric)",
        summary.recordings.len(),
        invalid,
        summary.skipped_non_egocentric.len()
    );
    Ok(summary)
}

// --- stage 2: instructions --------------------------------------------------------

pub fn cmd_build_instructions(ctx: &StageContext) -> Result<usize> {
    require(&ctx.path("ingest.json"), "ingest")?;
    let (recordings, _) = eligible_recordings(&ctx.config)?;
    let processable: Vec<&SourceRecording> = recordings
        .iter()
        .filter(|r| classify_recording(r) != Pool::Excluded)
        .collect();

    if ctx.dry_run {
        println!(
            "build-instructions: planned LLM calls: {} (one per recording; parse retries excluded)",
            processable.len()
        );
        return Ok(0);
    }

    let llm = ctx.llm(ctx.generation_options())?;
    let sets = parallel_map(ctx.jobs, &processable, |recording| {
        build_one_instruction_set(ctx, recording, &llm)
            .with_context(|| format!("building instructions for {}", recording.recording_id))
    })?;
    write_jsonl(&ctx.path("instructions.jsonl"), &sets)?;
    println!("build-instructions: {} instruction sets", sets.len());
    Ok(sets.len())
}

fn build_one_instruction_set(
    ctx: &StageContext,
    recording: &SourceRecording,
    llm: &LlmContext<'_>,
) -> Result<InstructionSet> {
    let set = match recording.source_kind {
        SourceKind::Narrated => {
            let subtitles = recording
                .subtitles
                .as_ref()
                .context("narrated recording without subtitles")?;
            extract_from_narration(subtitles, &recording.task, &recording.recording_id, llm)?
        }
        SourceKind::Annotated => {
            let steps = recording
                .steps
                .as_ref()
                .context("annotated recording without steps")?;
            match ctx.config.annotated_path {
                AnnotatedPath::Merge => {
                    normalize_annotated_steps(steps, &recording.task, &recording.recording_id, llm)?
                }
                AnnotatedPath::Cluster => cluster_and_filter_steps(
                    steps,
                    &ctx.stoplist,
                    &recording.task,
                    &recording.recording_id,
                    llm,
                )?,
            }
        }
    };
    Ok(set)
}

// --- stage 3: dialogues -------------------------------------------------------------

fn dialogue_tuples(ctx: &StageContext, set: &InstructionSet) -> Vec<(SpeechStyle, ActionType)> {
    if set.has_corrections() {
        if ctx.config.error_mode {
            vec![(SpeechStyle::Regular, ActionType::Error)]
        } else {
            Vec::new()
        }
    } else if set.provenance == Provenance::NarrationLlm {
        ctx.config
            .narrated_styles
            .iter()
            .map(|&s| (s, ActionType::Follow))
            .collect()
    } else {
        ctx.config
            .styles
            .iter()
            .map(|&s| (s, ActionType::Follow))
            .collect()
    }
}

pub fn cmd_gen_dialogues(ctx: &StageContext) -> Result<usize> {
    require(&ctx.path("instructions.jsonl"), "build-instructions")?;
    let sets: Vec<InstructionSet> = read_jsonl(&ctx.path("instructions.jsonl"))?;
    let work: Vec<(InstructionSet, SpeechStyle, ActionType)> = sets
        .iter()
        .flat_map(|set| {
            dialogue_tuples(ctx, set)
                .into_iter()
                .map(move |(style, action)| (set.clone(), style, action))
        })
        .collect();

    if ctx.dry_run {
        println!(
            "gen-dialogues: planned LLM calls: {} (one per conversation; coverage retries excluded)",
            work.len()
        );
        return Ok(0);
    }

    let llm = ctx.llm(ctx.generation_options())?;
    let conversations = parallel_map(ctx.jobs, &work, |(set, style, action)| {
        let mut conversation = generate(set, *style, *action, &ctx.config.correction_token, &llm)
            .with_context(|| {
                format!(
                    "generating {}/{} dialogue for {}",
                    style.as_str(),
                    action.as_str(),
                    set.recording_id
                )
            })?;
        insert_clarifications(&mut conversation, generate_clarifications(set));
        Ok(conversation)
    })?;
    write_jsonl(&ctx.path("conversations.jsonl"), &conversations)?;
    println!("gen-dialogues: {} conversations", conversations.len());
    Ok(conversations.len())
}

// --- stage 4: localize ---------------------------------------------------------------

pub fn cmd_localize(ctx: &StageContext) -> Result<usize> {
    require(&ctx.path("instructions.jsonl"), "build-instructions")?;
    require(&ctx.path("conversations.jsonl"), "gen-dialogues")?;
    let sets: Vec<InstructionSet> = read_jsonl(&ctx.path("instructions.jsonl"))?;
    let conversations: Vec<Conversation> = read_jsonl(&ctx.path("conversations.jsonl"))?;
    let (recordings, _) = eligible_recordings(&ctx.config)?;

    let mut spans_csv = String::from("recording_id,step_ordinal,start_s,end_s\n");
    let mut maps: std::collections::BTreeMap<String, StepSpanMap> = Default::default();
    for set in &sets {
        let recording = recordings
            .iter()
            .find(|r| r.recording_id == set.recording_id)
            .with_context(|| format!("recording {} not in manifest", set.recording_id))?;
        let map = match set.provenance {
            Provenance::NarrationLlm => {
                let subtitles = recording.subtitles.as_deref().unwrap_or(&[]);
                localize_from_subtitles(set, subtitles, recording.duration_s)?
            }
            _ => {
                let steps = recording.steps.as_deref().unwrap_or(&[]);
                localize_direct(set, steps)?
            }
        };
        for (ordinal, span) in &map.entries {
            spans_csv.push_str(&format!(
                "{},{},{},{}\n",
                set.recording_id,
                ordinal,
                format_seconds(span.start_s),
                format_seconds(span.end_s)
            ));
        }
        maps.insert(set.recording_id.clone(), map);
    }

    let localized: Vec<Conversation> = conversations
        .iter()
        .map(|conversation| {
            let map = maps
                .get(&conversation.source_recording_id)
                .with_context(|| format!("no span map for {}", conversation.source_recording_id))?;
            Ok(attach_clips(conversation, map)?)
        })
        .collect::<Result<_>>()?;

    if !ctx.dry_run {
        write_atomic(&ctx.path("spans.csv"), &spans_csv)?;
        write_jsonl(&ctx.path("conversations.localized.jsonl"), &localized)?;
    }
    println!("localize: {} span maps, {} conversations localized", maps.len(), localized.len());
    Ok(localized.len())
}

// --- stage 5: assemble -----------------------------------------------------------------

pub fn cmd_assemble(ctx: &StageContext) -> Result<usize> {
    require(&ctx.path("instructions.jsonl"), "build-instructions")?;
    require(&ctx.path("conversations.localized.jsonl"), "localize")?;
    let sets: Vec<InstructionSet> = read_jsonl(&ctx.path("instructions.jsonl"))?;
    let conversations: Vec<Conversation> = read_jsonl(&ctx.path("conversations.localized.jsonl"))?;

    let mut sessions: Vec<Session> = Vec::with_capacity(conversations.len());
    for conversation in conversations {
        let set = sets
            .iter()
            .find(|s| s.recording_id == conversation.source_recording_id)
            .with_context(|| format!("no instruction set for {}", conversation.source_recording_id))?;
        sessions.push(assemble(conversation, set.clone())?);
    }

    let dataset_path = ctx.path("dataset.jsonl");
    write_dataset(&sessions, &dataset_path)?;
    emit_cutlist(sessions.iter(), &ctx.path("cutlist.csv"))?;
    println!("assemble: {} sessions -> {}", sessions.len(), dataset_path.display());
    Ok(sessions.len())
}

// --- stage 6: split -----------------------------------------------------------------------

pub fn cmd_split(ctx: &StageContext, seed_override: Option<u64>) -> Result<(usize, usize, usize)> {
    let dataset_path = ctx.path("dataset.jsonl");
    require(&dataset_path, "assemble")?;
    let mut sessions = read_dataset(&dataset_path)?;
    let seed = seed_override.unwrap_or(ctx.config.split.seed);
    let assignment = stratified_split(&sessions, ctx.config.split.ratios(), seed)?;
    assignment.apply(&mut sessions);
    write_dataset(&sessions, &dataset_path)?;

    let mut split_csv = String::from("session_id,split\n");
    for (session_id, split) in &assignment.assignments {
        split_csv.push_str(&format!("{},{}\n", session_id, split.as_str()));
    }
    write_atomic(&ctx.path("split.csv"), &split_csv)?;

    let (train, val, test) = assignment.counts();
    println!("split: seed {seed} -> {train} train / {val} val / {test} test");
    Ok((train, val, test))
}

// --- stage 7: stats --------------------------------------------------------------------------

pub fn cmd_stats(ctx: &StageContext) -> Result<()> {
    let dataset_path = ctx.path("dataset.jsonl");
    require(&dataset_path, "assemble")?;
    let sessions = read_dataset(&dataset_path)?;
    let report = compute_stats(&sessions);
    write_stats_report(&report, &ctx.path("reports"))?;
    println!(
        "stats: {} sessions, {} turns, mean {:.1} turns/session, {:.1} s of clips",
        report.total_sessions,
        report.total_turns,
        report.mean_turns_per_session,
        report.total_video_seconds
    );
    for (category, dist) in &report.user_words {
        println!("stats: mean user words [{category}] = {:.2}", dist.mean);
    }
    Ok(())
}

// --- stage 8: eval ----------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct EvalRunInfo {
    pub dataset: String,
    pub mode: String,
    pub model_id: String,
    pub judge_model_id: String,
    pub split: String,
}

pub fn select_eval_sessions(sessions: Vec<Session>, split: EvalSplit) -> Vec<Session> {
    match split {
        EvalSplit::All => sessions,
        EvalSplit::Only(which) => sessions
            .into_iter()
            .filter(|s| s.split == Some(which))
            .collect(),
    }
}

pub fn cmd_eval(run: &EvalRunConfig, jobs: usize, dry_run: bool) -> Result<()> {
    if !run.dataset.exists() {
        bail!(StageInputMissing(format!("dataset {}", run.dataset.display())));
    }
    run.prompt_mode()?;
    let sessions = select_eval_sessions(read_dataset(&run.dataset)?, run.eval_split()?);
    if sessions.is_empty() {
        bail!("no sessions in split {:?} of {}", run.split, run.dataset.display());
    }
    let turn_count: usize = sessions.iter().map(|s| s.conversation.turns.len()).sum();

    if dry_run {
        let judge_calls = if run.judge { turn_count } else { 0 };
        println!(
            "eval: planned LLM calls: {turn_count} inference + {judge_calls} judge over {} sessions",
            sessions.len()
        );
        return Ok(());
    }

    let client = build_client(
        run.backend,
        run.cassette.as_deref(),
        run.max_in_flight,
        run.requests_per_minute,
        run.request_timeout_s,
    )?;
    let judge_client = if run.judge {
        Some(build_client(
            run.backend,
            run.judge_cassette.as_deref(),
            run.max_in_flight,
            run.requests_per_minute,
            run.request_timeout_s,
        )?)
    } else {
        None
    };
    run_eval(run, &client, judge_client.as_ref(), jobs)
}

/// Eval over injected clients; used by `cmd_eval` and by fixture recording.
pub fn run_eval(
    run: &EvalRunConfig,
    client: &LlmClient,
    judge_client: Option<&LlmClient>,
    jobs: usize,
) -> Result<()> {
    let mode = run.prompt_mode()?;
    let sessions = select_eval_sessions(read_dataset(&run.dataset)?, run.eval_split()?);
    if sessions.is_empty() {
        bail!("no sessions in split {:?} of {}", run.split, run.dataset.display());
    }
    let templates = load_templates(run.template_dir.as_deref())?;
    let llm = LlmContext {
        client,
        templates: &templates,
        options: ChatOptions::inference(&run.model_id),
    };

    // Teacher-forced inference, parallel over sessions.
    let session_slices: Vec<Vec<Session>> = sessions.iter().cloned().map(|s| vec![s]).collect();
    let per_session = parallel_map(jobs, &session_slices, |slice| {
        Ok(run_inference(slice, mode, &llm))
    })?;
    let mut predictions = Vec::new();
    let mut failures = Vec::new();
    for (mut p, mut f) in per_session {
        predictions.append(&mut p);
        failures.append(&mut f);
    }

    std::fs::create_dir_all(&run.output_dir)?;
    write_predictions(&predictions, &run.output_dir.join("predictions.jsonl"))?;
    write_jsonl(&run.output_dir.join("failures.jsonl"), &failures)?;

    let mut records = score_predictions(&predictions, &sessions)?;
    if let Some(judge_client) = judge_client {
        let judge_llm = LlmContext {
            client: judge_client,
            templates: &templates,
            options: ChatOptions::inference(&run.judge_model_id),
        };
        let judge_failures = judge_predictions(&mut records, &predictions, &sessions, &judge_llm);
        if !judge_failures.is_empty() {
            write_jsonl(&run.output_dir.join("judge_failures.jsonl"), &judge_failures)?;
        }
    }

    let tables = aggregate(&records, &predictions, &sessions)?;
    write_report_tables(&tables, &records, &run.output_dir)?;
    write_atomic(
        &run.output_dir.join("run_info.json"),
        &serde_json::to_string_pretty(&EvalRunInfo {
            dataset: run.dataset.display().to_string(),
            mode: mode.as_str().to_string(),
            model_id: run.model_id.clone(),
            judge_model_id: run.judge_model_id.clone(),
            split: run.split.clone(),
        })?,
    )?;

    println!(
        "eval[{}]: {} turns, corpus BLEU {:.3}, ROUGE-1 {:.3}, ROUGE-2 {:.3}, ROUGE-L {:.3}{}",
        mode.as_str(),
        tables.overall.count,
        tables.corpus_bleu,
        tables.overall.rouge1,
        tables.overall.rouge2,
        tables.overall.rouge_l,
        tables
            .overall
            .judge
            .map(|j| format!(", judge {j:.2}"))
            .unwrap_or_default()
    );
    if !failures.is_empty() {
        println!("eval: {} turn(s) failed; see failures.jsonl", failures.len());
    }
    Ok(())
}

// --- stage 9: report ----------------------------------------------------------------------------

fn read_metrics_csv(path: &Path) -> Result<Vec<MetricRecord>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            bail!("{} line {}: expected 8 columns", path.display(), i + 1);
        }
        let parse_f = |s: &str| s.parse::<f64>().context("bad metric value");
        records.push(MetricRecord {
            session_id: fields[0].to_string(),
            turn_index: fields[1].parse().context("bad turn index")?,
            mode: PromptMode::parse(fields[2]).context("bad mode")?,
            bleu: parse_f(fields[3])?,
            rouge1: parse_f(fields[4])?,
            rouge2: parse_f(fields[5])?,
            rouge_l: parse_f(fields[6])?,
            judge: if fields[7].is_empty() {
                None
            } else {
                Some(fields[7].parse().context("bad judge score")?)
            },
        });
    }
    Ok(records)
}

/// Rebuilds the aggregate tables and figures from an eval run directory
/// without re-running inference or judging.
pub fn cmd_report(run_dir: &Path) -> Result<()> {
    let info_path = run_dir.join("run_info.json");
    require(&info_path, "eval")?;
    let info: EvalRunInfo = serde_json::from_str(&std::fs::read_to_string(&info_path)?)
        .context("parsing run_info.json")?;
    let predictions = stepdial_core::eval::read_predictions(&run_dir.join("predictions.jsonl"))?;
    let records = read_metrics_csv(&run_dir.join("metrics.csv"))?;
    let sessions = read_dataset(Path::new(&info.dataset))?;

    let tables = aggregate(&records, &predictions, &sessions)?;
    write_report_tables(&tables, &records, run_dir)?;
    println!(
        "report[{}]: {} turns, corpus BLEU {:.3}, mean ROUGE-L {:.3}",
        info.mode, tables.overall.count, tables.corpus_bleu, tables.overall.rouge_l
    );
    Ok(())
}

/// Runs ingest through stats in order.
pub fn cmd_pipeline(ctx: &StageContext, seed_override: Option<u64>) -> Result<()> {
    cmd_ingest(ctx)?;
    cmd_build_instructions(ctx)?;
    cmd_gen_dialogues(ctx)?;
    if ctx.dry_run {
        println!("pipeline: dry run stops before localize (no generated outputs)");
        return Ok(());
    }
    cmd_localize(ctx)?;
    cmd_assemble(ctx)?;
    cmd_split(ctx, seed_override)?;
    cmd_stats(ctx)?;
    Ok(())
}
