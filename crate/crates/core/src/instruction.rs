//! Stage 1: turn a recording's narration or step annotations into a
//! comprehensive, itemized, atomic instruction set.

use std::path::Path;

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{StepAnnotation, SubtitleEntry};
use crate::llm::{vars, LlmContext, LlmError};
use crate::time::TimeSpan;

/// Default marker prepended to corrective steps in dialogue prompts.
pub const DEFAULT_CORRECTION_TOKEN: &str = "[[CORRECTION]]";

#[derive(Debug, Error)]
pub enum InstructionError {
    #[error("no input entries to build instructions from")]
    EmptyInput,
    #[error("completion could not be parsed as a step list: {0}")]
    UnparseableCompletion(String),
    #[error("completion contained no steps")]
    EmptySteps,
    #[error("every annotation matched the generic-step stoplist")]
    AllStepsFiltered,
    #[error("correction token {token:?} appears inside step {ordinal}")]
    TokenCollision { token: String, ordinal: u32 },
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    NarrationLlm,
    AnnotationMerge,
    AnnotationCluster,
}

/// One atomic instruction step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionStep {
    pub ordinal: u32,
    pub text: String,
    pub span: Option<TimeSpan>,
    pub is_correction: bool,
    /// 1-based indices into the source recording's subtitle or annotation
    /// list.
    pub source_refs: Vec<u32>,
    pub caveats: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionSet {
    pub task: String,
    pub recording_id: String,
    pub provenance: Provenance,
    pub steps: Vec<InstructionStep>,
}

impl InstructionSet {
    pub fn has_corrections(&self) -> bool {
        self.steps.iter().any(|s| s.is_correction)
    }

    /// Structural validity: at least two steps, consecutive ordinals,
    /// non-empty texts.
    pub fn check(&self) -> Result<(), String> {
        if self.steps.len() < 2 {
            return Err(format!("instruction set has {} step(s), need at least 2", self.steps.len()));
        }
        for (i, step) in self.steps.iter().enumerate() {
            if step.ordinal != i as u32 + 1 {
                return Err(format!("step ordinal {} at position {}", step.ordinal, i + 1));
            }
            if step.text.trim().is_empty() {
                return Err(format!("step {} has empty text", step.ordinal));
            }
        }
        Ok(())
    }
}

/// Case-insensitive substring patterns identifying generic, non-essential
/// steps (opening drawers, washing hands) that clustering drops.
#[derive(Debug, Clone)]
pub struct Stoplist {
    patterns: Vec<String>,
}

impl Stoplist {
    pub fn builtin() -> Self {
        Self::from_lines(include_str!("../assets/stoplist.txt"))
    }

    pub fn from_lines(content: &str) -> Self {
        Stoplist {
            patterns: content
                .lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .collect(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, InstructionError> {
        let content = std::fs::read_to_string(path).map_err(|source| InstructionError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::from_lines(&content))
    }

    pub fn matches(&self, description: &str) -> bool {
        let lower = description.to_lowercase();
        self.patterns.iter().any(|p| lower.contains(p))
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }
}

// --- completion parsing ----------------------------------------------------

static STEP_LINE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^\s*(\d+)[.)]\s+(.*?)\s*(?:\[cues?:\s*([0-9,\-\s]*)\])?\s*$").unwrap());
static NOTE_LINE: Lazy<Regex> = Lazy::new(|| Regex::new(r"^\s*-\s*note:\s*(.+)$").unwrap());

struct ParsedStep {
    text: String,
    refs: Vec<u32>,
    caveats: Vec<String>,
}

/// Parses an enumerated-list completion into steps. `max_ref` bounds the
/// cue/annotation indices a step may reference; anything outside is a parse
/// failure so hallucinated references never enter the pipeline.
fn parse_step_list(completion: &str, max_ref: u32) -> Result<Vec<ParsedStep>, String> {
    let mut steps: Vec<ParsedStep> = Vec::new();
    for line in completion.lines() {
        if line.trim().is_empty() {
            continue;
        }
        if let Some(caps) = NOTE_LINE.captures(line) {
            match steps.last_mut() {
                Some(step) => step.caveats.push(caps[1].trim().to_string()),
                None => return Err("note line before any step".into()),
            }
            continue;
        }
        if let Some(caps) = STEP_LINE.captures(line) {
            let text = caps[2].trim().to_string();
            if text.is_empty() {
                return Err(format!("step line without text: {line:?}"));
            }
            let refs = match caps.get(3) {
                Some(m) => parse_refs(m.as_str())?,
                None => Vec::new(),
            };
            if let Some(&bad) = refs.iter().find(|&&r| r == 0 || r > max_ref) {
                return Err(format!("step references source index {bad} outside 1..={max_ref}"));
            }
            steps.push(ParsedStep {
                text,
                refs,
                caveats: Vec::new(),
            });
            continue;
        }
        return Err(format!("unrecognized line: {line:?}"));
    }
    Ok(steps)
}

fn parse_refs(raw: &str) -> Result<Vec<u32>, String> {
    let mut refs = Vec::new();
    for piece in raw.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        match piece.split_once('-') {
            Some((a, b)) => {
                let a: u32 = a.trim().parse().map_err(|_| format!("bad cue range {piece:?}"))?;
                let b: u32 = b.trim().parse().map_err(|_| format!("bad cue range {piece:?}"))?;
                if a > b {
                    return Err(format!("inverted cue range {piece:?}"));
                }
                refs.extend(a..=b);
            }
            None => refs.push(piece.parse().map_err(|_| format!("bad cue index {piece:?}"))?),
        }
    }
    refs.dedup();
    Ok(refs)
}

/// Proxy for the one-action-per-step rule: a step that chains clauses with
/// "then" or a semicolon is considered compound and triggers the stricter
/// reformat retry.
fn looks_compound(text: &str) -> bool {
    let lower = format!(" {} ", text.to_lowercase());
    lower.contains(" then ") || lower.contains("; ")
}

// --- operations --------------------------------------------------------------

/// Extracts an instruction set from narration subtitles with one LLM call.
/// Step texts, cue references, and caveats all come from the same
/// completion; cue references yield each step's provisional time span.
pub fn extract_from_narration(
    subtitles: &[SubtitleEntry],
    task: &str,
    recording_id: &str,
    llm: &LlmContext<'_>,
) -> Result<InstructionSet, InstructionError> {
    if subtitles.is_empty() {
        return Err(InstructionError::EmptyInput);
    }
    let transcript = subtitles
        .iter()
        .map(|s| {
            format!(
                "{}. [{:.1}-{:.1}] {}",
                s.index, s.span.start_s, s.span.end_s, s.text
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    let variables = vars([("task", task), ("transcript", transcript.as_str())]);

    let completion = llm.complete_template("instruction_extract", &variables)?;
    let max_ref = subtitles.len() as u32;
    let first_try = parse_step_list(&completion.text, max_ref);
    let needs_retry = match &first_try {
        Err(_) => true,
        Ok(steps) => steps.is_empty() || steps.iter().any(|s| looks_compound(&s.text)),
    };

    let parsed = if needs_retry {
        let retry = llm.complete_template("instruction_extract_retry", &variables)?;
        match parse_step_list(&retry.text, max_ref) {
            Ok(steps) => steps,
            Err(reason) => return Err(InstructionError::UnparseableCompletion(reason)),
        }
    } else {
        first_try.expect("checked above")
    };
    if parsed.is_empty() {
        return Err(InstructionError::EmptySteps);
    }

    let steps = parsed
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let span = hull_of_refs(&p.refs, |r| subtitles[r as usize - 1].span);
            InstructionStep {
                ordinal: i as u32 + 1,
                text: p.text,
                span,
                is_correction: false,
                source_refs: p.refs,
                caveats: p.caveats,
            }
        })
        .collect();

    Ok(InstructionSet {
        task: task.to_string(),
        recording_id: recording_id.to_string(),
        provenance: Provenance::NarrationLlm,
        steps,
    })
}

fn hull_of_refs(refs: &[u32], span_of: impl Fn(u32) -> TimeSpan) -> Option<TimeSpan> {
    let mut spans = refs.iter().map(|&r| span_of(r));
    let first = spans.next()?;
    Some(spans.fold(first, |acc, s| acc.hull(&s)))
}

/// Normalizes annotated steps: merges consecutive duplicate descriptions
/// (span = union), then rewrites the merged descriptions into fluent
/// imperatives with one LLM call. Modification/correction labels surface as
/// `is_correction` on the resulting steps.
pub fn normalize_annotated_steps(
    annotations: &[StepAnnotation],
    task: &str,
    recording_id: &str,
    llm: &LlmContext<'_>,
) -> Result<InstructionSet, InstructionError> {
    if annotations.is_empty() {
        return Err(InstructionError::EmptyInput);
    }

    struct Merged {
        description: String,
        span: TimeSpan,
        refs: Vec<u32>,
        is_correction: bool,
    }
    let mut merged: Vec<Merged> = Vec::new();
    for (i, annotation) in annotations.iter().enumerate() {
        let same_as_last = merged
            .last()
            .is_some_and(|m| m.description.trim() == annotation.description.trim());
        if same_as_last {
            let last = merged.last_mut().unwrap();
            last.span = last.span.hull(&annotation.span);
            last.refs.push(i as u32 + 1);
            last.is_correction |= annotation.is_correction_class();
        } else {
            merged.push(Merged {
                description: annotation.description.clone(),
                span: annotation.span,
                refs: vec![i as u32 + 1],
                is_correction: annotation.is_correction_class(),
            });
        }
    }

    let raw_list = merged
        .iter()
        .enumerate()
        .map(|(i, m)| format!("{}. {}", i + 1, m.description))
        .collect::<Vec<_>>()
        .join("\n");
    let completion =
        llm.complete_template("step_rewrite", &vars([("task", task), ("steps", raw_list.as_str())]))?;
    let rewritten = parse_step_list(&completion.text, 0)
        .map_err(InstructionError::UnparseableCompletion)?;
    if rewritten.len() != merged.len() {
        return Err(InstructionError::UnparseableCompletion(format!(
            "expected {} rewritten steps, got {}",
            merged.len(),
            rewritten.len()
        )));
    }

    let steps = merged
        .into_iter()
        .zip(rewritten)
        .enumerate()
        .map(|(i, (m, r))| InstructionStep {
            ordinal: i as u32 + 1,
            text: r.text,
            span: Some(m.span),
            is_correction: m.is_correction,
            source_refs: m.refs,
            caveats: Vec::new(),
        })
        .collect();

    Ok(InstructionSet {
        task: task.to_string(),
        recording_id: recording_id.to_string(),
        provenance: Provenance::AnnotationMerge,
        steps,
    })
}

/// Drops stoplisted generic annotations, then groups the survivors by
/// LLM-judged adjacency (all pair queries batched into a single call). Each
/// cluster becomes one step spanning its members.
pub fn cluster_and_filter_steps(
    annotations: &[StepAnnotation],
    stoplist: &Stoplist,
    task: &str,
    recording_id: &str,
    llm: &LlmContext<'_>,
) -> Result<InstructionSet, InstructionError> {
    if annotations.is_empty() {
        return Err(InstructionError::EmptyInput);
    }
    let kept: Vec<(u32, &StepAnnotation)> = annotations
        .iter()
        .enumerate()
        .filter(|(_, a)| !stoplist.matches(&a.description))
        .map(|(i, a)| (i as u32 + 1, a))
        .collect();
    if kept.is_empty() {
        return Err(InstructionError::AllStepsFiltered);
    }

    // One adjacency verdict per consecutive pair, batched into one call.
    let mut same_as_previous = vec![false; kept.len()];
    if kept.len() > 1 {
        let pairs = kept
            .windows(2)
            .enumerate()
            .map(|(i, w)| format!("{}) {} ||| {}", i + 1, w[0].1.description, w[1].1.description))
            .collect::<Vec<_>>()
            .join("\n");
        let completion = llm
            .complete_template("cluster_adjacency", &vars([("task", task), ("pairs", pairs.as_str())]))?;
        let verdicts = parse_adjacency(&completion.text, kept.len() - 1)
            .map_err(InstructionError::UnparseableCompletion)?;
        for (i, verdict) in verdicts.into_iter().enumerate() {
            same_as_previous[i + 1] = verdict;
        }
    }

    let mut steps: Vec<InstructionStep> = Vec::new();
    for (position, (source_index, annotation)) in kept.iter().enumerate() {
        if same_as_previous[position] {
            let step = steps.last_mut().unwrap();
            step.span = Some(step.span.unwrap().hull(&annotation.span));
            step.source_refs.push(*source_index);
            step.is_correction |= annotation.is_correction_class();
        } else {
            steps.push(InstructionStep {
                ordinal: steps.len() as u32 + 1,
                text: capitalize(&annotation.description),
                span: Some(annotation.span),
                is_correction: annotation.is_correction_class(),
                source_refs: vec![*source_index],
                caveats: Vec::new(),
            });
        }
    }

    Ok(InstructionSet {
        task: task.to_string(),
        recording_id: recording_id.to_string(),
        provenance: Provenance::AnnotationCluster,
        steps,
    })
}

fn parse_adjacency(completion: &str, expected: usize) -> Result<Vec<bool>, String> {
    static VERDICT: Lazy<Regex> =
        Lazy::new(|| Regex::new(r"^\s*(\d+)\s*[:.)]\s*(yes|no)\s*$").unwrap());
    let mut verdicts = vec![None; expected];
    for line in completion.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let lowered = line.to_lowercase();
        let caps = VERDICT
            .captures(&lowered)
            .ok_or_else(|| format!("unrecognized adjacency line: {line:?}"))?;
        let index: usize = caps[1].parse().map_err(|_| "bad pair index".to_string())?;
        if index == 0 || index > expected {
            return Err(format!("pair index {index} outside 1..={expected}"));
        }
        verdicts[index - 1] = Some(&caps[2] == "yes");
    }
    verdicts
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or(format!("missing verdict for pair {}", i + 1)))
        .collect()
}

fn capitalize(text: &str) -> String {
    let trimmed = text.trim();
    let mut chars = trimmed.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// Renders the itemized step list for dialogue prompts, prefixing corrective
/// steps with `special_token`. The token must not occur inside any step's
/// own text, or the marking would be ambiguous.
pub fn mark_corrections(set: &InstructionSet, special_token: &str) -> Result<String, InstructionError> {
    for step in &set.steps {
        if step.text.contains(special_token) {
            return Err(InstructionError::TokenCollision {
                token: special_token.to_string(),
                ordinal: step.ordinal,
            });
        }
    }
    Ok(set
        .steps
        .iter()
        .map(|step| {
            if step.is_correction {
                format!("{special_token} {}. {}", step.ordinal, step.text)
            } else {
                format!("{}. {}", step.ordinal, step.text)
            }
        })
        .collect::<Vec<_>>()
        .join("\n"))
}

/// Renders the plain itemized list (no correction markers), used for
/// follow-mode dialogue generation and hint+steps benchmark prompts.
pub fn plain_step_list(set: &InstructionSet) -> String {
    set.steps
        .iter()
        .map(|step| format!("{}. {}", step.ordinal, step.text))
        .collect::<Vec<_>>()
        .join("\n")
}
