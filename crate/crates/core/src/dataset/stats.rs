//! Corpus statistics: per-task counts, turn counts, and word/clip-length
//! distributions by user category.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DatasetError, Session};
use crate::plot;
use crate::time::format_seconds;

/// Words = whitespace tokens that are not punctuation-only.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace()
        .filter(|t| !t.chars().all(|c| c.is_ascii_punctuation()))
        .count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistSummary {
    pub count: u64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Bucket lower bound → sample count, at the summary's bucket width.
    pub histogram: BTreeMap<u64, u64>,
    pub bucket_width: f64,
}

impl DistSummary {
    /// Samples are sorted before accumulation so the summary is exactly
    /// permutation-invariant.
    pub fn from_samples(mut samples: Vec<f64>, bucket_width: f64) -> DistSummary {
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let count = samples.len() as u64;
        let sum: f64 = samples.iter().sum();
        let mut histogram = BTreeMap::new();
        for &sample in &samples {
            let bucket = (sample / bucket_width).floor() as u64;
            *histogram.entry(bucket).or_insert(0) += 1;
        }
        DistSummary {
            count,
            mean: if count == 0 { 0.0 } else { sum / count as f64 },
            min: samples.first().copied().unwrap_or(0.0),
            max: samples.last().copied().unwrap_or(0.0),
            histogram,
            bucket_width,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskStats {
    pub sessions: u64,
    pub turns: u64,
    pub video_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub total_sessions: u64,
    pub total_turns: u64,
    pub total_video_seconds: f64,
    pub mean_turns_per_session: f64,
    pub per_task: BTreeMap<String, TaskStats>,
    /// Keyed by "style_action", e.g. "concise_follow".
    pub user_words: BTreeMap<String, DistSummary>,
    pub expert_words: DistSummary,
    pub clip_seconds: DistSummary,
}

pub fn compute_stats(sessions: &[Session]) -> StatsReport {
    let mut per_task: BTreeMap<String, TaskStats> = BTreeMap::new();
    let mut user_samples: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut expert_samples: Vec<f64> = Vec::new();
    let mut clip_samples: Vec<f64> = Vec::new();
    let mut total_turns = 0u64;

    for session in sessions {
        let task = per_task.entry(session.task.clone()).or_default();
        task.sessions += 1;
        task.turns += session.conversation.turns.len() as u64;
        total_turns += session.conversation.turns.len() as u64;

        let category = format!("{}_{}", session.style.as_str(), session.action_type.as_str());
        let user_bucket = user_samples.entry(category).or_default();
        for turn in &session.conversation.turns {
            user_bucket.push(word_count(&turn.user_text) as f64);
            expert_samples.push(word_count(&turn.expert_text) as f64);
            if let Some(span) = turn.span {
                let clip = span.duration();
                task.video_seconds += clip;
                clip_samples.push(clip);
            }
        }
    }

    // Totals recomputed from sorted parts so session order cannot perturb
    // floating-point sums.
    let mut task_seconds: Vec<f64> = per_task.values().map(|t| t.video_seconds).collect();
    task_seconds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let total_video_seconds = task_seconds.iter().sum();

    StatsReport {
        total_sessions: sessions.len() as u64,
        total_turns,
        total_video_seconds,
        mean_turns_per_session: if sessions.is_empty() {
            0.0
        } else {
            total_turns as f64 / sessions.len() as f64
        },
        per_task,
        user_words: user_samples
            .into_iter()
            .map(|(k, v)| (k, DistSummary::from_samples(v, 1.0)))
            .collect(),
        expert_words: DistSummary::from_samples(expert_samples, 1.0),
        clip_seconds: DistSummary::from_samples(clip_samples, 5.0),
    }
}

/// Emits the stats report as CSV tables plus SVG histograms under `dir`.
pub fn write_stats_report(report: &StatsReport, dir: &Path) -> Result<(), DatasetError> {
    std::fs::create_dir_all(dir).map_err(|source| DatasetError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let write = |name: &str, content: String| -> Result<(), DatasetError> {
        let path = dir.join(name);
        std::fs::write(&path, content).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })
    };

    let mut tasks_csv = String::from("task,sessions,turns,video_seconds,mean_turns_per_session\n");
    for (task, stats) in &report.per_task {
        tasks_csv.push_str(&format!(
            "{},{},{},{},{:.3}\n",
            task,
            stats.sessions,
            stats.turns,
            format_seconds(stats.video_seconds),
            stats.turns as f64 / stats.sessions.max(1) as f64
        ));
    }
    tasks_csv.push_str(&format!(
        "TOTAL,{},{},{},{:.3}\n",
        report.total_sessions,
        report.total_turns,
        format_seconds(report.total_video_seconds),
        report.mean_turns_per_session
    ));
    write("stats_tasks.csv", tasks_csv)?;

    let mut words_csv = String::from("category,turns,mean_user_words,min,max\n");
    for (category, dist) in &report.user_words {
        words_csv.push_str(&format!(
            "{},{},{:.3},{},{}\n",
            category, dist.count, dist.mean, dist.min, dist.max
        ));
    }
    words_csv.push_str(&format!(
        "expert_all,{},{:.3},{},{}\n",
        report.expert_words.count, report.expert_words.mean, report.expert_words.min, report.expert_words.max
    ));
    write("stats_words.csv", words_csv)?;

    let mut clips_csv = String::from("bucket_start_s,count\n");
    for (bucket, count) in &report.clip_seconds.histogram {
        clips_csv.push_str(&format!(
            "{},{}\n",
            format_seconds(*bucket as f64 * report.clip_seconds.bucket_width),
            count
        ));
    }
    write("stats_clip_lengths.csv", clips_csv)?;

    let session_bars: Vec<(String, f64)> = report
        .per_task
        .iter()
        .map(|(task, stats)| (task.clone(), stats.sessions as f64))
        .collect();
    write(
        "stats_tasks.svg",
        plot::bar_chart("Sessions per task", "task", "sessions", &session_bars),
    )?;

    let word_bars: Vec<(String, f64)> = report
        .user_words
        .iter()
        .map(|(category, dist)| (category.clone(), dist.mean))
        .collect();
    write(
        "stats_user_words.svg",
        plot::bar_chart(
            "Mean user-turn words by category",
            "category",
            "words",
            &word_bars,
        ),
    )?;

    let clip_bars: Vec<(String, f64)> = report
        .clip_seconds
        .histogram
        .iter()
        .map(|(bucket, count)| {
            (
                format!("{}s", bucket * report.clip_seconds.bucket_width as u64),
                *count as f64,
            )
        })
        .collect();
    write(
        "stats_clip_lengths.svg",
        plot::bar_chart("Clip length distribution", "clip length", "count", &clip_bars),
    )?;

    let expert_bars: Vec<(String, f64)> = report
        .expert_words
        .histogram
        .iter()
        .map(|(bucket, count)| (bucket.to_string(), *count as f64))
        .collect();
    write(
        "stats_expert_words.svg",
        plot::bar_chart("Expert-turn word distribution", "words", "count", &expert_bars),
    )?;

    Ok(())
}
