//! Aggregation of per-turn metric records into report tables: overall, per
//! task, per user category, and per turn index, plus CSV/SVG emission.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Session;
use crate::plot;

use super::{bleu, EvalError, MetricRecord, PredictedResponse};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub count: u64,
    pub bleu: f64,
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
    /// Mean judge score over the turns that have one.
    pub judge: Option<f64>,
    pub judge_count: u64,
}

impl MetricMeans {
    fn from_records(records: &[&MetricRecord]) -> MetricMeans {
        let count = records.len() as u64;
        if count == 0 {
            return MetricMeans::default();
        }
        let sum = |f: fn(&MetricRecord) -> f64| records.iter().map(|r| f(r)).sum::<f64>();
        let judged: Vec<u8> = records.iter().filter_map(|r| r.judge).collect();
        MetricMeans {
            count,
            bleu: sum(|r| r.bleu) / count as f64,
            rouge1: sum(|r| r.rouge1) / count as f64,
            rouge2: sum(|r| r.rouge2) / count as f64,
            rouge_l: sum(|r| r.rouge_l) / count as f64,
            judge: if judged.is_empty() {
                None
            } else {
                Some(judged.iter().map(|&s| s as f64).sum::<f64>() / judged.len() as f64)
            },
            judge_count: judged.len() as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTables {
    pub overall: MetricMeans,
    /// Corpus-level BLEU over all (prediction, reference) pairs; the
    /// headline number. `overall.bleu` is the mean per-turn smoothed value.
    pub corpus_bleu: f64,
    pub per_task: BTreeMap<String, MetricMeans>,
    pub per_category: BTreeMap<String, MetricMeans>,
    pub per_turn: BTreeMap<u32, MetricMeans>,
    pub judge_histogram: BTreeMap<u8, u64>,
}

/// Builds all report tables from per-turn records. Group means recompose to
/// the overall mean by construction: every group partitions the same record
/// set.
pub fn aggregate(
    records: &[MetricRecord],
    predictions: &[PredictedResponse],
    sessions: &[Session],
) -> Result<ReportTables, EvalError> {
    let mut ordered: Vec<&MetricRecord> = records.iter().collect();
    ordered.sort_by(|a, b| (&a.session_id, a.turn_index).cmp(&(&b.session_id, b.turn_index)));

    let by_id: BTreeMap<&str, &Session> = sessions
        .iter()
        .map(|s| (s.session_id.as_str(), s))
        .collect();

    let mut per_task: BTreeMap<String, Vec<&MetricRecord>> = BTreeMap::new();
    let mut per_category: BTreeMap<String, Vec<&MetricRecord>> = BTreeMap::new();
    let mut per_turn: BTreeMap<u32, Vec<&MetricRecord>> = BTreeMap::new();
    for record in &ordered {
        let session = by_id
            .get(record.session_id.as_str())
            .ok_or_else(|| EvalError::UnknownSession(record.session_id.clone()))?;
        per_task.entry(session.task.clone()).or_default().push(record);
        per_category
            .entry(format!("{}_{}", session.style.as_str(), session.action_type.as_str()))
            .or_default()
            .push(record);
        per_turn.entry(record.turn_index).or_default().push(record);
    }

    let mut judge_histogram = BTreeMap::new();
    for record in &ordered {
        if let Some(score) = record.judge {
            *judge_histogram.entry(score).or_insert(0) += 1;
        }
    }

    // Corpus BLEU over sorted (candidate, reference) pairs.
    let mut pairs: Vec<(String, String)> = Vec::new();
    {
        let by_key: BTreeMap<(String, u32), &PredictedResponse> = predictions
            .iter()
            .map(|p| ((p.session_id.clone(), p.turn_index), p))
            .collect();
        for ((session_id, turn_index), prediction) in by_key {
            if let Some(session) = by_id.get(session_id.as_str()) {
                if let Some(turn) = session.conversation.turns.iter().find(|t| t.index == turn_index)
                {
                    pairs.push((prediction.text.clone(), turn.expert_text.clone()));
                }
            }
        }
    }
    let corpus_bleu = if pairs.is_empty() {
        0.0
    } else {
        let (candidates, references): (Vec<String>, Vec<String>) = pairs.into_iter().unzip();
        bleu(&candidates, &references, 4)?
    };

    Ok(ReportTables {
        overall: MetricMeans::from_records(&ordered),
        corpus_bleu,
        per_task: per_task
            .into_iter()
            .map(|(k, v)| (k, MetricMeans::from_records(&v)))
            .collect(),
        per_category: per_category
            .into_iter()
            .map(|(k, v)| (k, MetricMeans::from_records(&v)))
            .collect(),
        per_turn: per_turn
            .into_iter()
            .map(|(k, v)| (k, MetricMeans::from_records(&v)))
            .collect(),
        judge_histogram,
    })
}

fn means_row(means: &MetricMeans) -> String {
    format!(
        "{},{:.6},{:.6},{:.6},{:.6},{},{}",
        means.count,
        means.bleu,
        means.rouge1,
        means.rouge2,
        means.rouge_l,
        means
            .judge
            .map(|j| format!("{j:.6}"))
            .unwrap_or_default(),
        means.judge_count,
    )
}

const MEANS_HEADER: &str = "count,bleu,rouge1,rouge2,rouge_l,judge,judge_count";

/// Writes the metric CSV, the per-group report CSVs, and the SVG figures
/// (turn-index curve and judge-score histogram) under `dir`.
pub fn write_report_tables(
    tables: &ReportTables,
    records: &[MetricRecord],
    dir: &Path,
) -> Result<(), EvalError> {
    std::fs::create_dir_all(dir).map_err(|source| EvalError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let write = |name: &str, content: String| -> Result<(), EvalError> {
        let path = dir.join(name);
        std::fs::write(&path, content).map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })
    };

    let mut metrics_csv = String::from("session_id,turn_index,mode,bleu,rouge1,rouge2,rouge_l,judge\n");
    let mut ordered: Vec<&MetricRecord> = records.iter().collect();
    ordered.sort_by(|a, b| (&a.session_id, a.turn_index).cmp(&(&b.session_id, b.turn_index)));
    for record in ordered {
        metrics_csv.push_str(&format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{}\n",
            record.session_id,
            record.turn_index,
            record.mode.as_str(),
            record.bleu,
            record.rouge1,
            record.rouge2,
            record.rouge_l,
            record.judge.map(|j| j.to_string()).unwrap_or_default(),
        ));
    }
    write("metrics.csv", metrics_csv)?;

    write(
        "report_overall.csv",
        format!(
            "corpus_bleu,{MEANS_HEADER}\n{:.6},{}\n",
            tables.corpus_bleu,
            means_row(&tables.overall)
        ),
    )?;

    let grouped = |rows: &BTreeMap<String, MetricMeans>, key: &str| {
        let mut out = format!("{key},{MEANS_HEADER}\n");
        for (group, means) in rows {
            out.push_str(&format!("{group},{}\n", means_row(means)));
        }
        out
    };
    write("report_tasks.csv", grouped(&tables.per_task, "task"))?;
    write("report_categories.csv", grouped(&tables.per_category, "category"))?;

    let mut turns_csv = format!("turn_index,{MEANS_HEADER}\n");
    for (turn, means) in &tables.per_turn {
        turns_csv.push_str(&format!("{turn},{}\n", means_row(means)));
    }
    write("report_turns.csv", turns_csv)?;

    let curve: Vec<(f64, f64)> = tables
        .per_turn
        .iter()
        .map(|(&turn, means)| (turn as f64, means.rouge_l))
        .collect();
    write(
        "turn_curve.svg",
        plot::line_chart("Mean ROUGE-L by turn index", "turn", "rouge_l", &curve),
    )?;

    let histogram: Vec<(String, f64)> = (1..=5u8)
        .map(|score| {
            (
                score.to_string(),
                *tables.judge_histogram.get(&score).unwrap_or(&0) as f64,
            )
        })
        .collect();
    write(
        "judge_histogram.svg",
        plot::bar_chart("Judge score distribution", "score", "turns", &histogram),
    )?;

    Ok(())
}
