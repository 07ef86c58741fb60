//! Text-overlap metrics: BLEU and ROUGE, implemented from first principles.
//!
//! Tokenization is shared by every metric: lowercase, split on whitespace,
//! strip surrounding punctuation, drop tokens that end up empty. The numbers
//! are only comparable under one tokenizer, so it lives here and nowhere
//! else.

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("candidate/reference lists are empty or of different lengths")]
    EmptyInput,
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let t = raw
                .trim_matches(|c: char| c.is_ascii_punctuation())
                .to_lowercase();
            if t.is_empty() {
                None
            } else {
                Some(t)
            }
        })
        .collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts: HashMap<&[String], u64> = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

/// Candidate n-gram occurrences clipped by the reference count, summed.
fn clipped_matches(candidate: &[String], reference: &[String], n: usize) -> u64 {
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    cand.iter()
        .map(|(gram, &count)| count.min(refs.get(gram).copied().unwrap_or(0)))
        .sum()
}

const MAX_ORDER: usize = 4;

/// Corpus-level BLEU over aligned candidate/reference pairs.
///
/// Clipped n-gram counts for n = 1..=4 are pooled over the whole corpus, the
/// precisions combined by uniform geometric mean, and the result multiplied
/// by the brevity penalty `exp(1 - r/c)` when the candidate corpus is
/// shorter than the reference corpus. Orders with no candidate n-grams at
/// all (corpus shorter than n tokens) are excluded and the weights
/// renormalized over the remaining orders, so identical pairs score exactly
/// 1.0 at any length. A zero precision at any used order yields 0.0.
pub fn bleu(candidates: &[String], references: &[String], max_n: usize) -> Result<f64, MetricError> {
    if candidates.is_empty() || candidates.len() != references.len() {
        return Err(MetricError::EmptyInput);
    }
    let cand_tokens: Vec<Vec<String>> = candidates.iter().map(|s| tokenize(s)).collect();
    let ref_tokens: Vec<Vec<String>> = references.iter().map(|s| tokenize(s)).collect();

    let cand_len: u64 = cand_tokens.iter().map(|t| t.len() as u64).sum();
    let ref_len: u64 = ref_tokens.iter().map(|t| t.len() as u64).sum();
    if cand_len == 0 {
        return Ok(0.0);
    }

    let mut log_sum = 0.0;
    let mut used_orders = 0usize;
    for n in 1..=max_n.min(MAX_ORDER).max(1) {
        let mut matches = 0u64;
        let mut total = 0u64;
        for (cand, reference) in cand_tokens.iter().zip(&ref_tokens) {
            matches += clipped_matches(cand, reference, n);
            total += cand.len().saturating_sub(n - 1) as u64;
        }
        if total == 0 {
            break;
        }
        if matches == 0 {
            return Ok(0.0);
        }
        log_sum += (matches as f64 / total as f64).ln();
        used_orders += 1;
    }
    if used_orders == 0 {
        return Ok(0.0);
    }

    let brevity = if cand_len < ref_len {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    } else {
        1.0
    };
    Ok(brevity * (log_sum / used_orders as f64).exp())
}

/// Per-turn BLEU with add-one smoothing on zero counts, for turn-index
/// curves where unsmoothed scores degenerate to zero.
pub fn sentence_bleu_smoothed(candidate: &str, reference: &str) -> f64 {
    let cand = tokenize(candidate);
    let reference = tokenize(reference);
    if cand.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    let mut used_orders = 0usize;
    for n in 1..=MAX_ORDER {
        let total = cand.len().saturating_sub(n - 1) as u64;
        if total == 0 {
            break;
        }
        let matches = clipped_matches(&cand, &reference, n);
        let precision = if matches == 0 {
            (matches + 1) as f64 / (total + 1) as f64
        } else {
            matches as f64 / total as f64
        };
        log_sum += precision.ln();
        used_orders += 1;
    }
    if used_orders == 0 {
        return 0.0;
    }
    let brevity = if cand.len() < reference.len() {
        (1.0 - reference.len() as f64 / cand.len() as f64).exp()
    } else {
        1.0
    };
    brevity * (log_sum / used_orders as f64).exp()
}

/// Precision/recall/F1 triple as produced by the ROUGE family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    const ZERO: Prf = Prf {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };

    fn new(precision: f64, recall: f64) -> Prf {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf { precision, recall, f1 }
    }
}

/// ROUGE-N: clipped n-gram overlap between candidate and reference.
pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> Prf {
    assert!(n >= 1, "rouge_n needs n >= 1");
    let cand = tokenize(candidate);
    let reference = tokenize(reference);
    let cand_total = cand.len().saturating_sub(n - 1);
    let ref_total = reference.len().saturating_sub(n - 1);
    if cand_total == 0 || ref_total == 0 {
        return Prf::ZERO;
    }
    let matches = clipped_matches(&cand, &reference, n) as f64;
    Prf::new(matches / cand_total as f64, matches / ref_total as f64)
}

/// ROUGE-L: longest-common-subsequence overlap between candidate and
/// reference.
pub fn rouge_l(candidate: &str, reference: &str) -> Prf {
    let cand = tokenize(candidate);
    let reference = tokenize(reference);
    if cand.is_empty() || reference.is_empty() {
        return Prf::ZERO;
    }
    let lcs = lcs_length(&cand, &reference) as f64;
    Prf::new(lcs / cand.len() as f64, lcs / reference.len() as f64)
}

/// Standard O(|a|·|b|) dynamic program with a rolling row.
fn lcs_length(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut current = vec![0usize; b.len() + 1];
    for item in a {
        for (j, other) in b.iter().enumerate() {
            current[j + 1] = if item == other {
                prev[j] + 1
            } else {
                prev[j + 1].max(current[j])
            };
        }
        std::mem::swap(&mut prev, &mut current);
    }
    prev[b.len()]
}
