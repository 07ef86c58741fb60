//! Deterministic stratified train/val/test split.
//!
//! Sessions are grouped into (task, style, action_type) strata; each stratum
//! is shuffled by a generator seeded from the run seed and the stratum key,
//! then partitioned by cumulative ratios with largest-remainder rounding.
//! The assignment depends only on the seed and the session ids, never on
//! input order.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DatasetError, Session, Split};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl SplitRatios {
    pub const PAPER_DEFAULT: SplitRatios = SplitRatios {
        train: 0.7,
        val: 0.1,
        test: 0.2,
    };

    pub fn check(&self) -> Result<(), DatasetError> {
        let parts = [self.train, self.val, self.test];
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || parts.iter().any(|&r| r < 0.0) {
            return Err(DatasetError::BadRatios((self.train, self.val, self.test)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub seed: u64,
    pub ratios: SplitRatios,
    pub assignments: BTreeMap<String, Split>,
}

impl SplitAssignment {
    pub fn counts(&self) -> (usize, usize, usize) {
        let mut counts = (0, 0, 0);
        for split in self.assignments.values() {
            match split {
                Split::Train => counts.0 += 1,
                Split::Val => counts.1 += 1,
                Split::Test => counts.2 += 1,
            }
        }
        counts
    }

    pub fn apply(&self, sessions: &mut [Session]) {
        for session in sessions {
            session.split = self.assignments.get(&session.session_id).copied();
        }
    }
}

/// Largest-remainder apportionment of `n` over the three ratios. Ties go to
/// the earlier split in (train, val, test) order. Strata of three or more
/// sessions always keep at least one test session.
fn stratum_counts(n: usize, ratios: &SplitRatios) -> (usize, usize, usize) {
    let exact = [
        ratios.train * n as f64,
        ratios.val * n as f64,
        ratios.test * n as f64,
    ];
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();

    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for i in 0..(n - assigned) {
        counts[order[i % 3]] += 1;
    }

    if n >= 3 && counts[2] == 0 {
        let donor = if counts[0] >= counts[1] { 0 } else { 1 };
        counts[donor] -= 1;
        counts[2] += 1;
    }
    (counts[0], counts[1], counts[2])
}

fn stratum_rng(seed: u64, task: &str, style: &str, action: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for part in [task, style, action] {
        hasher.update([0x1f]);
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    let mut seed_bytes = [0u8; 32];
    seed_bytes.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed_bytes)
}

pub fn stratified_split(
    sessions: &[Session],
    ratios: SplitRatios,
    seed: u64,
) -> Result<SplitAssignment, DatasetError> {
    ratios.check()?;
    if sessions.is_empty() {
        return Err(DatasetError::EmptyCorpus);
    }

    let mut strata: BTreeMap<(String, String, String), Vec<String>> = BTreeMap::new();
    for session in sessions {
        strata
            .entry((
                session.task.clone(),
                session.style.as_str().to_string(),
                session.action_type.as_str().to_string(),
            ))
            .or_default()
            .push(session.session_id.clone());
    }

    let mut assignments = BTreeMap::new();
    for ((task, style, action), mut ids) in strata {
        ids.sort();
        ids.dedup();
        let mut rng = stratum_rng(seed, &task, &style, &action);
        ids.shuffle(&mut rng);

        let (train_n, val_n, _test_n) = stratum_counts(ids.len(), &ratios);
        for (i, id) in ids.into_iter().enumerate() {
            let split = if i < train_n {
                Split::Train
            } else if i < train_n + val_n {
                Split::Val
            } else {
                Split::Test
            };
            assignments.insert(id, split);
        }
    }

    Ok(SplitAssignment {
        seed,
        ratios,
        assignments,
    })
}
