//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line. Run with `cargo test -p stepdial-cli --test acceptance`
//! (add `-- --nocapture` to see the lines).

use std::path::{Path, PathBuf};

use stepdial_cli::config::{BackendKind, EvalRunConfig, LlmSection, PipelineConfig, SplitSection};
use stepdial_cli::stages::{self, StageContext};
use stepdial_core::dataset::{read_dataset, stratified_split, Session, SplitRatios};
use stepdial_core::dialogue::{ActionType, Conversation, DialogueTurn, SpeechStyle, TurnKind};
use stepdial_core::eval::{
    aggregate, judge_predictions, run_inference, score_predictions, PromptMode,
};
use stepdial_core::instruction::{InstructionSet, InstructionStep, Provenance};
use stepdial_core::llm::{ChatOptions, LlmClient, LlmContext, TemplateStore};
use stepdial_core::localize::{score_segmentation, StepSpanMap};
use stepdial_core::time::TimeSpan;

/// Brute-force metric oracles, independent of the library implementation:
/// window scans instead of hash counting, exhaustive subsequence
/// enumeration instead of dynamic programming.
mod oracle {
    pub fn tokens(text: &str) -> Vec<String> {
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

    fn windows(tokens: &[String], n: usize) -> Vec<Vec<String>> {
        if tokens.len() < n {
            return Vec::new();
        }
        (0..=tokens.len() - n).map(|i| tokens[i..i + n].to_vec()).collect()
    }

    fn clipped(candidate: &[String], reference: &[String], n: usize) -> u64 {
        let cand = windows(candidate, n);
        let refs = windows(reference, n);
        let mut total = 0u64;
        for (i, gram) in cand.iter().enumerate() {
            if cand[..i].contains(gram) {
                continue;
            }
            let in_candidate = cand.iter().filter(|g| *g == gram).count() as u64;
            let in_reference = refs.iter().filter(|g| *g == gram).count() as u64;
            total += in_candidate.min(in_reference);
        }
        total
    }

    pub fn corpus_bleu(pairs: &[(String, String)]) -> f64 {
        let tokenized: Vec<(Vec<String>, Vec<String>)> = pairs
            .iter()
            .map(|(c, r)| (tokens(c), tokens(r)))
            .collect();
        let cand_len: u64 = tokenized.iter().map(|(c, _)| c.len() as u64).sum();
        let ref_len: u64 = tokenized.iter().map(|(_, r)| r.len() as u64).sum();
        if cand_len == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        let mut orders = 0usize;
        for n in 1..=4 {
            let total: u64 = tokenized
                .iter()
                .map(|(c, _)| c.len().saturating_sub(n - 1) as u64)
                .sum();
            if total == 0 {
                break;
            }
            let matches: u64 = tokenized.iter().map(|(c, r)| clipped(c, r, n)).sum();
            if matches == 0 {
                return 0.0;
            }
            log_sum += (matches as f64 / total as f64).ln();
            orders += 1;
        }
        if orders == 0 {
            return 0.0;
        }
        let brevity = if cand_len < ref_len {
            (1.0 - ref_len as f64 / cand_len as f64).exp()
        } else {
            1.0
        };
        brevity * (log_sum / orders as f64).exp()
    }

    pub fn smoothed_bleu(candidate: &str, reference: &str) -> f64 {
        let c = tokens(candidate);
        let r = tokens(reference);
        if c.is_empty() || r.is_empty() {
            return 0.0;
        }
        let mut log_sum = 0.0;
        let mut orders = 0usize;
        for n in 1..=4 {
            let total = c.len().saturating_sub(n - 1) as u64;
            if total == 0 {
                break;
            }
            let matches = clipped(&c, &r, n);
            let precision = if matches == 0 {
                (matches + 1) as f64 / (total + 1) as f64
            } else {
                matches as f64 / total as f64
            };
            log_sum += precision.ln();
            orders += 1;
        }
        let brevity = if c.len() < r.len() {
            (1.0 - r.len() as f64 / c.len() as f64).exp()
        } else {
            1.0
        };
        brevity * (log_sum / orders as f64).exp()
    }

    fn prf(matches: f64, cand_total: f64, ref_total: f64) -> (f64, f64, f64) {
        if cand_total == 0.0 || ref_total == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let p = matches / cand_total;
        let r = matches / ref_total;
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        (p, r, f)
    }

    pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> (f64, f64, f64) {
        let c = tokens(candidate);
        let r = tokens(reference);
        prf(
            clipped(&c, &r, n) as f64,
            c.len().saturating_sub(n - 1) as f64,
            r.len().saturating_sub(n - 1) as f64,
        )
    }

    /// Exhaustive LCS: enumerate every subsequence of the shorter side
    /// (lengths capped at 12 tokens by the caller) and test it against the
    /// longer side.
    pub fn lcs_exhaustive(a: &[String], b: &[String]) -> usize {
        let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
        assert!(short.len() <= 12, "exhaustive LCS capped at 12 tokens");
        let mut best = 0usize;
        for mask in 0u32..(1 << short.len()) {
            let subsequence: Vec<&String> = (0..short.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| &short[i])
                .collect();
            if subsequence.len() <= best {
                continue;
            }
            let mut cursor = 0usize;
            for token in &subsequence {
                match long[cursor..].iter().position(|t| &t == token) {
                    Some(offset) => cursor += offset + 1,
                    None => {
                        cursor = usize::MAX;
                        break;
                    }
                }
            }
            if cursor != usize::MAX {
                best = subsequence.len();
            }
        }
        best
    }

    pub fn rouge_l(candidate: &str, reference: &str) -> (f64, f64, f64) {
        let c = tokens(candidate);
        let r = tokens(reference);
        if c.is_empty() || r.is_empty() {
            return (0.0, 0.0, 0.0);
        }
        let lcs = lcs_exhaustive(&c, &r) as f64;
        prf(lcs, c.len() as f64, r.len() as f64)
    }
}

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .canonicalize()
        .expect("fixtures directory")
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

fn random_text(rng: &mut impl rand::Rng, max_len: usize) -> String {
    let len = rng.gen_range(1..=max_len);
    (0..len)
        .map(|_| format!("w{}", rng.gen_range(0..10)))
        .collect::<Vec<_>>()
        .join(" ")
}

#[test]
fn criterion_1_metric_oracle_equivalence() {
    use rand::SeedableRng;
    let started = std::time::Instant::now();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20240817);

    let mut pairs: Vec<(String, String)> = Vec::new();
    for _ in 0..120 {
        pairs.push((random_text(&mut rng, 20), random_text(&mut rng, 20)));
    }

    for (candidate, reference) in &pairs {
        let got = stepdial_core::eval::sentence_bleu_smoothed(candidate, reference);
        assert!(close(got, oracle::smoothed_bleu(candidate, reference)), "smoothed bleu {candidate:?} vs {reference:?}");
        let single = stepdial_core::eval::bleu(
            std::slice::from_ref(candidate),
            std::slice::from_ref(reference),
            4,
        )
        .unwrap();
        assert!(close(single, oracle::corpus_bleu(&[(candidate.clone(), reference.clone())])));
        for n in [1, 2] {
            let got = stepdial_core::eval::rouge_n(candidate, reference, n);
            let want = oracle::rouge_n(candidate, reference, n);
            assert!(
                close(got.precision, want.0) && close(got.recall, want.1) && close(got.f1, want.2),
                "rouge-{n} {candidate:?} vs {reference:?}"
            );
        }
    }

    // Corpus-level BLEU over the whole pair set.
    let (candidates, references): (Vec<String>, Vec<String>) = pairs.iter().cloned().unzip();
    let corpus = stepdial_core::eval::bleu(&candidates, &references, 4).unwrap();
    assert!(close(corpus, oracle::corpus_bleu(&pairs)));

    // ROUGE-L against exhaustive subsequence enumeration (≤ 12 tokens).
    for _ in 0..120 {
        let candidate = random_text(&mut rng, 12);
        let reference = random_text(&mut rng, 12);
        let got = stepdial_core::eval::rouge_l(&candidate, &reference);
        let want = oracle::rouge_l(&candidate, &reference);
        assert!(
            close(got.precision, want.0) && close(got.recall, want.1) && close(got.f1, want.2),
            "rouge-l {candidate:?} vs {reference:?}"
        );
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "oracle check took {elapsed:?}");
    println!("ACCEPTANCE 1 metric-oracle-equivalence: PASS ({elapsed:?})");
}

#[test]
fn criterion_2_identity_and_zero_cases() {
    let text = "place the tea bag in the mug".to_string();
    assert_eq!(
        stepdial_core::eval::bleu(std::slice::from_ref(&text), std::slice::from_ref(&text), 4).unwrap(),
        1.0
    );
    assert_eq!(stepdial_core::eval::sentence_bleu_smoothed(&text, &text), 1.0);
    for n in [1, 2] {
        let prf = stepdial_core::eval::rouge_n(&text, &text, n);
        assert_eq!(prf.f1, 1.0);
    }
    assert_eq!(stepdial_core::eval::rouge_l(&text, &text).f1, 1.0);

    let disjoint = "alpha beta gamma delta".to_string();
    let other = "epsilon zeta eta theta".to_string();
    assert_eq!(
        stepdial_core::eval::bleu(std::slice::from_ref(&disjoint), std::slice::from_ref(&other), 4)
            .unwrap(),
        0.0
    );
    for n in [1, 2] {
        assert_eq!(stepdial_core::eval::rouge_n(&disjoint, &other, n).f1, 0.0);
    }
    assert_eq!(stepdial_core::eval::rouge_l(&disjoint, &other).f1, 0.0);
    println!("ACCEPTANCE 2 identity-and-zero-cases: PASS");
}

#[test]
fn criterion_3_segmentation_scoring() {
    let span_map = |entries: &[(u32, f64, f64)]| StepSpanMap {
        recording_id: "r".into(),
        entries: entries
            .iter()
            .map(|&(o, s, e)| (o, TimeSpan::new(s, e).unwrap()))
            .collect(),
    };
    let truth = span_map(&[(1, 0.0, 10.0)]);
    let predicted = span_map(&[(1, 5.0, 15.0)]);
    let score = score_segmentation(&predicted, &truth, 20.0, 1.0).unwrap();
    assert!(close(score.mean_iou, 1.0 / 3.0), "iou {}", score.mean_iou);
    assert!(close(score.accuracy, 0.5), "accuracy {}", score.accuracy);

    let perfect = span_map(&[(1, 0.0, 10.0), (2, 12.0, 18.0)]);
    let score = score_segmentation(&perfect, &perfect, 20.0, 1.0).unwrap();
    assert_eq!((score.mean_iou, score.precision, score.accuracy), (1.0, 1.0, 1.0));
    println!("ACCEPTANCE 3 segmentation-scoring: PASS");
}

/// Minimal schema-valid session carrying just the fields the split reads.
fn synthetic_session(
    recording_id: &str,
    task: &str,
    style: SpeechStyle,
    action_type: ActionType,
) -> Session {
    let steps: Vec<InstructionStep> = (1..=2)
        .map(|ordinal| InstructionStep {
            ordinal,
            text: format!("Step {ordinal}."),
            span: None,
            is_correction: action_type == ActionType::Error && ordinal == 2,
            source_refs: vec![ordinal],
            caveats: Vec::new(),
        })
        .collect();
    let turns: Vec<DialogueTurn> = vec![
        DialogueTurn {
            index: 1,
            kind: TurnKind::TaskInit,
            user_text: "Teach me?".into(),
            expert_text: "Sure.".into(),
            span: None,
            step_ordinal: None,
        },
        DialogueTurn {
            index: 2,
            kind: TurnKind::Step,
            user_text: "Next?".into(),
            expert_text: "Step 1.".into(),
            span: None,
            step_ordinal: Some(1),
        },
        DialogueTurn {
            index: 3,
            kind: TurnKind::Step,
            user_text: "Next?".into(),
            expert_text: "Step 2.".into(),
            span: None,
            step_ordinal: Some(2),
        },
        DialogueTurn {
            index: 4,
            kind: TurnKind::Closing,
            user_text: "Done.".into(),
            expert_text: "Bye.".into(),
            span: None,
            step_ordinal: None,
        },
    ];
    Session {
        session_id: stepdial_core::session_id(recording_id, style, action_type),
        task: task.into(),
        style,
        action_type,
        split: None,
        source_recording_id: recording_id.into(),
        instruction_set: InstructionSet {
            task: task.into(),
            recording_id: recording_id.into(),
            provenance: Provenance::AnnotationMerge,
            steps,
        },
        conversation: Conversation {
            task: task.into(),
            style,
            action_type,
            source_recording_id: recording_id.into(),
            turns,
        },
    }
}

/// Synthetic 507-session corpus with the published category totals:
/// 180 concise-follow, 252 regular-follow, 75 regular-error, spread over
/// five recipe tasks plus five narrated tasks.
fn synthetic_corpus_507() -> Vec<Session> {
    let recipes = [
        "making pinwheels",
        "making quesadilla",
        "making oatmeal",
        "making coffee",
        "making tea",
    ];
    let narrated = [
        "changing a car tire",
        "jump starting a car",
        "repotting a plant",
        "performing cpr",
        "assembling a shelf",
    ];
    let concise = [34, 34, 34, 34, 44];
    let errors = [13, 13, 13, 13, 23];
    let regular_recipes = [42, 43, 33, 33, 34];
    let regular_narrated = [12, 13, 14, 14, 14];

    let mut sessions = Vec::with_capacity(507);
    let mut counter = 0usize;
    let mut push = |sessions: &mut Vec<Session>, task: &str, style, action, count: usize| {
        for _ in 0..count {
            counter += 1;
            sessions.push(synthetic_session(&format!("rec{counter:04}"), task, style, action));
        }
    };
    for (task, &count) in recipes.iter().zip(&concise) {
        push(&mut sessions, task, SpeechStyle::Concise, ActionType::Follow, count);
    }
    for (task, &count) in recipes.iter().zip(&errors) {
        push(&mut sessions, task, SpeechStyle::Regular, ActionType::Error, count);
    }
    for (task, &count) in recipes.iter().zip(&regular_recipes) {
        push(&mut sessions, task, SpeechStyle::Regular, ActionType::Follow, count);
    }
    for (task, &count) in narrated.iter().zip(&regular_narrated) {
        push(&mut sessions, task, SpeechStyle::Regular, ActionType::Follow, count);
    }
    sessions
}

#[test]
fn criterion_4_split_reproduction() {
    let sessions = synthetic_corpus_507();
    assert_eq!(sessions.len(), 507);
    let concise = sessions.iter().filter(|s| s.style == SpeechStyle::Concise).count();
    let errors = sessions.iter().filter(|s| s.action_type == ActionType::Error).count();
    assert_eq!((concise, errors), (180, 75));

    for seed in [7u64, 99] {
        let assignment = stratified_split(&sessions, SplitRatios::PAPER_DEFAULT, seed).unwrap();
        assert_eq!(assignment.counts(), (355, 44, 108), "seed {seed}");
    }
    println!("ACCEPTANCE 4 split-reproduction (507 -> 355/44/108): PASS");
}

fn fixture_pipeline_config(run_dir: &Path) -> PipelineConfig {
    let fixtures = fixtures_dir();
    PipelineConfig {
        manifest: fixtures.join("manifest.csv"),
        run_dir: run_dir.to_path_buf(),
        stoplist: Some(fixtures.join("stoplist.txt")),
        template_dir: None,
        styles: vec![SpeechStyle::Concise, SpeechStyle::Regular],
        narrated_styles: vec![SpeechStyle::Regular],
        error_mode: true,
        correction_token: stepdial_core::DEFAULT_CORRECTION_TOKEN.to_string(),
        egocentric_only: true,
        annotated_path: stepdial_cli::AnnotatedPath::Merge,
        llm: LlmSection {
            backend: BackendKind::Replay,
            cassette: Some(fixtures.join("cassettes/pipeline.jsonl")),
            model_id: "mock-model".into(),
            ..LlmSection::default()
        },
        split: SplitSection::default(),
    }
}

fn run_fixture_pipeline(run_dir: &Path) -> Vec<Session> {
    let ctx = StageContext::from_config(fixture_pipeline_config(run_dir), 2, false).unwrap();
    stages::cmd_ingest(&ctx).unwrap();
    stages::cmd_build_instructions(&ctx).unwrap();
    stages::cmd_gen_dialogues(&ctx).unwrap();
    stages::cmd_localize(&ctx).unwrap();
    stages::cmd_assemble(&ctx).unwrap();
    read_dataset(&run_dir.join("dataset.jsonl")).unwrap()
}

#[test]
fn criterion_5_end_to_end_replay_determinism() {
    let started = std::time::Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let first_dir = dir.path().join("first");
    let second_dir = dir.path().join("second");

    let sessions = run_fixture_pipeline(&first_dir);
    run_fixture_pipeline(&second_dir);

    let first = std::fs::read(first_dir.join("dataset.jsonl")).unwrap();
    let second = std::fs::read(second_dir.join("dataset.jsonl")).unwrap();
    assert_eq!(first, second, "dataset files must be byte-identical across runs");
    assert!(!sessions.is_empty());

    for session in &sessions {
        let report = stepdial_core::validate(&session.conversation, &session.instruction_set);
        assert!(report.is_valid(), "{}: {report}", session.session_id);
        // Step-turn bijection: kind=step ordinals equal 1..=n in order.
        let ordinals: Vec<u32> = session
            .conversation
            .turns
            .iter()
            .filter(|t| t.kind == TurnKind::Step)
            .map(|t| t.step_ordinal.unwrap())
            .collect();
        let expected: Vec<u32> = (1..=session.instruction_set.steps.len() as u32).collect();
        assert_eq!(ordinals, expected, "{}", session.session_id);
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "end-to-end run took {elapsed:?}");
    println!("ACCEPTANCE 5 end-to-end-replay-determinism: PASS ({elapsed:?})");
}

#[test]
fn criterion_6_error_mode_structure() {
    let dir = tempfile::tempdir().unwrap();
    let sessions = run_fixture_pipeline(dir.path());

    let error_sessions: Vec<&Session> = sessions
        .iter()
        .filter(|s| s.action_type == ActionType::Error)
        .collect();
    assert!(!error_sessions.is_empty(), "fixture must include error sessions");
    for session in &error_sessions {
        let error_turns: Vec<&DialogueTurn> = session
            .conversation
            .turns
            .iter()
            .filter(|t| t.kind == TurnKind::ErrorReport)
            .collect();
        assert!(!error_turns.is_empty(), "{} has no error_report turn", session.session_id);
        assert!(error_turns.iter().all(|t| !t.expert_text.trim().is_empty()));
    }
    for session in sessions.iter().filter(|s| s.action_type == ActionType::Follow) {
        assert!(
            !session.conversation.turns.iter().any(|t| t.kind == TurnKind::ErrorReport),
            "{} is follow-mode but contains an error report",
            session.session_id
        );
    }
    println!("ACCEPTANCE 6 error-mode-structure: PASS");
}

#[test]
fn criterion_7_style_separation() {
    let dir = tempfile::tempdir().unwrap();
    let sessions = run_fixture_pipeline(dir.path());
    let report = stepdial_core::compute_stats(&sessions);
    let concise = report.user_words.get("concise_follow").expect("concise sessions");
    let regular = report.user_words.get("regular_follow").expect("regular sessions");
    assert!(
        concise.mean < regular.mean,
        "concise mean {} must be below regular mean {}",
        concise.mean,
        regular.mean
    );
    println!(
        "ACCEPTANCE 7 style-separation (concise {:.2} < regular {:.2} words): PASS",
        concise.mean, regular.mean
    );
}

#[test]
fn criterion_8_aggregation_recomposition() {
    let dir = tempfile::tempdir().unwrap();
    let sessions = run_fixture_pipeline(dir.path());
    let fixtures = fixtures_dir();

    let templates = TemplateStore::builtin();
    let client = LlmClient::replay_from_path(&fixtures.join("cassettes/eval.jsonl")).unwrap();
    let llm = LlmContext {
        client: &client,
        templates: &templates,
        options: ChatOptions::inference("mock-model"),
    };
    let (predictions, failures) = run_inference(&sessions, PromptMode::HintOnly, &llm);
    assert!(failures.is_empty(), "replay inference must not fail: {failures:?}");

    let mut records = score_predictions(&predictions, &sessions).unwrap();
    let judge_client = LlmClient::replay_from_path(&fixtures.join("cassettes/judge.jsonl")).unwrap();
    let judge_llm = LlmContext {
        client: &judge_client,
        templates: &templates,
        options: ChatOptions::inference("mock-judge"),
    };
    let judge_failures = judge_predictions(&mut records, &predictions, &sessions, &judge_llm);
    assert!(judge_failures.is_empty(), "replay judging must not fail: {judge_failures:?}");

    let tables = aggregate(&records, &predictions, &sessions).unwrap();
    let overall = &tables.overall;
    for groups in [&tables.per_task, &tables.per_category] {
        let count: u64 = groups.values().map(|m| m.count).sum();
        assert_eq!(count, overall.count);
        let recompose = |f: fn(&stepdial_core::eval::MetricMeans) -> f64| {
            groups.values().map(|m| f(m) * m.count as f64).sum::<f64>() / count as f64
        };
        assert!(close(recompose(|m| m.bleu), overall.bleu));
        assert!(close(recompose(|m| m.rouge1), overall.rouge1));
        assert!(close(recompose(|m| m.rouge2), overall.rouge2));
        assert!(close(recompose(|m| m.rouge_l), overall.rouge_l));
        let judged: u64 = groups.values().map(|m| m.judge_count).sum();
        let judge_sum: f64 = groups
            .values()
            .filter_map(|m| m.judge.map(|j| j * m.judge_count as f64))
            .sum();
        assert_eq!(judged, overall.judge_count);
        assert!(close(judge_sum / judged as f64, overall.judge.unwrap()));
    }
    let turn_count: u64 = tables.per_turn.values().map(|m| m.count).sum();
    assert_eq!(turn_count, overall.count);
    let turn_rouge: f64 = tables
        .per_turn
        .values()
        .map(|m| m.rouge_l * m.count as f64)
        .sum::<f64>()
        / turn_count as f64;
    assert!(close(turn_rouge, overall.rouge_l));

    // Matches the published observation: unigram overlap dominates bigram
    // overlap on every corpus this harness produces.
    assert!(overall.rouge1 >= overall.rouge2);
    println!("ACCEPTANCE 8 aggregation-recomposition: PASS");
}

#[test]
fn criterion_9_live_run_mode_is_wired() {
    // The headline benchmark values from the source corpus are not
    // reproducible here (they need the original dataset and model weights);
    // instead the live-run path must be wired and documented so users with
    // access can produce the same report tables.
    assert_eq!(BackendKind::parse("live"), Some(BackendKind::Live));

    // Without endpoint configuration the live path must fail with a clear
    // configuration error, not a network attempt.
    std::env::remove_var(stepdial_core::llm::ENDPOINT_ENV);
    let err = match stages::build_client(BackendKind::Live, None, 4, 0, 5) {
        Err(e) => e,
        Ok(_) => panic!("live client must not construct without an endpoint"),
    };
    assert!(
        err.to_string().contains(stepdial_core::llm::ENDPOINT_ENV),
        "error should name the endpoint variable: {err:#}"
    );

    // With an endpoint configured, the client constructs without touching
    // the network; report emission is covered by criterion 8 on replay.
    std::env::set_var(stepdial_core::llm::ENDPOINT_ENV, "http://localhost:9/v1/chat");
    let client = stages::build_client(BackendKind::Live, None, 4, 0, 5);
    std::env::remove_var(stepdial_core::llm::ENDPOINT_ENV);
    assert!(client.is_ok());

    // The shipped run manifest parses and accepts a live override.
    let mut run = EvalRunConfig::load(&fixtures_dir().join("eval_run.toml")).unwrap();
    run.backend = BackendKind::Live;
    assert_eq!(run.prompt_mode().unwrap(), PromptMode::HintOnly);
    println!("ACCEPTANCE 9 live-run-mode-wired (paper-scale values documented as out of desk reach): PASS");
}
