//! Property tests for the spec-level invariants that hold over arbitrary
//! inputs: parse/serialize stability, fingerprint behavior, split
//! partitioning, metric ranges, and statistics invariance.

use proptest::prelude::*;

use stepdial_core::dataset::{compute_stats, stratified_split, Session, SplitRatios};
use stepdial_core::dialogue::{ActionType, Conversation, DialogueTurn, SpeechStyle, TurnKind};
use stepdial_core::ingest::{
    annotations_to_csv, parse_step_annotation_file, parse_subtitle_file, subtitles_to_srt,
    subtitles_to_vtt, ErrorLabel, StepAnnotation, SubtitleEntry, SubtitleFormat,
};
use stepdial_core::instruction::{InstructionSet, InstructionStep, Provenance};
use stepdial_core::llm::PromptRequest;
use stepdial_core::time::TimeSpan;

fn cue_text() -> impl Strategy<Value = String> {
    proptest::collection::vec("[a-z]{1,8}", 1..6).prop_map(|words| words.join(" "))
}

prop_compose! {
    fn subtitle_entries()(
        raw in proptest::collection::vec((0u32..3_600_000, 1u32..120_000, cue_text()), 1..12)
    ) -> Vec<SubtitleEntry> {
        let mut sorted = raw;
        sorted.sort_by_key(|(start, _, _)| *start);
        sorted
            .into_iter()
            .enumerate()
            .map(|(i, (start_ms, dur_ms, text))| SubtitleEntry {
                index: i as u32 + 1,
                text,
                span: TimeSpan::new(start_ms as f64 / 1000.0, (start_ms + dur_ms) as f64 / 1000.0)
                    .unwrap(),
            })
            .collect()
    }
}

proptest! {
    #[test]
    fn srt_round_trip_is_stable(entries in subtitle_entries()) {
        let rendered = subtitles_to_srt(&entries);
        let parsed = parse_subtitle_file(rendered.as_bytes(), SubtitleFormat::Srt).unwrap();
        prop_assert_eq!(&parsed, &entries);
        // Parse(serialize(parse(x))) = parse(x): a second cycle changes nothing.
        let again = parse_subtitle_file(subtitles_to_srt(&parsed).as_bytes(), SubtitleFormat::Srt).unwrap();
        prop_assert_eq!(again, parsed);
    }

    #[test]
    fn vtt_round_trip_is_stable(entries in subtitle_entries()) {
        let rendered = subtitles_to_vtt(&entries);
        let parsed = parse_subtitle_file(rendered.as_bytes(), SubtitleFormat::Vtt).unwrap();
        prop_assert_eq!(parsed, entries);
    }
}

prop_compose! {
    fn annotations()(
        raw in proptest::collection::vec(
            (0u32..600_000, 1u32..60_000, "[a-z]{2,10}( [a-z,]{1,8}){0,3}", 0usize..7),
            1..10
        )
    ) -> Vec<StepAnnotation> {
        let labels = [
            None,
            Some(ErrorLabel::Normal),
            Some(ErrorLabel::Omission),
            Some(ErrorLabel::Addition),
            Some(ErrorLabel::Modification),
            Some(ErrorLabel::Slip),
            Some(ErrorLabel::Correction),
        ];
        let mut sorted = raw;
        sorted.sort_by_key(|(start, _, _, _)| *start);
        sorted
            .into_iter()
            .map(|(start_ms, dur_ms, description, label)| StepAnnotation {
                description,
                span: TimeSpan::new(start_ms as f64 / 1000.0, (start_ms + dur_ms) as f64 / 1000.0)
                    .unwrap(),
                error_label: labels[label],
            })
            .collect()
    }
}

proptest! {
    #[test]
    fn annotation_csv_round_trip_is_stable(rows in annotations()) {
        let rendered = annotations_to_csv(&rows);
        let parsed = parse_step_annotation_file(rendered.as_bytes()).unwrap();
        prop_assert_eq!(parsed, rows);
    }
}

prop_compose! {
    fn prompt_request()(
        model in "[a-z0-9-]{1,12}",
        system in "[ -~]{1,40}",
        user in "[ -~]{1,40}",
        temperature in 0.0f64..4.0,
        max_tokens in 1u32..4096,
    ) -> PromptRequest {
        PromptRequest {
            model_id: model,
            system_text: system,
            user_text: user,
            temperature,
            max_output_tokens: max_tokens,
        }
    }
}

proptest! {
    #[test]
    fn fingerprint_is_stable_and_field_sensitive(request in prompt_request()) {
        let baseline = request.fingerprint();
        prop_assert_eq!(&baseline, &request.clone().fingerprint());

        let mut changed = request.clone();
        changed.user_text.push('x');
        prop_assert_ne!(&baseline, &changed.fingerprint());

        let mut changed = request.clone();
        changed.max_output_tokens += 1;
        prop_assert_ne!(&baseline, &changed.fingerprint());

        let original_temperature = request.temperature;
        let mut changed = request;
        changed.temperature = (changed.temperature + 0.25).min(4.0);
        if changed.temperature != original_temperature {
            prop_assert_ne!(baseline, changed.fingerprint());
        }
    }
}

fn quick_session(recording: usize, task: usize, style: SpeechStyle, action: ActionType) -> Session {
    let task = format!("task-{task}");
    let recording_id = format!("rec-{recording}");
    let step = |ordinal: u32| InstructionStep {
        ordinal,
        text: format!("Step {ordinal}."),
        span: Some(TimeSpan::new(ordinal as f64, ordinal as f64 + 0.5).unwrap()),
        is_correction: false,
        source_refs: vec![ordinal],
        caveats: Vec::new(),
    };
    let turn = |index: u32, kind: TurnKind, ordinal: Option<u32>| DialogueTurn {
        index,
        kind,
        user_text: format!("user line {index} words here"),
        expert_text: format!("expert line {index}"),
        span: Some(TimeSpan::new(index as f64, index as f64 + 1.5).unwrap()),
        step_ordinal: ordinal,
    };
    Session {
        session_id: stepdial_core::session_id(&recording_id, style, action),
        task: task.clone(),
        style,
        action_type: action,
        split: None,
        source_recording_id: recording_id.clone(),
        instruction_set: InstructionSet {
            task: task.clone(),
            recording_id,
            provenance: Provenance::AnnotationMerge,
            steps: vec![step(1), step(2)],
        },
        conversation: Conversation {
            task,
            style,
            action_type: action,
            source_recording_id: "r".into(),
            turns: vec![
                turn(1, TurnKind::TaskInit, None),
                turn(2, TurnKind::Step, Some(1)),
                turn(3, TurnKind::Step, Some(2)),
                turn(4, TurnKind::Closing, None),
            ],
        },
    }
}

prop_compose! {
    fn session_corpus()(
        shape in proptest::collection::vec((0usize..4, 0usize..2, 0usize..2), 1..60)
    ) -> Vec<Session> {
        shape
            .into_iter()
            .enumerate()
            .map(|(i, (task, style, action))| {
                quick_session(
                    i,
                    task,
                    if style == 0 { SpeechStyle::Concise } else { SpeechStyle::Regular },
                    if action == 0 { ActionType::Follow } else { ActionType::Error },
                )
            })
            .collect()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_partitions_and_stays_within_one_of_exact(sessions in session_corpus(), seed in 0u64..1000) {
        let assignment = stratified_split(&sessions, SplitRatios::PAPER_DEFAULT, seed).unwrap();
        prop_assert_eq!(assignment.assignments.len(), sessions.len());
        for session in &sessions {
            prop_assert!(assignment.assignments.contains_key(&session.session_id));
        }

        // Per-stratum deviation from the exact quota is below one session.
        let mut strata: std::collections::BTreeMap<_, Vec<&Session>> = Default::default();
        for session in &sessions {
            strata.entry(session.stratum()).or_default().push(session);
        }
        for members in strata.values() {
            let n = members.len() as f64;
            let mut counts = [0f64; 3];
            for member in members {
                match assignment.assignments[&member.session_id] {
                    stepdial_core::Split::Train => counts[0] += 1.0,
                    stepdial_core::Split::Val => counts[1] += 1.0,
                    stepdial_core::Split::Test => counts[2] += 1.0,
                }
            }
            prop_assert!((counts[0] - 0.7 * n).abs() < 1.0);
            prop_assert!((counts[1] - 0.1 * n).abs() < 1.0);
            prop_assert!((counts[2] - 0.2 * n).abs() < 1.0);
            if members.len() >= 3 {
                prop_assert!(counts[2] >= 1.0, "strata of 3+ keep a test session");
            }
        }
    }

    #[test]
    fn split_ignores_input_order(sessions in session_corpus(), seed in 0u64..1000) {
        let forward = stratified_split(&sessions, SplitRatios::PAPER_DEFAULT, seed).unwrap();
        let mut reversed = sessions;
        reversed.reverse();
        let backward = stratified_split(&reversed, SplitRatios::PAPER_DEFAULT, seed).unwrap();
        prop_assert_eq!(forward, backward);
    }

    #[test]
    fn stats_are_order_invariant(sessions in session_corpus()) {
        let forward = compute_stats(&sessions);
        let mut shuffled = sessions;
        let pivot = shuffled.len() / 2;
        shuffled.rotate_left(pivot);
        shuffled.reverse();
        let backward = compute_stats(&shuffled);
        prop_assert_eq!(forward, backward);
    }
}

proptest! {
    #[test]
    fn metric_values_stay_in_unit_range(
        candidate in proptest::collection::vec("[a-z]{1,6}", 0..15).prop_map(|w| w.join(" ")),
        reference in proptest::collection::vec("[a-z]{1,6}", 0..15).prop_map(|w| w.join(" ")),
    ) {
        let smoothed = stepdial_core::eval::sentence_bleu_smoothed(&candidate, &reference);
        prop_assert!((0.0..=1.0).contains(&smoothed));
        for n in [1usize, 2, 3] {
            let prf = stepdial_core::eval::rouge_n(&candidate, &reference, n);
            for v in [prf.precision, prf.recall, prf.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
        let l = stepdial_core::eval::rouge_l(&candidate, &reference);
        prop_assert!((0.0..=1.0).contains(&l.f1));
    }
}
