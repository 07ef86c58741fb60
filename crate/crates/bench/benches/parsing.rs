//! Benchmarks for the hot parsing and splitting paths.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use stepdial_core::dataset::{stratified_split, Session, SplitRatios};
use stepdial_core::dialogue::{ActionType, Conversation, DialogueTurn, SpeechStyle, TurnKind};
use stepdial_core::ingest::{parse_step_annotation_file, parse_subtitle_file, SubtitleFormat};
use stepdial_core::instruction::{InstructionSet, InstructionStep, Provenance};
use stepdial_core::time::TimeSpan;

fn srt_document(cues: usize) -> String {
    let mut out = String::new();
    for i in 0..cues {
        let start_ms = i as u64 * 4000;
        let end_ms = start_ms + 3500;
        out.push_str(&format!(
            "{}\n{} --> {}\nnarration line number {} with a few more words\n\n",
            i + 1,
            timecode(start_ms),
            timecode(end_ms),
            i + 1
        ));
    }
    out
}

fn timecode(ms: u64) -> String {
    format!(
        "{:02}:{:02}:{:02},{:03}",
        ms / 3_600_000,
        (ms % 3_600_000) / 60_000,
        (ms % 60_000) / 1000,
        ms % 1000
    )
}

fn bench_subtitles(c: &mut Criterion) {
    let mut group = c.benchmark_group("parse_srt");
    for &cues in &[50usize, 500] {
        let document = srt_document(cues);
        group.bench_with_input(BenchmarkId::from_parameter(cues), &cues, |b, _| {
            b.iter(|| parse_subtitle_file(black_box(document.as_bytes()), SubtitleFormat::Srt).unwrap())
        });
    }
    group.finish();
}

fn bench_annotations(c: &mut Criterion) {
    let mut csv = String::from("start_s,end_s,description,error_label\n");
    for i in 0..200 {
        csv.push_str(&format!("{}.0,{}.5,perform fine grained action {i},normal\n", i * 3, i * 3 + 2));
    }
    c.bench_function("parse_annotations_200rows", |b| {
        b.iter(|| parse_step_annotation_file(black_box(csv.as_bytes())).unwrap())
    });
}

fn corpus(n: usize) -> Vec<Session> {
    let tasks = ["tea", "coffee", "oatmeal", "tire"];
    (0..n)
        .map(|i| {
            let task = tasks[i % tasks.len()].to_string();
            let style = if i % 3 == 0 { SpeechStyle::Concise } else { SpeechStyle::Regular };
            let recording_id = format!("rec-{i}");
            Session {
                session_id: stepdial_core::session_id(&recording_id, style, ActionType::Follow),
                task: task.clone(),
                style,
                action_type: ActionType::Follow,
                split: None,
                source_recording_id: recording_id.clone(),
                instruction_set: InstructionSet {
                    task: task.clone(),
                    recording_id,
                    provenance: Provenance::AnnotationMerge,
                    steps: vec![
                        InstructionStep {
                            ordinal: 1,
                            text: "Step 1.".into(),
                            span: None,
                            is_correction: false,
                            source_refs: vec![1],
                            caveats: Vec::new(),
                        },
                        InstructionStep {
                            ordinal: 2,
                            text: "Step 2.".into(),
                            span: None,
                            is_correction: false,
                            source_refs: vec![2],
                            caveats: Vec::new(),
                        },
                    ],
                },
                conversation: Conversation {
                    task,
                    style,
                    action_type: ActionType::Follow,
                    source_recording_id: "r".into(),
                    turns: vec![DialogueTurn {
                        index: 1,
                        kind: TurnKind::TaskInit,
                        user_text: "hi".into(),
                        expert_text: "hello".into(),
                        span: Some(TimeSpan::new(0.0, 2.0).unwrap()),
                        step_ordinal: None,
                    }],
                },
            }
        })
        .collect()
}

fn bench_split(c: &mut Criterion) {
    let sessions = corpus(507);
    c.bench_function("stratified_split_507", |b| {
        b.iter(|| stratified_split(black_box(&sessions), SplitRatios::PAPER_DEFAULT, 7).unwrap())
    });
}

criterion_group!(benches, bench_subtitles, bench_annotations, bench_split);
criterion_main!(benches);
