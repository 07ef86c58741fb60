//! A deterministic, rule-based stand-in for a chat-completion endpoint.
//!
//! It answers every pipeline prompt with schema-valid output derived purely
//! from the request text, so full pipeline and benchmark runs work offline
//! and cassettes can be (re)recorded reproducibly. It is a mock: the prose
//! is formulaic, but every structural contract the parsers rely on holds.

use once_cell::sync::Lazy;
use regex::Regex;
use serde_json::Value;

use super::{Endpoint, Transport, TransportError};

pub struct ScriptedTransport;

impl Default for ScriptedTransport {
    fn default() -> Self {
        ScriptedTransport
    }
}

impl ScriptedTransport {
    pub fn new() -> Self {
        ScriptedTransport
    }
}

impl Transport for ScriptedTransport {
    fn post_chat(&self, _endpoint: &Endpoint, body: &Value) -> Result<String, TransportError> {
        let system = message_content(body, 0);
        let user = message_content(body, 1);
        let text = respond(&system, &user);
        Ok(serde_json::json!({
            "choices": [{"message": {"content": text}, "finish_reason": "stop"}]
        })
        .to_string())
    }
}

fn message_content(body: &Value, index: usize) -> String {
    body.pointer(&format!("/messages/{index}/content"))
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string()
}

fn respond(system: &str, user: &str) -> String {
    if system.starts_with("You convert instructional-video narration") {
        extract_steps(user)
    } else if system.starts_with("You rewrite raw step annotations") {
        rewrite_steps(user)
    } else if system.starts_with("You group consecutive step annotations") {
        cluster_pairs(user)
    } else if system.starts_with("You write training dialogues") {
        write_dialogue(user)
    } else if system.starts_with("You are an expert assistant guiding a user") {
        assist(system, user)
    } else if system.starts_with("You grade a candidate expert response") {
        grade(user)
    } else {
        "OK.".to_string()
    }
}

// --- shared text helpers -------------------------------------------------

const FILLERS: &[&str] = &[
    "now", "so", "first", "next", "then", "okay", "ok", "alright", "well", "and", "we", "we're",
    "were", "you", "you're", "i", "i'm", "i'll", "let's", "lets", "just", "going", "gonna", "want",
    "need", "to", "will", "start", "by", "simply",
];

const CAVEAT_CUES: &[&str] = &["make sure", "be careful", "remember", "important", "careful not"];

fn captured(user: &str, pattern: &str) -> String {
    Regex::new(pattern)
        .unwrap()
        .captures(user)
        .and_then(|c| c.get(1))
        .map(|m| m.as_str().trim().to_string())
        .unwrap_or_default()
}

/// Turns a narration clause into a short imperative sentence by peeling
/// leading filler words.
fn imperativize(clause: &str) -> String {
    let mut words: Vec<&str> = clause.split_whitespace().collect();
    while words.len() > 2 {
        let head = words[0]
            .trim_matches(|c: char| c.is_ascii_punctuation())
            .to_lowercase();
        if FILLERS.contains(&head.as_str()) {
            words.remove(0);
        } else {
            break;
        }
    }
    let mut text = words.join(" ");
    text = text.trim_end_matches(['.', ',', ';', ' ']).to_string();
    let mut chars = text.chars();
    let capitalized = match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => return String::new(),
    };
    format!("{capitalized}.")
}

fn is_caveat(clause: &str) -> bool {
    let lower = clause.to_lowercase();
    CAVEAT_CUES.iter().any(|cue| lower.contains(cue))
}

fn content_tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.trim_matches(|c: char| c.is_ascii_punctuation())
                .to_lowercase()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

// --- instruction extraction ----------------------------------------------

static CUE_LINE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?m)^(\d+)\. \[[0-9.]+-[0-9.]+\] (.+)$").unwrap());

/// One step per narration clause, carrying its source cue index; caveat
/// clauses become note lines under the step they follow.
fn extract_steps(user: &str) -> String {
    let mut out: Vec<String> = Vec::new();
    let mut ordinal = 0usize;
    for caps in CUE_LINE.captures_iter(user) {
        let cue_index = &caps[1];
        let narration = &caps[2];
        for clause in split_clauses(narration) {
            if is_caveat(&clause) && ordinal > 0 {
                out.push(format!("   - note: {}", imperativize(&clause)));
            } else {
                ordinal += 1;
                out.push(format!(
                    "{ordinal}. {} [cues: {cue_index}]",
                    imperativize(&clause)
                ));
            }
        }
    }
    out.join("\n")
}

fn split_clauses(narration: &str) -> Vec<String> {
    let mut pieces = vec![narration.to_string()];
    for separator in [" and then ", " then ", "; "] {
        pieces = pieces
            .into_iter()
            .flat_map(|p| {
                p.split(separator)
                    .map(str::to_string)
                    .collect::<Vec<String>>()
            })
            .collect();
    }
    pieces
        .into_iter()
        .map(|p| p.trim().to_string())
        .filter(|p| !p.is_empty())
        .collect()
}

// --- annotation rewriting -------------------------------------------------

static NUMBERED_LINE: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?m)^(\d+)\. (.+)$").unwrap());

fn rewrite_steps(user: &str) -> String {
    let section = user.split("Raw annotated steps:").nth(1).unwrap_or(user);
    NUMBERED_LINE
        .captures_iter(section)
        .map(|caps| format!("{}. {}", &caps[1], imperativize(&caps[2])))
        .collect::<Vec<_>>()
        .join("\n")
}

// --- adjacency clustering -------------------------------------------------

static PAIR_LINE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?m)^(\d+)\) (.+) \|\|\| (.+)$").unwrap());

const CLUSTER_STOPWORDS: &[&str] = &[
    "the", "with", "into", "onto", "from", "your", "then", "and", "this", "that", "them", "some",
];

/// Two annotations are the same sub-task when they share a content word.
fn cluster_pairs(user: &str) -> String {
    PAIR_LINE
        .captures_iter(user)
        .map(|caps| {
            let left = content_tokens(&caps[2]);
            let right = content_tokens(&caps[3]);
            let shared = left.iter().any(|w| {
                w.len() >= 4 && !CLUSTER_STOPWORDS.contains(&w.as_str()) && right.contains(w)
            });
            format!("{}: {}", &caps[1], if shared { "yes" } else { "no" })
        })
        .collect::<Vec<_>>()
        .join("\n")
}

// --- dialogue generation --------------------------------------------------

struct ScriptStep {
    ordinal: usize,
    text: String,
    corrective: bool,
}

fn write_dialogue(user: &str) -> String {
    let task = captured(user, r"(?m)^Task: (.+)$");
    let token = captured(user, r"lines starting with (\S+) are corrective");
    let concise = user.contains("terse");

    let steps = parse_prompt_steps(user, &token);
    let mut lines: Vec<String> = Vec::new();

    let user_init = if concise {
        format!("Teach me {task}. #init")
    } else {
        format!("Hi! I've never done this before — can you walk me through {task}? #init")
    };
    lines.push(format!("USER: {user_init}"));
    lines.push(format!(
        "EXPERT: Of course! We'll work through {task} together in {} steps. Tell me when you're ready and we'll begin.",
        steps.len()
    ));

    for step in &steps {
        if step.corrective {
            let deed = step.text.trim_end_matches('.').to_lowercase();
            lines.push(format!(
                "USER: I think I slipped up on my side — what I actually did was: {deed}. #error={}",
                step.ordinal
            ));
            lines.push(
                "EXPERT: Thanks for telling me — that's a common slip. Let's put it right before we move on."
                    .to_string(),
            );
        }
        lines.push(format!("USER: {} #step={}", next_request(concise, step.ordinal), step.ordinal));
        let coda = if step.corrective {
            "That puts us back on track."
        } else {
            "Take your time and tell me once you're done."
        };
        lines.push(format!("EXPERT: Step {}: {} {coda}", step.ordinal, step.text));
    }

    let user_done = if concise {
        "All done. Thanks! #done".to_string()
    } else {
        "That was everything, I think. Thanks so much for walking me through it! #done".to_string()
    };
    lines.push(format!("USER: {user_done}"));
    lines.push(format!(
        "EXPERT: You're welcome! You've completed every step of {task}. Great work!"
    ));
    lines.join("\n")
}

fn parse_prompt_steps(user: &str, token: &str) -> Vec<ScriptStep> {
    let section = user
        .split("Instruction steps, in order")
        .nth(1)
        .unwrap_or(user)
        .split("Write the full conversation")
        .next()
        .unwrap_or("");
    let mut steps = Vec::new();
    for raw in section.lines() {
        let raw = raw.trim();
        let (corrective, rest) = if !token.is_empty() && raw.starts_with(token) {
            (true, raw[token.len()..].trim_start())
        } else {
            (false, raw)
        };
        if let Some(caps) = Regex::new(r"^(\d+)\. (.+)$").unwrap().captures(rest) {
            steps.push(ScriptStep {
                ordinal: caps[1].parse().unwrap_or(0),
                text: caps[2].trim().to_string(),
                corrective,
            });
        }
    }
    steps
}

fn next_request(concise: bool, ordinal: usize) -> String {
    if concise {
        const VARIANTS: [&str; 4] = [
            "Done. What's next?",
            "Okay, next step?",
            "Finished. Now what?",
            "Ready. Keep going?",
        ];
        VARIANTS[ordinal % VARIANTS.len()].to_string()
    } else {
        const VARIANTS: [&str; 4] = [
            "Alright, I've finished that one. What should I do next?",
            "That step is done now. Could you tell me what's next?",
            "Okay, that part worked out fine. What comes after this one?",
            "I believe I'm done with that. What's the next step here?",
        ];
        VARIANTS[ordinal % VARIANTS.len()].to_string()
    }
}

// --- benchmark inference ---------------------------------------------------

fn assist(system: &str, user: &str) -> String {
    let task = captured(system, r"Task: ([^.]+)\.");
    let turn = user.lines().filter(|l| l.starts_with("User: ")).count();
    let steps: Vec<String> = system
        .split("Instruction steps for this task:")
        .nth(1)
        .map(|section| {
            NUMBERED_LINE
                .captures_iter(section)
                .map(|caps| caps[2].trim().to_string())
                .collect()
        })
        .unwrap_or_default();

    if turn <= 1 {
        return format!(
            "Happy to help! We'll go through {task} one step at a time — tell me when you're ready."
        );
    }
    if steps.is_empty() {
        return format!(
            "Let's keep going with {task}. Take the next action carefully and tell me once it's done."
        );
    }
    match steps.get(turn - 2) {
        Some(step) => format!("Step {}: {step} Let me know when you're done.", turn - 1),
        None => format!("That was the last step — you've finished {task}. Well done!"),
    }
}

// --- judging ----------------------------------------------------------------

fn grade(user: &str) -> String {
    let reference = between(user, "Reference expert response:", "Candidate response:");
    let candidate = between(user, "Candidate response:", "Rate how well")
        .split("Your previous answer")
        .next()
        .unwrap_or_default()
        .to_string();

    let ref_tokens: std::collections::BTreeSet<String> =
        content_tokens(&reference).into_iter().collect();
    let cand_tokens: std::collections::BTreeSet<String> =
        content_tokens(&candidate).into_iter().collect();
    let shared = ref_tokens.intersection(&cand_tokens).count();
    let total = ref_tokens.len().max(1);
    let overlap = shared as f64 / total as f64;
    let score = (1.0 + (overlap * 4.0).round()).clamp(1.0, 5.0) as u8;
    format!(
        "The candidate covers {shared} of {total} reference content words, so it tracks the reference {}.\nScore: {score}",
        if overlap > 0.6 { "closely" } else { "loosely" }
    )
}

fn between(text: &str, start: &str, end: &str) -> String {
    text.split(start)
        .nth(1)
        .and_then(|rest| rest.split(end).next())
        .unwrap_or_default()
        .trim()
        .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn imperativize_peels_fillers() {
        assert_eq!(imperativize("first we gather the tools"), "Gather the tools.");
        assert_eq!(
            imperativize("now you want to place the tea bag in the mug"),
            "Place the tea bag in the mug."
        );
    }

    #[test]
    fn extraction_splits_compound_narration() {
        let user = "Task: making tea\n\nTranscript cues (index. [start-end] narration):\n1. [0.0-5.0] boil water then pour into cup\n";
        let out = extract_steps(user);
        assert!(out.contains("1. Boil water. [cues: 1]"));
        assert!(out.contains("2. Pour into cup. [cues: 1]"));
    }

    #[test]
    fn extraction_files_caveats_under_previous_step() {
        let user = "1. [0.0-5.0] pour the water slowly\n2. [5.0-9.0] make sure the water is fully boiling\n";
        let out = extract_steps(user);
        assert!(out.contains("- note:"));
        assert_eq!(out.lines().filter(|l| l.starts_with(char::is_numeric)).count(), 1);
    }

    #[test]
    fn dialogue_script_covers_all_steps_in_order() {
        let user = "Task: making oatmeal\n\nInstruction steps, in order (lines starting with [[CORRECTION]] are corrective steps that fix a user mistake):\n1. Boil the water.\n[[CORRECTION]] 2. Pour sugar instead of honey.\n3. Stir the bowl.\n\nWrite the full conversation as a strict script";
        let script = write_dialogue(user);
        assert!(script.contains("#init"));
        assert!(script.contains("#step=1"));
        assert!(script.contains("#error=2"));
        assert!(script.contains("#step=2"));
        assert!(script.contains("#step=3"));
        assert!(script.contains("#done"));
        assert!(script.contains("pour sugar instead of honey"));
    }

    #[test]
    fn assist_teaches_listed_steps_in_sequence() {
        let system = "You are an expert assistant guiding a user through a hands-on task, one step at a time. Task: making tea. Respond.\n\nInstruction steps for this task:\n1. Boil the water.\n2. Steep the bag.\n";
        let history = "User: hi\nExpert: welcome\nUser: next please\n";
        let out = assist(system, history);
        assert!(out.contains("Boil the water."));
    }

    #[test]
    fn grade_emits_parseable_score_line() {
        let user = "Task: t\n\nConversation so far:\nUser: hm\n\nReference expert response:\nstir the pot gently\n\nCandidate response:\nstir the pot gently\n\nRate how well";
        let out = grade(user);
        assert!(out.trim_end().ends_with("Score: 5"));
    }
}
