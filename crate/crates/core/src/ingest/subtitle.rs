//! SubRip (.srt) and WebVTT (.vtt) transcript parsing.
//!
//! Both formats reduce to the same cue model: a time span plus narration
//! text. Timestamps land as fractional seconds at millisecond precision;
//! SRT's comma separator and VTT's dot are both accepted for either format.

use once_cell::sync::Lazy;
use regex::Regex;

use super::{IngestError, SubtitleEntry};
use crate::time::{round_ms, TimeSpan};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubtitleFormat {
    Srt,
    Vtt,
}

impl SubtitleFormat {
    /// Picks the format from a file extension.
    pub fn from_path(path: &std::path::Path) -> Option<SubtitleFormat> {
        match path.extension()?.to_str()? {
            "srt" => Some(SubtitleFormat::Srt),
            "vtt" => Some(SubtitleFormat::Vtt),
            _ => None,
        }
    }
}

static TIMING_LINE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"^\s*([0-9:.,]+)\s*-->\s*([0-9:.,]+)(\s+.*)?$").unwrap()
});
static TAG: Lazy<Regex> = Lazy::new(|| Regex::new(r"<[^>]*>|\{[^}]*\}").unwrap());

/// Parses one `HH:MM:SS,mmm` / `HH:MM:SS.mmm` / `MM:SS.mmm` time code into
/// seconds.
fn parse_timecode(code: &str) -> Option<f64> {
    let code = code.trim();
    let (clock, frac) = match code.split_once(|c| c == ',' || c == '.') {
        Some((clock, frac)) => (clock, frac),
        None => (code, "0"),
    };
    if frac.is_empty() || frac.len() > 3 || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let millis: u64 = format!("{:0<3}", frac).parse().ok()?;
    let parts: Vec<&str> = clock.split(':').collect();
    let (h, m, s): (u64, u64, u64) = match parts.as_slice() {
        [h, m, s] => (h.parse().ok()?, m.parse().ok()?, s.parse().ok()?),
        [m, s] => (0, m.parse().ok()?, s.parse().ok()?),
        _ => return None,
    };
    if m >= 60 || s >= 60 {
        return None;
    }
    Some(round_ms((h * 3600 + m * 60 + s) as f64 + millis as f64 / 1000.0))
}

fn strip_markup(line: &str) -> String {
    TAG.replace_all(line, "").trim().to_string()
}

/// Parses a subtitle file into cues sorted by start time and renumbered
/// consecutively from 1. Multi-line cue text is joined with single spaces and
/// styling tags are stripped; cues left with empty text are dropped.
pub fn parse_subtitle_file(
    content: &[u8],
    format: SubtitleFormat,
) -> Result<Vec<SubtitleEntry>, IngestError> {
    let text = decode_utf8(content)?;
    let mut cues: Vec<(f64, f64, String)> = Vec::new();

    let lines: Vec<&str> = text.lines().collect();
    let mut i = 0;

    if format == SubtitleFormat::Vtt {
        // Header line plus any metadata until the first blank line.
        if lines.first().is_some_and(|l| l.trim_start().starts_with("WEBVTT")) {
            while i < lines.len() && !lines[i].trim().is_empty() {
                i += 1;
            }
        }
    }

    while i < lines.len() {
        if lines[i].trim().is_empty() {
            i += 1;
            continue;
        }
        // VTT comment/styling blocks are skipped wholesale.
        if format == SubtitleFormat::Vtt {
            let head = lines[i].trim_start();
            if head.starts_with("NOTE") || head.starts_with("STYLE") || head.starts_with("REGION") {
                while i < lines.len() && !lines[i].trim().is_empty() {
                    i += 1;
                }
                continue;
            }
        }

        // Optional cue identifier (SRT counter or VTT cue id) before the
        // timing line.
        let mut timing_idx = i;
        if !lines[i].contains("-->") {
            timing_idx = i + 1;
            if timing_idx >= lines.len() || !lines[timing_idx].contains("-->") {
                return Err(IngestError::MalformedTimestamp {
                    line: i + 1,
                    content: lines[i].to_string(),
                });
            }
        }

        let caps = TIMING_LINE.captures(lines[timing_idx]).ok_or_else(|| {
            IngestError::MalformedTimestamp {
                line: timing_idx + 1,
                content: lines[timing_idx].to_string(),
            }
        })?;
        let bad_timestamp = || IngestError::MalformedTimestamp {
            line: timing_idx + 1,
            content: lines[timing_idx].to_string(),
        };
        let start = parse_timecode(&caps[1]).ok_or_else(bad_timestamp)?;
        let end = parse_timecode(&caps[2]).ok_or_else(bad_timestamp)?;
        if TimeSpan::new(start, end).is_err() {
            return Err(bad_timestamp());
        }

        let mut parts: Vec<String> = Vec::new();
        i = timing_idx + 1;
        while i < lines.len() && !lines[i].trim().is_empty() {
            let cleaned = strip_markup(lines[i]);
            if !cleaned.is_empty() {
                parts.push(cleaned);
            }
            i += 1;
        }
        let joined = parts.join(" ");
        if !joined.is_empty() {
            cues.push((start, end, joined));
        }
    }

    if cues.is_empty() {
        return Err(IngestError::EmptyTranscript);
    }

    cues.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(cues
        .into_iter()
        .enumerate()
        .map(|(idx, (start, end, text))| SubtitleEntry {
            index: idx as u32 + 1,
            text,
            span: TimeSpan { start_s: start, end_s: end },
        })
        .collect())
}

fn decode_utf8(content: &[u8]) -> Result<&str, IngestError> {
    let content = content.strip_prefix(b"\xef\xbb\xbf").unwrap_or(content);
    std::str::from_utf8(content).map_err(|_| IngestError::InvalidEncoding)
}

fn format_timecode(seconds: f64, separator: char) -> String {
    let total_ms = (seconds * 1000.0).round() as u64;
    let h = total_ms / 3_600_000;
    let m = (total_ms % 3_600_000) / 60_000;
    let s = (total_ms % 60_000) / 1000;
    let ms = total_ms % 1000;
    format!("{h:02}:{m:02}:{s:02}{separator}{ms:03}")
}

pub fn subtitles_to_srt(entries: &[SubtitleEntry]) -> String {
    let mut out = String::new();
    for entry in entries {
        out.push_str(&format!(
            "{}\n{} --> {}\n{}\n\n",
            entry.index,
            format_timecode(entry.span.start_s, ','),
            format_timecode(entry.span.end_s, ','),
            entry.text
        ));
    }
    out
}

pub fn subtitles_to_vtt(entries: &[SubtitleEntry]) -> String {
    let mut out = String::from("WEBVTT\n\n");
    for entry in entries {
        out.push_str(&format!(
            "{} --> {}\n{}\n\n",
            format_timecode(entry.span.start_s, '.'),
            format_timecode(entry.span.end_s, '.'),
            entry.text
        ));
    }
    out
}
