//! RTTM and the JSON segment/transcript files.
//!
//! Writers are deterministic: keys in a fixed order, numbers in shortest
//! decimal form. RTTM carries milliseconds; segment JSON carries at most six
//! decimals unless written with [`Precision::Full`].

use std::fmt::Write as _;

use diarkit_core::segment::check_interval;
use diarkit_core::{Annotation, Segment, SegmentError, Transcript, TranscriptEntry};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RttmError {
    #[error("line {line}: expected 10 fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: {field} {value:?} is not a number")]
    NotANumber {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: {source}")]
    Segment { line: usize, source: SegmentError },
}

impl RttmError {
    pub fn line(&self) -> usize {
        match self {
            Self::FieldCount { line, .. } | Self::NotANumber { line, .. } | Self::Segment { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RttmDocument {
    /// One per recording, in order of first appearance.
    pub annotations: Vec<Annotation>,
    /// Non-blank lines of a type other than SPEAKER.
    pub skipped_lines: usize,
}

pub fn parse_rttm(input: &str) -> Result<RttmDocument, RttmError> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: std::collections::HashMap<String, Vec<Segment>> = std::collections::HashMap::new();
    let mut skipped_lines = 0;
    for (i, raw) in input.lines().enumerate() {
        let line = i + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        match fields.first() {
            None => continue,
            Some(&"SPEAKER") => {}
            Some(_) => {
                skipped_lines += 1;
                continue;
            }
        }
        if fields.len() != 10 {
            return Err(RttmError::FieldCount {
                line,
                found: fields.len(),
            });
        }
        let number = |field: &'static str, value: &str| {
            value.parse::<f64>().map_err(|_| RttmError::NotANumber {
                line,
                field,
                value: value.to_string(),
            })
        };
        let onset = number("onset", fields[3])?;
        let duration = number("duration", fields[4])?;
        let segment =
            Segment::new(onset, onset + duration, fields[7]).map_err(|source| RttmError::Segment { line, source })?;
        let id = fields[1];
        if !groups.contains_key(id) {
            order.push(id.to_string());
        }
        groups.entry(id.to_string()).or_default().push(segment);
    }
    let annotations = order
        .into_iter()
        .map(|id| {
            let segs = groups.remove(&id).unwrap_or_default();
            Annotation::new(id, segs)
        })
        .collect();
    Ok(RttmDocument {
        annotations,
        skipped_lines,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WriteError {
    #[error("recording id {0:?} cannot be written as a single RTTM field")]
    RecordingId(String),
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// One SPEAKER line per segment. Duration is the difference of the rounded
/// endpoints, so a re-parse reproduces both rounded endpoints.
pub fn write_rttm<'a, I>(annotations: I) -> Result<String, WriteError>
where
    I: IntoIterator<Item = &'a Annotation>,
{
    let mut out = String::new();
    for ann in annotations {
        let id = ann.recording_id();
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(WriteError::RecordingId(id.to_string()));
        }
        for s in ann.segments() {
            let onset = round3(s.start());
            let duration = round3(s.end()) - onset;
            let _ = writeln!(
                out,
                "SPEAKER {id} 1 {onset:.3} {duration:.3} <NA> <NA> {} <NA> <NA>",
                s.speaker()
            );
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}{message}", index.map(|i| format!("element {i}: ")).unwrap_or_default())]
pub struct JsonFormatError {
    /// Array position of the offending element, when one is to blame.
    pub index: Option<usize>,
    pub message: String,
}

impl JsonFormatError {
    fn top(message: impl Into<String>) -> Self {
        Self {
            index: None,
            message: message.into(),
        }
    }

    fn at(index: usize, message: impl Into<String>) -> Self {
        Self {
            index: Some(index),
            message: message.into(),
        }
    }
}

fn parse_document<'a>(
    input: &str,
    array_key: &str,
    doc: &'a mut Value,
) -> Result<(String, &'a [Value]), JsonFormatError> {
    *doc = serde_json::from_str(input).map_err(|e| JsonFormatError::top(e.to_string()))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| JsonFormatError::top("top level is not an object"))?;
    let id = obj
        .get("recording_id")
        .ok_or_else(|| JsonFormatError::top("missing key \"recording_id\""))?
        .as_str()
        .ok_or_else(|| JsonFormatError::top("\"recording_id\" is not a string"))?
        .to_string();
    let items = obj
        .get(array_key)
        .ok_or_else(|| JsonFormatError::top(format!("missing key {array_key:?}")))?
        .as_array()
        .ok_or_else(|| JsonFormatError::top(format!("{array_key:?} is not an array")))?;
    Ok((id, items.as_slice()))
}

fn number_field(item: &serde_json::Map<String, Value>, i: usize, key: &str) -> Result<f64, JsonFormatError> {
    item.get(key)
        .ok_or_else(|| JsonFormatError::at(i, format!("missing key {key:?}")))?
        .as_f64()
        .ok_or_else(|| JsonFormatError::at(i, format!("{key:?} is not a number")))
}

fn string_field<'a>(item: &'a serde_json::Map<String, Value>, i: usize, key: &str) -> Result<&'a str, JsonFormatError> {
    item.get(key)
        .ok_or_else(|| JsonFormatError::at(i, format!("missing key {key:?}")))?
        .as_str()
        .ok_or_else(|| JsonFormatError::at(i, format!("{key:?} is not a string")))
}

pub fn parse_segments_json(input: &str) -> Result<Annotation, JsonFormatError> {
    let mut doc = Value::Null;
    let (id, items) = parse_document(input, "segments", &mut doc)?;
    let mut segments = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let item = item
            .as_object()
            .ok_or_else(|| JsonFormatError::at(i, "not an object"))?;
        let start = number_field(item, i, "start")?;
        let end = number_field(item, i, "end")?;
        let speaker = string_field(item, i, "speaker")?;
        segments.push(Segment::new(start, end, speaker).map_err(|e| JsonFormatError::at(i, e.to_string()))?);
    }
    Ok(Annotation::new(id, segments))
}

pub fn parse_transcript_json(input: &str) -> Result<Transcript, JsonFormatError> {
    let mut doc = Value::Null;
    let (id, items) = parse_document(input, "entries", &mut doc)?;
    let mut entries = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let item = item
            .as_object()
            .ok_or_else(|| JsonFormatError::at(i, "not an object"))?;
        let entry = TranscriptEntry {
            start: number_field(item, i, "start")?,
            end: number_field(item, i, "end")?,
            text: string_field(item, i, "text")?.to_string(),
        };
        check_interval(entry.start, entry.end).map_err(|e| JsonFormatError::at(i, e.to_string()))?;
        entries.push(entry);
    }
    Transcript::new(id, entries).map_err(|e| JsonFormatError::top(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    /// Rounded to six decimals.
    #[default]
    Micro,
    /// Shortest form that reads back as the identical `f64`.
    Full,
}

/// Plain decimal without exponent; integral values carry no fraction.
pub fn format_number(x: f64, precision: Precision) -> String {
    let x = match precision {
        Precision::Micro => (x * 1e6).round() / 1e6,
        Precision::Full => x,
    };
    // -0 prints as 0
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x}")
}

fn push_string(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("strings always serialize"));
}

/// `{"recording_id":..,"segments":[{"start":..,"end":..,"speaker":..},..]}`
/// on one line, newline-terminated.
pub fn write_segments_json(annotation: &Annotation, precision: Precision) -> String {
    let mut out = String::from("{\"recording_id\":");
    push_string(&mut out, annotation.recording_id());
    out.push_str(",\"segments\":[");
    for (i, s) in annotation.segments().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(
            out,
            "{{\"start\":{},\"end\":{},\"speaker\":",
            format_number(s.start(), precision),
            format_number(s.end(), precision)
        );
        push_string(&mut out, s.speaker());
        out.push('}');
    }
    out.push_str("]}\n");
    out
}

pub fn write_transcript_json(transcript: &Transcript) -> String {
    let mut out = String::from("{\"recording_id\":");
    push_string(&mut out, transcript.recording_id());
    out.push_str(",\"entries\":[");
    for (i, e) in transcript.entries().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(
            out,
            "{{\"start\":{},\"end\":{},\"text\":",
            format_number(e.start, Precision::Micro),
            format_number(e.end, Precision::Micro)
        );
        push_string(&mut out, &e.text);
        out.push('}');
    }
    out.push_str("]}\n");
    out
}
