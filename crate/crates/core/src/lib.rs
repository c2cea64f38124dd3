//! Model-agnostic machinery for long-form diarization and transcription.
//!
//! The crate is `no_std` and only needs an allocator. Everything that touches
//! files, processes or the clock lives in the `diarkit` companion crate; here
//! we keep the pieces that are pure functions of their inputs:
//!
//! * [`segment`]: speaker segments, annotations and transcripts in canonical order.
//! * [`postprocess`]: short-segment removal, same-speaker gap merging, A-B-A collapse.
//! * [`der`] / [`wer`]: error-rate scoring, with [`assignment`] providing the
//!   optimal speaker mapping.
//! * [`text`]: normalization and word/phrase/letter repetition cleanup.
//! * [`chunk`]: greedy planning of bounded-length decoding windows.
//! * [`protocol`], [`pipeline`], [`fixture`]: the backend message types, the
//!   two-pass and long-form drivers over a [`pipeline::Backend`], and the
//!   fixture-driven mock backend logic.
//! * [`digest`] / [`sweep`]: canonical parameter hashing and the staged
//!   threshold / post-processing search.

#![no_std]

extern crate alloc;

pub mod assignment;
pub mod chunk;
pub mod der;
pub mod digest;
pub mod fixture;
pub mod pipeline;
pub mod postprocess;
pub mod protocol;
pub mod segment;
pub mod sweep;
pub mod text;
pub mod wer;

pub use der::{score_der, DerBreakdown, DerOptions};
pub use postprocess::{apply_postprocess, PostprocessParams};
pub use segment::{Annotation, Segment, SegmentError, Transcript, TranscriptEntry};
pub use text::{clean_transcript, normalize, DedupParams, NormalizationProfile};
pub use wer::{score_wer, WerBreakdown};
