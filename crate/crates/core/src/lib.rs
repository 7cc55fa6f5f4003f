//! Core of the `repute` pipeline: collecting mentions of a person, grouping
//! them into named aspects, judging each aspect (and the person) on a
//! four-class good/evil scale, and scoring all of it against references.
//!
//! This crate is `no_std` and only needs `alloc`. Every model call goes
//! through the [`llm::Completion`] trait, so the algorithms here never touch
//! the network or the filesystem; the `repute` crate supplies the gateway,
//! corpus IO, reports and CLI.

#![no_std]

extern crate alloc;

pub mod aspects;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod judgment;
pub mod label;
pub mod llm;
pub mod profile;
pub mod text;

pub use aspects::{AspectCluster, AspectSet};
pub use corpus::{MentionMethod, SentenceRecord};
pub use error::{AspectError, EvalError, GatewayError, JudgmentError, ParseError};
pub use judgment::{FewShotExample, Judge, JudgmentMode, JudgmentResult, Subject};
pub use label::{parse_label, GoodEvilLabel, LabelTable, ParsedLabel, Stage};
pub use llm::{canonical_digest, Completion, LlmResponse, LlmSettings, PromptRequest, PurposeTag, ResponseSource};
pub use profile::{CelebrityProfile, Cohort, ScandalDate};
