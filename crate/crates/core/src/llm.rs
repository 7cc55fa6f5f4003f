//! Prompt requests, their canonical digest, and the completion port every
//! pipeline stage talks to.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::GatewayError;

pub const DEFAULT_MODEL: &str = "gpt-4o";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PurposeTag {
    MentionFilter,
    Categorize,
    NameAspect,
    Aggregate,
    JudgeStage1,
    JudgeStage2,
    JudgeCelebrity,
}

impl PurposeTag {
    pub fn as_str(self) -> &'static str {
        match self {
            PurposeTag::MentionFilter => "mention_filter",
            PurposeTag::Categorize => "categorize",
            PurposeTag::NameAspect => "name_aspect",
            PurposeTag::Aggregate => "aggregate",
            PurposeTag::JudgeStage1 => "judge_stage1",
            PurposeTag::JudgeStage2 => "judge_stage2",
            PurposeTag::JudgeCelebrity => "judge_celebrity",
        }
    }
}

/// One labelled demonstration shown to the model before the real input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExamplePair {
    pub input_text: String,
    pub label_text: String,
}

/// A single completion request. `examples` is empty exactly in zero-shot use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRequest {
    pub system_text: String,
    pub user_text: String,
    pub examples: Vec<ExamplePair>,
    pub temperature: f64,
    pub model_id: String,
    pub purpose_tag: PurposeTag,
}

/// Model and sampling settings shared by every request of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmSettings {
    pub model_id: String,
    pub temperature: f64,
}

impl Default for LlmSettings {
    fn default() -> Self {
        Self { model_id: DEFAULT_MODEL.into(), temperature: 0.0 }
    }
}

impl LlmSettings {
    pub fn request(
        &self,
        purpose_tag: PurposeTag,
        system_text: String,
        user_text: String,
        examples: Vec<ExamplePair>,
    ) -> PromptRequest {
        PromptRequest {
            system_text,
            user_text,
            examples,
            temperature: self.temperature,
            model_id: self.model_id.clone(),
            purpose_tag,
        }
    }
}

impl PromptRequest {
    pub fn digest(&self) -> String {
        canonical_digest(self)
    }
}

/// Lowercase hex SHA-256 over a length-prefixed serialization of every field
/// in a fixed order. Text is hashed byte-exact; temperature by its bit pattern.
pub fn canonical_digest(request: &PromptRequest) -> String {
    fn field(h: &mut Sha256, bytes: &[u8]) {
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    let mut h = Sha256::new();
    field(&mut h, b"repute-prompt-v1");
    field(&mut h, request.model_id.as_bytes());
    field(&mut h, request.purpose_tag.as_str().as_bytes());
    field(&mut h, &request.temperature.to_bits().to_le_bytes());
    field(&mut h, request.system_text.as_bytes());
    field(&mut h, request.user_text.as_bytes());
    h.update((request.examples.len() as u64).to_le_bytes());
    for ex in &request.examples {
        field(&mut h, ex.input_text.as_bytes());
        field(&mut h, ex.label_text.as_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseSource {
    Live,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub text: String,
    pub source: ResponseSource,
    pub request_digest: String,
}

/// Anything that can answer a [`PromptRequest`].
///
/// Implementations must be shareable across pipeline workers.
pub trait Completion: Send + Sync {
    fn complete(&self, request: &PromptRequest) -> Result<LlmResponse, GatewayError>;
}

impl<T: Completion + ?Sized> Completion for &T {
    fn complete(&self, request: &PromptRequest) -> Result<LlmResponse, GatewayError> {
        (**self).complete(request)
    }
}

impl<T: Completion + ?Sized> Completion for alloc::boxed::Box<T> {
    fn complete(&self, request: &PromptRequest) -> Result<LlmResponse, GatewayError> {
        (**self).complete(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn request() -> PromptRequest {
        LlmSettings::default().request(
            PurposeTag::JudgeStage1,
            "system".into(),
            "user".into(),
            vec![
                ExamplePair { input_text: "a".into(), label_text: "evil".into() },
                ExamplePair { input_text: "b".into(), label_text: "not particularly evil".into() },
            ],
        )
    }

    #[test]
    fn digest_is_deterministic() {
        assert_eq!(canonical_digest(&request()), canonical_digest(&request()));
        let d = canonical_digest(&request());
        assert_eq!(d.len(), 64);
        assert!(d.chars().all(|c| c.is_ascii_hexdigit() && !c.is_ascii_uppercase()));
    }

    #[test]
    fn digest_sensitive_to_temperature() {
        let mut other = request();
        other.temperature = 0.7;
        assert_ne!(canonical_digest(&request()), canonical_digest(&other));
    }

    #[test]
    fn digest_sensitive_to_example_order() {
        let base = request();
        let mut perms = vec![base.clone()];
        let mut swapped = base.clone();
        swapped.examples.reverse();
        perms.push(swapped);
        let digests: Vec<String> = perms.iter().map(canonical_digest).collect();
        for i in 0..digests.len() {
            for j in (i + 1)..digests.len() {
                assert_ne!(digests[i], digests[j]);
            }
        }
    }

    #[test]
    fn field_boundaries_matter() {
        let mut a = request();
        a.system_text = "ab".to_string();
        a.user_text = "c".to_string();
        let mut b = request();
        b.system_text = "a".to_string();
        b.user_text = "bc".to_string();
        assert_ne!(canonical_digest(&a), canonical_digest(&b));
    }
}
