//! Rule-driven provider for demos and fixture generation.
//!
//! Rules are tried in order; the first whose purpose matches and whose
//! needles all occur in the system or user text supplies the reply.

use std::path::Path;

use serde::{Deserialize, Serialize};

use repute_core::{PromptRequest, PurposeTag};

use crate::files::{read_json, FileError};
use crate::gateway::{Provider, ProviderError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purpose: Option<PurposeTag>,
    #[serde(default)]
    pub contains: Vec<String>,
    pub response: String,
}

impl ScriptRule {
    fn matches(&self, request: &PromptRequest) -> bool {
        if self.purpose.is_some_and(|p| p != request.purpose_tag) {
            return false;
        }
        self.contains.iter().all(|n| request.user_text.contains(n.as_str()) || request.system_text.contains(n.as_str()))
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScriptedProvider {
    pub rules: Vec<ScriptRule>,
}

impl ScriptedProvider {
    pub fn load(path: &Path) -> Result<Self, FileError> {
        Ok(Self { rules: read_json(path)? })
    }
}

impl Provider for ScriptedProvider {
    fn send(&self, request: &PromptRequest) -> Result<String, ProviderError> {
        self.rules
            .iter()
            .find(|r| r.matches(request))
            .map(|r| r.response.clone())
            .ok_or_else(|| ProviderError::fatal(format!("no script rule for {} request", request.purpose_tag.as_str())))
    }
}
