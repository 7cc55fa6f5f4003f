//! Sentence records, search-result merging and target-mention filtering.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::GatewayError;
use crate::llm::{Completion, LlmSettings, PurposeTag};
use crate::profile::CelebrityProfile;
use crate::text::contains_alias;

/// Default number of result pages collected per celebrity.
pub const DEFAULT_PAGE_LIMIT: usize = 20;
/// Sentences beyond this index in one document are dropped.
pub const MAX_SENTENCES_PER_DOC: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MentionMethod {
    AliasMatch,
    LlmConfirmed,
    Rejected,
}

/// A segmented sentence before mention filtering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceDraft {
    pub doc_url: String,
    pub doc_rank: u32,
    pub sentence_index: u32,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub doc_url: String,
    pub doc_rank: u32,
    pub sentence_index: u32,
    pub text: String,
    pub mentions_target: bool,
    pub mention_method: MentionMethod,
}

impl SentenceRecord {
    /// Canonical ordering key: search rank, then position in the document.
    pub fn order_key(&self) -> (u32, u32) {
        (self.doc_rank, self.sentence_index)
    }

    fn from_draft(d: &SentenceDraft, method: MentionMethod) -> Self {
        Self {
            doc_url: d.doc_url.clone(),
            doc_rank: d.doc_rank,
            sentence_index: d.sentence_index,
            text: d.text.clone(),
            mentions_target: method != MentionMethod::Rejected,
            mention_method: method,
        }
    }
}

/// Merge per-alias ranked result lists into one list of at most `limit`
/// distinct URLs.
///
/// Results are ordered by their rank within their own list, ties broken by
/// alias order; a URL seen more than once keeps its best position.
pub fn merge_ranked(per_alias: &[Vec<String>], limit: usize) -> Vec<String> {
    let mut entries: Vec<(usize, usize, &String)> = Vec::new();
    for (alias_idx, list) in per_alias.iter().enumerate() {
        for (rank, url) in list.iter().enumerate() {
            entries.push((rank, alias_idx, url));
        }
    }
    entries.sort_by_key(|&(rank, alias, _)| (rank, alias));
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (_, _, url) in entries {
        if out.len() >= limit {
            break;
        }
        if seen.insert(url.as_str()) {
            out.push(url.clone());
        }
    }
    out
}

/// A document whose confirmation calls failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchFailure {
    pub doc_url: String,
    pub rejected: usize,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MentionOutcome {
    /// Every input sentence, ordered by `(doc_rank, sentence_index)`.
    pub records: Vec<SentenceRecord>,
    pub failures: Vec<BatchFailure>,
    /// Provider (transport) errors encountered; callers abort the run on these.
    pub provider_errors: Vec<GatewayError>,
}

impl MentionOutcome {
    pub fn kept(&self) -> impl Iterator<Item = &SentenceRecord> {
        self.records.iter().filter(|r| r.mentions_target)
    }
}

const MENTION_SYSTEM: &str = "You check whether a sentence taken from a Japanese web page \
refers to a specific person, either by name or indirectly (pronoun, title, nickname). \
Answer with exactly one word: yes or no.";

/// Keep sentences that mention the target.
///
/// A sentence containing any query alias is kept outright. A sentence
/// without an alias but adjacent to one that has it is sent to the model
/// together with its neighbours; a "yes" keeps it. Everything else is
/// rejected. Each document is one batch: a gateway error rejects the
/// document's remaining candidates and is reported in `failures`.
pub fn filter_mentions<C: Completion + ?Sized>(
    drafts: &[SentenceDraft],
    profile: &CelebrityProfile,
    llm: &C,
    settings: &LlmSettings,
) -> MentionOutcome {
    let mut sorted: Vec<&SentenceDraft> = drafts.iter().collect();
    sorted.sort_by(|a, b| (a.doc_rank, &a.doc_url, a.sentence_index).cmp(&(b.doc_rank, &b.doc_url, b.sentence_index)));

    let mut outcome = MentionOutcome::default();
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && sorted[end].doc_url == sorted[start].doc_url {
            end += 1;
        }
        filter_document(&sorted[start..end], profile, llm, settings, &mut outcome);
        start = end;
    }
    outcome
}

fn filter_document<C: Completion + ?Sized>(
    doc: &[&SentenceDraft],
    profile: &CelebrityProfile,
    llm: &C,
    settings: &LlmSettings,
    outcome: &mut MentionOutcome,
) {
    let alias_hit: Vec<bool> =
        doc.iter().map(|d| profile.query_aliases.iter().any(|a| contains_alias(&d.text, a))).collect();
    let mut failed: Option<GatewayError> = None;
    let mut rejected_by_failure = 0;

    for (i, draft) in doc.iter().enumerate() {
        let method = if alias_hit[i] {
            MentionMethod::AliasMatch
        } else {
            let near_alias = (i > 0 && alias_hit[i - 1]) || alias_hit.get(i + 1).copied().unwrap_or(false);
            if !near_alias {
                MentionMethod::Rejected
            } else if failed.is_some() {
                rejected_by_failure += 1;
                MentionMethod::Rejected
            } else {
                let prev = i.checked_sub(1).map(|j| doc[j].text.as_str());
                let next = doc.get(i + 1).map(|d| d.text.as_str());
                let request = settings.request(
                    PurposeTag::MentionFilter,
                    MENTION_SYSTEM.into(),
                    mention_prompt(&profile.canonical_name, prev, &draft.text, next),
                    Vec::new(),
                );
                match llm.complete(&request) {
                    Ok(resp) if is_yes(&resp.text) => MentionMethod::LlmConfirmed,
                    Ok(_) => MentionMethod::Rejected,
                    Err(e) => {
                        if matches!(e, GatewayError::Provider(_)) {
                            outcome.provider_errors.push(e.clone());
                        }
                        failed = Some(e);
                        rejected_by_failure += 1;
                        MentionMethod::Rejected
                    }
                }
            }
        };
        outcome.records.push(SentenceRecord::from_draft(draft, method));
    }
    if let Some(e) = failed {
        outcome.failures.push(BatchFailure {
            doc_url: doc[0].doc_url.clone(),
            rejected: rejected_by_failure,
            error: format!("{e}"),
        });
    }
}

fn mention_prompt(name: &str, prev: Option<&str>, sentence: &str, next: Option<&str>) -> String {
    format!(
        "Target person: {name}\n\
         Previous sentence: {}\n\
         Sentence: {sentence}\n\
         Next sentence: {}\n\
         Does the sentence refer to {name}? Answer yes or no.",
        prev.unwrap_or("(none)"),
        next.unwrap_or("(none)"),
    )
}

fn is_yes(text: &str) -> bool {
    let t = text.trim().to_lowercase();
    let t = t.trim_start_matches(|c: char| !c.is_alphanumeric());
    t.starts_with("yes") || t.starts_with("はい")
}
