//! The four-class good/evil taxonomy and response parsing.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ParseError;

/// Reputation class of a subject.
///
/// `NotParticularlyEvil` is the only "good" value; the other three refine
/// "evil" and are only reachable through the second judgment stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoodEvilLabel {
    Illegal,
    LegalButUnethical,
    LegalEthicalButUnpopularAndCriticized,
    NotParticularlyEvil,
}

impl GoodEvilLabel {
    /// Canonical matrix/report order: the three evil refinements, then not evil.
    pub const ALL: [GoodEvilLabel; 4] = [
        GoodEvilLabel::Illegal,
        GoodEvilLabel::LegalButUnethical,
        GoodEvilLabel::LegalEthicalButUnpopularAndCriticized,
        GoodEvilLabel::NotParticularlyEvil,
    ];

    pub const EVIL: [GoodEvilLabel; 3] = [
        GoodEvilLabel::Illegal,
        GoodEvilLabel::LegalButUnethical,
        GoodEvilLabel::LegalEthicalButUnpopularAndCriticized,
    ];

    pub fn is_evil(self) -> bool {
        self != GoodEvilLabel::NotParticularlyEvil
    }

    pub fn index(self) -> usize {
        match self {
            GoodEvilLabel::Illegal => 0,
            GoodEvilLabel::LegalButUnethical => 1,
            GoodEvilLabel::LegalEthicalButUnpopularAndCriticized => 2,
            GoodEvilLabel::NotParticularlyEvil => 3,
        }
    }

    /// English display string, as used in prompts and reports.
    pub fn as_str(self) -> &'static str {
        match self {
            GoodEvilLabel::Illegal => "illegal",
            GoodEvilLabel::LegalButUnethical => "legal but unethical",
            GoodEvilLabel::LegalEthicalButUnpopularAndCriticized => "legal and ethical but unpopular and criticized",
            GoodEvilLabel::NotParticularlyEvil => "not particularly evil",
        }
    }

    /// Definition given to the model in every stage-two prompt.
    pub fn definition(self) -> &'static str {
        match self {
            GoodEvilLabel::Illegal => "a person who clearly violates a law",
            GoodEvilLabel::LegalButUnethical => {
                "a person who does not violate any law but says or does something \
                 ethically problematic and is criticized by the public"
            }
            GoodEvilLabel::LegalEthicalButUnpopularAndCriticized => {
                "a person who does nothing particularly evil but has a poor reputation among others"
            }
            GoodEvilLabel::NotParticularlyEvil => "a person who does nothing evil",
        }
    }

    /// Label of the first stage: "evil" or "not particularly evil".
    pub fn stage1_str(self) -> &'static str {
        if self.is_evil() {
            "evil"
        } else {
            "not particularly evil"
        }
    }
}

impl fmt::Display for GoodEvilLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Stage1,
    Stage2,
}

/// Outcome of [`parse_label`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParsedLabel {
    /// Stage one verdict: `true` means evil.
    Evil(bool),
    Label(GoodEvilLabel),
}

/// Surface strings accepted for each answer, per stage.
///
/// Loaded from config when the defaults do not fit a deployment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelTable {
    pub evil: Vec<String>,
    pub not_evil: Vec<String>,
    pub illegal: Vec<String>,
    pub legal_but_unethical: Vec<String>,
    pub legal_ethical_but_unpopular: Vec<String>,
}

impl Default for LabelTable {
    fn default() -> Self {
        fn strings(items: &[&str]) -> Vec<String> {
            items.iter().map(|s| s.to_string()).collect()
        }
        Self {
            evil: strings(&["evil", "悪"]),
            not_evil: strings(&["not particularly evil", "特に悪ではない"]),
            illegal: strings(&["illegal", "違法"]),
            legal_but_unethical: strings(&["legal but unethical", "合法だが非倫理的"]),
            legal_ethical_but_unpopular: strings(&[
                "legal and ethical but unpopular and criticized",
                "合法かつ倫理的だが不人気で批判されている",
            ]),
        }
    }
}

impl LabelTable {
    fn candidates(&self, stage: Stage) -> Vec<(ParsedLabel, &str)> {
        let groups: Vec<(ParsedLabel, &Vec<String>)> = match stage {
            Stage::Stage1 => vec![(ParsedLabel::Evil(true), &self.evil), (ParsedLabel::Evil(false), &self.not_evil)],
            Stage::Stage2 => vec![
                (ParsedLabel::Label(GoodEvilLabel::Illegal), &self.illegal),
                (ParsedLabel::Label(GoodEvilLabel::LegalButUnethical), &self.legal_but_unethical),
                (
                    ParsedLabel::Label(GoodEvilLabel::LegalEthicalButUnpopularAndCriticized),
                    &self.legal_ethical_but_unpopular,
                ),
            ],
        };
        groups.into_iter().flat_map(|(value, list)| list.iter().map(move |s| (value, s.as_str()))).collect()
    }

    /// Find the single label mentioned in `text`.
    ///
    /// Longer surface strings are matched first and masked so that
    /// "not particularly evil" never also counts as "evil". ASCII
    /// patterns must sit on word boundaries ("illegal" does not contain a
    /// match for "legal ...").
    pub fn parse(&self, text: &str, stage: Stage) -> Result<ParsedLabel, ParseError> {
        let mut haystack: Vec<char> = text.to_lowercase().chars().collect();
        let mut candidates = self.candidates(stage);
        candidates.sort_by_key(|(_, s)| core::cmp::Reverse(s.chars().count()));

        let mut found: Vec<ParsedLabel> = Vec::new();
        for (value, surface) in candidates {
            let needle: Vec<char> = surface.to_lowercase().chars().collect();
            if needle.is_empty() {
                continue;
            }
            let ascii = needle.iter().all(|c| c.is_ascii());
            let mut i = 0;
            while i + needle.len() <= haystack.len() {
                if haystack[i..i + needle.len()] == needle[..]
                    && (!ascii || on_word_boundary(&haystack, i, needle.len()))
                {
                    if !found.contains(&value) {
                        found.push(value);
                    }
                    for c in &mut haystack[i..i + needle.len()] {
                        *c = '\u{0}';
                    }
                    i += needle.len();
                } else {
                    i += 1;
                }
            }
        }
        match found.len() {
            1 => Ok(found[0]),
            0 => Err(ParseError::NoLabel),
            _ => Err(ParseError::AmbiguousLabel),
        }
    }
}

fn on_word_boundary(hay: &[char], start: usize, len: usize) -> bool {
    let before = start.checked_sub(1).map(|i| hay[i]);
    let after = hay.get(start + len).copied();
    let is_word = |c: Option<char>| c.is_some_and(|c| c.is_ascii_alphanumeric());
    !is_word(before) && !is_word(after)
}

/// Parse a model response using the default English/Japanese table.
pub fn parse_label(text: &str, stage: Stage) -> Result<ParsedLabel, ParseError> {
    LabelTable::default().parse(text, stage)
}

/// Every surface string of the default table, grouped by stage.
pub fn default_surfaces(stage: Stage) -> Vec<(ParsedLabel, String)> {
    let table = LabelTable::default();
    table.candidates(stage).into_iter().map(|(v, s)| (v, s.to_string())).collect()
}
