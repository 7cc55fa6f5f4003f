//! Reference sets, system-to-reference mappings, and recall/precision.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::aspects::AspectSet;
use crate::error::EvalError;
use crate::eval::ratio::{MacroAverage, Ratio};
use crate::label::GoodEvilLabel;
use crate::text::normalize_aspect_name;

/// Token Dice threshold for [`auto_assist_match`].
pub const AUTO_MATCH_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceItem {
    #[serde(rename = "aspect")]
    pub aspect_name: String,
    #[serde(default)]
    pub description: String,
    #[serde(rename = "label", default, skip_serializing_if = "Option::is_none")]
    pub reference_label: Option<GoodEvilLabel>,
}

/// Human-curated aspects and descriptions for one celebrity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceSet {
    #[serde(default)]
    pub celebrity: String,
    #[serde(default)]
    pub items: Vec<ReferenceItem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub celebrity_label: Option<GoodEvilLabel>,
}

impl ReferenceSet {
    pub fn find(&self, name: &str) -> Option<&ReferenceItem> {
        let key = normalize_aspect_name(name);
        self.items.iter().find(|i| normalize_aspect_name(&i.aspect_name) == key)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Human,
    AutoAssist,
}

/// Matched (system aspect, reference aspect) pairs, identified by name.
///
/// Matching is a partial bijection: each side appears in at most one pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchMapping {
    pub pairs: Vec<(String, String)>,
    pub provenance: Provenance,
}

impl MatchMapping {
    pub fn human(pairs: Vec<(String, String)>) -> Self {
        Self { pairs, provenance: Provenance::Human }
    }

    /// Reference aspect matched to a system aspect, if any.
    pub fn reference_for(&self, system_name: &str) -> Option<&str> {
        let key = normalize_aspect_name(system_name);
        self.pairs.iter().find(|(s, _)| normalize_aspect_name(s) == key).map(|(_, r)| r.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CelebrityMetrics {
    pub name: String,
    pub recall: Ratio,
    pub precision: Ratio,
}

/// Check that `mapping` only names items that exist on each side and never
/// uses an item twice. Names are compared after normalization.
pub fn validate_mapping(
    reference_names: &[&str],
    system_names: &[&str],
    mapping: &MatchMapping,
) -> Result<(), EvalError> {
    let refs: BTreeSet<String> = reference_names.iter().map(|n| normalize_aspect_name(n)).collect();
    let sys: BTreeSet<String> = system_names.iter().map(|n| normalize_aspect_name(n)).collect();
    let mut used_sys = BTreeSet::new();
    let mut used_ref = BTreeSet::new();
    for (s, r) in &mapping.pairs {
        let (s, r) = (normalize_aspect_name(s), normalize_aspect_name(r));
        if !sys.contains(&s) {
            return Err(EvalError::InvalidMapping(format!("unknown system item {s:?}")));
        }
        if !refs.contains(&r) {
            return Err(EvalError::InvalidMapping(format!("unknown reference item {r:?}")));
        }
        if !used_sys.insert(s.clone()) {
            return Err(EvalError::InvalidMapping(format!("system item {s:?} used twice")));
        }
        if !used_ref.insert(r.clone()) {
            return Err(EvalError::InvalidMapping(format!("reference item {r:?} used twice")));
        }
    }
    Ok(())
}

/// Recall = matched / |reference|, precision = matched / |system|, where
/// matched is the number of mapping pairs.
pub fn recall_precision_for_names(
    celebrity: &str,
    reference_names: &[&str],
    system_names: &[&str],
    mapping: &MatchMapping,
) -> Result<CelebrityMetrics, EvalError> {
    validate_mapping(reference_names, system_names, mapping)?;
    let matched = mapping.pairs.len() as u32;
    Ok(CelebrityMetrics {
        name: celebrity.into(),
        recall: Ratio::new(matched, reference_names.len() as u32),
        precision: Ratio::new(matched, system_names.len() as u32),
    })
}

pub fn compute_recall_precision(
    reference: &ReferenceSet,
    system: &AspectSet,
    mapping: &MatchMapping,
) -> Result<CelebrityMetrics, EvalError> {
    let r: Vec<&str> = reference.items.iter().map(|i| i.aspect_name.as_str()).collect();
    let s: Vec<&str> = system.clusters.iter().map(|c| c.aspect_name.as_str()).collect();
    recall_precision_for_names(&system.celebrity, &r, &s, mapping)
}

/// Unweighted mean of the rows' two-place decimals, for recall and for
/// precision.
pub fn macro_average(rows: &[CelebrityMetrics]) -> Result<(MacroAverage, MacroAverage), EvalError> {
    if rows.is_empty() {
        return Err(EvalError::NoRows);
    }
    Ok((MacroAverage::of(rows.iter().map(|r| &r.recall)), MacroAverage::of(rows.iter().map(|r| &r.precision))))
}

/// Word tokens of a normalized name; words outside ASCII contribute
/// character bigrams instead, since Japanese names carry no spaces.
fn tokens(name: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for word in normalize_aspect_name(name).split_whitespace() {
        if word.is_ascii() {
            out.insert(String::from(word));
            continue;
        }
        let chars: Vec<char> = word.chars().collect();
        if chars.len() == 1 {
            out.insert(String::from(word));
        }
        for w in chars.windows(2) {
            out.insert(w.iter().collect());
        }
    }
    out
}

/// Dice coefficient of the two names' token sets.
pub fn token_similarity(a: &str, b: &str) -> f64 {
    let (ta, tb) = (tokens(a), tokens(b));
    if ta.is_empty() && tb.is_empty() {
        return 0.0;
    }
    let shared = ta.intersection(&tb).count();
    2.0 * shared as f64 / (ta.len() + tb.len()) as f64
}

/// Draft a one-to-one mapping by greedy highest-similarity pairing of
/// aspect names. Pairs below [`AUTO_MATCH_THRESHOLD`] are never proposed.
pub fn auto_assist_match(reference: &ReferenceSet, system: &AspectSet) -> MatchMapping {
    let mut scored: Vec<(f64, usize, usize)> = Vec::new();
    for (si, c) in system.clusters.iter().enumerate() {
        for (ri, item) in reference.items.iter().enumerate() {
            let s = token_similarity(&c.aspect_name, &item.aspect_name);
            if s >= AUTO_MATCH_THRESHOLD {
                scored.push((s, si, ri));
            }
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_s = BTreeSet::new();
    let mut used_r = BTreeSet::new();
    let mut pairs = BTreeMap::new();
    for (_, si, ri) in scored {
        if used_s.contains(&si) || used_r.contains(&ri) {
            continue;
        }
        used_s.insert(si);
        used_r.insert(ri);
        pairs.insert(si, ri);
    }
    MatchMapping {
        pairs: pairs
            .into_iter()
            .map(|(si, ri)| (system.clusters[si].aspect_name.clone(), reference.items[ri].aspect_name.clone()))
            .collect(),
        provenance: Provenance::AutoAssist,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aspects::AspectCluster;
    use alloc::string::ToString;
    use alloc::vec;

    fn names(n: usize, prefix: &str) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn metrics(r: usize, s: usize, k: usize) -> CelebrityMetrics {
        let rn = names(r, "r");
        let sn = names(s, "s");
        let pairs = (0..k).map(|i| (sn[i].clone(), rn[i].clone())).collect();
        let rr: Vec<&str> = rn.iter().map(String::as_str).collect();
        let ss: Vec<&str> = sn.iter().map(String::as_str).collect();
        recall_precision_for_names("x", &rr, &ss, &MatchMapping::human(pairs)).unwrap()
    }

    #[test]
    fn huwa_chan_row() {
        let m = metrics(8, 6, 6);
        assert_eq!(m.recall.to_string(), "0.75 (6/8)");
        assert_eq!(m.precision.to_string(), "1.00 (6/6)");
    }

    #[test]
    fn timberlake_row() {
        let m = metrics(9, 9, 7);
        assert_eq!(m.recall.decimal(), "0.78");
        assert_eq!(m.precision.decimal(), "0.78");
    }

    #[test]
    fn identity_mapping() {
        let m = metrics(5, 5, 5);
        assert_eq!(m.recall.value(), Some(1.0));
        assert_eq!(m.precision.value(), Some(1.0));
    }

    #[test]
    fn invalid_mappings() {
        let r = ["a", "b"];
        let s = ["x", "y"];
        let dangling = MatchMapping::human(vec![("z".into(), "a".into())]);
        assert!(matches!(validate_mapping(&r, &s, &dangling), Err(EvalError::InvalidMapping(_))));
        let dup = MatchMapping::human(vec![("x".into(), "a".into()), ("y".into(), "a".into())]);
        assert!(matches!(validate_mapping(&r, &s, &dup), Err(EvalError::InvalidMapping(_))));
        let dup_sys = MatchMapping::human(vec![("x".into(), "a".into()), ("X".into(), "b".into())]);
        assert!(matches!(validate_mapping(&r, &s, &dup_sys), Err(EvalError::InvalidMapping(_))));
    }

    #[test]
    fn macro_rows() {
        assert_eq!(macro_average(&[]), Err(EvalError::NoRows));
        let (r, p) = macro_average(&[metrics(2, 1, 1), metrics(1, 1, 1)]).unwrap();
        assert_eq!(r.value(), Some(0.75));
        assert_eq!(p.value(), Some(1.0));
    }

    fn set(names: &[&str]) -> AspectSet {
        AspectSet {
            celebrity: "c".into(),
            clusters: names
                .iter()
                .map(|n| AspectCluster {
                    celebrity: "c".into(),
                    aspect_name: n.to_string(),
                    description: String::new(),
                    member_sentences: vec![],
                    source_urls: Default::default(),
                    name_truncated: false,
                    name_fallback: false,
                    aggregated: true,
                })
                .collect(),
            run_id: "r".into(),
            uncategorized: vec![],
        }
    }

    fn reference(names: &[&str]) -> ReferenceSet {
        ReferenceSet {
            celebrity: "c".into(),
            items: names
                .iter()
                .map(|n| ReferenceItem {
                    aspect_name: n.to_string(),
                    description: String::new(),
                    reference_label: None,
                })
                .collect(),
            celebrity_label: None,
        }
    }

    #[test]
    fn auto_assist_cases() {
        let names = ["musical activities", "drug incident", "hobbies"];
        let m = auto_assist_match(&reference(&names), &set(&names));
        assert_eq!(m.pairs.len(), 3);
        assert_eq!(m.provenance, Provenance::AutoAssist);

        let m = auto_assist_match(&reference(&["alpha beta"]), &set(&["gamma delta"]));
        assert!(m.pairs.is_empty());

        // {musical, activities} vs {music, activities}: 2*1/(2+2) = 1/2
        assert_eq!(token_similarity("musical activities", "music activities"), 0.5);
        let m = auto_assist_match(&reference(&["music activities"]), &set(&["musical activities"]));
        assert_eq!(m.pairs, vec![("musical activities".to_string(), "music activities".to_string())]);
    }

    #[test]
    fn japanese_names_use_bigrams() {
        assert!(token_similarity("音楽活動", "音楽活動と作曲") >= 0.5);
        assert_eq!(token_similarity("音楽", "逮捕"), 0.0);
    }
}
