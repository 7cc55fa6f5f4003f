//! Overlap between this pipeline's aspects and a prior method's
//! aspect/impression/reason items.
//!
//! Links form a relation, not a bijection: several baseline items (for
//! example eight remark/criticism impressions) can correspond to a single
//! aspect here.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::eval::ratio::mean_decimal;
use crate::text::normalize_aspect_name;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineItem {
    pub aspect: String,
    #[serde(default)]
    pub impression: String,
    #[serde(default)]
    pub reason: String,
}

/// A link between one of our aspects (by name) and a baseline item (by
/// position in the baseline list).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OverlapLink {
    pub ours: String,
    pub baseline: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapCounts {
    pub overlapping_ours: u32,
    pub only_ours: u32,
    pub overlapping_baseline: u32,
    pub only_baseline: u32,
}

impl OverlapCounts {
    pub fn total_ours(&self) -> u32 {
        self.overlapping_ours + self.only_ours
    }

    pub fn total_baseline(&self) -> u32 {
        self.overlapping_baseline + self.only_baseline
    }
}

/// Count items that take part in at least one link on each side.
pub fn overlap_analysis(
    ours: &[&str],
    baseline: &[BaselineItem],
    links: &[OverlapLink],
) -> Result<OverlapCounts, EvalError> {
    let names: Vec<String> = ours.iter().map(|n| normalize_aspect_name(n)).collect();
    let mut seen = BTreeSet::new();
    let mut linked_ours = BTreeSet::new();
    let mut linked_base = BTreeSet::new();
    for link in links {
        let key = normalize_aspect_name(&link.ours);
        let Some(pos) = names.iter().position(|n| *n == key) else {
            return Err(EvalError::InvalidMapping(format!("unknown aspect {:?}", link.ours)));
        };
        if link.baseline >= baseline.len() {
            return Err(EvalError::InvalidMapping(format!("baseline item {} out of range", link.baseline)));
        }
        if !seen.insert((pos, link.baseline)) {
            return Err(EvalError::InvalidMapping(format!("duplicate link {:?} -> {}", link.ours, link.baseline)));
        }
        linked_ours.insert(pos);
        linked_base.insert(link.baseline);
    }
    Ok(OverlapCounts {
        overlapping_ours: linked_ours.len() as u32,
        only_ours: (ours.len() - linked_ours.len()) as u32,
        overlapping_baseline: linked_base.len() as u32,
        only_baseline: (baseline.len() - linked_base.len()) as u32,
    })
}

/// Per-celebrity counts; `None` when no baseline exists for the celebrity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapRow {
    pub celebrity: String,
    pub counts: Option<OverlapCounts>,
}

/// Cross-celebrity means over the rows that have a baseline.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapAverages {
    pub contributing: Vec<String>,
    pub sums: OverlapCounts,
}

impl OverlapAverages {
    pub fn of(rows: &[OverlapRow]) -> Self {
        let mut out = Self::default();
        for row in rows {
            if let Some(c) = row.counts {
                out.contributing.push(row.celebrity.clone());
                out.sums.overlapping_ours += c.overlapping_ours;
                out.sums.only_ours += c.only_ours;
                out.sums.overlapping_baseline += c.overlapping_baseline;
                out.sums.only_baseline += c.only_baseline;
            }
        }
        out
    }

    fn mean(&self, sum: u32) -> Option<f64> {
        let n = self.contributing.len();
        (n > 0).then(|| sum as f64 / n as f64)
    }

    fn render(&self, sum: u32) -> String {
        mean_decimal(sum as u64, self.contributing.len() as u32)
    }

    pub fn overlapping_ours(&self) -> Option<f64> {
        self.mean(self.sums.overlapping_ours)
    }
    pub fn only_ours(&self) -> Option<f64> {
        self.mean(self.sums.only_ours)
    }
    pub fn overlapping_baseline(&self) -> Option<f64> {
        self.mean(self.sums.overlapping_baseline)
    }
    pub fn only_baseline(&self) -> Option<f64> {
        self.mean(self.sums.only_baseline)
    }
    pub fn total_ours(&self) -> Option<f64> {
        self.mean(self.sums.total_ours())
    }
    pub fn total_baseline(&self) -> Option<f64> {
        self.mean(self.sums.total_baseline())
    }

    /// Two-place renderings in the order: baseline overlapping, baseline
    /// only, baseline total, ours overlapping, ours only, ours total.
    pub fn rendered(&self) -> [String; 6] {
        [
            self.render(self.sums.overlapping_baseline),
            self.render(self.sums.only_baseline),
            self.render(self.sums.total_baseline()),
            self.render(self.sums.overlapping_ours),
            self.render(self.sums.only_ours),
            self.render(self.sums.total_ours()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn items(n: usize) -> Vec<BaselineItem> {
        (0..n)
            .map(|i| BaselineItem { aspect: format!("b{i}"), impression: String::new(), reason: String::new() })
            .collect()
    }

    #[test]
    fn empty_links() {
        let c = overlap_analysis(&["a", "b"], &items(3), &[]).unwrap();
        assert_eq!(c, OverlapCounts { overlapping_ours: 0, only_ours: 2, overlapping_baseline: 0, only_baseline: 3 });
    }

    #[test]
    fn many_baseline_items_to_one_aspect() {
        let ours = ["inappropriate remarks and hiatus", "career and activities"];
        let links: Vec<OverlapLink> = (0..8).map(|i| OverlapLink { ours: ours[0].into(), baseline: i }).collect();
        let c = overlap_analysis(&ours, &items(8), &links).unwrap();
        assert_eq!(c.overlapping_baseline, 8);
        assert_eq!(c.only_baseline, 0);
        assert_eq!(c.overlapping_ours, 1);
        assert_eq!(c.only_ours, 1);
    }

    #[test]
    fn invalid_links() {
        let dangling = [OverlapLink { ours: "zzz".into(), baseline: 0 }];
        assert!(overlap_analysis(&["a"], &items(1), &dangling).is_err());
        let range = [OverlapLink { ours: "a".into(), baseline: 5 }];
        assert!(overlap_analysis(&["a"], &items(1), &range).is_err());
        let dup = [OverlapLink { ours: "a".into(), baseline: 0 }, OverlapLink { ours: "A".into(), baseline: 0 }];
        assert!(overlap_analysis(&["a"], &items(1), &dup).is_err());
    }

    #[test]
    fn averages_skip_rows_without_baseline() {
        let rows = vec![
            OverlapRow {
                celebrity: "a".into(),
                counts: Some(OverlapCounts {
                    overlapping_ours: 1,
                    only_ours: 3,
                    overlapping_baseline: 2,
                    only_baseline: 0,
                }),
            },
            OverlapRow { celebrity: "b".into(), counts: None },
            OverlapRow {
                celebrity: "c".into(),
                counts: Some(OverlapCounts {
                    overlapping_ours: 2,
                    only_ours: 4,
                    overlapping_baseline: 2,
                    only_baseline: 1,
                }),
            },
        ];
        let avg = OverlapAverages::of(&rows);
        assert_eq!(avg.contributing, vec!["a", "c"]);
        assert_eq!(avg.overlapping_ours(), Some(1.5));
        assert_eq!(avg.rendered()[1], "0.50");
    }
}
