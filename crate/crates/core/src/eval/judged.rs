//! Scoring judgments: confusion matrices, accuracy, and the training-cutoff
//! breakdown of per-celebrity judgments.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::eval::matching::{MatchMapping, ReferenceSet};
use crate::eval::ratio::{MacroAverage, Ratio};
use crate::judgment::{JudgmentResult, Subject};
use crate::label::GoodEvilLabel;
use crate::profile::{CelebrityProfile, ScandalDate};

/// The model's training data ends in October 2023.
pub const TRAINING_CUTOFF: (i32, u8) = (2023, 10);

/// Reference sets plus optional human mappings, keyed by celebrity.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReferenceBook {
    pub sets: BTreeMap<String, ReferenceSet>,
    pub mappings: BTreeMap<String, MatchMapping>,
}

impl ReferenceBook {
    pub fn insert(&mut self, mut set: ReferenceSet) {
        let key = set.celebrity.clone();
        if key.is_empty() {
            return;
        }
        set.celebrity = key.clone();
        self.sets.insert(key, set);
    }

    /// Reference label for a judged subject.
    ///
    /// Celebrity subjects use the celebrity label. Aspect subjects follow the
    /// human mapping when one exists for the celebrity, otherwise a reference
    /// item with the same normalized name.
    pub fn label_for(&self, subject: &Subject) -> Result<GoodEvilLabel, EvalError> {
        let missing = || EvalError::MissingReference(subject.display());
        let set = self.sets.get(&subject.celebrity).ok_or_else(missing)?;
        match &subject.aspect_name {
            None => set.celebrity_label.ok_or_else(missing),
            Some(aspect) => {
                let ref_name = match self.mappings.get(&subject.celebrity) {
                    Some(m) => m.reference_for(aspect).ok_or_else(missing)?,
                    None => aspect.as_str(),
                };
                set.find(ref_name).and_then(|i| i.reference_label).ok_or_else(missing)
            }
        }
    }
}

/// Counts indexed `[reference][predicted]` in [`GoodEvilLabel::ALL`] order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u32; 4]; 4],
    /// Celebrities contributing to each cell, except the not-evil/not-evil cell.
    pub cell_subjects: [[Vec<String>; 4]; 4],
    /// Invalid results left out of the counts.
    pub excluded: u32,
}

impl ConfusionMatrix {
    pub fn get(&self, reference: GoodEvilLabel, predicted: GoodEvilLabel) -> u32 {
        self.counts[reference.index()][predicted.index()]
    }

    pub fn subjects(&self, reference: GoodEvilLabel, predicted: GoodEvilLabel) -> &[String] {
        &self.cell_subjects[reference.index()][predicted.index()]
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u32 {
        (0..4).map(|i| self.counts[i][i]).sum()
    }

    pub fn diagonal(&self) -> [u32; 4] {
        [self.counts[0][0], self.counts[1][1], self.counts[2][2], self.counts[3][3]]
    }

    pub fn row_total(&self, reference: GoodEvilLabel) -> u32 {
        self.counts[reference.index()].iter().sum()
    }

    pub fn column_total(&self, predicted: GoodEvilLabel) -> u32 {
        self.counts.iter().map(|row| row[predicted.index()]).sum()
    }

    fn add(&mut self, reference: GoodEvilLabel, predicted: GoodEvilLabel, celebrity: &str) {
        let (r, p) = (reference.index(), predicted.index());
        self.counts[r][p] += 1;
        if reference.is_evil() || predicted.is_evil() {
            let cell = &mut self.cell_subjects[r][p];
            if !cell.iter().any(|c| c == celebrity) {
                cell.push(celebrity.into());
            }
        }
    }
}

pub fn build_confusion_matrix(
    results: &[JudgmentResult],
    references: &ReferenceBook,
) -> Result<ConfusionMatrix, EvalError> {
    let mut m = ConfusionMatrix::default();
    for r in results {
        let Some(predicted) = r.label else {
            m.excluded += 1;
            continue;
        };
        let reference = references.label_for(&r.subject)?;
        m.add(reference, predicted, &r.subject.celebrity);
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub subject: Subject,
    pub predicted: GoodEvilLabel,
    pub reference: GoodEvilLabel,
    pub correct: bool,
}

impl AccuracyRow {
    /// `T / illegal` style cell.
    pub fn cell(&self) -> String {
        format!("{} / {}", if self.correct { "T" } else { "F" }, self.predicted)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub accuracy: Ratio,
    pub rows: Vec<AccuracyRow>,
    pub excluded: u32,
}

impl AccuracyReport {
    /// Per-celebrity accuracy, in first-seen order.
    pub fn by_celebrity(&self) -> Vec<(String, Ratio)> {
        let mut order: Vec<String> = Vec::new();
        let mut counts: BTreeMap<String, Ratio> = BTreeMap::new();
        for row in &self.rows {
            let e = counts.entry(row.subject.celebrity.clone()).or_insert_with(|| {
                order.push(row.subject.celebrity.clone());
                Ratio::new(0, 0)
            });
            e.den += 1;
            e.num += row.correct as u32;
        }
        order
            .into_iter()
            .map(|c| {
                let r = counts[&c];
                (c, r)
            })
            .collect()
    }

    pub fn macro_by_celebrity(&self) -> MacroAverage {
        let rows = self.by_celebrity();
        MacroAverage::of(rows.iter().map(|(_, r)| r))
    }
}

/// Fraction of valid results whose label equals the reference.
///
/// Computed row by row and again as confusion-matrix trace over total; the
/// two must agree.
pub fn accuracy(results: &[JudgmentResult], references: &ReferenceBook) -> Result<AccuracyReport, EvalError> {
    let mut rows = Vec::new();
    let mut excluded = 0;
    for r in results {
        let Some(predicted) = r.label else {
            excluded += 1;
            continue;
        };
        let reference = references.label_for(&r.subject)?;
        rows.push(AccuracyRow { subject: r.subject.clone(), predicted, reference, correct: predicted == reference });
    }
    let correct = rows.iter().filter(|r| r.correct).count() as u32;
    let accuracy = Ratio::new(correct, rows.len() as u32);

    let matrix = build_confusion_matrix(results, references)?;
    if matrix.trace() != accuracy.num || matrix.total() != accuracy.den {
        return Err(EvalError::Inconsistent(format!(
            "rows give {}/{}, confusion trace gives {}/{}",
            accuracy.num,
            accuracy.den,
            matrix.trace(),
            matrix.total()
        )));
    }
    Ok(AccuracyReport { accuracy, rows, excluded })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutoffRow {
    pub celebrity: String,
    pub scandal: Option<ScandalDate>,
    pub after_cutoff: bool,
    pub correct: bool,
}

/// Pair each per-celebrity judgment with whether its scandal postdates the
/// training cutoff.
pub fn cutoff_breakdown(report: &AccuracyReport, profiles: &[CelebrityProfile], cutoff: (i32, u8)) -> Vec<CutoffRow> {
    report
        .rows
        .iter()
        .filter(|r| r.subject.aspect_name.is_none())
        .map(|row| {
            let scandal = profiles
                .iter()
                .find(|p| p.canonical_name == row.subject.celebrity)
                .and_then(CelebrityProfile::scandal_date);
            CutoffRow {
                celebrity: row.subject.celebrity.clone(),
                scandal,
                after_cutoff: scandal.is_some_and(|d| d.is_after(cutoff.0, cutoff.1)),
                correct: row.correct,
            }
        })
        .collect()
}
