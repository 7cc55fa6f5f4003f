//! Scoring pipeline output against human references.

pub mod judged;
pub mod matching;
pub mod overlap;
pub mod ratio;

pub use judged::{
    accuracy, build_confusion_matrix, cutoff_breakdown, AccuracyReport, AccuracyRow, ConfusionMatrix, CutoffRow,
    ReferenceBook, TRAINING_CUTOFF,
};
pub use matching::{
    auto_assist_match, compute_recall_precision, macro_average, recall_precision_for_names, token_similarity,
    validate_mapping, CelebrityMetrics, MatchMapping, Provenance, ReferenceItem, ReferenceSet,
};
pub use overlap::{overlap_analysis, BaselineItem, OverlapAverages, OverlapCounts, OverlapLink, OverlapRow};
pub use ratio::{MacroAverage, Ratio};
