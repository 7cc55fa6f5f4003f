//! Markdown and CSV rendering of evaluation results.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use repute_core::eval::{
    AccuracyReport, CelebrityMetrics, ConfusionMatrix, CutoffRow, MacroAverage, OverlapAverages, OverlapRow, Ratio,
};
use repute_core::{GoodEvilLabel, JudgmentMode, ScandalDate};

/// One row of the with/without-context comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RagRow {
    pub celebrity: String,
    pub scandal: Option<ScandalDate>,
    pub mode: JudgmentMode,
    pub reference: GoodEvilLabel,
    pub without: Option<(bool, GoodEvilLabel)>,
    pub with: Option<(bool, GoodEvilLabel)>,
}

/// Accuracy of one judgment configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeAccuracy {
    pub mode: JudgmentMode,
    pub rag: bool,
    pub report: AccuracyReport,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub run_id: String,
    /// Recall/precision rows scored against human mappings.
    pub aspect_metrics: Vec<CelebrityMetrics>,
    /// Celebrities with references and aspects but no human mapping.
    pub unmapped: Vec<String>,
    pub aspect_accuracy: Vec<ModeAccuracy>,
    pub confusion: Vec<(JudgmentMode, ConfusionMatrix)>,
    pub celebrity_accuracy: Vec<ModeAccuracy>,
    pub rag_rows: Vec<RagRow>,
    pub cutoff: Vec<(JudgmentMode, Vec<CutoffRow>)>,
    pub overlap_rows: Vec<OverlapRow>,
    /// Judged subjects left out for lack of a reference label.
    pub missing_references: Vec<String>,
}

fn scandal_text(d: Option<ScandalDate>) -> String {
    match d {
        Some(ScandalDate { year, month: Some(m) }) => format!("{year}-{m:02}"),
        Some(ScandalDate { year, month: None }) => year.to_string(),
        None => "-".into(),
    }
}

fn verdict(v: Option<(bool, GoodEvilLabel)>) -> String {
    match v {
        Some((ok, label)) => format!("{} / {}", if ok { "T" } else { "F" }, label),
        None => "-".into(),
    }
}

fn short(label: GoodEvilLabel) -> &'static str {
    match label {
        GoodEvilLabel::Illegal => "illegal",
        GoodEvilLabel::LegalButUnethical => "legal but unethical",
        GoodEvilLabel::LegalEthicalButUnpopularAndCriticized => "legal, ethical but unpopular",
        GoodEvilLabel::NotParticularlyEvil => "not evil",
    }
}

fn matrix_cell(m: &ConfusionMatrix, r: GoodEvilLabel, p: GoodEvilLabel) -> String {
    let n = m.get(r, p);
    let names = m.subjects(r, p);
    if names.is_empty() {
        n.to_string()
    } else {
        format!("{n} ({})", names.join("/"))
    }
}

fn macro_row(avg: &MacroAverage) -> String {
    avg.decimal()
}

fn markdown(report: &EvaluationReport) -> String {
    let mut md = String::new();
    let _ = writeln!(md, "# Evaluation report {}\n", report.run_id);

    md.push_str("## Aspect extraction\n\n| celebrity | recall | precision |\n|---|---|---|\n");
    for row in &report.aspect_metrics {
        let _ = writeln!(md, "| {} | {} | {} |", row.name, row.recall, row.precision);
    }
    if !report.aspect_metrics.is_empty() {
        let recall = MacroAverage::of(report.aspect_metrics.iter().map(|r| &r.recall));
        let precision = MacroAverage::of(report.aspect_metrics.iter().map(|r| &r.precision));
        let _ = writeln!(md, "| macro average | {} | {} |", macro_row(&recall), macro_row(&precision));
        let names: Vec<&str> = report.aspect_metrics.iter().map(|r| r.name.as_str()).collect();
        let _ = writeln!(md, "\nRows averaged ({}): {}.", names.len(), names.join(", "));
    }
    if !report.unmapped.is_empty() {
        let _ = writeln!(md, "\nNo human mapping (draft written, not scored): {}.", report.unmapped.join(", "));
    }

    for acc in &report.aspect_accuracy {
        let _ = writeln!(md, "\n## Aspect judgment accuracy, {}\n", acc.mode.as_str());
        md.push_str("| celebrity | accuracy |\n|---|---|\n");
        for (name, ratio) in acc.report.by_celebrity() {
            let _ = writeln!(md, "| {name} | {ratio} |");
        }
        if !acc.report.rows.is_empty() {
            let _ = writeln!(md, "| macro average | {} |", macro_row(&acc.report.macro_by_celebrity()));
            let _ = writeln!(md, "| all aspects | {} |", acc.report.accuracy);
        }
        if acc.report.excluded > 0 {
            let _ = writeln!(md, "\n{} invalid judgments excluded.", acc.report.excluded);
        }
    }

    for (mode, m) in &report.confusion {
        let _ = writeln!(md, "\n## Confusion matrix, {} (rows: reference, columns: predicted)\n", mode.as_str());
        md.push_str("| reference \\ predicted |");
        for p in GoodEvilLabel::ALL {
            let _ = write!(md, " {} |", short(p));
        }
        md.push_str(" total |\n|---|---|---|---|---|---|\n");
        for r in GoodEvilLabel::ALL {
            let _ = write!(md, "| {} |", short(r));
            for p in GoodEvilLabel::ALL {
                let _ = write!(md, " {} |", matrix_cell(m, r, p));
            }
            let _ = writeln!(md, " {} |", m.row_total(r));
        }
        md.push_str("| total |");
        for p in GoodEvilLabel::ALL {
            let _ = write!(md, " {} |", m.column_total(p));
        }
        let _ = writeln!(md, " {} |", m.total());
    }

    md.push_str("\n## Celebrity judgment with and without retrieved context\n\n");
    md.push_str(
        "| celebrity | scandal | mode | without context | with context | reference |\n|---|---|---|---|---|---|\n",
    );
    for row in &report.rag_rows {
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} | {} | {} |",
            row.celebrity,
            scandal_text(row.scandal),
            row.mode.as_str(),
            verdict(row.without),
            verdict(row.with),
            row.reference
        );
    }
    for acc in &report.celebrity_accuracy {
        let ctx = if acc.rag { "with context" } else { "without context" };
        let _ = writeln!(md, "\nTotal accuracy, {}, {ctx}: {}", acc.mode.as_str(), acc.report.accuracy);
    }
    for (mode, rows) in &report.cutoff {
        let failures: Vec<&CutoffRow> = rows.iter().filter(|r| !r.correct).collect();
        let after = failures.iter().filter(|r| r.after_cutoff).count();
        let _ = writeln!(
            md,
            "\nWithout context, {}: {} failures, {} with a scandal after the training cutoff.",
            mode.as_str(),
            failures.len(),
            after
        );
    }

    md.push_str("\n## Overlap with the baseline method\n\n");
    md.push_str("| celebrity | baseline overlapping | baseline only | baseline total | ours overlapping | ours only | ours total |\n");
    md.push_str("|---|---|---|---|---|---|---|\n");
    for row in &report.overlap_rows {
        match row.counts {
            Some(c) => {
                let _ = writeln!(
                    md,
                    "| {} | {} | {} | {} | {} | {} | {} |",
                    row.celebrity,
                    c.overlapping_baseline,
                    c.only_baseline,
                    c.total_baseline(),
                    c.overlapping_ours,
                    c.only_ours,
                    c.total_ours()
                );
            }
            None => {
                let _ = writeln!(md, "| {} | - | - | - | - | - | - |", row.celebrity);
            }
        }
    }
    let avg = OverlapAverages::of(&report.overlap_rows);
    if !avg.contributing.is_empty() {
        let v = avg.rendered();
        let _ = writeln!(md, "| average | {} | {} | {} | {} | {} | {} |", v[0], v[1], v[2], v[3], v[4], v[5]);
        let _ = writeln!(
            md,
            "\nRows averaged ({}, celebrities with baseline items): {}.",
            avg.contributing.len(),
            avg.contributing.join(", ")
        );
    }

    if !report.missing_references.is_empty() {
        let _ = writeln!(md, "\nNot scored (no reference label): {}.", report.missing_references.join("; "));
    }
    md
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.write_record(&row).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

fn ratio_fields(r: &Ratio) -> [String; 3] {
    [r.num.to_string(), r.den.to_string(), r.decimal()]
}

fn metrics_csv(report: &EvaluationReport) -> String {
    let mut rows = Vec::new();
    let mut push = |section: &str, subject: &str, metric: &str, r: &Ratio| {
        let [n, d, dec] = ratio_fields(r);
        rows.push(vec![section.into(), subject.into(), metric.into(), n, d, dec]);
    };
    for m in &report.aspect_metrics {
        push("aspects", &m.name, "recall", &m.recall);
        push("aspects", &m.name, "precision", &m.precision);
    }
    for acc in &report.aspect_accuracy {
        for (name, r) in acc.report.by_celebrity() {
            push("aspect_judgment", &name, acc.mode.as_str(), &r);
        }
        push("aspect_judgment", "all", acc.mode.as_str(), &acc.report.accuracy);
    }
    for acc in &report.celebrity_accuracy {
        let metric = format!("{}{}", acc.mode.as_str(), if acc.rag { "+context" } else { "" });
        push("celebrity_judgment", "all", &metric, &acc.report.accuracy);
    }
    let mut macros = Vec::new();
    if !report.aspect_metrics.is_empty() {
        let recall = MacroAverage::of(report.aspect_metrics.iter().map(|r| &r.recall));
        let precision = MacroAverage::of(report.aspect_metrics.iter().map(|r| &r.precision));
        macros.push(vec![
            "aspects".into(),
            "macro".into(),
            "recall".into(),
            String::new(),
            String::new(),
            recall.decimal(),
        ]);
        macros.push(vec![
            "aspects".into(),
            "macro".into(),
            "precision".into(),
            String::new(),
            String::new(),
            precision.decimal(),
        ]);
    }
    for acc in &report.aspect_accuracy {
        if !acc.report.rows.is_empty() {
            macros.push(vec![
                "aspect_judgment".into(),
                "macro".into(),
                acc.mode.as_str().into(),
                String::new(),
                String::new(),
                acc.report.macro_by_celebrity().decimal(),
            ]);
        }
    }
    rows.extend(macros);
    csv_text(&["section", "subject", "metric", "numerator", "denominator", "value"], rows)
}

fn confusion_csv(report: &EvaluationReport) -> String {
    let mut rows = Vec::new();
    for (mode, m) in &report.confusion {
        for r in GoodEvilLabel::ALL {
            for p in GoodEvilLabel::ALL {
                rows.push(vec![
                    mode.as_str().into(),
                    r.as_str().into(),
                    p.as_str().into(),
                    m.get(r, p).to_string(),
                    m.subjects(r, p).join("/"),
                ]);
            }
        }
    }
    csv_text(&["mode", "reference", "predicted", "count", "celebrities"], rows)
}

fn overlap_csv(report: &EvaluationReport) -> String {
    let mut rows: Vec<Vec<String>> = report
        .overlap_rows
        .iter()
        .map(|row| {
            let mut v = vec![row.celebrity.clone()];
            match row.counts {
                Some(c) => v.extend(
                    [
                        c.overlapping_baseline,
                        c.only_baseline,
                        c.total_baseline(),
                        c.overlapping_ours,
                        c.only_ours,
                        c.total_ours(),
                    ]
                    .map(|n| n.to_string()),
                ),
                None => v.extend(std::iter::repeat_n(String::new(), 6)),
            }
            v
        })
        .collect();
    let avg = OverlapAverages::of(&report.overlap_rows);
    if !avg.contributing.is_empty() {
        let mut v = vec!["average".to_string()];
        v.extend(avg.rendered());
        rows.push(v);
    }
    csv_text(
        &[
            "celebrity",
            "baseline_overlapping",
            "baseline_only",
            "baseline_total",
            "ours_overlapping",
            "ours_only",
            "ours_total",
        ],
        rows,
    )
}

fn rag_csv(report: &EvaluationReport) -> String {
    let rows = report
        .rag_rows
        .iter()
        .map(|r| {
            let cell = |v: Option<(bool, GoodEvilLabel)>| match v {
                Some((ok, l)) => (if ok { "T" } else { "F" }.to_string(), l.as_str().to_string()),
                None => (String::new(), String::new()),
            };
            let (wo_ok, wo) = cell(r.without);
            let (w_ok, w) = cell(r.with);
            vec![
                r.celebrity.clone(),
                scandal_text(r.scandal),
                r.mode.as_str().into(),
                wo_ok,
                wo,
                w_ok,
                w,
                r.reference.as_str().into(),
            ]
        })
        .collect();
    csv_text(
        &[
            "celebrity",
            "scandal",
            "mode",
            "without_correct",
            "without_label",
            "with_correct",
            "with_label",
            "reference",
        ],
        rows,
    )
}

/// File name → contents for every report file.
pub fn render_report(report: &EvaluationReport) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("metrics.md".to_string(), markdown(report)),
        ("metrics.csv".to_string(), metrics_csv(report)),
        ("confusion.csv".to_string(), confusion_csv(report)),
        ("overlap.csv".to_string(), overlap_csv(report)),
        ("rag_ablation.csv".to_string(), rag_csv(report)),
    ])
}
