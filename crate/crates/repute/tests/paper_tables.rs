mod common;

use repute::report::{render_report, EvaluationReport, ModeAccuracy};
use repute_core::eval::{
    accuracy, recall_precision_for_names, MacroAverage, MatchMapping, Ratio, ReferenceBook, ReferenceItem, ReferenceSet,
};
use repute_core::{GoodEvilLabel, JudgmentMode, JudgmentResult, Subject};

use common::{mean_of_two_places, two_places};

fn few_shot_results() -> (Vec<JudgmentResult>, ReferenceBook) {
    let t = common::table5();
    let mut book = ReferenceBook::default();
    let mut results = Vec::new();
    for c in &t.few_shot {
        book.insert(ReferenceSet {
            celebrity: c.celebrity.clone(),
            items: c
                .items
                .iter()
                .map(|i| ReferenceItem {
                    aspect_name: i.aspect.clone(),
                    description: String::new(),
                    reference_label: Some(i.reference),
                })
                .collect(),
            celebrity_label: None,
        });
        for i in &c.items {
            results.push(JudgmentResult {
                subject: Subject::aspect(&c.celebrity, &i.aspect),
                stage1_evil: Some(i.predicted.is_evil()),
                label: Some(i.predicted),
                mode: JudgmentMode::FewShot,
                rag: true,
                raw_responses: Vec::new(),
                request_digests: Vec::new(),
                reprompts: 0,
            });
        }
    }
    (results, book)
}

#[test]
fn few_shot_accuracy_per_celebrity() {
    let (results, book) = few_shot_results();
    let report = accuracy(&results, &book).unwrap();
    let rows = report.by_celebrity();
    assert_eq!(rows.len(), 10);
    let miyasako = rows.iter().find(|(c, _)| c == "Hiroyuki Miyasako").unwrap();
    assert_eq!(miyasako.1.to_string(), "0.67 (4/6)");
    assert!(rows.iter().filter(|(c, _)| c != "Hiroyuki Miyasako").all(|(_, r)| r.num == r.den));
    let t = common::table5();
    assert_eq!(report.macro_by_celebrity().decimal(), t.macro_few_shot);
    let oracle: Vec<String> = rows.iter().map(|(_, r)| two_places(r.num as u64, r.den as u64)).collect();
    assert_eq!(mean_of_two_places(&oracle), t.macro_few_shot);
}

#[test]
fn zero_shot_macro_average() {
    let t = common::table5();
    let ratios: Vec<Ratio> = t.zero_shot_counts.iter().map(|r| Ratio::new(r.correct, r.total)).collect();
    assert_eq!(MacroAverage::of(&ratios).decimal(), t.macro_zero_shot);
    let decimals: Vec<String> =
        t.zero_shot_counts.iter().map(|r| two_places(r.correct as u64, r.total as u64)).collect();
    assert_eq!(mean_of_two_places(&decimals), t.macro_zero_shot);
    let totals: Vec<u32> = t.few_shot.iter().map(|c| c.items.len() as u32).collect();
    assert_eq!(totals, t.zero_shot_counts.iter().map(|r| r.total).collect::<Vec<_>>());
}

#[test]
fn exact_mean_would_round_precision_differently() {
    let t = common::table2();
    let exact: f64 = t.rows.iter().map(|r| r.matched as f64 / r.system as f64).sum::<f64>() / t.rows.len() as f64;
    assert_eq!(format!("{exact:.2}"), "0.95");
    let decimals: Vec<String> = t.rows.iter().map(|r| two_places(r.matched as u64, r.system as u64)).collect();
    assert_eq!(mean_of_two_places(&decimals), t.macro_precision);
}

#[test]
fn confusion_detail_matches_paper_cells() {
    let t = common::table5();
    let evil_cells: Vec<(&str, &str, GoodEvilLabel, GoodEvilLabel)> = t
        .few_shot
        .iter()
        .flat_map(|c| c.items.iter().map(move |i| (c.celebrity.as_str(), i.aspect.as_str(), i.reference, i.predicted)))
        .filter(|(_, _, r, p)| r.is_evil() || p.is_evil())
        .collect();
    assert_eq!(evil_cells.len(), 7);
    let celebrities: std::collections::BTreeSet<&str> = evil_cells.iter().map(|e| e.0).collect();
    assert_eq!(celebrities.len(), 5);
}

#[test]
fn report_renders_table_rows_and_macro() {
    let t = common::table2();
    let metrics: Vec<_> = t
        .rows
        .iter()
        .map(|row| {
            let refs: Vec<String> = (0..row.reference).map(|i| format!("r{i}")).collect();
            let sys: Vec<String> = (0..row.system).map(|i| format!("s{i}")).collect();
            let m = MatchMapping::human((0..row.matched).map(|i| (sys[i].clone(), refs[i].clone())).collect());
            let r: Vec<&str> = refs.iter().map(String::as_str).collect();
            let s: Vec<&str> = sys.iter().map(String::as_str).collect();
            recall_precision_for_names(&row.celebrity, &r, &s, &m).unwrap()
        })
        .collect();
    let (results, book) = few_shot_results();
    let report = EvaluationReport {
        run_id: "run-fixture".into(),
        aspect_metrics: metrics,
        aspect_accuracy: vec![ModeAccuracy {
            mode: JudgmentMode::FewShot,
            rag: true,
            report: accuracy(&results, &book).unwrap(),
        }],
        ..EvaluationReport::default()
    };
    let files = render_report(&report);
    let md = &files["metrics.md"];
    assert!(md.contains("| Huwa-chan | 0.75 (6/8) | 1.00 (6/6) |"));
    assert!(md.contains(&format!("| macro average | {} | {} |", t.macro_recall, t.macro_precision)));
    assert!(md.contains("| macro average | 0.97 |"));
    let csv = &files["metrics.csv"];
    assert!(csv.lines().any(|l| l.contains("Justin Timberlake") && l.contains("0.78")));
}
