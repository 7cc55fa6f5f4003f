//! Fixture loading and scripted model backends shared by the integration
//! test targets.

#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::Deserialize;

use repute_core::eval::BaselineItem;
use repute_core::eval::OverlapLink;
use repute_core::{Cohort, Completion, GatewayError, GoodEvilLabel, LlmResponse, PromptRequest, ResponseSource};

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn demo_config() -> PathBuf {
    manifest_dir().join("demo/demo.toml")
}

fn fixture<T: serde::de::DeserializeOwned>(name: &str) -> T {
    let path = manifest_dir().join("tests/fixtures").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Independent rounding oracle: half-up to two places from integer counts.
pub fn two_places(num: u64, den: u64) -> String {
    let h = (200 * num + den) / (2 * den);
    format!("{}.{:02}", h / 100, h % 100)
}

/// Mean of two-place decimals, rounded half-up to two places.
pub fn mean_of_two_places(values: &[String]) -> String {
    let hundredths: u64 = values
        .iter()
        .map(|v| {
            let (i, f) = v.split_once('.').unwrap();
            i.parse::<u64>().unwrap() * 100 + f.parse::<u64>().unwrap()
        })
        .sum();
    let n = values.len() as u64;
    let h = (2 * hundredths + n) / (2 * n);
    format!("{}.{:02}", h / 100, h % 100)
}

#[derive(Debug, Deserialize)]
pub struct Table2Row {
    pub celebrity: String,
    pub reference: usize,
    pub system: usize,
    pub matched: usize,
    pub recall: String,
    pub precision: String,
}

#[derive(Debug, Deserialize)]
pub struct Table2 {
    pub rows: Vec<Table2Row>,
    pub macro_recall: String,
    pub macro_precision: String,
}

pub fn table2() -> Table2 {
    fixture("table2.json")
}

#[derive(Debug, Deserialize)]
pub struct JudgedItem {
    pub aspect: String,
    pub reference: GoodEvilLabel,
    pub predicted: GoodEvilLabel,
}

#[derive(Debug, Deserialize)]
pub struct JudgedCelebrity {
    pub celebrity: String,
    pub items: Vec<JudgedItem>,
}

#[derive(Debug, Deserialize)]
pub struct CountRow {
    pub celebrity: String,
    pub correct: u32,
    pub total: u32,
}

#[derive(Debug, Deserialize)]
pub struct Table5 {
    pub few_shot: Vec<JudgedCelebrity>,
    pub zero_shot_counts: Vec<CountRow>,
    pub macro_zero_shot: String,
    pub macro_few_shot: String,
    pub total: u32,
    pub diagonal: [u32; 4],
}

pub fn table5() -> Table5 {
    fixture("table5.json")
}

#[derive(Debug, Deserialize)]
pub struct Table6Row {
    pub celebrity: String,
    pub cohort: Cohort,
    pub scandal_year: Option<i32>,
    pub scandal_month: Option<u8>,
    pub reference: GoodEvilLabel,
    pub without: GoodEvilLabel,
    pub with_rag: GoodEvilLabel,
}

#[derive(Debug, Deserialize)]
pub struct Table6 {
    pub rows: Vec<Table6Row>,
    pub without_accuracy: String,
    pub with_accuracy: String,
}

pub fn table6() -> Table6 {
    fixture("table6.json")
}

#[derive(Debug, Deserialize)]
pub struct OverlapFixtureRow {
    pub celebrity: String,
    pub ours: Vec<String>,
    pub baseline: Option<Vec<BaselineItem>>,
    pub links: Vec<OverlapLink>,
}

#[derive(Debug, Deserialize)]
pub struct OverlapFixture {
    pub rows: Vec<OverlapFixtureRow>,
    pub averages: [String; 6],
}

pub fn overlap() -> OverlapFixture {
    fixture("overlap.json")
}

fn reply(request: &PromptRequest, text: String) -> LlmResponse {
    LlmResponse { text, source: ResponseSource::Replay, request_digest: request.digest() }
}

fn field<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| l.strip_prefix(key))
}

/// Answers judgment prompts from a table of intended labels.
///
/// Aspect prompts are keyed by `(celebrity, aspect)`; celebrity prompts by
/// `(celebrity, "rag")` or `(celebrity, "")`. The first stage answers
/// "evil" or "not particularly evil", the second the label itself.
#[derive(Default)]
pub struct LabelOracle {
    pub labels: BTreeMap<(String, String), GoodEvilLabel>,
}

impl LabelOracle {
    pub fn set(&mut self, celebrity: &str, key: &str, label: GoodEvilLabel) {
        self.labels.insert((celebrity.to_string(), key.to_string()), label);
    }
}

impl Completion for LabelOracle {
    fn complete(&self, request: &PromptRequest) -> Result<LlmResponse, GatewayError> {
        let user = &request.user_text;
        let celebrity = field(user, "Celebrity: ").unwrap_or_default().to_string();
        let key = match field(user, "Aspect: ") {
            Some(a) => a.to_string(),
            None if user.contains("Reputation collected") => "rag".into(),
            None => String::new(),
        };
        let label =
            *self.labels.get(&(celebrity, key)).ok_or_else(|| GatewayError::ReplayMiss { digest: request.digest() })?;
        let stage2 = request.system_text.contains("has been judged to be evil");
        let text = if stage2 { label.as_str() } else { label.stage1_str() };
        Ok(reply(request, text.to_string()))
    }
}

/// Replies from a fixed queue, in call order.
pub struct Sequence {
    pub replies: Mutex<VecDeque<String>>,
    pub calls: Mutex<u32>,
}

impl Sequence {
    pub fn new(replies: impl IntoIterator<Item = String>) -> Self {
        Self { replies: Mutex::new(replies.into_iter().collect()), calls: Mutex::new(0) }
    }

    pub fn calls(&self) -> u32 {
        *self.calls.lock().unwrap()
    }
}

impl Completion for Sequence {
    fn complete(&self, request: &PromptRequest) -> Result<LlmResponse, GatewayError> {
        *self.calls.lock().unwrap() += 1;
        let text = self.replies.lock().unwrap().pop_front().unwrap_or_else(|| "no reply left".into());
        Ok(reply(request, text))
    }
}

/// Every file under `root`, relative path to bytes.
pub fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}
