//! Two-stage good/evil judgment of aspects and of whole celebrities.
//!
//! Stage one asks "evil" or "not particularly evil". Only an evil verdict
//! triggers stage two, which picks one of the three evil refinements. A
//! reply that names no label (or several) is reprompted once with a
//! stricter instruction; a second failure marks the result invalid.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::aspects::{AspectCluster, AspectSet};
use crate::error::JudgmentError;
use crate::label::{GoodEvilLabel, LabelTable, ParsedLabel, Stage};
use crate::llm::{Completion, ExamplePair, LlmSettings, PromptRequest, PurposeTag};
use crate::profile::CelebrityProfile;
use crate::text::contains_alias;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub text: String,
    pub label: GoodEvilLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgmentMode {
    ZeroShot,
    FewShot,
}

impl JudgmentMode {
    pub fn as_str(self) -> &'static str {
        match self {
            JudgmentMode::ZeroShot => "zero_shot",
            JudgmentMode::FewShot => "few_shot",
        }
    }
}

/// What was judged: one aspect of a celebrity, or the celebrity as a whole.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Subject {
    pub celebrity: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect_name: Option<String>,
}

impl Subject {
    pub fn aspect(celebrity: impl Into<String>, aspect: impl Into<String>) -> Self {
        Self { celebrity: celebrity.into(), aspect_name: Some(aspect.into()) }
    }

    pub fn celebrity(celebrity: impl Into<String>) -> Self {
        Self { celebrity: celebrity.into(), aspect_name: None }
    }

    pub fn display(&self) -> String {
        match &self.aspect_name {
            Some(a) => format!("{} / {}", self.celebrity, a),
            None => self.celebrity.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentResult {
    pub subject: Subject,
    /// `None` when stage one never produced a parseable verdict.
    pub stage1_evil: Option<bool>,
    /// `None` marks an invalid result, excluded from metrics.
    pub label: Option<GoodEvilLabel>,
    pub mode: JudgmentMode,
    pub rag: bool,
    pub raw_responses: Vec<String>,
    pub request_digests: Vec<String>,
    /// Calls repeated after an unparseable reply.
    #[serde(default)]
    pub reprompts: u32,
}

impl JudgmentResult {
    pub fn is_valid(&self) -> bool {
        self.label.is_some()
    }

    /// Check the two-stage gating law on a valid result: a non-evil first
    /// stage means label `NotParticularlyEvil` and one call, an evil first
    /// stage means an evil label and two calls (plus any reprompts).
    pub fn satisfies_gating(&self) -> bool {
        let calls = self.request_digests.len() as u32;
        match (self.stage1_evil, self.label) {
            (Some(false), Some(l)) => l == GoodEvilLabel::NotParticularlyEvil && calls == 1 + self.reprompts,
            (Some(true), Some(l)) => l.is_evil() && calls == 2 + self.reprompts,
            (_, None) => true,
            (None, Some(_)) => false,
        }
    }

    /// Gateway calls excluding reprompts: 1 + stage1_evil for valid results.
    pub fn logical_calls(&self) -> u32 {
        self.request_digests.len() as u32 - self.reprompts
    }
}

/// Inputs a judgment prompt is built from.
#[derive(Debug, Clone, Copy)]
pub enum JudgmentTarget<'a> {
    Aspect { celebrity: &'a str, aspect_name: &'a str, description: &'a str },
    Celebrity { name: &'a str, context: Option<&'a AspectSet> },
}

impl JudgmentTarget<'_> {
    fn subject(&self) -> Subject {
        match *self {
            JudgmentTarget::Aspect { celebrity, aspect_name, .. } => Subject::aspect(celebrity, aspect_name),
            JudgmentTarget::Celebrity { name, .. } => Subject::celebrity(name),
        }
    }

    fn purpose(&self, stage: Stage) -> PurposeTag {
        match (self, stage) {
            (JudgmentTarget::Aspect { .. }, Stage::Stage1) => PurposeTag::JudgeStage1,
            (JudgmentTarget::Aspect { .. }, Stage::Stage2) => PurposeTag::JudgeStage2,
            (JudgmentTarget::Celebrity { .. }, _) => PurposeTag::JudgeCelebrity,
        }
    }

    fn user_text(&self) -> String {
        match *self {
            JudgmentTarget::Aspect { celebrity, aspect_name, description } => {
                format!("Celebrity: {celebrity}\nAspect: {aspect_name}\nDescription: {description}")
            }
            JudgmentTarget::Celebrity { name, context: None } => format!("Celebrity: {name}"),
            JudgmentTarget::Celebrity { name, context: Some(set) } => {
                let mut s = format!("Celebrity: {name}\nReputation collected from web pages:\n");
                for c in &set.clusters {
                    let _ = writeln!(s, "- {}: {}", c.aspect_name, c.description);
                }
                s.truncate(s.trim_end().len());
                s
            }
        }
    }
}

const STAGE1_ASPECT: &str = "You judge the good/evil reputation of a celebrity. You are given one \
aspect of the celebrity together with a description aggregated from web pages. Decide whether the \
aspect is \"evil\" or \"not particularly evil\", referring to the description. Answer with exactly \
one of: evil, not particularly evil.";

const STAGE1_CELEBRITY: &str = "You judge the good/evil reputation of a celebrity as a whole. \
Decide whether the celebrity is \"evil\" or \"not particularly evil\". Answer with exactly one of: \
evil, not particularly evil.";

const STAGE1_CELEBRITY_RAG: &str = "You judge the good/evil reputation of a celebrity as a whole. \
You are given the celebrity's aspects and descriptions collected from web pages as prior \
information about the celebrity's reputation; refer to it. Decide whether the celebrity is \
\"evil\" or \"not particularly evil\". Answer with exactly one of: evil, not particularly evil.";

const STRICT_INSTRUCTION: &str = "\nAnswer with exactly one category name and nothing else.";

fn stage2_system(target: &JudgmentTarget<'_>) -> String {
    let head = match target {
        JudgmentTarget::Aspect { .. } => {
            "The following aspect of a celebrity, with its description, has been judged to be evil."
        }
        JudgmentTarget::Celebrity { context: Some(_), .. } => {
            "The following celebrity has been judged to be evil. Refer to the given aspects and \
             descriptions collected from web pages."
        }
        JudgmentTarget::Celebrity { context: None, .. } => "The following celebrity has been judged to be evil.",
    };
    let mut s = format!("{head} Classify it into exactly one of these three categories:\n");
    for l in GoodEvilLabel::EVIL {
        let _ = writeln!(s, "- {}: {}", l.as_str(), l.definition());
    }
    s.push_str("Answer with exactly one category name.");
    s
}

/// Examples in prompt order: by label, then file order.
fn ordered_examples(examples: &[FewShotExample]) -> Vec<&FewShotExample> {
    let mut v: Vec<&FewShotExample> = examples.iter().collect();
    v.sort_by_key(|e| e.label.index());
    v
}

/// Expand the judgment template for one stage.
///
/// Zero-shot prompts carry no examples. Few-shot prompts carry every
/// example, ordered by label, labelled with the stage's vocabulary. The
/// system and user text do not depend on the mode.
pub fn build_judgment_prompt(
    target: &JudgmentTarget<'_>,
    mode: JudgmentMode,
    examples: &[FewShotExample],
    stage: Stage,
    settings: &LlmSettings,
) -> PromptRequest {
    let system = match (stage, target) {
        (Stage::Stage1, JudgmentTarget::Aspect { .. }) => STAGE1_ASPECT.to_string(),
        (Stage::Stage1, JudgmentTarget::Celebrity { context: None, .. }) => STAGE1_CELEBRITY.to_string(),
        (Stage::Stage1, JudgmentTarget::Celebrity { context: Some(_), .. }) => STAGE1_CELEBRITY_RAG.to_string(),
        (Stage::Stage2, _) => stage2_system(target),
    };
    let pairs = match mode {
        JudgmentMode::ZeroShot => Vec::new(),
        JudgmentMode::FewShot => ordered_examples(examples)
            .into_iter()
            .map(|e| ExamplePair {
                input_text: e.text.clone(),
                label_text: match stage {
                    Stage::Stage1 => e.label.stage1_str().to_string(),
                    Stage::Stage2 => e.label.as_str().to_string(),
                },
            })
            .collect(),
    };
    settings.request(target.purpose(stage), system, target.user_text(), pairs)
}

/// Reject a few-shot set lacking a label or naming a study celebrity.
pub fn validate_examples(examples: &[FewShotExample], study_set: &[CelebrityProfile]) -> Result<(), JudgmentError> {
    for label in GoodEvilLabel::ALL {
        if !examples.iter().any(|e| e.label == label) {
            return Err(JudgmentError::IncompleteExamples);
        }
    }
    for e in examples {
        for p in study_set {
            if p.query_aliases.iter().chain(core::iter::once(&p.canonical_name)).any(|a| contains_alias(&e.text, a)) {
                return Err(JudgmentError::ExampleNamesCelebrity(p.canonical_name.clone()));
            }
        }
    }
    Ok(())
}

/// Runs the two-stage protocol against a completion backend.
pub struct Judge<'a, C: Completion + ?Sized> {
    pub llm: &'a C,
    pub settings: &'a LlmSettings,
    pub labels: &'a LabelTable,
}

impl<'a, C: Completion + ?Sized> Judge<'a, C> {
    pub fn new(llm: &'a C, settings: &'a LlmSettings, labels: &'a LabelTable) -> Self {
        Self { llm, settings, labels }
    }

    /// Judge one aspect from its name and aggregated description.
    pub fn judge_aspect(
        &self,
        cluster: &AspectCluster,
        mode: JudgmentMode,
        examples: &[FewShotExample],
    ) -> Result<JudgmentResult, JudgmentError> {
        if cluster.description.trim().is_empty() {
            return Err(JudgmentError::EmptyDescription(cluster.aspect_name.clone()));
        }
        let target = JudgmentTarget::Aspect {
            celebrity: &cluster.celebrity,
            aspect_name: &cluster.aspect_name,
            description: &cluster.description,
        };
        self.run(&target, mode, examples, true)
    }

    /// Judge a celebrity as a whole. With `context` the prompt carries every
    /// aspect name and description; without it, only the name.
    pub fn judge_celebrity(
        &self,
        profile: &CelebrityProfile,
        context: Option<&AspectSet>,
        mode: JudgmentMode,
        examples: &[FewShotExample],
    ) -> Result<JudgmentResult, JudgmentError> {
        if context.is_some_and(|c| c.clusters.is_empty()) {
            return Err(JudgmentError::MissingContext);
        }
        let target = JudgmentTarget::Celebrity { name: &profile.canonical_name, context };
        self.run(&target, mode, examples, context.is_some())
    }

    fn run(
        &self,
        target: &JudgmentTarget<'_>,
        mode: JudgmentMode,
        examples: &[FewShotExample],
        rag: bool,
    ) -> Result<JudgmentResult, JudgmentError> {
        if mode == JudgmentMode::FewShot && GoodEvilLabel::ALL.iter().any(|l| !examples.iter().any(|e| e.label == *l)) {
            return Err(JudgmentError::IncompleteExamples);
        }
        let mut result = JudgmentResult {
            subject: target.subject(),
            stage1_evil: None,
            label: None,
            mode,
            rag,
            raw_responses: Vec::new(),
            request_digests: Vec::new(),
            reprompts: 0,
        };
        let request = build_judgment_prompt(target, mode, examples, Stage::Stage1, self.settings);
        let evil = match self.ask(request, Stage::Stage1, &mut result)? {
            Some(ParsedLabel::Evil(e)) => e,
            _ => return Ok(result),
        };
        result.stage1_evil = Some(evil);
        if !evil {
            result.label = Some(GoodEvilLabel::NotParticularlyEvil);
            return Ok(result);
        }
        let request = build_judgment_prompt(target, mode, examples, Stage::Stage2, self.settings);
        if let Some(ParsedLabel::Label(l)) = self.ask(request, Stage::Stage2, &mut result)? {
            result.label = Some(l);
        }
        Ok(result)
    }

    /// One stage: ask, parse, reprompt once on failure.
    fn ask(
        &self,
        mut request: PromptRequest,
        stage: Stage,
        result: &mut JudgmentResult,
    ) -> Result<Option<ParsedLabel>, JudgmentError> {
        for attempt in 0..2 {
            if attempt == 1 {
                request.user_text.push_str(STRICT_INSTRUCTION);
                result.reprompts += 1;
            }
            let response = self.llm.complete(&request)?;
            result.request_digests.push(response.request_digest.clone());
            let parsed = self.labels.parse(&response.text, stage);
            result.raw_responses.push(response.text);
            if let Ok(p) = parsed {
                return Ok(Some(p));
            }
        }
        Ok(None)
    }
}

/// One subject's labels in two runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentDiff {
    pub subject: Subject,
    pub mode: JudgmentMode,
    pub rag: bool,
    pub baseline: Option<GoodEvilLabel>,
    pub candidate: Option<GoodEvilLabel>,
    pub changed: bool,
}

/// Compare two runs subject by subject (for example four versus eight
/// few-shot examples). Subjects present in only one run show `None` on
/// the other side.
pub fn diff_results(baseline: &[JudgmentResult], candidate: &[JudgmentResult]) -> Vec<JudgmentDiff> {
    type Key = (Subject, JudgmentMode, bool);
    let mut map: BTreeMap<Key, (Option<GoodEvilLabel>, Option<GoodEvilLabel>, bool, bool)> = BTreeMap::new();
    for r in baseline {
        let e = map.entry((r.subject.clone(), r.mode, r.rag)).or_insert((None, None, false, false));
        e.0 = r.label;
        e.2 = true;
    }
    for r in candidate {
        let e = map.entry((r.subject.clone(), r.mode, r.rag)).or_insert((None, None, false, false));
        e.1 = r.label;
        e.3 = true;
    }
    map.into_iter()
        .map(|((subject, mode, rag), (a, b, in_a, in_b))| JudgmentDiff {
            subject,
            mode,
            rag,
            baseline: a,
            candidate: b,
            changed: a != b || in_a != in_b,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{MentionMethod, SentenceRecord};
    use crate::error::GatewayError;
    use crate::llm::{LlmResponse, ResponseSource};
    use crate::profile::Cohort;
    use alloc::collections::BTreeSet;
    use alloc::vec;
    use core::sync::atomic::{AtomicUsize, Ordering};

    /// Replies by stage: (purpose, reply) pairs, first match wins.
    struct Scripted {
        replies: Vec<(PurposeTag, &'static str, &'static str)>,
        calls: AtomicUsize,
    }

    impl Scripted {
        fn new(replies: Vec<(PurposeTag, &'static str, &'static str)>) -> Self {
            Self { replies, calls: AtomicUsize::new(0) }
        }
    }

    impl Completion for Scripted {
        fn complete(&self, r: &PromptRequest) -> Result<LlmResponse, GatewayError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            let text = format!("{}\n{}", r.system_text, r.user_text);
            self.replies
                .iter()
                .find(|(p, needle, _)| *p == r.purpose_tag && text.contains(needle))
                .map(|(_, _, reply)| LlmResponse {
                    text: (*reply).into(),
                    source: ResponseSource::Replay,
                    request_digest: r.digest(),
                })
                .ok_or(GatewayError::ReplayMiss { digest: r.digest() })
        }
    }

    fn cluster(celebrity: &str, name: &str, description: &str) -> AspectCluster {
        AspectCluster {
            celebrity: celebrity.into(),
            aspect_name: name.into(),
            description: description.into(),
            member_sentences: vec![SentenceRecord {
                doc_url: "u".into(),
                doc_rank: 1,
                sentence_index: 0,
                text: description.into(),
                mentions_target: true,
                mention_method: MentionMethod::AliasMatch,
            }],
            source_urls: BTreeSet::from(["u".to_string()]),
            name_truncated: false,
            name_fallback: false,
            aggregated: true,
        }
    }

    pub(crate) fn four_examples() -> Vec<FewShotExample> {
        vec![
            FewShotExample { text: "Taro Example was convicted of fraud.".into(), label: GoodEvilLabel::Illegal },
            FewShotExample {
                text: "Hanako Sample mocked a colleague on TV.".into(),
                label: GoodEvilLabel::LegalButUnethical,
            },
            FewShotExample {
                text: "Jiro Placeholder's style is widely disliked.".into(),
                label: GoodEvilLabel::LegalEthicalButUnpopularAndCriticized,
            },
            FewShotExample {
                text: "Saburo Dummy released a new album.".into(),
                label: GoodEvilLabel::NotParticularlyEvil,
            },
        ]
    }

    #[test]
    fn scandal_aspect_is_illegal() {
        let llm = Scripted::new(vec![
            (PurposeTag::JudgeStage1, "Scandals and legal problems", "evil"),
            (PurposeTag::JudgeStage2, "Scandals and legal problems", "illegal"),
        ]);
        let c = cluster(
            "Justin Timberlake",
            "Scandals and legal problems",
            "He was arrested for driving while intoxicated.",
        );
        let s = LlmSettings::default();
        let t = LabelTable::default();
        let r = Judge::new(&llm, &s, &t).judge_aspect(&c, JudgmentMode::ZeroShot, &[]).unwrap();
        assert_eq!(r.stage1_evil, Some(true));
        assert_eq!(r.label, Some(GoodEvilLabel::Illegal));
        assert_eq!(r.raw_responses, vec!["evil", "illegal"]);
        assert_eq!(llm.calls.load(Ordering::SeqCst), 2);
        assert!(r.satisfies_gating());
    }

    #[test]
    fn not_evil_aspect_uses_one_call() {
        let llm = Scripted::new(vec![(PurposeTag::JudgeStage1, "musical activities", "not particularly evil")]);
        let c = cluster("Pierre Taki", "musical activities", "He is a member of Denki Groove.");
        let s = LlmSettings::default();
        let t = LabelTable::default();
        let r = Judge::new(&llm, &s, &t).judge_aspect(&c, JudgmentMode::ZeroShot, &[]).unwrap();
        assert_eq!(r.label, Some(GoodEvilLabel::NotParticularlyEvil));
        assert_eq!(llm.calls.load(Ordering::SeqCst), 1);
        assert_eq!(r.request_digests.len(), 1);
    }

    #[test]
    fn recorded_mismatch_against_reference() {
        let llm = Scripted::new(vec![
            (PurposeTag::JudgeStage1, "underground business", "evil"),
            (PurposeTag::JudgeStage2, "underground business", "illegal"),
        ]);
        let c = cluster(
            "Hiroyuki Miyasako",
            "problem of underground business dealings",
            "He attended a party of a criminal group.",
        );
        let s = LlmSettings::default();
        let t = LabelTable::default();
        let r = Judge::new(&llm, &s, &t).judge_aspect(&c, JudgmentMode::FewShot, &four_examples()).unwrap();
        assert_eq!(r.label, Some(GoodEvilLabel::Illegal));
        assert_ne!(r.label, Some(GoodEvilLabel::LegalButUnethical));
    }

    #[test]
    fn celebrity_with_and_without_context() {
        let jt = CelebrityProfile::new("Justin Timberlake", Cohort::ScandalForeign).with_scandal(2024, Some(6));
        let llm = Scripted::new(vec![(PurposeTag::JudgeCelebrity, "evil\".", "not particularly evil")]);
        let s = LlmSettings::default();
        let t = LabelTable::default();
        let judge = Judge::new(&llm, &s, &t);
        let r = judge.judge_celebrity(&jt, None, JudgmentMode::ZeroShot, &[]).unwrap();
        assert_eq!(r.label, Some(GoodEvilLabel::NotParticularlyEvil));
        assert!(!r.rag);

        let set = AspectSet {
            celebrity: "Justin Timberlake".into(),
            clusters: vec![cluster("Justin Timberlake", "Scandals and legal problems", "Arrested in 2024.")],
            run_id: "r".into(),
            uncategorized: vec![],
        };
        let llm = Scripted::new(vec![
            (PurposeTag::JudgeCelebrity, "three categories", "illegal"),
            (PurposeTag::JudgeCelebrity, "Arrested in 2024", "evil"),
        ]);
        let judge = Judge::new(&llm, &s, &t);
        let r = judge.judge_celebrity(&jt, Some(&set), JudgmentMode::ZeroShot, &[]).unwrap();
        assert_eq!(r.label, Some(GoodEvilLabel::Illegal));
        assert!(r.rag);

        let empty = AspectSet { clusters: vec![], ..set };
        assert_eq!(
            judge.judge_celebrity(&jt, Some(&empty), JudgmentMode::ZeroShot, &[]),
            Err(JudgmentError::MissingContext)
        );
    }

    #[test]
    fn no_rag_prompt_has_only_the_name() {
        let t = JudgmentTarget::Celebrity { name: "Sean Combs", context: None };
        let p = build_judgment_prompt(&t, JudgmentMode::ZeroShot, &[], Stage::Stage1, &LlmSettings::default());
        assert_eq!(p.user_text, "Celebrity: Sean Combs");
        assert_eq!(p.purpose_tag, PurposeTag::JudgeCelebrity);
    }

    #[test]
    fn prompt_mode_contract() {
        let t = JudgmentTarget::Aspect { celebrity: "A", aspect_name: "b", description: "c" };
        let s = LlmSettings::default();
        let zero = build_judgment_prompt(&t, JudgmentMode::ZeroShot, &four_examples(), Stage::Stage1, &s);
        assert!(zero.examples.is_empty());

        let mut shuffled = four_examples();
        shuffled.reverse();
        let few = build_judgment_prompt(&t, JudgmentMode::FewShot, &shuffled, Stage::Stage2, &s);
        let labels: Vec<&str> = few.examples.iter().map(|e| e.label_text.as_str()).collect();
        assert_eq!(
            labels,
            vec![
                "illegal",
                "legal but unethical",
                "legal and ethical but unpopular and criticized",
                "not particularly evil"
            ]
        );
        for l in GoodEvilLabel::EVIL {
            assert!(few.system_text.contains(l.definition()));
        }
        assert_eq!(
            few.system_text,
            build_judgment_prompt(&t, JudgmentMode::ZeroShot, &[], Stage::Stage2, &s).system_text
        );
        assert_eq!(few.user_text, zero.user_text);

        let again = build_judgment_prompt(&t, JudgmentMode::FewShot, &shuffled, Stage::Stage2, &s);
        assert_eq!(few.digest(), again.digest());

        let stage1 = build_judgment_prompt(&t, JudgmentMode::FewShot, &shuffled, Stage::Stage1, &s);
        let labels: Vec<&str> = stage1.examples.iter().map(|e| e.label_text.as_str()).collect();
        assert_eq!(labels, vec!["evil", "evil", "evil", "not particularly evil"]);
    }

    #[test]
    fn reprompt_then_invalid() {
        let llm = Scripted::new(vec![(PurposeTag::JudgeStage1, "x", "I cannot say.")]);
        let c = cluster("A", "x", "y");
        let s = LlmSettings::default();
        let t = LabelTable::default();
        let r = Judge::new(&llm, &s, &t).judge_aspect(&c, JudgmentMode::ZeroShot, &[]).unwrap();
        assert!(!r.is_valid());
        assert_eq!(r.reprompts, 1);
        assert_eq!(r.request_digests.len(), 2);
        assert_ne!(r.request_digests[0], r.request_digests[1]);
    }

    #[test]
    fn example_validation() {
        let jt = CelebrityProfile::new("Justin Timberlake", Cohort::Other);
        assert!(validate_examples(&four_examples(), core::slice::from_ref(&jt)).is_ok());
        assert_eq!(validate_examples(&four_examples()[..3], &[]), Err(JudgmentError::IncompleteExamples));
        let mut bad = four_examples();
        bad[0].text = "Justin Timberlake was arrested.".into();
        assert!(matches!(validate_examples(&bad, &[jt]), Err(JudgmentError::ExampleNamesCelebrity(_))));
    }

    #[test]
    fn diff_report() {
        let mk = |label| JudgmentResult {
            subject: Subject::aspect("A", "b"),
            stage1_evil: Some(label != GoodEvilLabel::NotParticularlyEvil),
            label: Some(label),
            mode: JudgmentMode::FewShot,
            rag: true,
            raw_responses: vec![],
            request_digests: vec![],
            reprompts: 0,
        };
        let d = diff_results(&[mk(GoodEvilLabel::Illegal)], &[mk(GoodEvilLabel::Illegal)]);
        assert_eq!(d.len(), 1);
        assert!(!d[0].changed);
        let d = diff_results(&[mk(GoodEvilLabel::Illegal)], &[mk(GoodEvilLabel::LegalButUnethical)]);
        assert!(d[0].changed);
    }
}
