//! Categorizing mention sentences into named aspects with aggregated
//! descriptions.
//!
//! The flow is: chunk the mentions, ask the model to group each chunk by
//! topic, unify topics across chunks, name every resulting category,
//! aggregate a description from its members, and finally merge clusters
//! whose names are equal or judged synonymous.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::corpus::SentenceRecord;
use crate::error::{AspectError, GatewayError};
use crate::llm::{Completion, LlmSettings, PromptRequest, PurposeTag};
use crate::profile::CelebrityProfile;
use crate::text::{clean_aspect_name, normalize_aspect_name, truncate_chars};

pub const MAX_CHUNK_SENTENCES: usize = 50;
pub const MAX_CHUNK_CHARS: usize = 6_000;
/// Cluster counts outside this range trigger a sanity warning.
pub const EXPECTED_ASPECT_RANGE: (usize, usize) = (2, 30);
const FALLBACK_DESCRIPTION_CHARS: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectCluster {
    pub celebrity: String,
    pub aspect_name: String,
    pub description: String,
    pub member_sentences: Vec<SentenceRecord>,
    pub source_urls: BTreeSet<String>,
    /// Name was cut to the length limit.
    #[serde(default)]
    pub name_truncated: bool,
    /// Name is a `topic-<id>` placeholder.
    #[serde(default)]
    pub name_fallback: bool,
    /// Description was produced by the model rather than by concatenation.
    #[serde(default = "yes")]
    pub aggregated: bool,
}

fn yes() -> bool {
    true
}

impl AspectCluster {
    pub fn normalized_name(&self) -> String {
        normalize_aspect_name(&self.aspect_name)
    }

    fn refresh_sources(&mut self) {
        self.source_urls = self.member_sentences.iter().map(|s| s.doc_url.clone()).collect();
    }

    /// Check the cluster invariants: non-empty members that all mention the
    /// target, and `source_urls` equal to the members' documents.
    pub fn is_consistent(&self) -> bool {
        !self.member_sentences.is_empty()
            && self.member_sentences.iter().all(|s| s.mentions_target)
            && self.source_urls == self.member_sentences.iter().map(|s| s.doc_url.clone()).collect::<BTreeSet<_>>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectSet {
    pub celebrity: String,
    pub clusters: Vec<AspectCluster>,
    pub run_id: String,
    /// Mentions the model never placed in a category. Kept for audit only.
    #[serde(default)]
    pub uncategorized: Vec<SentenceRecord>,
}

impl AspectSet {
    pub fn names_are_unique(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.clusters.iter().all(|c| seen.insert(c.normalized_name()))
    }

    pub fn sort_canonical(&mut self) {
        self.clusters.sort_by_key(|c| (c.normalized_name(), c.aspect_name.clone()));
    }

    pub fn find(&self, name: &str) -> Option<&AspectCluster> {
        let key = normalize_aspect_name(name);
        self.clusters.iter().find(|c| c.normalized_name() == key)
    }
}

/// One category: ids are positions in the mention slice given to
/// [`categorize_sentences`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Category {
    pub id: usize,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Categorization {
    pub categories: Vec<Category>,
    pub uncategorized: Vec<usize>,
    pub log: Vec<String>,
}

/// Split `texts` into consecutive chunks bounded by sentence count and
/// total characters. A sentence longer than `max_chars` gets its own chunk.
pub fn chunk_ranges(texts: &[&str], max_sentences: usize, max_chars: usize) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = 0;
    for (i, t) in texts.iter().enumerate() {
        let n = t.chars().count();
        if i > start && (i - start >= max_sentences || chars + n > max_chars) {
            out.push(start..i);
            start = i;
            chars = 0;
        }
        chars += n;
    }
    if start < texts.len() {
        out.push(start..texts.len());
    }
    out
}

#[derive(Deserialize)]
struct RawGroup {
    #[serde(default)]
    topic: String,
    sentences: Vec<usize>,
}

/// Slice out the first JSON array in `text`, tolerating code fences or prose.
fn json_array(text: &str) -> Option<&str> {
    let start = text.find('[')?;
    let end = text.rfind(']')?;
    (end > start).then(|| &text[start..=end])
}

fn soft(e: GatewayError) -> Result<String, AspectError> {
    match e {
        GatewayError::ReplayMiss { .. } => Ok(format!("{e}")),
        other => Err(AspectError::Gateway(other)),
    }
}

const CATEGORIZE_SYSTEM: &str = "You organize sentences collected from Japanese web pages about \
one person. Group the sentences by what topic about the person they describe, so that sentences \
with overlapping content end up in the same group.";

const STRICT_SUFFIX: &str = "\nYour previous answer could not be used. Reply with the JSON array only, no other text.";

fn categorize_prompt(name: &str, texts: &[&str], strict: bool) -> String {
    let mut s = format!("Person: {name}\nSentences:\n");
    for (i, t) in texts.iter().enumerate() {
        let _ = writeln!(s, "[{}] {}", i + 1, t);
    }
    s.push_str(
        "Group the sentences by topic. Every sentence number must appear in exactly one group. \
         Reply with a JSON array of objects: [{\"topic\": \"...\", \"sentences\": [1, 2]}]",
    );
    if strict {
        s.push_str(STRICT_SUFFIX);
    }
    s
}

/// Parse a grouping reply for `n` sentences. Ids are 1-based in the reply;
/// the first group claiming an id keeps it.
fn parse_groups(text: &str, n: usize) -> Option<Vec<(String, Vec<usize>)>> {
    let raw: Vec<RawGroup> = serde_json::from_str(json_array(text)?).ok()?;
    let mut taken = vec![false; n];
    let mut out = Vec::new();
    for g in raw {
        let mut members = Vec::new();
        for id in g.sentences {
            if (1..=n).contains(&id) && !taken[id - 1] {
                taken[id - 1] = true;
                members.push(id - 1);
            }
        }
        if !members.is_empty() {
            members.sort_unstable();
            out.push((g.topic, members));
        }
    }
    (!out.is_empty()).then_some(out)
}

/// Parse a reply of the form `[[1, 3], [2]]` over `n` items (1-based).
fn parse_index_groups(text: &str, n: usize) -> Option<Vec<Vec<usize>>> {
    let raw: Vec<Vec<usize>> = serde_json::from_str(json_array(text)?).ok()?;
    let mut taken = vec![false; n];
    let mut out = Vec::new();
    for g in raw {
        let mut members: Vec<usize> = Vec::new();
        for id in g {
            if (1..=n).contains(&id) && !taken[id - 1] {
                taken[id - 1] = true;
                members.push(id - 1);
            }
        }
        if !members.is_empty() {
            members.sort_unstable();
            out.push(members);
        }
    }
    for (i, t) in taken.iter().enumerate() {
        if !t {
            out.push(vec![i]);
        }
    }
    Some(out)
}

/// A topic name with the chunk-local indices of its sentences.
type TopicGroup = (String, Vec<usize>);

fn categorize_chunk<C: Completion + ?Sized>(
    texts: &[&str],
    profile: &CelebrityProfile,
    llm: &C,
    settings: &LlmSettings,
    log: &mut Vec<String>,
) -> Result<Option<Vec<TopicGroup>>, AspectError> {
    for strict in [false, true] {
        let req = settings.request(
            PurposeTag::Categorize,
            CATEGORIZE_SYSTEM.into(),
            categorize_prompt(&profile.canonical_name, texts, strict),
            Vec::new(),
        );
        match llm.complete(&req) {
            Ok(resp) => match parse_groups(&resp.text, texts.len()) {
                Some(groups) => return Ok(Some(groups)),
                None => log.push(format!("unparseable categorization reply (strict={strict})")),
            },
            Err(e) => log.push(soft(e)?),
        }
    }
    Ok(None)
}

const UNIFY_SYSTEM: &str = "You merge topic labels that were produced separately for different \
batches of sentences about one person. Labels describing the same topic belong together.";

fn unify_prompt(name: &str, topics: &[(String, &str)]) -> String {
    let mut s = format!("Person: {name}\nTopics:\n");
    for (i, (topic, sample)) in topics.iter().enumerate() {
        let _ = writeln!(s, "[{}] {} (e.g. \"{}\")", i + 1, topic, sample);
    }
    s.push_str(
        "Group the topic numbers that describe the same topic. Reply with a JSON array of \
         arrays of numbers, e.g. [[1, 3], [2]].",
    );
    s
}

/// Group mention sentences by content.
///
/// Every mention ends up in exactly one category or in the uncategorized
/// bucket. Categories are ordered by their first member.
pub fn categorize_sentences<C: Completion + ?Sized>(
    mentions: &[SentenceRecord],
    profile: &CelebrityProfile,
    llm: &C,
    settings: &LlmSettings,
) -> Result<Categorization, AspectError> {
    if mentions.is_empty() {
        return Err(AspectError::EmptyInput);
    }
    let texts: Vec<&str> = mentions.iter().map(|m| m.text.as_str()).collect();
    let mut out = Categorization::default();
    // (topic label, global member ids)
    let mut provisional: Vec<(String, Vec<usize>)> = Vec::new();
    let mut assigned = vec![false; mentions.len()];

    for range in chunk_ranges(&texts, MAX_CHUNK_SENTENCES, MAX_CHUNK_CHARS) {
        let offset = range.start;
        let chunk = &texts[range];
        match categorize_chunk(chunk, profile, llm, settings, &mut out.log)? {
            Some(groups) => {
                for (topic, members) in groups {
                    let global: Vec<usize> = members.into_iter().map(|m| m + offset).collect();
                    for &g in &global {
                        assigned[g] = true;
                    }
                    provisional.push((topic, global));
                }
            }
            None => out.log.push(format!("chunk starting at mention {offset} left uncategorized after retry")),
        }
    }

    let merged: Vec<Vec<usize>> = if provisional.len() > 1 && chunk_count(&texts) > 1 {
        unify_topics(&provisional, &texts, profile, llm, settings, &mut out.log)?
    } else {
        provisional.into_iter().map(|(_, m)| m).collect()
    };

    let mut categories: Vec<Vec<usize>> = merged.into_iter().filter(|m| !m.is_empty()).collect();
    for c in &mut categories {
        c.sort_unstable();
    }
    categories.sort_by_key(|c| c[0]);
    out.categories = categories.into_iter().enumerate().map(|(id, members)| Category { id, members }).collect();
    out.uncategorized = (0..mentions.len()).filter(|&i| !assigned[i]).collect();
    Ok(out)
}

fn chunk_count(texts: &[&str]) -> usize {
    chunk_ranges(texts, MAX_CHUNK_SENTENCES, MAX_CHUNK_CHARS).len()
}

fn unify_topics<C: Completion + ?Sized>(
    provisional: &[(String, Vec<usize>)],
    texts: &[&str],
    profile: &CelebrityProfile,
    llm: &C,
    settings: &LlmSettings,
    log: &mut Vec<String>,
) -> Result<Vec<Vec<usize>>, AspectError> {
    let topics: Vec<(String, &str)> = provisional.iter().map(|(t, m)| (t.clone(), texts[m[0]])).collect();
    let req = settings.request(
        PurposeTag::Categorize,
        UNIFY_SYSTEM.into(),
        unify_prompt(&profile.canonical_name, &topics),
        Vec::new(),
    );
    let groups = match llm.complete(&req) {
        Ok(resp) => parse_index_groups(&resp.text, provisional.len()),
        Err(e) => {
            log.push(soft(e)?);
            None
        }
    };
    let groups = groups.unwrap_or_else(|| {
        log.push("topic unification unavailable; merging identical labels only".into());
        let mut by_name: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, (t, _)) in provisional.iter().enumerate() {
            let key = if t.trim().is_empty() { format!("#{i}") } else { normalize_aspect_name(t) };
            by_name.entry(key).or_default().push(i);
        }
        by_name.into_values().collect()
    });
    Ok(groups.into_iter().map(|g| g.into_iter().flat_map(|i| provisional[i].1.iter().copied()).collect()).collect())
}

/// Result of [`name_category`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AspectName {
    pub name: String,
    pub truncated: bool,
    pub fallback: bool,
}

const NAME_SYSTEM: &str = "You name the topic that a group of sentences about one person has in \
common, answering what the topic is. Reply with a short noun phrase of at most 60 characters and \
nothing else.";

fn member_list(name: &str, members: &[&SentenceRecord]) -> String {
    let mut s = format!("Person: {name}\nSentences:\n");
    for m in members {
        let _ = writeln!(s, "- {}", m.text);
    }
    s
}

/// Ask the model what topic `members` share and clean up the answer.
pub fn name_category<C: Completion + ?Sized>(
    members: &[&SentenceRecord],
    category_id: usize,
    profile: &CelebrityProfile,
    llm: &C,
    settings: &LlmSettings,
) -> Result<AspectName, AspectError> {
    for strict in [false, true] {
        let mut user = member_list(&profile.canonical_name, members);
        user.push_str("What is the topic?");
        if strict {
            user.push_str("\nYour previous answer was empty. Reply with the topic name only.");
        }
        let req = settings.request(PurposeTag::NameAspect, NAME_SYSTEM.into(), user, Vec::new());
        match llm.complete(&req) {
            Ok(resp) => {
                let (name, truncated) = clean_aspect_name(&resp.text);
                if !name.is_empty() {
                    return Ok(AspectName { name, truncated, fallback: false });
                }
            }
            Err(e) => {
                soft(e)?;
            }
        }
    }
    Ok(AspectName { name: format!("topic-{category_id}"), truncated: false, fallback: true })
}

const AGGREGATE_SYSTEM: &str = "You write one coherent paragraph describing one aspect of a \
person. Use only facts stated in the given sentences; do not add anything else.";

/// Result of [`aggregate_description`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Description {
    pub text: String,
    pub aggregated: bool,
}

/// Synthesize one paragraph from the member sentences.
///
/// When the model is unavailable the members are concatenated (truncated)
/// and the result is flagged as not aggregated.
pub fn aggregate_description<C: Completion + ?Sized>(
    members: &[&SentenceRecord],
    profile: &CelebrityProfile,
    llm: &C,
    settings: &LlmSettings,
) -> Result<Description, AspectError> {
    let mut user = member_list(&profile.canonical_name, members);
    user.push_str("Write the aggregated description.");
    let req: PromptRequest = settings.request(PurposeTag::Aggregate, AGGREGATE_SYSTEM.into(), user, Vec::new());
    match llm.complete(&req) {
        Ok(resp) if !resp.text.trim().is_empty() => {
            Ok(Description { text: resp.text.trim().to_string(), aggregated: true })
        }
        Ok(_) => Ok(fallback_description(members)),
        Err(e) => {
            soft(e)?;
            Ok(fallback_description(members))
        }
    }
}

fn fallback_description(members: &[&SentenceRecord]) -> Description {
    let joined: Vec<&str> = members.iter().map(|m| m.text.as_str()).collect();
    Description { text: truncate_chars(&joined.join(" "), FALLBACK_DESCRIPTION_CHARS), aggregated: false }
}

const SYNONYM_SYSTEM: &str = "You decide which aspect names of one person describe the same \
topic and should be merged.";

/// Merge clusters with equal normalized names or names the model judges
/// synonymous. Merged clusters get the union of members and a fresh
/// description. Output is sorted by normalized name.
pub fn merge_duplicate_aspects<C: Completion + ?Sized>(
    set: AspectSet,
    profile: &CelebrityProfile,
    llm: &C,
    settings: &LlmSettings,
) -> Result<(AspectSet, Vec<String>), AspectError> {
    let mut log = Vec::new();
    let AspectSet { celebrity, clusters, run_id, uncategorized } = set;

    let mut by_name: BTreeMap<String, Vec<AspectCluster>> = BTreeMap::new();
    for c in clusters {
        by_name.entry(c.normalized_name()).or_default().push(c);
    }
    let mut groups: Vec<Vec<AspectCluster>> = by_name.into_values().collect();

    if groups.len() >= 2 {
        let names: Vec<String> = groups.iter().map(|g| representative(g).aspect_name.clone()).collect();
        let mut user = format!("Person: {}\nAspect names:\n", profile.canonical_name);
        for (i, n) in names.iter().enumerate() {
            let _ = writeln!(user, "[{}] {}", i + 1, n);
        }
        user.push_str(
            "List the groups of numbers whose names are synonymous, as a JSON array of arrays, \
             e.g. [[1, 4]]. Reply [] if none are synonymous.",
        );
        let req = settings.request(PurposeTag::Categorize, SYNONYM_SYSTEM.into(), user, Vec::new());
        let parsed = match llm.complete(&req) {
            Ok(resp) => {
                let p = parse_index_groups(&resp.text, groups.len());
                if p.is_none() {
                    log.push("unparseable synonym reply; exact-name merges only".into());
                }
                p
            }
            Err(e) => {
                log.push(soft(e)?);
                None
            }
        };
        if let Some(index_groups) = parsed {
            let mut slots: Vec<Option<Vec<AspectCluster>>> = groups.into_iter().map(Some).collect();
            groups = index_groups
                .into_iter()
                .map(|g| g.into_iter().flat_map(|i| slots[i].take().unwrap_or_default()).collect())
                .collect();
        }
    }

    let mut merged = Vec::with_capacity(groups.len());
    for group in groups {
        if group.len() == 1 {
            merged.extend(group);
            continue;
        }
        let rep = representative(&group).clone();
        let mut members: Vec<SentenceRecord> = Vec::new();
        let mut seen = BTreeSet::new();
        for c in &group {
            for m in &c.member_sentences {
                if seen.insert((m.doc_url.clone(), m.sentence_index)) {
                    members.push(m.clone());
                }
            }
        }
        members.sort_by(|a, b| (a.order_key(), &a.doc_url).cmp(&(b.order_key(), &b.doc_url)));
        let refs: Vec<&SentenceRecord> = members.iter().collect();
        let desc = aggregate_description(&refs, profile, llm, settings)?;
        log.push(format!("merged {} clusters into {:?}", group.len(), rep.aspect_name));
        let mut cluster = AspectCluster {
            description: desc.text,
            aggregated: desc.aggregated,
            member_sentences: members,
            source_urls: BTreeSet::new(),
            ..rep
        };
        cluster.refresh_sources();
        merged.push(cluster);
    }

    let mut out = AspectSet { celebrity, clusters: merged, run_id, uncategorized };
    out.sort_canonical();
    Ok((out, log))
}

/// The cluster whose name a merged group keeps: most members, then the
/// smallest normalized name.
fn representative(group: &[AspectCluster]) -> &AspectCluster {
    group
        .iter()
        .min_by(|a, b| {
            b.member_sentences
                .len()
                .cmp(&a.member_sentences.len())
                .then_with(|| a.normalized_name().cmp(&b.normalized_name()))
                .then_with(|| a.aspect_name.cmp(&b.aspect_name))
        })
        .expect("non-empty group")
}

/// Result of [`extract_aspects`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AspectOutcome {
    pub set: AspectSet,
    pub log: Vec<String>,
}

/// Run categorization, naming, aggregation and merging over the kept
/// mentions of one celebrity.
pub fn extract_aspects<C: Completion + ?Sized>(
    mentions: &[SentenceRecord],
    profile: &CelebrityProfile,
    llm: &C,
    settings: &LlmSettings,
    run_id: &str,
) -> Result<AspectOutcome, AspectError> {
    let mut mentions: Vec<SentenceRecord> = mentions.iter().filter(|m| m.mentions_target).cloned().collect();
    mentions.sort_by(|a, b| (a.order_key(), &a.doc_url).cmp(&(b.order_key(), &b.doc_url)));

    let categorization = categorize_sentences(&mentions, profile, llm, settings)?;
    let mut log = categorization.log;
    let mut clusters = Vec::new();
    for cat in &categorization.categories {
        let members: Vec<&SentenceRecord> = cat.members.iter().map(|&i| &mentions[i]).collect();
        let name = name_category(&members, cat.id, profile, llm, settings)?;
        if name.truncated {
            log.push(format!("aspect name truncated: {:?}", name.name));
        }
        if name.fallback {
            log.push(format!("no name for category {}; using {:?}", cat.id, name.name));
        }
        let desc = aggregate_description(&members, profile, llm, settings)?;
        if !desc.aggregated {
            log.push(format!("description for {:?} not aggregated", name.name));
        }
        let mut cluster = AspectCluster {
            celebrity: profile.canonical_name.clone(),
            aspect_name: name.name,
            description: desc.text,
            member_sentences: members.into_iter().cloned().collect(),
            source_urls: BTreeSet::new(),
            name_truncated: name.truncated,
            name_fallback: name.fallback,
            aggregated: desc.aggregated,
        };
        cluster.refresh_sources();
        clusters.push(cluster);
    }
    let set = AspectSet {
        celebrity: profile.canonical_name.clone(),
        clusters,
        run_id: run_id.to_string(),
        uncategorized: categorization.uncategorized.iter().map(|&i| mentions[i].clone()).collect(),
    };
    let (set, merge_log) = merge_duplicate_aspects(set, profile, llm, settings)?;
    log.extend(merge_log);
    let n = set.clusters.len();
    if n < EXPECTED_ASPECT_RANGE.0 || n > EXPECTED_ASPECT_RANGE.1 {
        log.push(format!(
            "warning: {n} aspects for {} is outside the expected range {}..={}",
            profile.canonical_name, EXPECTED_ASPECT_RANGE.0, EXPECTED_ASPECT_RANGE.1
        ));
    }
    Ok(AspectOutcome { set, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::MentionMethod;
    use crate::llm::{LlmResponse, ResponseSource};
    use crate::profile::Cohort;
    use core::sync::atomic::{AtomicUsize, Ordering};

    /// Replies by purpose tag and a substring of the user prompt.
    struct Script {
        rules: Vec<(PurposeTag, &'static str, &'static str)>,
        calls: Calls,
    }

    #[derive(Default)]
    struct Calls(AtomicUsize);

    impl Calls {
        fn bump(&self) {
            self.0.fetch_add(1, Ordering::SeqCst);
        }
        fn get(&self) -> usize {
            self.0.load(Ordering::SeqCst)
        }
    }

    impl Completion for Script {
        fn complete(&self, r: &PromptRequest) -> Result<LlmResponse, GatewayError> {
            self.calls.bump();
            for (tag, needle, reply) in &self.rules {
                if *tag == r.purpose_tag && r.user_text.contains(needle) {
                    return Ok(LlmResponse {
                        text: (*reply).into(),
                        source: ResponseSource::Replay,
                        request_digest: r.digest(),
                    });
                }
            }
            Err(GatewayError::ReplayMiss { digest: r.digest() })
        }
    }

    fn profile() -> CelebrityProfile {
        CelebrityProfile::new("Justin Timberlake", Cohort::ScandalForeign).with_scandal(2024, Some(6))
    }

    fn mention(i: u32, text: &str) -> SentenceRecord {
        SentenceRecord {
            doc_url: format!("https://example.jp/{}", i % 2),
            doc_rank: 1 + i % 2,
            sentence_index: i,
            text: text.into(),
            mentions_target: true,
            mention_method: MentionMethod::AliasMatch,
        }
    }

    fn cluster(name: &str, members: Vec<SentenceRecord>) -> AspectCluster {
        let mut c = AspectCluster {
            celebrity: "Justin Timberlake".into(),
            aspect_name: name.into(),
            description: format!("about {name}"),
            member_sentences: members,
            source_urls: BTreeSet::new(),
            name_truncated: false,
            name_fallback: false,
            aggregated: true,
        };
        c.refresh_sources();
        c
    }

    #[test]
    fn empty_input_rejected() {
        let s = Script { rules: vec![], calls: Default::default() };
        assert_eq!(categorize_sentences(&[], &profile(), &s, &LlmSettings::default()), Err(AspectError::EmptyInput));
    }

    #[test]
    fn six_sentence_partition() {
        let mentions: Vec<SentenceRecord> = (0..6).map(|i| mention(i, &format!("s{i}"))).collect();
        let s = Script {
            rules: vec![(
                PurposeTag::Categorize,
                "[6] s5",
                r#"```json
[{"topic":"a","sentences":[1,2]},{"topic":"b","sentences":[3,4,5]},{"topic":"c","sentences":[6]}]
```"#,
            )],
            calls: Default::default(),
        };
        let cat = categorize_sentences(&mentions, &profile(), &s, &LlmSettings::default()).unwrap();
        let parts: Vec<Vec<usize>> = cat.categories.iter().map(|c| c.members.clone()).collect();
        assert_eq!(parts, vec![vec![0, 1], vec![2, 3, 4], vec![5]]);
        assert!(cat.uncategorized.is_empty());
    }

    #[test]
    fn failing_chunk_goes_to_uncategorized_after_one_retry() {
        let mentions: Vec<SentenceRecord> = (0..3).map(|i| mention(i, &format!("s{i}"))).collect();
        let s = Script { rules: vec![(PurposeTag::Categorize, "s0", "no json here")], calls: Default::default() };
        let cat = categorize_sentences(&mentions, &profile(), &s, &LlmSettings::default()).unwrap();
        assert!(cat.categories.is_empty());
        assert_eq!(cat.uncategorized, vec![0, 1, 2]);
        assert_eq!(s.calls.get(), 2);
    }

    #[test]
    fn chunking_bounds() {
        let long = "x".repeat(7_000);
        let texts: Vec<&str> = (0..120).map(|_| "abc").collect();
        let r = chunk_ranges(&texts, 50, 6_000);
        assert_eq!(r, vec![0..50, 50..100, 100..120]);
        let texts = vec!["a", long.as_str(), "b"];
        assert_eq!(chunk_ranges(&texts, 50, 6_000), vec![0..1, 1..2, 2..3]);
        let texts: Vec<&str> = (0..4).map(|_| "0123456789").collect();
        assert_eq!(chunk_ranges(&texts, 50, 25), vec![0..2, 2..4]);
    }

    #[test]
    fn cross_chunk_unification() {
        let texts: Vec<String> = (0..60).map(|i| format!("m{i:02}")).collect();
        let mentions: Vec<SentenceRecord> = texts.iter().enumerate().map(|(i, t)| mention(i as u32, t)).collect();
        let first: String = {
            let ids: Vec<String> = (1..=50).map(|i| i.to_string()).collect();
            format!("[{{\"topic\":\"music\",\"sentences\":[{}]}}]", ids.join(","))
        };
        let first: &'static str = alloc::boxed::Box::leak(first.into_boxed_str());
        let s = Script {
            rules: vec![
                (PurposeTag::Categorize, "[1] m00", first),
                (
                    PurposeTag::Categorize,
                    "[1] m50",
                    r#"[{"topic":"Music","sentences":[1,2,3,4,5]},{"topic":"arrest","sentences":[6,7,8,9,10]}]"#,
                ),
                (PurposeTag::Categorize, "Topics:", "[[1,2],[3]]"),
            ],
            calls: Default::default(),
        };
        let cat = categorize_sentences(&mentions, &profile(), &s, &LlmSettings::default()).unwrap();
        assert_eq!(cat.categories.len(), 2);
        assert_eq!(cat.categories[0].members, (0..55).collect::<Vec<_>>());
        assert_eq!(cat.categories[1].members, (55..60).collect::<Vec<_>>());
    }

    #[test]
    fn naming_rules() {
        let m = mention(0, "s0");
        let members = vec![&m];
        let quoted = Script {
            rules: vec![(PurposeTag::NameAspect, "s0", "\"Scandals and legal problems\"")],
            calls: Default::default(),
        };
        let n = name_category(&members, 0, &profile(), &quoted, &LlmSettings::default()).unwrap();
        assert_eq!(n.name, "Scandals and legal problems");
        assert!(!n.truncated && !n.fallback);

        let long: &'static str = alloc::boxed::Box::leak(
            "Activities related to the music industry and a great many other things ".repeat(3).into_boxed_str(),
        );
        let s = Script { rules: vec![(PurposeTag::NameAspect, "s0", long)], calls: Default::default() };
        let n = name_category(&members, 0, &profile(), &s, &LlmSettings::default()).unwrap();
        assert!(n.truncated);
        assert!(n.name.chars().count() <= 60);
        assert!(long.starts_with(&n.name));
        assert!(long[n.name.len()..].starts_with(' '));

        let empty = Script { rules: vec![(PurposeTag::NameAspect, "s0", "  ")], calls: Default::default() };
        let n = name_category(&members, 7, &profile(), &empty, &LlmSettings::default()).unwrap();
        assert_eq!(n.name, "topic-7");
        assert!(n.fallback);
        assert_eq!(empty.calls.get(), 2);
    }

    #[test]
    fn aggregation_singleton_and_fallback() {
        let m = mention(0, "He was arrested in June.");
        let echo = Script {
            rules: vec![(PurposeTag::Aggregate, "He was arrested", "He was arrested in June.")],
            calls: Default::default(),
        };
        let d = aggregate_description(&[&m], &profile(), &echo, &LlmSettings::default()).unwrap();
        assert_eq!(d, Description { text: "He was arrested in June.".into(), aggregated: true });

        let none = Script { rules: vec![], calls: Default::default() };
        let d = aggregate_description(&[&m, &m], &profile(), &none, &LlmSettings::default()).unwrap();
        assert!(!d.aggregated);
        assert_eq!(d.text, "He was arrested in June. He was arrested in June.");
    }

    #[test]
    fn aggregation_independent_of_cluster_order() {
        let a = mention(0, "alpha");
        let b = mention(1, "beta");
        let s = Script {
            rules: vec![(PurposeTag::Aggregate, "alpha", "A."), (PurposeTag::Aggregate, "beta", "B.")],
            calls: Default::default(),
        };
        let run = |order: &[&SentenceRecord]| -> Vec<String> {
            order
                .iter()
                .map(|m| aggregate_description(&[*m], &profile(), &s, &LlmSettings::default()).unwrap().text)
                .collect()
        };
        let forward = run(&[&a, &b]);
        let mut backward = run(&[&b, &a]);
        backward.reverse();
        assert_eq!(forward, backward);
    }

    #[test]
    fn normalization_merge() {
        let set = AspectSet {
            celebrity: "X".into(),
            clusters: vec![
                cluster("YouTube activities", vec![mention(0, "a")]),
                cluster("youtube  activities", vec![mention(1, "b")]),
            ],
            run_id: "r".into(),
            uncategorized: vec![],
        };
        let s = Script { rules: vec![(PurposeTag::Aggregate, "- a", "merged")], calls: Default::default() };
        let (out, _) = merge_duplicate_aspects(set, &profile(), &s, &LlmSettings::default()).unwrap();
        assert_eq!(out.clusters.len(), 1);
        assert_eq!(out.clusters[0].member_sentences.len(), 2);
        assert_eq!(out.clusters[0].description, "merged");
        assert!(out.clusters[0].is_consistent());
        assert!(out.names_are_unique());
    }

    #[test]
    fn synonym_merge_and_noop() {
        let set = AspectSet {
            celebrity: "X".into(),
            clusters: vec![
                cluster("musical activities", vec![mention(0, "a"), mention(2, "c")]),
                cluster("music career", vec![mention(1, "b")]),
                cluster("acting", vec![mention(3, "d")]),
            ],
            run_id: "r".into(),
            uncategorized: vec![],
        };
        let no = Script { rules: vec![(PurposeTag::Categorize, "Aspect names", "[]")], calls: Default::default() };
        let (same, _) = merge_duplicate_aspects(set.clone(), &profile(), &no, &LlmSettings::default()).unwrap();
        let mut expected = set.clone();
        expected.sort_canonical();
        assert_eq!(same, expected);

        // sorted names: acting, music career, musical activities
        let yes = Script {
            rules: vec![
                (PurposeTag::Categorize, "Aspect names", "[[2,3]]"),
                (PurposeTag::Aggregate, "- a", "music description"),
            ],
            calls: Default::default(),
        };
        let (merged, _) = merge_duplicate_aspects(set, &profile(), &yes, &LlmSettings::default()).unwrap();
        assert_eq!(merged.clusters.len(), 2);
        let music = merged.find("musical activities").unwrap();
        let mut texts: Vec<&str> = music.member_sentences.iter().map(|m| m.text.as_str()).collect();
        texts.sort_unstable();
        assert_eq!(texts, vec!["a", "b", "c"]);

        let (again, _) = merge_duplicate_aspects(merged.clone(), &profile(), &yes, &LlmSettings::default()).unwrap();
        assert_eq!(again, merged);
    }

    #[test]
    fn gateway_failure_keeps_exact_merges_only() {
        let set = AspectSet {
            celebrity: "X".into(),
            clusters: vec![cluster("b", vec![mention(0, "a")]), cluster("a", vec![mention(1, "b")])],
            run_id: "r".into(),
            uncategorized: vec![],
        };
        let none = Script { rules: vec![], calls: Default::default() };
        let (out, log) = merge_duplicate_aspects(set, &profile(), &none, &LlmSettings::default()).unwrap();
        assert_eq!(out.clusters.len(), 2);
        assert_eq!(out.clusters[0].aspect_name, "a");
        assert!(!log.is_empty());
    }
}
