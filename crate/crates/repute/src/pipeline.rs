//! Stage orchestration: collect → aspects → judge → evaluate.
//!
//! Each stage writes only under its own directory of the output root and
//! records the digest of its inputs and of every file it wrote in a
//! `stage.json`. A stage whose input digest and outputs are unchanged is
//! reused; a stage whose upstream outputs were altered refuses to run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use tracing::{info, warn};

use repute_core::corpus::{filter_mentions, SentenceDraft, MAX_SENTENCES_PER_DOC};
use repute_core::eval::{
    accuracy, auto_assist_match, build_confusion_matrix, compute_recall_precision, cutoff_breakdown, overlap_analysis,
    AccuracyReport, MatchMapping, OverlapRow, Provenance, ReferenceBook, ReferenceSet, TRAINING_CUTOFF,
};
use repute_core::judgment::{diff_results, validate_examples};
use repute_core::text::segment_sentences;
use repute_core::{
    aspects::extract_aspects, AspectCluster, AspectError, AspectSet, CelebrityProfile, FewShotExample, GatewayError,
    Judge, JudgmentError, JudgmentMode, JudgmentResult, LabelTable, LlmSettings, SentenceRecord,
};

use crate::clock::{Clock, FixedClock, SystemClock};
use crate::config::{ConfigError, FetchBackend, ProviderKind, RunConfig, SearchBackend};
use crate::fetch::{fetch_all, DocumentRecord, Fetcher, FixtureFetcher, HttpFetcher, PageCache};
use crate::files::{
    file_digest, load_baseline, load_examples, load_mappings, load_profiles, load_references, read_json, read_jsonl,
    sha256_hex, slug, to_jsonl, write_atomic, FileError, MappingEntry,
};
use crate::gateway::{Gateway, LlmMode, OpenAiProvider, Provider, RateLimiter, ReplayStore, RetryPolicy};
use crate::manifest::{RunManifest, StageRecord, PIPELINE_NOTES};
use crate::report::{render_report, EvaluationReport, ModeAccuracy, RagRow};
use crate::script::ScriptedProvider;
use crate::search::{search_pages, DuckDuckGoSearch, FixtureSearch, SearchError, SearchProvider};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("stale input: {0}")]
    StaleInput(String),
    #[error("stage {stage} failed: {message}")]
    Stage { stage: String, message: String },
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::StaleInput(_) | PipelineError::Stage { .. } => 3,
        }
    }

    fn config(msg: impl ToString) -> Self {
        PipelineError::Config(ConfigError::Invalid(msg.to_string()))
    }
}

fn stage_err(stage: &str) -> impl Fn(&dyn std::fmt::Display) -> PipelineError + '_ {
    move |e| PipelineError::Stage { stage: stage.into(), message: e.to_string() }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Restrict the run to these celebrities (canonical name or alias).
    pub profiles: Vec<String>,
    pub mode: Option<LlmMode>,
    pub output_dir: Option<PathBuf>,
}

/// Everything a command needs, built once from the config.
pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub all_profiles: Vec<CelebrityProfile>,
    pub profiles: Vec<CelebrityProfile>,
    pub settings: LlmSettings,
    pub run_id: String,
    pub clock: Box<dyn Clock>,
    pub gateway: Gateway,
    pub search: Box<dyn SearchProvider>,
    pub fetcher: Box<dyn Fetcher>,
    pub cache: PageCache,
    fixture_path: PathBuf,
    fixture_digest: String,
}

/// Outcome of one stage.
#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub record: StageRecord,
    pub reused: bool,
}

const STAGE_DIRS: [(&str, &str); 3] = [("collect", "corpus"), ("aspects", "aspects"), ("judge", "judgments")];

fn load_err(e: FileError) -> PipelineError {
    PipelineError::config(e)
}

impl Context {
    pub fn new(mut config: RunConfig, options: RunOptions) -> Result<Self, PipelineError> {
        if let Some(out) = options.output_dir {
            config.output_dir = out;
        }
        if let Some(mode) = options.mode {
            config.llm.mode = mode;
        }
        config.validate()?;

        let all_profiles = load_profiles(&config.resolve(&config.profiles_path)).map_err(load_err)?;
        let profiles = if options.profiles.is_empty() {
            all_profiles.clone()
        } else {
            let mut picked = Vec::new();
            for want in &options.profiles {
                let p = all_profiles
                    .iter()
                    .find(|p| p.canonical_name == *want || p.query_aliases.contains(want))
                    .ok_or_else(|| PipelineError::config(format!("unknown profile {want:?}")))?;
                if !picked.contains(p) {
                    picked.push(p.clone());
                }
            }
            picked
        };

        let clock: Box<dyn Clock> = match &config.fixed_clock {
            Some(ts) => Box::new(FixedClock(
                chrono::DateTime::parse_from_rfc3339(ts).map_err(PipelineError::config)?.with_timezone(&chrono::Utc),
            )),
            None => Box::new(SystemClock),
        };

        let fixture_path = config.resolve(&config.llm.fixture_path);
        if config.llm.mode == LlmMode::Replay && !fixture_path.exists() {
            return Err(PipelineError::config(format!("replay fixture {} not found", fixture_path.display())));
        }
        let store = ReplayStore::open(&fixture_path).map_err(PipelineError::config)?;
        let fixture_digest = file_digest(&fixture_path);
        let (provider, limiter): (Option<Arc<dyn Provider>>, RateLimiter) = match config.llm.mode {
            LlmMode::Replay => (None, RateLimiter::unlimited()),
            _ => match config.llm.provider {
                ProviderKind::Openai => (
                    Some(Arc::new(
                        OpenAiProvider::from_env(&config.llm.base_url, &config.llm.api_key_env)
                            .map_err(PipelineError::config)?,
                    )),
                    RateLimiter::new(config.llm.rate_limit),
                ),
                ProviderKind::Script => {
                    let path = config.resolve(config.llm.script_path.as_deref().expect("validated"));
                    (Some(Arc::new(ScriptedProvider::load(&path).map_err(load_err)?)), RateLimiter::unlimited())
                }
            },
        };
        let gateway = Gateway::new(config.llm.mode, store, provider).with_rate_limit(limiter).with_retry(RetryPolicy {
            attempts: config.llm.retries.max(1),
            base_delay: Duration::from_millis(config.llm.backoff_ms),
        });

        let search: Box<dyn SearchProvider> = match config.search.provider {
            SearchBackend::Fixture => Box::new(
                FixtureSearch::load(&config.resolve(config.search.fixture_path.as_deref().expect("validated")))
                    .map_err(load_err)?,
            ),
            SearchBackend::Live => Box::new(DuckDuckGoSearch::new().map_err(PipelineError::config)?),
        };
        let fetcher: Box<dyn Fetcher> = match config.fetch.provider {
            FetchBackend::Fixture => Box::new(
                FixtureFetcher::load(&config.resolve(config.fetch.fixture_dir.as_deref().expect("validated")))
                    .map_err(load_err)?,
            ),
            FetchBackend::Http => Box::new(HttpFetcher::new().map_err(PipelineError::config)?),
        };

        Ok(Self {
            out: config.output_root(),
            cache: PageCache::new(config.cache_root()),
            settings: config.llm_settings(),
            run_id: config.run_id(),
            all_profiles,
            profiles,
            clock,
            gateway,
            search,
            fetcher,
            fixture_path,
            fixture_digest,
            config,
        })
    }

    pub fn load(config_path: &Path, options: RunOptions) -> Result<Self, PipelineError> {
        Self::new(RunConfig::load(config_path)?, options)
    }

    fn report_dir_rel(&self) -> String {
        format!("reports/{}", self.run_id)
    }

    fn selected_names(&self) -> Vec<&str> {
        self.profiles.iter().map(|p| p.canonical_name.as_str()).collect()
    }

    fn optional_digest(&self, p: &Option<PathBuf>) -> Option<String> {
        p.as_ref().map(|p| file_digest(&self.config.resolve(p)))
    }
}

fn digest_of(value: serde_json::Value) -> String {
    sha256_hex(value.to_string().as_bytes())
}

/// Collects a stage's files, counts and log before they are committed.
struct StageWriter<'a> {
    out: &'a Path,
    dir: String,
    outputs: BTreeMap<String, String>,
    counts: BTreeMap<String, u64>,
    log: Vec<String>,
}

impl StageWriter<'_> {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let rel = format!("{}/{name}", self.dir);
        write_atomic(&self.out.join(&rel), bytes)
            .map_err(|e| PipelineError::Stage { stage: self.dir.clone(), message: format!("writing {rel}: {e}") })?;
        self.outputs.insert(rel, sha256_hex(bytes));
        Ok(())
    }

    fn count(&mut self, key: impl Into<String>, n: usize) {
        *self.counts.entry(key.into()).or_insert(0) += n as u64;
    }

    fn note(&mut self, line: impl Into<String>) {
        let line = line.into();
        warn!("{line}");
        self.log.push(line);
    }
}

fn outputs_intact(out: &Path, record: &StageRecord) -> Result<(), String> {
    for (rel, digest) in &record.outputs {
        match fs::read(out.join(rel)) {
            Ok(bytes) if sha256_hex(&bytes) == *digest => {}
            Ok(_) => return Err(format!("{rel} was modified after stage {} wrote it", record.stage)),
            Err(_) => return Err(format!("{rel} from stage {} is missing", record.stage)),
        }
    }
    Ok(())
}

fn run_stage(
    ctx: &Context,
    stage: &str,
    dir: &str,
    input_digest: String,
    body: impl FnOnce(&mut StageWriter<'_>) -> Result<(), PipelineError>,
) -> Result<StageOutcome, PipelineError> {
    let stage_dir = ctx.out.join(dir);
    let record_path = stage_dir.join("stage.json");
    if let Ok(prev) = StageRecord::load(&record_path) {
        if prev.input_digest == input_digest && outputs_intact(&ctx.out, &prev).is_ok() {
            info!(stage, "inputs unchanged; reusing outputs");
            return Ok(StageOutcome { record: prev, reused: true });
        }
    }
    if stage_dir.exists() {
        fs::remove_dir_all(&stage_dir).map_err(|e| stage_err(stage)(&e))?;
    }
    let started = ctx.clock.now();
    let mut w = StageWriter {
        out: &ctx.out,
        dir: dir.to_string(),
        outputs: BTreeMap::new(),
        counts: BTreeMap::new(),
        log: Vec::new(),
    };
    body(&mut w)?;
    let record = StageRecord {
        stage: stage.into(),
        input_digest,
        outputs: w.outputs,
        counts: w.counts,
        log: w.log,
        wall_clock_ms: (ctx.clock.now() - started).num_milliseconds(),
    };
    let mut json = serde_json::to_string_pretty(&record).expect("record serializes");
    json.push('\n');
    write_atomic(&record_path, json.as_bytes()).map_err(|e| stage_err(stage)(&e))?;
    info!(stage, outputs = record.outputs.len(), "stage complete");
    Ok(StageOutcome { record, reused: false })
}

/// Load and check the record of an upstream stage.
fn upstream(ctx: &Context, stage: &str, dir: &str) -> Result<StageRecord, PipelineError> {
    let path = ctx.out.join(dir).join("stage.json");
    let record = StageRecord::load(&path).map_err(|_| {
        PipelineError::StaleInput(format!("no {stage} outputs under {}; run `{stage}` first", ctx.out.display()))
    })?;
    outputs_intact(&ctx.out, &record).map_err(PipelineError::StaleInput)?;
    Ok(record)
}

fn require_profiles(ctx: &Context, record: &StageRecord, dir: &str, suffix: &str) -> Result<(), PipelineError> {
    for p in &ctx.profiles {
        let rel = format!("{dir}/{}{suffix}", slug(&p.canonical_name));
        if !record.outputs.contains_key(&rel) {
            return Err(PipelineError::StaleInput(format!(
                "{rel} missing; rerun the upstream stage for {}",
                p.canonical_name
            )));
        }
    }
    Ok(())
}

fn is_soft(e: &GatewayError) -> bool {
    matches!(e, GatewayError::ReplayMiss { .. })
}

pub fn cmd_collect(ctx: &Context) -> Result<StageOutcome, PipelineError> {
    let cfg = &ctx.config;
    let input = digest_of(serde_json::json!({
        "search": {"provider": cfg.search.provider, "limit": cfg.search.limit, "japanese_only": cfg.search.japanese_only,
                   "fixture": ctx.optional_digest(&cfg.search.fixture_path)},
        "fetch": {"provider": cfg.fetch.provider, "force": cfg.fetch.force,
                  "fixture": ctx.optional_digest(&cfg.fetch.fixture_dir.as_ref().map(|d| d.join("index.json")))},
        "llm": &ctx.settings,
        "fixture": ctx.fixture_digest,
        "profiles": &ctx.profiles,
    }));
    let out = run_stage(ctx, "collect", "corpus", input, |w| {
        for profile in &ctx.profiles {
            collect_one(ctx, profile, w)?;
        }
        Ok(())
    })?;
    write_manifest(ctx)?;
    Ok(out)
}

fn collect_one(ctx: &Context, profile: &CelebrityProfile, w: &mut StageWriter<'_>) -> Result<(), PipelineError> {
    let name = &profile.canonical_name;
    let key = slug(name);
    let urls = match search_pages(profile, ctx.search.as_ref(), ctx.config.search.limit) {
        Ok(urls) => urls,
        Err(SearchError::EmptyResult(_)) => {
            w.note(format!("{name}: search returned no pages"));
            Vec::new()
        }
        Err(e) => return Err(stage_err("collect")(&e)),
    };
    w.count(format!("{key}.urls"), urls.len());

    let fetched = fetch_all(
        &urls,
        ctx.fetcher.as_ref(),
        &ctx.cache,
        ctx.clock.as_ref(),
        ctx.config.fetch.force,
        ctx.config.fetch.workers,
    );
    let mut documents = Vec::new();
    let mut drafts = Vec::new();
    let mut skipped = 0;
    for result in fetched {
        let doc = match result {
            Ok(doc) => doc,
            Err(e) => {
                skipped += 1;
                w.note(format!("{name}: skipped page: {e}"));
                continue;
            }
        };
        if ctx.config.search.japanese_only && doc.language_tag != "ja" {
            skipped += 1;
            w.note(format!("{name}: skipped page {} (language {})", doc.url, doc.language_tag));
            continue;
        }
        let mut sentences = segment_sentences(&doc.extracted_text);
        if sentences.len() > MAX_SENTENCES_PER_DOC {
            w.note(format!("{name}: {} truncated to {MAX_SENTENCES_PER_DOC} sentences", doc.url));
            sentences.truncate(MAX_SENTENCES_PER_DOC);
        }
        drafts.extend(sentences.into_iter().enumerate().map(|(i, text)| SentenceDraft {
            doc_url: doc.url.clone(),
            doc_rank: doc.rank,
            sentence_index: i as u32,
            text,
        }));
        documents.push(DocumentRecord::from(&doc));
    }
    w.count(format!("{key}.skipped_pages"), skipped);
    w.count(format!("{key}.documents"), documents.len());

    let outcome = filter_mentions(&drafts, profile, &ctx.gateway, &ctx.settings);
    if let Some(e) = outcome.provider_errors.first() {
        return Err(stage_err("collect")(e));
    }
    for f in &outcome.failures {
        w.note(format!(
            "{name}: mention check failed for {} ({} sentences rejected): {}",
            f.doc_url, f.rejected, f.error
        ));
    }
    let mut records = outcome.records;
    records.sort_by(|a, b| (a.order_key(), &a.doc_url).cmp(&(b.order_key(), &b.doc_url)));
    w.count(format!("{key}.sentences"), records.len());
    w.count(format!("{key}.mentions"), records.iter().filter(|r| r.mentions_target).count());

    w.write(&format!("{key}/documents.jsonl"), to_jsonl(&documents).as_bytes())?;
    w.write(&format!("{key}/sentences.jsonl"), to_jsonl(&records).as_bytes())?;
    Ok(())
}

pub fn cmd_aspects(ctx: &Context) -> Result<StageOutcome, PipelineError> {
    let corpus = upstream(ctx, "collect", "corpus")?;
    require_profiles(ctx, &corpus, "corpus", "/sentences.jsonl")?;
    let input = digest_of(serde_json::json!({
        "corpus": corpus.outputs,
        "llm": &ctx.settings,
        "fixture": ctx.fixture_digest,
        "profiles": ctx.selected_names(),
    }));
    let out = run_stage(ctx, "aspects", "aspects", input, |w| {
        for profile in &ctx.profiles {
            let key = slug(&profile.canonical_name);
            let records: Vec<SentenceRecord> = read_jsonl(&ctx.out.join(format!("corpus/{key}/sentences.jsonl")))
                .map_err(|e| stage_err("aspects")(&e))?;
            let set = match extract_aspects(&records, profile, &ctx.gateway, &ctx.settings, &ctx.run_id) {
                Ok(outcome) => {
                    for line in outcome.log {
                        w.note(format!("{}: {line}", profile.canonical_name));
                    }
                    outcome.set
                }
                Err(AspectError::EmptyInput) => {
                    w.note(format!("{}: no mention sentences; empty aspect set", profile.canonical_name));
                    AspectSet {
                        celebrity: profile.canonical_name.clone(),
                        clusters: vec![],
                        run_id: ctx.run_id.clone(),
                        uncategorized: vec![],
                    }
                }
                Err(e) => return Err(stage_err("aspects")(&e)),
            };
            w.count(format!("{key}.aspects"), set.clusters.len());
            w.count(format!("{key}.uncategorized"), set.uncategorized.len());
            w.write(&format!("{key}.jsonl"), to_jsonl(&set.clusters).as_bytes())?;
            w.write(&format!("{key}.uncategorized.jsonl"), to_jsonl(&set.uncategorized).as_bytes())?;
        }
        Ok(())
    })?;
    write_manifest(ctx)?;
    Ok(out)
}

fn load_aspect_set(ctx: &Context, profile: &CelebrityProfile) -> Result<AspectSet, PipelineError> {
    let path = ctx.out.join(format!("aspects/{}.jsonl", slug(&profile.canonical_name)));
    let clusters: Vec<AspectCluster> = read_jsonl(&path).map_err(|e| PipelineError::StaleInput(e.to_string()))?;
    Ok(AspectSet {
        celebrity: profile.canonical_name.clone(),
        clusters,
        run_id: ctx.run_id.clone(),
        uncategorized: vec![],
    })
}

fn load_label_table(ctx: &Context) -> Result<LabelTable, PipelineError> {
    match &ctx.config.judgment.label_table_path {
        Some(p) => read_json(&ctx.config.resolve(p)).map_err(load_err),
        None => Ok(LabelTable::default()),
    }
}

fn load_example_set(ctx: &Context, path: &Option<PathBuf>) -> Result<Option<Vec<FewShotExample>>, PipelineError> {
    let Some(p) = path else { return Ok(None) };
    let examples = load_examples(&ctx.config.resolve(p)).map_err(load_err)?;
    validate_examples(&examples, &ctx.all_profiles).map_err(PipelineError::config)?;
    Ok(Some(examples))
}

/// Keep a judgment, log a skipped one, or abort on a hard gateway error.
fn settle(
    w: &mut StageWriter<'_>,
    what: &str,
    result: Result<JudgmentResult, JudgmentError>,
    into: &mut Vec<JudgmentResult>,
) -> Result<(), PipelineError> {
    match result {
        Ok(r) => {
            if !r.satisfies_gating() {
                return Err(stage_err("judge")(&format!("gating violated for {what}")));
            }
            if !r.is_valid() {
                w.note(format!("{what}: no parseable label after reprompt"));
                w.count("invalid", 1);
            }
            into.push(r);
            Ok(())
        }
        Err(JudgmentError::Gateway(e)) if !is_soft(&e) => Err(stage_err("judge")(&e)),
        Err(e) => {
            w.note(format!("{what}: skipped: {e}"));
            w.count("skipped", 1);
            Ok(())
        }
    }
}

pub fn cmd_judge(ctx: &Context) -> Result<StageOutcome, PipelineError> {
    let aspects = upstream(ctx, "aspects", "aspects")?;
    require_profiles(ctx, &aspects, "aspects", ".jsonl")?;
    let jc = &ctx.config.judgment;
    let labels = load_label_table(ctx)?;
    let examples = load_example_set(ctx, &jc.examples_path)?.unwrap_or_default();
    let stability = load_example_set(ctx, &jc.stability_examples_path)?;
    let input = digest_of(serde_json::json!({
        "aspects": aspects.outputs,
        "judgment": {"modes": jc.modes, "rag": jc.rag, "per_aspect": jc.per_aspect},
        "examples": ctx.optional_digest(&jc.examples_path),
        "stability": ctx.optional_digest(&jc.stability_examples_path),
        "labels": &labels,
        "llm": &ctx.settings,
        "fixture": ctx.fixture_digest,
        "profiles": &ctx.profiles,
    }));
    let judge = Judge::new(&ctx.gateway, &ctx.settings, &labels);
    let out = run_stage(ctx, "judge", "judgments", input, |w| {
        let mut per_aspect = Vec::new();
        let mut per_celebrity = Vec::new();
        let mut alternate = Vec::new();
        let examples_for = |mode: JudgmentMode| if mode == JudgmentMode::FewShot { &examples[..] } else { &[][..] };
        for profile in &ctx.profiles {
            let set = load_aspect_set(ctx, profile)?;
            let name = &profile.canonical_name;
            for &mode in &jc.modes {
                if jc.per_aspect {
                    for cluster in &set.clusters {
                        let what = format!("{name} / {} ({})", cluster.aspect_name, mode.as_str());
                        settle(w, &what, judge.judge_aspect(cluster, mode, examples_for(mode)), &mut per_aspect)?;
                    }
                }
                for &rag in &jc.rag {
                    let what =
                        format!("{name} ({}, {})", mode.as_str(), if rag { "with context" } else { "without context" });
                    if rag && set.clusters.is_empty() {
                        w.note(format!("{what}: skipped: no aspects to use as context"));
                        w.count("skipped", 1);
                        continue;
                    }
                    let context = rag.then_some(&set);
                    settle(
                        w,
                        &what,
                        judge.judge_celebrity(profile, context, mode, examples_for(mode)),
                        &mut per_celebrity,
                    )?;
                }
            }
            if let (Some(alt), true, true) = (&stability, jc.per_aspect, jc.modes.contains(&JudgmentMode::FewShot)) {
                for cluster in &set.clusters {
                    let what = format!("{name} / {} (alternate examples)", cluster.aspect_name);
                    settle(w, &what, judge.judge_aspect(cluster, JudgmentMode::FewShot, alt), &mut alternate)?;
                }
            }
        }
        w.count("aspect_judgments", per_aspect.len());
        w.count("celebrity_judgments", per_celebrity.len());
        w.write("aspects.jsonl", to_jsonl(&per_aspect).as_bytes())?;
        w.write("celebrities.jsonl", to_jsonl(&per_celebrity).as_bytes())?;
        if stability.is_some() {
            let few: Vec<JudgmentResult> =
                per_aspect.iter().filter(|r| r.mode == JudgmentMode::FewShot).cloned().collect();
            let diff = diff_results(&few, &alternate);
            w.count("stability_changes", diff.iter().filter(|d| d.changed).count());
            w.write("stability_diff.jsonl", to_jsonl(&diff).as_bytes())?;
        }
        Ok(())
    })?;
    write_manifest(ctx)?;
    Ok(out)
}

/// Judged subjects whose reference label is known, and the others' names.
fn with_references(results: &[&JudgmentResult], book: &ReferenceBook) -> (Vec<JudgmentResult>, Vec<String>) {
    let mut keep = Vec::new();
    let mut missing = Vec::new();
    for r in results {
        if r.label.is_none() || book.label_for(&r.subject).is_ok() {
            keep.push((*r).clone());
        } else {
            missing.push(format!("{} ({})", r.subject.display(), r.mode.as_str()));
        }
    }
    (keep, missing)
}

pub fn cmd_evaluate(ctx: &Context) -> Result<StageOutcome, PipelineError> {
    let judged = upstream(ctx, "judge", "judgments")?;
    let aspects = upstream(ctx, "aspects", "aspects")?;
    let ec = &ctx.config.eval;
    let input = digest_of(serde_json::json!({
        "judgments": judged.outputs,
        "aspects": aspects.outputs,
        "references": ctx.optional_digest(&ec.reference_path),
        "mappings": ctx.optional_digest(&ec.mapping_path),
        "baseline": ctx.optional_digest(&ec.baseline_path),
        "use_auto_mappings": ec.use_auto_mappings,
        "profiles": &ctx.profiles,
        "run_id": ctx.run_id,
    }));
    let dir = ctx.report_dir_rel();
    let out = run_stage(ctx, "evaluate", &dir, input, |w| {
        let report = evaluate(ctx, w)?;
        for (name, text) in render_report(&report) {
            w.write(&name, text.as_bytes())?;
        }
        Ok(())
    })?;
    write_manifest(ctx)?;
    Ok(out)
}

fn evaluate(ctx: &Context, w: &mut StageWriter<'_>) -> Result<EvaluationReport, PipelineError> {
    let ec = &ctx.config.eval;
    let fail = stage_err("evaluate");
    let mut references: BTreeMap<String, ReferenceSet> = match &ec.reference_path {
        Some(p) => load_references(&ctx.config.resolve(p)).map_err(load_err)?,
        None => BTreeMap::new(),
    };
    let mappings: BTreeMap<String, MappingEntry> = match &ec.mapping_path {
        Some(p) => load_mappings(&ctx.config.resolve(p)).map_err(load_err)?,
        None => BTreeMap::new(),
    };
    let baseline = match &ec.baseline_path {
        Some(p) => Some(load_baseline(&ctx.config.resolve(p)).map_err(load_err)?),
        None => None,
    };
    for p in &ctx.profiles {
        let set = references.entry(p.canonical_name.clone()).or_insert_with(|| ReferenceSet {
            celebrity: p.canonical_name.clone(),
            items: vec![],
            celebrity_label: None,
        });
        if set.celebrity_label.is_none() {
            set.celebrity_label = p.reference_label;
        }
    }

    let mut report = EvaluationReport { run_id: ctx.run_id.clone(), ..Default::default() };
    let mut book = ReferenceBook::default();
    let mut drafts: BTreeMap<String, MatchMapping> = BTreeMap::new();
    for p in &ctx.profiles {
        let name = &p.canonical_name;
        let system = load_aspect_set(ctx, p)?;
        let refs = &references[name];
        let human = mappings.get(name).filter(|m| m.provenance == Provenance::Human).map(MappingEntry::mapping);
        if !refs.items.is_empty() && !system.clusters.is_empty() {
            let mapping = match human {
                Some(m) => Some(m),
                None => {
                    let draft = auto_assist_match(refs, &system);
                    report.unmapped.push(name.clone());
                    drafts.insert(name.clone(), draft.clone());
                    ec.use_auto_mappings.then_some(draft)
                }
            };
            if let Some(m) = mapping {
                report.aspect_metrics.push(compute_recall_precision(refs, &system, &m).map_err(|e| fail(&e))?);
                book.mappings.insert(name.clone(), m);
            }
        }
        book.insert(refs.clone());

        if let Some(base) = &baseline {
            let counts = match base.get(name) {
                Some(items) => {
                    let links = mappings.get(name).map(|m| m.overlap.clone()).unwrap_or_default();
                    let ours: Vec<&str> = system.clusters.iter().map(|c| c.aspect_name.as_str()).collect();
                    Some(overlap_analysis(&ours, items, &links).map_err(|e| fail(&e))?)
                }
                None => None,
            };
            report.overlap_rows.push(OverlapRow { celebrity: name.clone(), counts });
        }
    }

    let aspect_results: Vec<JudgmentResult> =
        read_jsonl(&ctx.out.join("judgments/aspects.jsonl")).map_err(|e| PipelineError::StaleInput(e.to_string()))?;
    let celebrity_results: Vec<JudgmentResult> = read_jsonl(&ctx.out.join("judgments/celebrities.jsonl"))
        .map_err(|e| PipelineError::StaleInput(e.to_string()))?;
    let selected = ctx.selected_names();

    for &mode in &ctx.config.judgment.modes {
        let subset: Vec<&JudgmentResult> = aspect_results
            .iter()
            .filter(|r| r.mode == mode && selected.contains(&r.subject.celebrity.as_str()))
            .collect();
        if subset.is_empty() {
            continue;
        }
        let (scored, missing) = with_references(&subset, &book);
        report.missing_references.extend(missing);
        let acc = accuracy(&scored, &book).map_err(|e| fail(&e))?;
        report.confusion.push((mode, build_confusion_matrix(&scored, &book).map_err(|e| fail(&e))?));
        report.aspect_accuracy.push(ModeAccuracy { mode, rag: true, report: acc });
    }

    for &mode in &ctx.config.judgment.modes {
        let mut by_rag: BTreeMap<bool, AccuracyReport> = BTreeMap::new();
        for &rag in &ctx.config.judgment.rag {
            let subset: Vec<&JudgmentResult> = celebrity_results
                .iter()
                .filter(|r| r.mode == mode && r.rag == rag && selected.contains(&r.subject.celebrity.as_str()))
                .collect();
            if subset.is_empty() {
                continue;
            }
            let (scored, missing) = with_references(&subset, &book);
            report.missing_references.extend(missing);
            let acc = accuracy(&scored, &book).map_err(|e| fail(&e))?;
            report.celebrity_accuracy.push(ModeAccuracy { mode, rag, report: acc.clone() });
            by_rag.insert(rag, acc);
        }
        if let Some(without) = by_rag.get(&false) {
            report.cutoff.push((mode, cutoff_breakdown(without, &ctx.profiles, TRAINING_CUTOFF)));
        }
        for p in &ctx.profiles {
            let Some(reference) = references[&p.canonical_name].celebrity_label else { continue };
            let find = |rag: bool| {
                by_rag.get(&rag).and_then(|a| {
                    a.rows.iter().find(|r| r.subject.celebrity == p.canonical_name).map(|r| (r.correct, r.predicted))
                })
            };
            let (without, with) = (find(false), find(true));
            if without.is_some() || with.is_some() {
                report.rag_rows.push(RagRow {
                    celebrity: p.canonical_name.clone(),
                    scandal: p.scandal_date(),
                    mode,
                    reference,
                    without,
                    with,
                });
            }
        }
    }

    w.count("scored_celebrities", report.aspect_metrics.len());
    w.count("unmapped_celebrities", report.unmapped.len());
    w.count("missing_references", report.missing_references.len());
    if !drafts.is_empty() {
        let entries: BTreeMap<&String, MappingEntry> = drafts
            .iter()
            .map(|(k, m)| (k, MappingEntry { provenance: m.provenance, pairs: m.pairs.clone(), overlap: vec![] }))
            .collect();
        let mut json = serde_json::to_string_pretty(&entries).expect("drafts serialize");
        json.push('\n');
        w.write("mapping_drafts.json", json.as_bytes())?;
    }
    Ok(report)
}

/// Run every stage in order.
pub fn cmd_run(ctx: &Context) -> Result<Vec<StageOutcome>, PipelineError> {
    Ok(vec![cmd_collect(ctx)?, cmd_aspects(ctx)?, cmd_judge(ctx)?, cmd_evaluate(ctx)?])
}

/// Rebuild `manifest.json` from the stage records present in the output
/// root.
pub fn write_manifest(ctx: &Context) -> Result<RunManifest, PipelineError> {
    let mut manifest = RunManifest {
        run_id: ctx.run_id.clone(),
        config_digest: ctx.config.digest(),
        fixture_digest: file_digest(&ctx.fixture_path),
        model_id: ctx.settings.model_id.clone(),
        temperature: ctx.settings.temperature,
        notes: PIPELINE_NOTES.iter().map(|s| s.to_string()).collect(),
        stages: BTreeMap::new(),
        outputs: BTreeMap::new(),
    };
    let report_dir = ctx.report_dir_rel();
    let dirs = STAGE_DIRS.iter().map(|(_, d)| d.to_string()).chain(std::iter::once(report_dir));
    for dir in dirs {
        if let Ok(record) = StageRecord::load(&ctx.out.join(&dir).join("stage.json")) {
            manifest.add_stage(&record);
        }
    }
    manifest.write(&ctx.out.join("manifest.json")).map_err(|e| stage_err("manifest")(&e))?;
    Ok(manifest)
}
