//! TOML run configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use repute_core::{JudgmentMode, LlmSettings};

use crate::files::sha256_hex;
use crate::gateway::LlmMode;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing config {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchBackend {
    Fixture,
    Live,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FetchBackend {
    Fixture,
    Http,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Openai,
    Script,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    #[serde(default = "search_provider")]
    pub provider: SearchBackend,
    #[serde(default)]
    pub fixture_path: Option<PathBuf>,
    #[serde(default = "page_limit")]
    pub limit: usize,
    #[serde(default = "yes")]
    pub japanese_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FetchConfig {
    #[serde(default = "fetch_provider")]
    pub provider: FetchBackend,
    #[serde(default)]
    pub fixture_dir: Option<PathBuf>,
    #[serde(default = "workers")]
    pub workers: usize,
    #[serde(default)]
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmConfig {
    #[serde(default = "model_id")]
    pub model_id: String,
    #[serde(default = "llm_mode")]
    pub mode: LlmMode,
    #[serde(default = "fixture_path")]
    pub fixture_path: PathBuf,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "provider_kind")]
    pub provider: ProviderKind,
    #[serde(default)]
    pub script_path: Option<PathBuf>,
    #[serde(default = "base_url")]
    pub base_url: String,
    #[serde(default = "api_key_env")]
    pub api_key_env: String,
    /// Requests per second for live calls.
    #[serde(default = "rate_limit")]
    pub rate_limit: f64,
    #[serde(default = "retries")]
    pub retries: u32,
    #[serde(default = "backoff_ms")]
    pub backoff_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgmentConfig {
    #[serde(default = "all_modes")]
    pub modes: Vec<JudgmentMode>,
    #[serde(default = "both_rag")]
    pub rag: Vec<bool>,
    #[serde(default)]
    pub examples_path: Option<PathBuf>,
    /// Second few-shot set; when given, per-aspect few-shot judgments are
    /// repeated with it and the label changes reported.
    #[serde(default)]
    pub stability_examples_path: Option<PathBuf>,
    #[serde(default)]
    pub label_table_path: Option<PathBuf>,
    #[serde(default = "yes")]
    pub per_aspect: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    #[serde(default)]
    pub reference_path: Option<PathBuf>,
    #[serde(default)]
    pub mapping_path: Option<PathBuf>,
    #[serde(default)]
    pub baseline_path: Option<PathBuf>,
    /// Score celebrities without a human mapping using the auto-assist
    /// draft. Off by default.
    #[serde(default)]
    pub use_auto_mappings: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub profiles_path: PathBuf,
    #[serde(default = "output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub run_id: Option<String>,
    /// RFC 3339 instant used for every timestamp instead of the system clock.
    #[serde(default)]
    pub fixed_clock: Option<String>,
    #[serde(default = "default_search")]
    pub search: SearchConfig,
    #[serde(default = "default_fetch")]
    pub fetch: FetchConfig,
    #[serde(default = "default_llm")]
    pub llm: LlmConfig,
    #[serde(default = "default_judgment")]
    pub judgment: JudgmentConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn yes() -> bool {
    true
}
fn search_provider() -> SearchBackend {
    SearchBackend::Fixture
}
fn fetch_provider() -> FetchBackend {
    FetchBackend::Fixture
}
fn page_limit() -> usize {
    repute_core::corpus::DEFAULT_PAGE_LIMIT
}
fn workers() -> usize {
    4
}
fn model_id() -> String {
    repute_core::llm::DEFAULT_MODEL.into()
}
fn llm_mode() -> LlmMode {
    LlmMode::Replay
}
fn fixture_path() -> PathBuf {
    "llm_fixtures.json".into()
}
fn provider_kind() -> ProviderKind {
    ProviderKind::Openai
}
fn base_url() -> String {
    "https://api.openai.com/v1".into()
}
fn api_key_env() -> String {
    "OPENAI_API_KEY".into()
}
fn rate_limit() -> f64 {
    1.0
}
fn retries() -> u32 {
    3
}
fn backoff_ms() -> u64 {
    500
}
fn all_modes() -> Vec<JudgmentMode> {
    vec![JudgmentMode::ZeroShot, JudgmentMode::FewShot]
}
fn both_rag() -> Vec<bool> {
    vec![false, true]
}
fn output_dir() -> PathBuf {
    "out".into()
}
fn default_search() -> SearchConfig {
    toml::from_str("").expect("defaults")
}
fn default_fetch() -> FetchConfig {
    toml::from_str("").expect("defaults")
}
fn default_llm() -> LlmConfig {
    toml::from_str("").expect("defaults")
}
fn default_judgment() -> JudgmentConfig {
    toml::from_str("").expect("defaults")
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        if self.search.limit == 0 {
            return bad("search.limit must be at least 1");
        }
        if self.fetch.workers == 0 {
            return bad("fetch.workers must be at least 1");
        }
        if self.judgment.modes.is_empty() {
            return bad("judgment.modes must not be empty");
        }
        if self.judgment.rag.is_empty() {
            return bad("judgment.rag must not be empty");
        }
        if self.judgment.modes.contains(&JudgmentMode::FewShot) && self.judgment.examples_path.is_none() {
            return bad("few_shot mode needs judgment.examples_path");
        }
        if self.search.provider == SearchBackend::Fixture && self.search.fixture_path.is_none() {
            return bad("fixture search needs search.fixture_path");
        }
        if self.fetch.provider == FetchBackend::Fixture && self.fetch.fixture_dir.is_none() {
            return bad("fixture fetching needs fetch.fixture_dir");
        }
        if self.llm.provider == ProviderKind::Script && self.llm.script_path.is_none() {
            return bad("script provider needs llm.script_path");
        }
        if !self.llm.rate_limit.is_finite() || self.llm.rate_limit <= 0.0 {
            return bad("llm.rate_limit must be positive");
        }
        if let Some(ts) = &self.fixed_clock {
            if chrono::DateTime::parse_from_rfc3339(ts).is_err() {
                return bad("fixed_clock must be an RFC 3339 timestamp");
            }
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_root(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn cache_root(&self) -> PathBuf {
        match &self.cache_dir {
            Some(c) => self.resolve(c),
            None => self.output_root().join("cache"),
        }
    }

    pub fn llm_settings(&self) -> LlmSettings {
        LlmSettings { model_id: self.llm.model_id.clone(), temperature: self.llm.temperature }
    }

    /// Digest of everything that can change results. Output and cache
    /// locations and the gateway mode are left out, so recording a run and
    /// replaying it elsewhere keep the same identity.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.cache_dir = None;
        c.llm.mode = LlmMode::Replay;
        sha256_hex(serde_json::to_string(&c).expect("config serializes").as_bytes())
    }

    pub fn run_id(&self) -> String {
        self.run_id.clone().unwrap_or_else(|| format!("run-{}", &self.digest()[..12]))
    }
}
