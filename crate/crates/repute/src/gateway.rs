//! LLM gateway: live, record and replay modes over a digest-keyed fixture
//! file, with retries and a token-bucket rate limiter for provider calls.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use tracing::{debug, warn};

use repute_core::llm::{Completion, LlmResponse, PromptRequest, ResponseSource};
use repute_core::GatewayError;

use crate::files::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LlmMode {
    Live,
    Record,
    Replay,
}

/// Transport failure from a provider.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProviderError {
    pub message: String,
    pub retryable: bool,
}

impl ProviderError {
    pub fn fatal(message: impl Into<String>) -> Self {
        Self { message: message.into(), retryable: false }
    }

    pub fn transient(message: impl Into<String>) -> Self {
        Self { message: message.into(), retryable: true }
    }
}

impl fmt::Display for ProviderError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Something that actually produces completions (an HTTP API, a script).
pub trait Provider: Send + Sync {
    fn send(&self, request: &PromptRequest) -> Result<String, ProviderError>;
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("reading fixture {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing fixture {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("fixture key {0:?} is not a lowercase hex digest")]
    BadKey(String),
}

/// JSON object reader that refuses duplicate keys instead of silently
/// keeping the last one.
struct StrictMap(BTreeMap<String, String>);

impl<'de> Deserialize<'de> for StrictMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = StrictMap;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a JSON object of digest -> response text")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<StrictMap, A::Error> {
                let mut out = BTreeMap::new();
                while let Some((k, v)) = access.next_entry::<String, String>()? {
                    if out.contains_key(&k) {
                        return Err(serde::de::Error::custom(format!("duplicate digest {k}")));
                    }
                    out.insert(k, v);
                }
                Ok(StrictMap(out))
            }
        }
        d.deserialize_map(V)
    }
}

fn is_digest(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

/// Digest → response text, optionally backed by a fixture file.
#[derive(Debug, Default)]
pub struct ReplayStore {
    entries: Mutex<BTreeMap<String, String>>,
    path: Option<PathBuf>,
}

impl ReplayStore {
    pub fn in_memory(entries: BTreeMap<String, String>) -> Self {
        Self { entries: Mutex::new(entries), path: None }
    }

    /// Load a fixture file; a missing file yields an empty store bound to
    /// that path (record mode creates it on first write).
    pub fn open(path: &Path) -> Result<Self, FixtureError> {
        let entries = if path.exists() { Self::read(path)? } else { BTreeMap::new() };
        Ok(Self { entries: Mutex::new(entries), path: Some(path.to_path_buf()) })
    }

    pub fn read(path: &Path) -> Result<BTreeMap<String, String>, FixtureError> {
        let text = fs::read_to_string(path).map_err(|source| FixtureError::Io { path: path.into(), source })?;
        let StrictMap(map) =
            serde_json::from_str(&text).map_err(|source| FixtureError::Json { path: path.into(), source })?;
        if let Some(bad) = map.keys().find(|k| !is_digest(k)) {
            return Err(FixtureError::BadKey(bad.clone()));
        }
        Ok(map)
    }

    pub fn get(&self, digest: &str) -> Option<String> {
        self.entries.lock().expect("replay store poisoned").get(digest).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("replay store poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> BTreeMap<String, String> {
        self.entries.lock().expect("replay store poisoned").clone()
    }

    /// Insert and persist (sorted, pretty JSON) when file-backed.
    pub fn insert(&self, digest: String, text: String) -> std::io::Result<()> {
        let mut entries = self.entries.lock().expect("replay store poisoned");
        entries.insert(digest, text);
        if let Some(path) = &self.path {
            let json = serde_json::to_string_pretty(&*entries).expect("string map serializes");
            write_atomic(path, format!("{json}\n").as_bytes())?;
        }
        Ok(())
    }
}

/// Token bucket with a burst of one request.
#[derive(Debug)]
pub struct RateLimiter {
    per_second: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn new(per_second: f64) -> Self {
        Self { per_second, state: Mutex::new((1.0, Instant::now())) }
    }

    pub fn unlimited() -> Self {
        Self::new(f64::INFINITY)
    }

    /// Block until a token is available.
    pub fn acquire(&self) {
        if !self.per_second.is_finite() || self.per_second <= 0.0 {
            return;
        }
        let mut state = self.state.lock().expect("rate limiter poisoned");
        let (tokens, last) = &mut *state;
        let now = Instant::now();
        *tokens = (*tokens + now.duration_since(*last).as_secs_f64() * self.per_second).min(1.0);
        *last = now;
        if *tokens < 1.0 {
            let wait = Duration::from_secs_f64((1.0 - *tokens) / self.per_second);
            thread::sleep(wait);
            *tokens = 1.0;
            *last = Instant::now();
        }
        *tokens -= 1.0;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { attempts: 3, base_delay: Duration::from_millis(500) }
    }
}

/// The [`Completion`] implementation used by every pipeline stage.
pub struct Gateway {
    mode: LlmMode,
    store: ReplayStore,
    provider: Option<Arc<dyn Provider>>,
    limiter: RateLimiter,
    retry: RetryPolicy,
    /// Canonical request text per digest seen in this process, for
    /// collision detection.
    seen: Mutex<BTreeMap<String, String>>,
}

impl Gateway {
    pub fn replay(store: ReplayStore) -> Self {
        Self::new(LlmMode::Replay, store, None)
    }

    pub fn new(mode: LlmMode, store: ReplayStore, provider: Option<Arc<dyn Provider>>) -> Self {
        Self {
            mode,
            store,
            provider,
            limiter: RateLimiter::unlimited(),
            retry: RetryPolicy::default(),
            seen: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn with_rate_limit(mut self, limiter: RateLimiter) -> Self {
        self.limiter = limiter;
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn mode(&self) -> LlmMode {
        self.mode
    }

    pub fn store(&self) -> &ReplayStore {
        &self.store
    }

    fn check_collision(&self, digest: &str, request: &PromptRequest) -> Result<(), GatewayError> {
        let canonical = serde_json::to_string(request).expect("request serializes");
        let mut seen = self.seen.lock().expect("digest index poisoned");
        match seen.get(digest) {
            Some(prev) if *prev != canonical => Err(GatewayError::Config(format!("digest collision on {digest}"))),
            Some(_) => Ok(()),
            None => {
                seen.insert(digest.to_string(), canonical);
                Ok(())
            }
        }
    }

    fn call_provider(&self, request: &PromptRequest) -> Result<String, GatewayError> {
        let provider = self
            .provider
            .as_ref()
            .ok_or_else(|| GatewayError::Config("no provider configured for live calls".into()))?;
        let mut last = String::new();
        for attempt in 0..self.retry.attempts.max(1) {
            if attempt > 0 {
                let delay = self.retry.base_delay * 2u32.pow(attempt - 1);
                debug!(attempt, ?delay, "retrying provider call");
                thread::sleep(delay);
            }
            self.limiter.acquire();
            match provider.send(request) {
                Ok(text) => return Ok(text),
                Err(e) if e.retryable => {
                    warn!(attempt, error = %e, "provider call failed");
                    last = e.message;
                }
                Err(e) => return Err(GatewayError::Provider(e.message)),
            }
        }
        Err(GatewayError::Provider(format!("giving up after {} attempts: {last}", self.retry.attempts.max(1))))
    }
}

impl Completion for Gateway {
    fn complete(&self, request: &PromptRequest) -> Result<LlmResponse, GatewayError> {
        let digest = request.digest();
        self.check_collision(&digest, request)?;
        let replayed =
            |text: String| LlmResponse { text, source: ResponseSource::Replay, request_digest: digest.clone() };
        match self.mode {
            LlmMode::Replay => {
                self.store.get(&digest).map(replayed).ok_or_else(|| GatewayError::ReplayMiss { digest: digest.clone() })
            }
            LlmMode::Record => {
                if let Some(text) = self.store.get(&digest) {
                    return Ok(replayed(text));
                }
                let text = self.call_provider(request)?;
                self.store
                    .insert(digest.clone(), text.clone())
                    .map_err(|e| GatewayError::Config(format!("writing fixture: {e}")))?;
                Ok(LlmResponse { text, source: ResponseSource::Live, request_digest: digest })
            }
            LlmMode::Live => {
                let text = self.call_provider(request)?;
                Ok(LlmResponse { text, source: ResponseSource::Live, request_digest: digest })
            }
        }
    }
}

/// Chat-completions provider for OpenAI-compatible endpoints.
///
/// Few-shot examples become alternating user/assistant turns between the
/// system message and the final user message.
pub struct OpenAiProvider {
    client: reqwest::blocking::Client,
    base_url: String,
    api_key: String,
}

impl OpenAiProvider {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(Self { client, base_url: base_url.into(), api_key: api_key.into() })
    }

    /// Read the credential from `env_var`.
    pub fn from_env(base_url: impl Into<String>, env_var: &str) -> Result<Self, GatewayError> {
        let key = std::env::var(env_var)
            .map_err(|_| GatewayError::Config(format!("environment variable {env_var} is not set")))?;
        Self::new(base_url, key)
    }
}

pub(crate) fn chat_messages(request: &PromptRequest) -> Vec<serde_json::Value> {
    let mut messages = vec![serde_json::json!({"role": "system", "content": request.system_text})];
    for ex in &request.examples {
        messages.push(serde_json::json!({"role": "user", "content": ex.input_text}));
        messages.push(serde_json::json!({"role": "assistant", "content": ex.label_text}));
    }
    messages.push(serde_json::json!({"role": "user", "content": request.user_text}));
    messages
}

impl Provider for OpenAiProvider {
    fn send(&self, request: &PromptRequest) -> Result<String, ProviderError> {
        let body = serde_json::json!({
            "model": request.model_id,
            "temperature": request.temperature,
            "messages": chat_messages(request),
        });
        let url = format!("{}/chat/completions", self.base_url.trim_end_matches('/'));
        let resp = self
            .client
            .post(url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| ProviderError::transient(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let msg = format!("HTTP {status}");
            return Err(if status.as_u16() == 429 || status.is_server_error() {
                ProviderError::transient(msg)
            } else {
                ProviderError::fatal(msg)
            });
        }
        let value: serde_json::Value = resp.json().map_err(|e| ProviderError::transient(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| ProviderError::fatal("response has no message content"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use repute_core::llm::{LlmSettings, PurposeTag};
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Counting {
        calls: AtomicUsize,
        fail_first: usize,
    }

    impl Provider for Counting {
        fn send(&self, request: &PromptRequest) -> Result<String, ProviderError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.fail_first {
                return Err(ProviderError::transient("flaky"));
            }
            Ok(format!("echo: {}", request.user_text))
        }
    }

    struct Panicking;
    impl Provider for Panicking {
        fn send(&self, _: &PromptRequest) -> Result<String, ProviderError> {
            panic!("transport used in replay mode");
        }
    }

    fn req(user: &str) -> PromptRequest {
        LlmSettings::default().request(PurposeTag::JudgeStage1, "sys".into(), user.into(), vec![])
    }

    fn no_wait() -> RetryPolicy {
        RetryPolicy { attempts: 3, base_delay: Duration::ZERO }
    }

    #[test]
    fn scripted_replay_hit() {
        let r = req("x");
        let store = ReplayStore::in_memory(BTreeMap::from([(r.digest(), "evil".to_string())]));
        let gw = Gateway::new(LlmMode::Replay, store, Some(Arc::new(Panicking)));
        let resp = gw.complete(&r).unwrap();
        assert_eq!(resp.text, "evil");
        assert_eq!(resp.source, ResponseSource::Replay);
        assert_eq!(resp.request_digest, r.digest());
    }

    #[test]
    fn replay_miss_is_an_error() {
        let gw = Gateway::new(LlmMode::Replay, ReplayStore::default(), Some(Arc::new(Panicking)));
        assert!(matches!(gw.complete(&req("x")), Err(GatewayError::ReplayMiss { .. })));
    }

    #[test]
    fn record_calls_provider_once() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fixtures.json");
        let provider = Arc::new(Counting { calls: AtomicUsize::new(0), fail_first: 0 });
        let gw = Gateway::new(LlmMode::Record, ReplayStore::open(&path).unwrap(), Some(provider.clone()))
            .with_retry(no_wait());
        let a = gw.complete(&req("same")).unwrap();
        let b = gw.complete(&req("same")).unwrap();
        assert_eq!(provider.calls.load(Ordering::SeqCst), 1);
        assert_eq!(a.source, ResponseSource::Live);
        assert_eq!(b.source, ResponseSource::Replay);
        assert_eq!(a.text, b.text);
        let on_disk = ReplayStore::read(&path).unwrap();
        assert_eq!(on_disk.get(&req("same").digest()), Some(&"echo: same".to_string()));
    }

    #[test]
    fn retries_are_bounded() {
        let flaky = Arc::new(Counting { calls: AtomicUsize::new(0), fail_first: 2 });
        let gw = Gateway::new(LlmMode::Live, ReplayStore::default(), Some(flaky.clone())).with_retry(no_wait());
        assert!(gw.complete(&req("a")).is_ok());
        assert_eq!(flaky.calls.load(Ordering::SeqCst), 3);

        let dead = Arc::new(Counting { calls: AtomicUsize::new(0), fail_first: usize::MAX });
        let gw = Gateway::new(LlmMode::Live, ReplayStore::default(), Some(dead.clone())).with_retry(no_wait());
        assert!(matches!(gw.complete(&req("a")), Err(GatewayError::Provider(_))));
        assert_eq!(dead.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn live_without_provider_is_config_error() {
        let gw = Gateway::new(LlmMode::Live, ReplayStore::default(), None);
        assert!(matches!(gw.complete(&req("a")), Err(GatewayError::Config(_))));
    }

    #[test]
    fn fixture_loading_rejects_duplicates_and_bad_keys() {
        let dir = tempfile::tempdir().unwrap();
        let d = "a".repeat(64);
        let dup = dir.path().join("dup.json");
        fs::write(&dup, format!("{{\"{d}\": \"x\", \"{d}\": \"y\"}}")).unwrap();
        assert!(matches!(ReplayStore::read(&dup), Err(FixtureError::Json { .. })));
        let bad = dir.path().join("bad.json");
        fs::write(&bad, "{\"ABC\": \"x\"}").unwrap();
        assert!(matches!(ReplayStore::read(&bad), Err(FixtureError::BadKey(_))));
    }

    #[test]
    fn rate_limiter_spaces_calls() {
        let limiter = RateLimiter::new(20.0);
        let start = Instant::now();
        for _ in 0..3 {
            limiter.acquire();
        }
        assert!(start.elapsed() >= Duration::from_millis(90));
    }

    #[test]
    fn examples_become_chat_turns() {
        let mut r = req("subject");
        r.examples.push(repute_core::llm::ExamplePair { input_text: "ex".into(), label_text: "evil".into() });
        let m = chat_messages(&r);
        let roles: Vec<&str> = m.iter().map(|v| v["role"].as_str().unwrap()).collect();
        assert_eq!(roles, ["system", "user", "assistant", "user"]);
    }
}
