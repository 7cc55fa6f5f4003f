//! Page fetching with a URL-keyed on-disk cache.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::files::{read_json, sha256_hex, write_atomic, FileError};
use crate::html::{detect_language, extract_text};

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum FetchError {
    #[error("invalid URL {0}")]
    InvalidUrl(String),
    #[error("HTTP {status} for {url}")]
    Http { url: String, status: u16 },
    #[error("transport error for {url}: {message}")]
    Transport { url: String, message: String },
    #[error("non-HTML content ({content_type}) at {url}")]
    NonHtmlContent { url: String, content_type: String },
    #[error("cache error: {0}")]
    Cache(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchedPage {
    pub bytes: Vec<u8>,
    pub content_type: Option<String>,
}

pub trait Fetcher: Send + Sync {
    fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError>;
}

pub struct HttpFetcher {
    client: reqwest::blocking::Client,
}

impl HttpFetcher {
    pub fn new() -> Result<Self, FetchError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .user_agent(concat!("repute/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| FetchError::Transport { url: String::new(), message: e.to_string() })?;
        Ok(Self { client })
    }
}

impl Fetcher for HttpFetcher {
    fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError> {
        let transport = |e: reqwest::Error| FetchError::Transport { url: url.into(), message: e.to_string() };
        let resp = self.client.get(url).send().map_err(transport)?;
        let status = resp.status();
        if !status.is_success() {
            return Err(FetchError::Http { url: url.into(), status: status.as_u16() });
        }
        let content_type =
            resp.headers().get(reqwest::header::CONTENT_TYPE).and_then(|v| v.to_str().ok()).map(str::to_string);
        let bytes = resp.bytes().map_err(transport)?.to_vec();
        Ok(FetchedPage { bytes, content_type })
    }
}

/// Pages served from a directory holding an `index.json` of
/// `{url: file name}`. URLs absent from the index answer 404.
pub struct FixtureFetcher {
    dir: PathBuf,
    index: BTreeMap<String, String>,
    pub calls: AtomicUsize,
}

impl FixtureFetcher {
    pub fn load(dir: &Path) -> Result<Self, FileError> {
        let index = read_json(&dir.join("index.json"))?;
        Ok(Self { dir: dir.to_path_buf(), index, calls: AtomicUsize::new(0) })
    }
}

fn content_type_for(file: &str) -> &'static str {
    match file.rsplit('.').next().unwrap_or("") {
        "html" | "htm" => "text/html; charset=utf-8",
        "txt" => "text/plain",
        "pdf" => "application/pdf",
        "json" => "application/json",
        _ => "application/octet-stream",
    }
}

impl Fetcher for FixtureFetcher {
    fn fetch(&self, url: &str) -> Result<FetchedPage, FetchError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let file = self.index.get(url).ok_or_else(|| FetchError::Http { url: url.into(), status: 404 })?;
        let bytes = fs::read(self.dir.join(file))
            .map_err(|e| FetchError::Transport { url: url.into(), message: e.to_string() })?;
        Ok(FetchedPage { bytes, content_type: Some(content_type_for(file).into()) })
    }
}

/// Sidecar written next to each cached page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageMeta {
    pub url: String,
    pub rank: u32,
    pub fetched_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_type: Option<String>,
}

/// `<root>/pages/<sha256(url)>.html` plus `.meta.json`.
#[derive(Debug, Clone)]
pub struct PageCache {
    root: PathBuf,
}

impl PageCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    fn stem(&self, url: &str) -> PathBuf {
        self.root.join("pages").join(sha256_hex(url.as_bytes()))
    }

    pub fn html_path(&self, url: &str) -> PathBuf {
        self.stem(url).with_extension("html")
    }

    pub fn meta_path(&self, url: &str) -> PathBuf {
        self.stem(url).with_extension("meta.json")
    }

    pub fn get(&self, url: &str) -> Option<(Vec<u8>, PageMeta)> {
        let bytes = fs::read(self.html_path(url)).ok()?;
        let meta: PageMeta = read_json(&self.meta_path(url)).ok()?;
        (meta.url == url).then_some((bytes, meta))
    }

    pub fn put(&self, bytes: &[u8], meta: &PageMeta) -> std::io::Result<()> {
        write_atomic(&self.html_path(&meta.url), bytes)?;
        let json = serde_json::to_string_pretty(meta).expect("meta serializes");
        write_atomic(&self.meta_path(&meta.url), format!("{json}\n").as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WebDocument {
    pub url: String,
    pub rank: u32,
    pub fetched_at: DateTime<Utc>,
    pub raw_html: Vec<u8>,
    pub extracted_text: String,
    pub language_tag: String,
}

/// Document metadata as written to the corpus (the raw bytes stay in the
/// page cache).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub url: String,
    pub rank: u32,
    pub fetched_at: DateTime<Utc>,
    pub language_tag: String,
    pub html_digest: String,
    pub text_chars: usize,
}

impl From<&WebDocument> for DocumentRecord {
    fn from(d: &WebDocument) -> Self {
        Self {
            url: d.url.clone(),
            rank: d.rank,
            fetched_at: d.fetched_at,
            language_tag: d.language_tag.clone(),
            html_digest: sha256_hex(&d.raw_html),
            text_chars: d.extracted_text.chars().count(),
        }
    }
}

fn is_html(content_type: Option<&str>) -> bool {
    content_type.is_none_or(|ct| {
        let ct = ct.to_ascii_lowercase();
        ct.starts_with("text/html") || ct.starts_with("application/xhtml")
    })
}

/// Fetch one page, serving from the cache unless `force` is set.
pub fn fetch_document(
    url: &str,
    rank: u32,
    fetcher: &dyn Fetcher,
    cache: &PageCache,
    clock: &dyn Clock,
    force: bool,
) -> Result<WebDocument, FetchError> {
    let parsed = url::Url::parse(url).map_err(|_| FetchError::InvalidUrl(url.into()))?;
    if !matches!(parsed.scheme(), "http" | "https") {
        return Err(FetchError::InvalidUrl(url.into()));
    }
    let cached = if force { None } else { cache.get(url) };
    let (bytes, meta) = match cached {
        Some(hit) => hit,
        None => {
            let page = fetcher.fetch(url)?;
            if !is_html(page.content_type.as_deref()) {
                return Err(FetchError::NonHtmlContent {
                    url: url.into(),
                    content_type: page.content_type.unwrap_or_default(),
                });
            }
            let meta = PageMeta { url: url.into(), rank, fetched_at: clock.now(), content_type: page.content_type };
            cache.put(&page.bytes, &meta).map_err(|e| FetchError::Cache(e.to_string()))?;
            (page.bytes, meta)
        }
    };
    let extracted_text = extract_text(&bytes);
    let language_tag = detect_language(&extracted_text).to_string();
    Ok(WebDocument {
        url: url.into(),
        rank,
        fetched_at: meta.fetched_at,
        raw_html: bytes,
        extracted_text,
        language_tag,
    })
}

/// Fetch ranked URLs (rank = position + 1) on a bounded worker pool.
/// Results come back in input order.
pub fn fetch_all(
    urls: &[String],
    fetcher: &dyn Fetcher,
    cache: &PageCache,
    clock: &dyn Clock,
    force: bool,
    workers: usize,
) -> Vec<Result<WebDocument, FetchError>> {
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<Result<WebDocument, FetchError>>> = vec![None; urls.len()];
    let results = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|s| {
        for _ in 0..workers.max(1).min(urls.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= urls.len() {
                    break;
                }
                let r = fetch_document(&urls[i], i as u32 + 1, fetcher, cache, clock, force);
                results.lock().expect("fetch results poisoned")[i] = Some(r);
            });
        }
    });
    slots.into_iter().map(|r| r.expect("every slot filled")).collect()
}
