//! Web search: a provider interface, a JSON fixture provider and a live
//! adapter over a keyless HTML results page.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use scraper::{Html, Selector};

use repute_core::corpus::merge_ranked;
use repute_core::CelebrityProfile;

use crate::files::{read_json, FileError};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SearchError {
    #[error("search provider failed: {0}")]
    Provider(String),
    #[error("no search results for {0}")]
    EmptyResult(String),
}

pub trait SearchProvider: Send + Sync {
    /// Ranked result URLs for `query`, best first, at most `limit`.
    fn search(&self, query: &str, limit: usize) -> Result<Vec<String>, SearchError>;
}

/// Results from a `{query: [url, ...]}` JSON file; unknown queries return
/// nothing.
#[derive(Debug, Clone, Default)]
pub struct FixtureSearch {
    results: BTreeMap<String, Vec<String>>,
}

impl FixtureSearch {
    pub fn new(results: BTreeMap<String, Vec<String>>) -> Self {
        Self { results }
    }

    pub fn load(path: &Path) -> Result<Self, FileError> {
        Ok(Self::new(read_json(path)?))
    }
}

impl SearchProvider for FixtureSearch {
    fn search(&self, query: &str, limit: usize) -> Result<Vec<String>, SearchError> {
        Ok(self.results.get(query).map(|v| v.iter().take(limit).cloned().collect()).unwrap_or_default())
    }
}

/// Live search through DuckDuckGo's HTML endpoint, Japanese region.
pub struct DuckDuckGoSearch {
    client: reqwest::blocking::Client,
    endpoint: String,
}

impl DuckDuckGoSearch {
    pub fn new() -> Result<Self, SearchError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .user_agent(concat!("repute/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| SearchError::Provider(e.to_string()))?;
        Ok(Self { client, endpoint: "https://html.duckduckgo.com/html/".into() })
    }
}

/// Result links from a DuckDuckGo HTML page, unwrapping redirect links.
pub fn parse_duckduckgo(page: &str) -> Vec<String> {
    let doc = Html::parse_document(page);
    let sel = Selector::parse("a.result__a").expect("static selector");
    let mut out = Vec::new();
    for a in doc.select(&sel) {
        let Some(href) = a.value().attr("href") else { continue };
        let absolute = if href.starts_with("//") { format!("https:{href}") } else { href.to_string() };
        let Ok(parsed) = url::Url::parse(&absolute) else { continue };
        let target = parsed.query_pairs().find(|(k, _)| k == "uddg").map(|(_, v)| v.into_owned()).unwrap_or(absolute);
        if target.starts_with("http") && !out.contains(&target) {
            out.push(target);
        }
    }
    out
}

impl SearchProvider for DuckDuckGoSearch {
    fn search(&self, query: &str, limit: usize) -> Result<Vec<String>, SearchError> {
        let resp = self
            .client
            .post(&self.endpoint)
            .form(&[("q", query), ("kl", "jp-jp")])
            .send()
            .map_err(|e| SearchError::Provider(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(SearchError::Provider(format!("HTTP {}", resp.status())));
        }
        let body = resp.text().map_err(|e| SearchError::Provider(e.to_string()))?;
        let mut urls = parse_duckduckgo(&body);
        urls.truncate(limit);
        Ok(urls)
    }
}

/// Search every alias and interleave the rankings into at most `limit`
/// distinct URLs.
pub fn search_pages(
    profile: &CelebrityProfile,
    provider: &dyn SearchProvider,
    limit: usize,
) -> Result<Vec<String>, SearchError> {
    let per_alias =
        profile.query_aliases.iter().map(|alias| provider.search(alias, limit)).collect::<Result<Vec<_>, _>>()?;
    let urls = merge_ranked(&per_alias, limit);
    if urls.is_empty() {
        return Err(SearchError::EmptyResult(profile.canonical_name.clone()));
    }
    Ok(urls)
}
