//! URL fetching, either from a fixture corpus on disk or from the live web.

use crate::urlnorm::{normalize_or_raw, parse_lenient};
use chrono::{DateTime, Utc};
use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};
use texting_robots::Robot;
use url::Url;

/// Status used when no HTTP response was obtained.
pub const NETWORK_FAILURE: u16 = 0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchRecord {
    pub url: String,
    /// HTTP status, or 0 when the request never produced a response.
    pub status: u16,
    pub body: Vec<u8>,
    pub fetched_at: DateTime<Utc>,
    pub diagnostic: Option<String>,
}

impl FetchRecord {
    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }

    pub fn failure(url: &str, now: DateTime<Utc>, diagnostic: impl Into<String>) -> Self {
        FetchRecord {
            url: url.to_string(),
            status: NETWORK_FAILURE,
            body: Vec::new(),
            fetched_at: now,
            diagnostic: Some(diagnostic.into()),
        }
    }

    /// A one-line description of why the fetch did not succeed.
    pub fn describe_failure(&self) -> String {
        match &self.diagnostic {
            Some(d) => format!("status {}: {d}", self.status),
            None => format!("status {}", self.status),
        }
    }
}

pub trait Fetcher: Send + Sync {
    fn fetch(&self, url: &str, now: DateTime<Utc>) -> FetchRecord;
}

impl<F: Fetcher + ?Sized> Fetcher for std::sync::Arc<F> {
    fn fetch(&self, url: &str, now: DateTime<Utc>) -> FetchRecord {
        (**self).fetch(url, now)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
}

#[derive(Debug, Clone)]
enum Body {
    File(PathBuf),
    Bytes(Vec<u8>),
}

/// Serves responses from a corpus directory.
///
/// The corpus has a `manifest.tsv` with one entry per line:
/// `normalized_url<TAB>status<TAB>relative_path`. Lookups normalize the
/// requested URL first; a miss is a 404 with an empty body.
#[derive(Debug, Default)]
pub struct FixtureFetcher {
    entries: BTreeMap<String, (u16, Body)>,
    log: Mutex<Vec<String>>,
}

pub const MANIFEST_FILE: &str = "manifest.tsv";

impl FixtureFetcher {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn open(dir: impl AsRef<Path>) -> Result<Self, FixtureError> {
        let dir = dir.as_ref();
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        let mut f = FixtureFetcher::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| FixtureError::Manifest { line: i + 1, message: message.to_string() };
            let mut parts = line.split('\t');
            let (Some(url), Some(status)) = (parts.next(), parts.next()) else {
                return Err(err("expected url<TAB>status<TAB>path"));
            };
            let status: u16 = status.trim().parse().map_err(|_| err("status is not a number"))?;
            let path = parts.next().unwrap_or("").trim();
            let body = if path.is_empty() { Body::Bytes(Vec::new()) } else { Body::File(dir.join(path)) };
            f.entries.insert(normalize_or_raw(url), (status, body));
        }
        Ok(f)
    }

    /// Adds or replaces an in-memory response.
    pub fn insert(&mut self, url: &str, status: u16, body: impl Into<Vec<u8>>) {
        self.entries.insert(normalize_or_raw(url), (status, Body::Bytes(body.into())));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Normalized URLs requested so far, in request order.
    pub fn fetch_log(&self) -> Vec<String> {
        self.log.lock().expect("fetch log").clone()
    }

    pub fn clear_log(&self) {
        self.log.lock().expect("fetch log").clear();
    }
}

impl Fetcher for FixtureFetcher {
    fn fetch(&self, url: &str, now: DateTime<Utc>) -> FetchRecord {
        let key = normalize_or_raw(url);
        self.log.lock().expect("fetch log").push(key.clone());
        let Some((status, body)) = self.entries.get(&key) else {
            return FetchRecord { url: url.to_string(), status: 404, body: Vec::new(), fetched_at: now, diagnostic: None };
        };
        let body = match body {
            Body::Bytes(b) => b.clone(),
            Body::File(p) => match fs::read(p) {
                Ok(b) => b,
                Err(e) => return FetchRecord::failure(url, now, format!("fixture body {}: {e}", p.display())),
            },
        };
        FetchRecord { url: url.to_string(), status: *status, body, fetched_at: now, diagnostic: None }
    }
}

/// Fetches `urls` on up to `workers` threads. Results keep input order.
pub fn fetch_all(fetcher: &dyn Fetcher, urls: &[String], now: DateTime<Utc>, workers: usize) -> Vec<FetchRecord> {
    let workers = workers.clamp(1, urls.len().max(1));
    if workers == 1 {
        return urls.iter().map(|u| fetcher.fetch(u, now)).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<FetchRecord>>> = urls.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                let Some(url) = urls.get(i) else { break };
                let record = fetcher.fetch(url, now);
                *slots[i].lock().expect("fetch slot") = Some(record);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().expect("fetch slot").expect("every slot filled"))
        .collect()
}

/// Settings for [`LiveFetcher`].
#[derive(Debug, Clone)]
pub struct LiveConfig {
    pub user_agent: String,
    /// Minimum spacing between requests to one host.
    pub politeness: Duration,
    pub timeout: Duration,
    pub max_redirects: usize,
    pub max_body_bytes: usize,
}

impl Default for LiveConfig {
    fn default() -> Self {
        LiveConfig {
            user_agent: concat!("mediacloud-desk/", env!("CARGO_PKG_VERSION")).to_string(),
            politeness: Duration::from_secs(1),
            timeout: Duration::from_secs(30),
            max_redirects: 5,
            max_body_bytes: 10 << 20,
        }
    }
}

/// HTTP fetcher that honours robots.txt and spaces requests per host.
pub struct LiveFetcher {
    client: reqwest::blocking::Client,
    config: LiveConfig,
    robots: Mutex<HashMap<String, Option<Robot>>>,
    last_request: Mutex<HashMap<String, Instant>>,
}

impl LiveFetcher {
    pub fn new(config: LiveConfig) -> Result<Self, reqwest::Error> {
        let client = reqwest::blocking::Client::builder()
            .redirect(reqwest::redirect::Policy::none())
            .timeout(config.timeout)
            .user_agent(config.user_agent.clone())
            .build()?;
        Ok(LiveFetcher {
            client,
            config,
            robots: Mutex::new(HashMap::new()),
            last_request: Mutex::new(HashMap::new()),
        })
    }

    /// Blocks until `host` may be contacted again.
    fn wait_turn(&self, host: &str) {
        loop {
            let wait = {
                let mut last = self.last_request.lock().expect("rate gate");
                let now = Instant::now();
                match last.get(host) {
                    Some(&t) if now < t + self.config.politeness => t + self.config.politeness - now,
                    _ => {
                        last.insert(host.to_string(), now);
                        return;
                    }
                }
            };
            std::thread::sleep(wait);
        }
    }

    fn origin(url: &Url) -> String {
        format!("{}://{}", url.scheme(), url.host_str().unwrap_or_default())
            + &url.port().map(|p| format!(":{p}")).unwrap_or_default()
    }

    fn allowed(&self, url: &Url) -> bool {
        let origin = Self::origin(url);
        if let Some(cached) = self.robots.lock().expect("robots cache").get(&origin) {
            return cached.as_ref().map_or(true, |r| r.allowed(url.as_str()));
        }
        self.wait_turn(url.host_str().unwrap_or_default());
        let robot = self
            .client
            .get(format!("{origin}/robots.txt"))
            .send()
            .ok()
            .filter(|r| r.status().is_success())
            .and_then(|r| r.bytes().ok())
            .and_then(|body| Robot::new(&self.config.user_agent, &body).ok());
        let allowed = robot.as_ref().map_or(true, |r| r.allowed(url.as_str()));
        self.robots.lock().expect("robots cache").insert(origin, robot);
        allowed
    }

    fn get(&self, url: &Url, now: DateTime<Utc>) -> Result<FetchRecord, String> {
        let mut current = url.clone();
        for _ in 0..=self.config.max_redirects {
            if !self.allowed(&current) {
                return Err(format!("robots: {current} disallowed"));
            }
            self.wait_turn(current.host_str().unwrap_or_default());
            let resp = self.client.get(current.clone()).send().map_err(|e| e.to_string())?;
            let status = resp.status();
            if status.is_redirection() {
                let location = resp
                    .headers()
                    .get(reqwest::header::LOCATION)
                    .and_then(|v| v.to_str().ok())
                    .ok_or("redirect without location")?;
                current = current.join(location).map_err(|e| format!("bad redirect target: {e}"))?;
                continue;
            }
            let mut body = Vec::new();
            resp.take(self.config.max_body_bytes as u64)
                .read_to_end(&mut body)
                .map_err(|e| e.to_string())?;
            return Ok(FetchRecord {
                url: url.to_string(),
                status: status.as_u16(),
                body,
                fetched_at: now,
                diagnostic: (current != *url).then(|| format!("redirected to {current}")),
            });
        }
        Err(format!("more than {} redirects", self.config.max_redirects))
    }
}

impl Fetcher for LiveFetcher {
    fn fetch(&self, url: &str, now: DateTime<Utc>) -> FetchRecord {
        let parsed = match parse_lenient(url) {
            Ok(u) => u,
            Err(e) => return FetchRecord::failure(url, now, e.to_string()),
        };
        self.get(&parsed, now).unwrap_or_else(|d| FetchRecord::failure(url, now, d))
    }
}
