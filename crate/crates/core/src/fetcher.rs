//! Fetch workers, backends and the page repository.
//!
//! A worker drains its inbox, fetches each URL through a [`FetchBackend`]
//! under a per-host politeness delay, stores 200 responses in the shared
//! [`Repository`] and hands every stored page to the analyzer sink.
//!
//! The repository deduplicates by content digest, globally across domains:
//! a body seen before under another URL is indexed, logged as a duplicate,
//! and not stored again. The digest is 64-bit FNV-1a over the exact body
//! bytes, rendered as 16 lowercase hex digits.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::hash::Hasher;
use std::io::{self, BufWriter, Write};
use std::net::{IpAddr, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::mpsc::Sender;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocator::{WorkerId, WorkerInbox};
use crate::url_model::CanonicalUrl;

pub const USER_AGENT: &str = "webparf/0.1";

pub const STATUS_OK: u16 = 200;
pub const STATUS_NOT_FOUND: u16 = 404;
pub const STATUS_SERVER_ERROR: u16 = 500;
/// Connection-level failure (refused, DNS, TLS).
pub const STATUS_UNREACHABLE: u16 = 502;
/// Status of a request that did not complete in time.
pub const STATUS_TIMEOUT: u16 = 0;

pub const DEFAULT_LIVE_POLITENESS: Duration = Duration::from_millis(500);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchResult {
    pub url: CanonicalUrl,
    pub status: u16,
    pub body: Vec<u8>,
    pub content_type: String,
    pub elapsed: Duration,
}

impl FetchResult {
    pub fn ok(url: CanonicalUrl, body: Vec<u8>, content_type: &str, elapsed: Duration) -> Self {
        FetchResult {
            url,
            status: STATUS_OK,
            body,
            content_type: content_type.to_string(),
            elapsed,
        }
    }

    /// A failed fetch; failures never carry a body.
    pub fn failed(url: CanonicalUrl, status: u16, elapsed: Duration) -> Self {
        FetchResult {
            url,
            status,
            body: Vec::new(),
            content_type: String::new(),
            elapsed,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }

    /// 5xx or timeout: worth one retry.
    pub fn is_transient(&self) -> bool {
        self.status == STATUS_TIMEOUT || (500..600).contains(&self.status)
    }
}

/// Anything that can turn a URL into a response.
pub trait FetchBackend: Send + Sync {
    fn get(&self, url: &CanonicalUrl) -> FetchResult;

    fn resolve_addr(&self, _host: &str) -> Option<IpAddr> {
        None
    }
}

impl<B: FetchBackend + ?Sized> FetchBackend for &B {
    fn get(&self, url: &CanonicalUrl) -> FetchResult {
        (**self).get(url)
    }

    fn resolve_addr(&self, host: &str) -> Option<IpAddr> {
        (**self).resolve_addr(host)
    }
}

/// Spaces out requests to the same host.
#[derive(Debug)]
pub struct Politeness {
    delay: Duration,
    next_slot: Mutex<HashMap<String, Instant>>,
}

impl Politeness {
    pub fn new(delay: Duration) -> Self {
        Politeness {
            delay,
            next_slot: Mutex::new(HashMap::new()),
        }
    }

    pub fn delay(&self) -> Duration {
        self.delay
    }

    /// Blocks until `host` may be contacted again and books the next slot.
    pub fn wait_turn(&self, host: &str) {
        if self.delay.is_zero() {
            return;
        }
        let wake = {
            let mut slots = self.next_slot.lock().expect("politeness lock");
            let now = Instant::now();
            let at = slots.get(host).copied().unwrap_or(now).max(now);
            slots.insert(host.to_string(), at + self.delay);
            at
        };
        let now = Instant::now();
        if wake > now {
            std::thread::sleep(wake - now);
        }
    }
}

/// Fetches under politeness, retrying once on a transient failure.
pub fn fetch<B: FetchBackend + ?Sized>(
    backend: &B,
    url: &CanonicalUrl,
    politeness: &Politeness,
) -> FetchResult {
    politeness.wait_turn(url.host());
    let first = backend.get(url);
    if !first.is_transient() {
        return first;
    }
    politeness.wait_turn(url.host());
    backend.get(url)
}

/// Live HTTP GET backend.
pub struct HttpBackend {
    agent: ureq::Agent,
    dns: Mutex<HashMap<String, Option<IpAddr>>>,
}

impl HttpBackend {
    pub fn new(timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .user_agent(USER_AGENT)
            .http_status_as_error(false)
            .build()
            .into();
        HttpBackend {
            agent,
            dns: Mutex::new(HashMap::new()),
        }
    }
}

impl Default for HttpBackend {
    fn default() -> Self {
        HttpBackend::new(Duration::from_secs(10))
    }
}

impl FetchBackend for HttpBackend {
    fn get(&self, url: &CanonicalUrl) -> FetchResult {
        let start = Instant::now();
        let response = self.agent.get(url.render()).call();
        let mut response = match response {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => {
                return FetchResult::failed(url.clone(), STATUS_TIMEOUT, start.elapsed())
            }
            Err(_) => return FetchResult::failed(url.clone(), STATUS_UNREACHABLE, start.elapsed()),
        };
        let status = response.status().as_u16();
        match status {
            200 => {
                let content_type = response
                    .headers()
                    .get("content-type")
                    .and_then(|v| v.to_str().ok())
                    .unwrap_or("")
                    .to_string();
                match response.body_mut().read_to_vec() {
                    Ok(body) => FetchResult::ok(url.clone(), body, &content_type, start.elapsed()),
                    Err(ureq::Error::Timeout(_)) => {
                        FetchResult::failed(url.clone(), STATUS_TIMEOUT, start.elapsed())
                    }
                    Err(_) => FetchResult::failed(url.clone(), STATUS_UNREACHABLE, start.elapsed()),
                }
            }
            500..=599 => FetchResult::failed(url.clone(), status, start.elapsed()),
            // every other non-200 outcome is a permanent miss
            _ => FetchResult::failed(url.clone(), STATUS_NOT_FOUND, start.elapsed()),
        }
    }

    fn resolve_addr(&self, host: &str) -> Option<IpAddr> {
        let mut cache = self.dns.lock().expect("dns lock");
        *cache.entry(host.to_string()).or_insert_with(|| {
            (host, 80)
                .to_socket_addrs()
                .ok()
                .and_then(|mut addrs| addrs.next())
                .map(|a| a.ip())
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchCount {
    /// Every call into the backend, retries included.
    pub calls: u32,
    /// Calls that came back with a definitive answer (not 5xx, not timeout).
    pub completed: u32,
}

/// Wraps a backend and counts requests per URL.
pub struct InstrumentedBackend<B> {
    inner: B,
    counts: Mutex<BTreeMap<String, FetchCount>>,
}

impl<B: FetchBackend> InstrumentedBackend<B> {
    pub fn new(inner: B) -> Self {
        InstrumentedBackend {
            inner,
            counts: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    pub fn counts(&self) -> BTreeMap<String, FetchCount> {
        self.counts.lock().expect("counter lock").clone()
    }

    pub fn count(&self, url: &CanonicalUrl) -> FetchCount {
        self.counts
            .lock()
            .expect("counter lock")
            .get(&url.render())
            .copied()
            .unwrap_or_default()
    }

    /// Completed retrievals beyond the first, summed over all URLs.
    pub fn url_overlap(&self) -> u64 {
        self.counts
            .lock()
            .expect("counter lock")
            .values()
            .map(|c| u64::from(c.completed.saturating_sub(1)))
            .sum()
    }
}

impl<B: FetchBackend> FetchBackend for InstrumentedBackend<B> {
    fn get(&self, url: &CanonicalUrl) -> FetchResult {
        let result = self.inner.get(url);
        let mut counts = self.counts.lock().expect("counter lock");
        let c = counts.entry(url.render()).or_default();
        c.calls += 1;
        if !result.is_transient() {
            c.completed += 1;
        }
        result
    }

    fn resolve_addr(&self, host: &str) -> Option<IpAddr> {
        self.inner.resolve_addr(host)
    }
}

pub fn content_digest(body: &[u8]) -> u64 {
    let mut h = fnv::FnvHasher::default();
    h.write(body);
    h.finish()
}

pub fn digest_hex(digest: u64) -> String {
    format!("{digest:016x}")
}

#[derive(Debug, Error)]
pub enum RepoError {
    #[error("refusing to store an empty body for `{0}`")]
    EmptyBody(CanonicalUrl),
    #[error("url `{0}` is not in the repository index")]
    UnknownUrl(String),
    #[error("repository i/o at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageRecord {
    pub url: CanonicalUrl,
    pub domain: String,
    pub digest: u64,
    pub body: Vec<u8>,
    pub fetched_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub digest: u64,
    pub domain: String,
    pub round: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StoreOutcome {
    Stored,
    Duplicate { existing: CanonicalUrl },
}

#[derive(Serialize)]
struct IndexLine<'a> {
    url: &'a str,
    digest: String,
    domain: &'a str,
    round: u64,
}

#[derive(Debug)]
struct DiskStore {
    root: PathBuf,
    index: BufWriter<File>,
}

/// Fetched pages keyed by content digest, first writer wins.
#[derive(Debug, Default)]
pub struct Repository {
    records: HashMap<u64, PageRecord>,
    index: BTreeMap<String, IndexEntry>,
    duplicate_log: Vec<(CanonicalUrl, u64)>,
    disk: Option<DiskStore>,
}

impl Repository {
    pub fn in_memory() -> Self {
        Repository::default()
    }

    /// Bodies go to `<root>/pages/<hex-digest>`; [`tag_page`](Self::tag_page)
    /// appends to `<root>/index.jsonl`.
    pub fn on_disk(root: impl AsRef<Path>) -> Result<Self, RepoError> {
        let root = root.as_ref().to_path_buf();
        let pages = root.join("pages");
        fs::create_dir_all(&pages).map_err(|source| RepoError::Io {
            path: pages.clone(),
            source,
        })?;
        let index_path = root.join("index.jsonl");
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&index_path)
            .map_err(|source| RepoError::Io {
                path: index_path,
                source,
            })?;
        Ok(Repository {
            disk: Some(DiskStore {
                root,
                index: BufWriter::new(file),
            }),
            ..Repository::default()
        })
    }

    pub fn store_page(
        &mut self,
        url: &CanonicalUrl,
        domain: &str,
        body: &[u8],
        round: u64,
    ) -> Result<StoreOutcome, RepoError> {
        if body.is_empty() {
            return Err(RepoError::EmptyBody(url.clone()));
        }
        let digest = content_digest(body);
        self.index.insert(
            url.render(),
            IndexEntry {
                digest,
                domain: domain.to_string(),
                round,
            },
        );
        if let Some(existing) = self.records.get(&digest) {
            let existing = existing.url.clone();
            self.duplicate_log.push((url.clone(), digest));
            return Ok(StoreOutcome::Duplicate { existing });
        }
        if let Some(disk) = &self.disk {
            let path = disk.root.join("pages").join(digest_hex(digest));
            fs::write(&path, body).map_err(|source| RepoError::Io { path, source })?;
        }
        self.records.insert(
            digest,
            PageRecord {
                url: url.clone(),
                domain: domain.to_string(),
                digest,
                body: body.to_vec(),
                fetched_at: round,
            },
        );
        Ok(StoreOutcome::Stored)
    }

    /// Sets the final domain tag of a fetched URL and writes its index line.
    pub fn tag_page(&mut self, url: &CanonicalUrl, domain: &str) -> Result<(), RepoError> {
        let key = url.render();
        let entry = self
            .index
            .get_mut(&key)
            .ok_or_else(|| RepoError::UnknownUrl(key.clone()))?;
        entry.domain = domain.to_string();
        if let Some(record) = self.records.get_mut(&entry.digest) {
            if record.url == *url {
                record.domain = domain.to_string();
            }
        }
        if let Some(disk) = &mut self.disk {
            let line = IndexLine {
                url: &key,
                digest: digest_hex(entry.digest),
                domain,
                round: entry.round,
            };
            let path = disk.root.join("index.jsonl");
            serde_json::to_writer(&mut disk.index, &line)
                .map_err(io::Error::from)
                .and_then(|_| disk.index.write_all(b"\n"))
                .and_then(|_| disk.index.flush())
                .map_err(|source| RepoError::Io { path, source })?;
        }
        Ok(())
    }

    pub fn record(&self, digest: u64) -> Option<&PageRecord> {
        self.records.get(&digest)
    }

    pub fn records(&self) -> impl Iterator<Item = &PageRecord> {
        self.records.values()
    }

    pub fn lookup(&self, url: &CanonicalUrl) -> Option<&IndexEntry> {
        self.index.get(&url.render())
    }

    pub fn index(&self) -> &BTreeMap<String, IndexEntry> {
        &self.index
    }

    pub fn duplicate_log(&self) -> &[(CanonicalUrl, u64)] {
        &self.duplicate_log
    }

    pub fn stored_bodies(&self) -> usize {
        self.records.len()
    }

    pub fn indexed_urls(&self) -> usize {
        self.index.len()
    }
}

/// A stored page on its way to the analyzer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchedPage {
    pub worker: WorkerId,
    /// Position in the worker's cycle.
    pub seq: usize,
    pub url: CanonicalUrl,
    /// Domain of the queue the URL was issued from.
    pub domain: String,
    pub body: Vec<u8>,
    pub content_type: String,
}

pub trait AnalyzerSink: Sync {
    fn accept(&self, page: FetchedPage);
}

impl AnalyzerSink for Mutex<Vec<FetchedPage>> {
    fn accept(&self, page: FetchedPage) {
        self.lock().expect("sink lock").push(page);
    }
}

impl AnalyzerSink for Sender<FetchedPage> {
    fn accept(&self, page: FetchedPage) {
        // a closed receiver means nobody wants the page anymore
        let _ = self.send(page);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchOutcome {
    Stored,
    Duplicate { existing: CanonicalUrl },
    Failed { status: u16 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchedEntry {
    pub url: CanonicalUrl,
    pub domain: String,
    pub outcome: FetchOutcome,
    pub resolved_addr: Option<IpAddr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleReport {
    pub worker: WorkerId,
    pub entries: Vec<FetchedEntry>,
    pub backend_calls: usize,
    /// Set once the inbox is drained; the engine's round barrier waits for it.
    pub hungry: bool,
}

impl CycleReport {
    pub fn writes(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| !matches!(e.outcome, FetchOutcome::Failed { .. }))
            .count()
    }

    pub fn errors(&self) -> usize {
        self.entries.len() - self.writes()
    }
}

/// Drains `inbox`, fetching, storing and handing off each page.
pub fn worker_cycle<B: FetchBackend + ?Sized, S: AnalyzerSink + ?Sized>(
    inbox: &mut WorkerInbox,
    backend: &B,
    politeness: &Politeness,
    repo: &Mutex<Repository>,
    sink: &S,
    round: u64,
) -> Result<CycleReport, RepoError> {
    let worker = inbox.owner();
    let mut report = CycleReport {
        worker,
        entries: Vec::new(),
        backend_calls: 0,
        hungry: false,
    };
    while let Some(entry) = inbox.pop() {
        let resolved_addr = entry
            .resolved_addr
            .or_else(|| backend.resolve_addr(entry.url.host()));
        let result = fetch(backend, &entry.url, politeness);
        report.backend_calls += 1;
        let outcome = if result.is_ok() && !result.body.is_empty() {
            let stored = repo.lock().expect("repository lock").store_page(
                &entry.url,
                &entry.domain,
                &result.body,
                round,
            )?;
            sink.accept(FetchedPage {
                worker,
                seq: report.entries.len(),
                url: entry.url.clone(),
                domain: entry.domain.clone(),
                body: result.body,
                content_type: result.content_type,
            });
            match stored {
                StoreOutcome::Stored => FetchOutcome::Stored,
                StoreOutcome::Duplicate { existing } => FetchOutcome::Duplicate { existing },
            }
        } else {
            FetchOutcome::Failed {
                status: result.status,
            }
        };
        report.entries.push(FetchedEntry {
            url: entry.url,
            domain: entry.domain,
            outcome,
            resolved_addr,
        });
    }
    report.hungry = true;
    Ok(report)
}
