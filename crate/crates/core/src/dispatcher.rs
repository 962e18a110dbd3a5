//! The URL database and the dispatcher that feeds discovered links back into
//! the frontier.
//!
//! Discovered hrefs are resolved against their page, canonicalized, given a
//! predicted domain, checked against the URL database and the frontier, and
//! then held in a pending batch. The batch is flushed into the frontier when
//! it reaches the trigger size and at the end of every crawl cycle.
//!
//! Domain prediction applies the first rule that fires:
//! 1. the URL already has a tag in the database: keep it;
//! 2. profile keywords occur among the URL's host and path tokens: the
//!    profile with most hits wins, smallest name on ties;
//! 3. otherwise the URL inherits the domain of the page linking to it.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyzer::LinkSet;
use crate::frontier::{Admission, DomainProfile, FrontierError, GlobalFrontier};
use crate::url_model::{resolve, CanonicalUrl};

pub const DEFAULT_BATCH_SIZE: usize = 64;

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("unknown url `{0}`")]
    UnknownUrl(String),
    #[error("url `{url}` cannot move from {from:?} to {to:?}")]
    InvalidTransition {
        url: String,
        from: UrlState,
        to: UrlState,
    },
    #[error("url `{0}` is already in the database")]
    AlreadyKnown(String),
    #[error(transparent)]
    Frontier(#[from] FrontierError),
    #[error("url database i/o at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("url database {path} line {line}: {message}")]
    Replay {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Seed,
    Predicted,
    Classified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UrlState {
    Discovered,
    Enqueued,
    Fetched,
    Failed,
}

impl UrlState {
    fn can_move_to(self, next: UrlState) -> bool {
        use UrlState::*;
        matches!(
            (self, next),
            (Discovered, Enqueued) | (Enqueued, Fetched) | (Enqueued, Failed)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlDbEntry {
    pub url: CanonicalUrl,
    pub domain: String,
    pub provenance: Provenance,
    pub state: UrlState,
    pub source: Option<CanonicalUrl>,
    pub inlink_count: u64,
}

/// One line of `urldb.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlDbRecord {
    pub url: CanonicalUrl,
    pub domain: String,
    pub provenance: Provenance,
    pub state: UrlState,
    pub source: Option<CanonicalUrl>,
}

/// Every URL the crawler knows, with its domain tag and lifecycle state.
#[derive(Debug, Default)]
pub struct UrlDb {
    entries: HashMap<String, UrlDbEntry>,
    log: Option<(PathBuf, BufWriter<File>)>,
}

impl UrlDb {
    pub fn in_memory() -> Self {
        UrlDb::default()
    }

    /// Appends every state transition to `path` as one JSON line.
    pub fn with_log(path: impl AsRef<Path>) -> Result<Self, DispatchError> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|source| DispatchError::Io {
                path: path.clone(),
                source,
            })?;
        Ok(UrlDb {
            entries: HashMap::new(),
            log: Some((path, BufWriter::new(file))),
        })
    }

    /// Rebuilds a database by folding a transition log; the last line for a
    /// URL wins. Inlink counts are not persisted and start at zero.
    pub fn replay(path: impl AsRef<Path>) -> Result<Self, DispatchError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| DispatchError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut db = UrlDb::in_memory();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| DispatchError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: UrlDbRecord =
                serde_json::from_str(&line).map_err(|e| DispatchError::Replay {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
            let inlinks = db
                .entries
                .get(&rec.url.render())
                .map_or(0, |e| e.inlink_count);
            db.entries.insert(
                rec.url.render(),
                UrlDbEntry {
                    url: rec.url,
                    domain: rec.domain,
                    provenance: rec.provenance,
                    state: rec.state,
                    source: rec.source,
                    inlink_count: inlinks,
                },
            );
        }
        Ok(db)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, url: &CanonicalUrl) -> Option<&UrlDbEntry> {
        self.entries.get(&url.render())
    }

    pub fn contains(&self, url: &CanonicalUrl) -> bool {
        self.entries.contains_key(&url.render())
    }

    /// Entries sorted by canonical string.
    pub fn entries(&self) -> Vec<&UrlDbEntry> {
        let mut all: Vec<_> = self.entries.values().collect();
        all.sort_by_key(|e| e.url.render());
        all
    }

    pub fn insert_seed(&mut self, url: &CanonicalUrl, domain: &str) -> Result<(), DispatchError> {
        self.insert(UrlDbEntry {
            url: url.clone(),
            domain: domain.to_string(),
            provenance: Provenance::Seed,
            state: UrlState::Enqueued,
            source: None,
            inlink_count: 0,
        })
    }

    fn insert(&mut self, entry: UrlDbEntry) -> Result<(), DispatchError> {
        let key = entry.url.render();
        if self.entries.contains_key(&key) {
            return Err(DispatchError::AlreadyKnown(key));
        }
        self.entries.insert(key.clone(), entry);
        self.log_entry(&key)
    }

    pub fn set_state(&mut self, url: &CanonicalUrl, next: UrlState) -> Result<(), DispatchError> {
        let key = url.render();
        let entry = self
            .entries
            .get_mut(&key)
            .ok_or_else(|| DispatchError::UnknownUrl(key.clone()))?;
        if entry.state == next {
            return Ok(());
        }
        if !entry.state.can_move_to(next) {
            return Err(DispatchError::InvalidTransition {
                url: key,
                from: entry.state,
                to: next,
            });
        }
        entry.state = next;
        self.log_entry(&key)
    }

    /// Sets a classified tag. An existing classified tag is never replaced.
    pub fn tag_classified(
        &mut self,
        url: &CanonicalUrl,
        domain: &str,
    ) -> Result<&UrlDbEntry, DispatchError> {
        let key = url.render();
        let entry = self
            .entries
            .get_mut(&key)
            .ok_or_else(|| DispatchError::UnknownUrl(key.clone()))?;
        if entry.provenance != Provenance::Classified {
            entry.domain = domain.to_string();
            entry.provenance = Provenance::Classified;
            self.log_entry(&key)?;
        }
        Ok(&self.entries[&key])
    }

    pub fn bump_inlink(&mut self, url: &CanonicalUrl) -> Result<u64, DispatchError> {
        let entry = self
            .entries
            .get_mut(&url.render())
            .ok_or_else(|| DispatchError::UnknownUrl(url.render()))?;
        entry.inlink_count += 1;
        Ok(entry.inlink_count)
    }

    fn log_entry(&mut self, key: &str) -> Result<(), DispatchError> {
        let Some((path, out)) = &mut self.log else {
            return Ok(());
        };
        let e = &self.entries[key];
        let rec = UrlDbRecord {
            url: e.url.clone(),
            domain: e.domain.clone(),
            provenance: e.provenance,
            state: e.state,
            source: e.source.clone(),
        };
        serde_json::to_writer(&mut *out, &rec)
            .map_err(io::Error::from)
            .and_then(|_| out.write_all(b"\n"))
            .and_then(|_| out.flush())
            .map_err(|source| DispatchError::Io {
                path: path.clone(),
                source,
            })
    }
}

/// Lowercase tokens of host and path, split on `/ . - _` and digits.
pub fn url_tokens(url: &CanonicalUrl) -> Vec<String> {
    let text = format!("{}{}", url.host(), url.path());
    text.split(|c: char| matches!(c, '/' | '.' | '-' | '_') || c.is_ascii_digit())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionRule {
    Tagged,
    UrlKeywords,
    Inherited,
}

/// Predicts a domain for `url` and reports which rule decided.
pub fn predict_domain_with_rule(
    url: &CanonicalUrl,
    src_domain: &str,
    db: &UrlDb,
    profiles: &[DomainProfile],
) -> (String, PredictionRule) {
    if let Some(e) = db.get(url) {
        return (e.domain.clone(), PredictionRule::Tagged);
    }
    let tokens = url_tokens(url);
    let mut best: Option<(&str, usize)> = None;
    let mut sorted: Vec<&DomainProfile> = profiles.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    for p in sorted {
        let hits = tokens.iter().filter(|t| p.keywords.contains(*t)).count();
        if hits > 0 && best.is_none_or(|(_, h)| hits > h) {
            best = Some((&p.name, hits));
        }
    }
    match best {
        Some((name, _)) => (name.to_string(), PredictionRule::UrlKeywords),
        None => (src_domain.to_string(), PredictionRule::Inherited),
    }
}

pub fn predict_domain(
    url: &CanonicalUrl,
    src_domain: &str,
    db: &UrlDb,
    profiles: &[DomainProfile],
) -> String {
    predict_domain_with_rule(url, src_domain, db, profiles).0
}

/// Discoveries waiting to be merged into the frontier.
#[derive(Debug, Clone, Default)]
pub struct PendingBatch {
    entries: Vec<UrlDbEntry>,
    trigger_size: usize,
}

impl PendingBatch {
    pub fn new(trigger_size: usize) -> Self {
        PendingBatch {
            entries: Vec::new(),
            trigger_size: trigger_size.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn trigger_size(&self) -> usize {
        self.trigger_size
    }

    pub fn is_due(&self) -> bool {
        self.entries.len() >= self.trigger_size
    }

    pub fn entries(&self) -> &[UrlDbEntry] {
        &self.entries
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlushReport {
    pub flushed: u64,
    pub rejected_duplicate: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispatchStats {
    pub links_seen: u64,
    pub malformed: u64,
    pub discoveries: u64,
    pub duplicate_sightings: u64,
    pub flush_events: u64,
    pub size_flushes: u64,
    pub flushed: u64,
    pub rejected_duplicate: u64,
}

#[derive(Debug, Clone)]
pub struct Dispatcher {
    batch: PendingBatch,
    profiles: Vec<DomainProfile>,
    stats: DispatchStats,
    flush_sizes: Vec<usize>,
}

impl Dispatcher {
    pub fn new(batch_size: usize, profiles: Vec<DomainProfile>) -> Self {
        Dispatcher {
            batch: PendingBatch::new(batch_size),
            profiles,
            stats: DispatchStats::default(),
            flush_sizes: Vec::new(),
        }
    }

    pub fn stats(&self) -> DispatchStats {
        self.stats
    }

    pub fn batch(&self) -> &PendingBatch {
        &self.batch
    }

    /// Sizes of every non-empty flush so far, in order.
    pub fn flush_sizes(&self) -> &[usize] {
        &self.flush_sizes
    }

    /// Resolves a page's hrefs. Known URLs only gain an inlink; unknown ones
    /// come back as candidate entries with a predicted domain.
    pub fn process_links(
        &mut self,
        links: &LinkSet,
        src_domain: &str,
        db: &mut UrlDb,
        frontier: &mut GlobalFrontier,
    ) -> Vec<UrlDbEntry> {
        let mut candidates = Vec::new();
        for href in &links.hrefs {
            self.stats.links_seen += 1;
            let Ok(url) = resolve(&links.base, href) else {
                self.stats.malformed += 1;
                continue;
            };
            if self.record_sighting(&url, db, frontier) {
                continue;
            }
            let domain = predict_domain(&url, src_domain, db, &self.profiles);
            candidates.push(UrlDbEntry {
                url,
                domain,
                provenance: Provenance::Predicted,
                state: UrlState::Discovered,
                source: Some(links.base.clone()),
                inlink_count: 1,
            });
        }
        candidates
    }

    /// Bumps inlink counters if `url` is known; returns whether it was.
    fn record_sighting(
        &mut self,
        url: &CanonicalUrl,
        db: &mut UrlDb,
        frontier: &mut GlobalFrontier,
    ) -> bool {
        let in_db = db.bump_inlink(url).is_ok();
        let in_frontier = frontier.record_inlink(url).is_ok();
        if in_db || in_frontier {
            self.stats.duplicate_sightings += 1;
        }
        in_db || in_frontier
    }

    /// Keeps candidates absent from both the database and the frontier, and
    /// records each kept one in the database before looking at the next.
    pub fn filter_new(
        &mut self,
        candidates: Vec<UrlDbEntry>,
        db: &mut UrlDb,
        frontier: &mut GlobalFrontier,
    ) -> Result<Vec<UrlDbEntry>, DispatchError> {
        let mut admitted = Vec::new();
        for entry in candidates {
            if self.record_sighting(&entry.url, db, frontier) {
                continue;
            }
            db.insert(entry.clone())?;
            self.stats.discoveries += 1;
            admitted.push(entry);
        }
        Ok(admitted)
    }

    /// Adds admitted discoveries to the pending batch, flushing each time it
    /// reaches the trigger size.
    pub fn push(
        &mut self,
        admitted: Vec<UrlDbEntry>,
        db: &mut UrlDb,
        frontier: &mut GlobalFrontier,
    ) -> Result<Vec<FlushReport>, DispatchError> {
        let mut reports = Vec::new();
        for entry in admitted {
            self.batch.entries.push(entry);
            if self.batch.is_due() {
                self.stats.size_flushes += 1;
                reports.push(self.flush_batch(db, frontier)?);
            }
        }
        Ok(reports)
    }

    /// process_links, filter_new and push for one analyzed page.
    pub fn dispatch_page(
        &mut self,
        links: &LinkSet,
        src_domain: &str,
        db: &mut UrlDb,
        frontier: &mut GlobalFrontier,
    ) -> Result<Vec<FlushReport>, DispatchError> {
        let candidates = self.process_links(links, src_domain, db, frontier);
        let admitted = self.filter_new(candidates, db, frontier)?;
        self.push(admitted, db, frontier)
    }

    /// Scores each pending entry from its current counters and enqueues it
    /// into its predicted domain.
    pub fn flush_batch(
        &mut self,
        db: &mut UrlDb,
        frontier: &mut GlobalFrontier,
    ) -> Result<FlushReport, DispatchError> {
        let mut report = FlushReport::default();
        if self.batch.is_empty() {
            return Ok(report);
        }
        let entries = std::mem::take(&mut self.batch.entries);
        self.flush_sizes.push(entries.len());
        self.stats.flush_events += 1;
        for entry in entries {
            let inlinks = db
                .get(&entry.url)
                .map_or(entry.inlink_count, |e| e.inlink_count);
            let domain = if frontier.has_domain(&entry.domain) {
                entry.domain.clone()
            } else {
                crate::frontier::UNCLASSIFIED.to_string()
            };
            match frontier.admit(&domain, entry.url.clone(), inlinks, 0)? {
                Admission::Admitted => {
                    db.set_state(&entry.url, UrlState::Enqueued)?;
                    report.flushed += 1;
                }
                Admission::RejectedDuplicate => report.rejected_duplicate += 1,
            }
        }
        self.stats.flushed += report.flushed;
        self.stats.rejected_duplicate += report.rejected_duplicate;
        Ok(report)
    }

    /// Flushes whatever is pending at the end of a crawl cycle.
    pub fn end_of_cycle(
        &mut self,
        db: &mut UrlDb,
        frontier: &mut GlobalFrontier,
    ) -> Result<FlushReport, DispatchError> {
        self.flush_batch(db, frontier)
    }
}

/// Counts of database entries per (domain, provenance), for reports.
pub fn tag_summary(db: &UrlDb) -> BTreeMap<String, BTreeMap<String, u64>> {
    let mut out: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for e in db.entries.values() {
        let p = match e.provenance {
            Provenance::Seed => "seed",
            Provenance::Predicted => "predicted",
            Provenance::Classified => "classified",
        };
        *out.entry(e.domain.clone())
            .or_default()
            .entry(p.to_string())
            .or_default() += 1;
    }
    out
}
