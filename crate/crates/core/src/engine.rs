//! Configuration, the round-based crawl loop and its report.
//!
//! A round is: allocation passes until no inbox accepts more work (bounded by
//! `max_pages`), optional kill injection, all live workers fetching
//! concurrently, then a single consumer that analyzes and dispatches the
//! fetched pages in (worker, seq) order and flushes the pending batch.
//! Rounds are the unit of progress, so speedups do not depend on hardware.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocator::{AllocError, Allocator, Assignment, WorkerId, DEFAULT_INBOX_CAPACITY};
use crate::analyzer::{classify, extract_links, extract_text, is_html, tag_url};
use crate::dispatcher::{DispatchError, Dispatcher, UrlDb, UrlState, DEFAULT_BATCH_SIZE};
use crate::fetcher::{
    worker_cycle, FetchBackend, FetchCount, FetchOutcome, FetchedPage, HttpBackend,
    InstrumentedBackend, Politeness, RepoError, Repository, DEFAULT_LIVE_POLITENESS,
};
use crate::frontier::{DomainProfile, FrontierError, GlobalFrontier, ScoreWeights, UNCLASSIFIED};
use crate::simweb::{generate, GraphParams, GroundTruth, SimError, SyntheticWeb};

pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file {0} not found")]
    NotFound(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config: {0}")]
    Invariant(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Repository(#[from] RepoError),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
    #[error(transparent)]
    Frontier(#[from] FrontierError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl EngineError {
    /// 2 for configuration problems, 3 for failures during a run.
    pub fn exit_code(&self) -> i32 {
        match self {
            EngineError::Config(_) => 2,
            _ => 3,
        }
    }
}

/// `<worker>@<round>`, e.g. `2@5` or `w2@5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct KillSpec {
    pub worker: WorkerId,
    pub round: u64,
}

impl FromStr for KillSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("kill spec `{s}` is not <worker>@<round>");
        let (w, r) = s.split_once('@').ok_or_else(bad)?;
        let w = w.trim().strip_prefix('w').unwrap_or(w.trim());
        Ok(KillSpec {
            worker: WorkerId(w.parse().map_err(|_| bad())?),
            round: r.trim().parse().map_err(|_| bad())?,
        })
    }
}

impl TryFrom<String> for KillSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<KillSpec> for String {
    fn from(k: KillSpec) -> String {
        k.to_string()
    }
}

impl fmt::Display for KillSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.worker.0, self.round)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<GraphParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Sim(SimSource),
    Live,
}

fn default_capacity() -> usize {
    DEFAULT_INBOX_CAPACITY
}

fn default_batch() -> usize {
    DEFAULT_BATCH_SIZE
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_MS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub domains: Vec<DomainProfile>,
    /// Defaults to the number of domains.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_capacity")]
    pub inbox_capacity: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub score_weights: ScoreWeights,
    /// 0 for the simulated backend, 500 for the live one.
    #[serde(default)]
    pub politeness_ms: Option<u64>,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    #[serde(default)]
    pub max_pages: Option<u64>,
    #[serde(default)]
    pub max_rounds: Option<u64>,
    pub backend: Backend,
    #[serde(default)]
    pub kill_worker: Option<KillSpec>,
    /// Where the repository and the URL database log go; memory only if unset.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl Config {
    pub fn new(backend: Backend) -> Self {
        Config {
            domains: Vec::new(),
            workers: None,
            inbox_capacity: DEFAULT_INBOX_CAPACITY,
            batch_size: DEFAULT_BATCH_SIZE,
            score_weights: ScoreWeights::default(),
            politeness_ms: None,
            timeout_ms: DEFAULT_TIMEOUT_MS,
            max_pages: None,
            max_rounds: None,
            backend,
            kill_worker: None,
            output_dir: None,
        }
    }

    pub fn sim(params: GraphParams) -> Self {
        Config::new(Backend::Sim(SimSource {
            params: Some(params),
            graph_file: None,
        }))
    }

    pub fn politeness(&self) -> Duration {
        match (self.politeness_ms, &self.backend) {
            (Some(ms), _) => Duration::from_millis(ms),
            (None, Backend::Live) => DEFAULT_LIVE_POLITENESS,
            (None, Backend::Sim(_)) => Duration::ZERO,
        }
    }

    /// Checks everything that does not need the synthetic web.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invariant(m));
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        if self.inbox_capacity == 0 {
            return bad("inbox_capacity must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        let w = self.score_weights;
        if !(w.alpha.is_finite() && w.beta.is_finite() && w.alpha >= 0.0 && w.beta >= 0.0) {
            return bad("score weights must be finite and non-negative".into());
        }
        let mut names = BTreeSet::new();
        for d in &self.domains {
            d.validate()
                .map_err(|e| ConfigError::Invariant(e.to_string()))?;
            if !names.insert(d.name.as_str()) {
                return bad(format!("domain `{}` is listed twice", d.name));
            }
        }
        match &self.backend {
            Backend::Live => {
                if self.domains.is_empty() {
                    return bad("at least one domain is required".into());
                }
                if self.domains.iter().all(|d| d.seeds.is_empty()) {
                    return bad("the live backend needs at least one seed".into());
                }
                if self.max_pages.is_none() && self.max_rounds.is_none() {
                    return bad("the live backend needs max_pages or max_rounds".into());
                }
            }
            Backend::Sim(src) => {
                if src.params.is_some() == src.graph_file.is_some() {
                    return bad("the sim backend takes exactly one of params and graph_file".into());
                }
            }
        }
        if let Some(k) = self.kill_worker {
            if k.round == 0 {
                return bad("rounds are numbered from 1".into());
            }
        }
        Ok(())
    }

    fn check_workers(&self, workers: usize) -> Result<(), ConfigError> {
        if let Some(k) = self.kill_worker {
            if k.worker.0 >= workers {
                return Err(ConfigError::Invariant(format!(
                    "kill_worker names {} but only {workers} workers exist",
                    k.worker
                )));
            }
            if workers == 1 {
                return Err(ConfigError::Invariant("cannot kill the only worker".into()));
            }
        }
        Ok(())
    }
}

/// Reads and checks a JSON config. A relative `graph_file` is taken relative
/// to the config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<Config, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| {
        if source.kind() == io::ErrorKind::NotFound {
            ConfigError::NotFound(path.to_path_buf())
        } else {
            ConfigError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    let mut config = parse_config(&text).map_err(|e| match e {
        ConfigError::Parse {
            line,
            column,
            message,
            ..
        } => ConfigError::Parse {
            path: path.to_path_buf(),
            line,
            column,
            message,
        },
        other => other,
    })?;
    if let Backend::Sim(SimSource {
        graph_file: Some(f),
        ..
    }) = &mut config.backend
    {
        if f.is_relative() {
            if let Some(dir) = path.parent() {
                *f = dir.join(&*f);
            }
        }
    }
    Ok(config)
}

pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let mut config: Config = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        path: PathBuf::from("<config>"),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if let Backend::Sim(SimSource {
        params: Some(p), ..
    }) = &mut config.backend
    {
        if p.domains.is_empty() {
            p.domains = config.domains.clone();
        }
    }
    if config.workers.is_none() && !config.domains.is_empty() {
        config.workers = Some(config.domains.len());
    }
    config.validate()?;
    Ok(config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Exhausted,
    MaxPages,
    MaxRounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrawlReport {
    pub stop_reason: StopReason,
    pub rounds: u64,
    pub workers: usize,
    pub live_workers: usize,
    pub killed_worker: Option<String>,
    /// Max minus min domains owned by a live worker at the end of the run.
    pub domain_spread: usize,
    /// URLs handed to workers.
    pub pages_issued: u64,
    /// Successful retrievals, duplicates included.
    pub pages_fetched: u64,
    pub fetch_errors: u64,
    pub backend_calls: u64,
    pub per_domain_fetched: BTreeMap<String, u64>,
    /// Pages whose classified domain differs from the queue they came from.
    pub reassigned: u64,
    pub url_overlap: u64,
    pub content_duplicates: u64,
    pub stored_bodies: u64,
    pub frontier_residue: BTreeMap<String, u64>,
    pub flush_events: u64,
    pub total_discoveries: u64,
    pub malformed_links: u64,
    pub routed: u64,
    pub deferred: u64,
    pub misclassified: Option<u64>,
    pub coverage: Option<f64>,
    pub wall_time_ms: u64,
}

impl CrawlReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report JSON without `wall_time_ms`.
    pub fn stable_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("wall_time_ms");
        }
        serde_json::to_string_pretty(&v).expect("value serializes")
    }
}

/// Raw counters gathered while crawling.
#[derive(Debug, Clone, Default)]
pub struct RunState {
    pub stop_reason: Option<StopReason>,
    pub rounds: u64,
    pub workers: usize,
    pub live_workers: usize,
    pub killed_worker: Option<WorkerId>,
    pub domain_spread: usize,
    pub issued: u64,
    pub backend_calls: u64,
    pub fetch_errors: u64,
    pub content_duplicates: u64,
    pub stored_bodies: u64,
    pub reassigned: u64,
    /// Classified domain of every successfully fetched URL.
    pub classified: BTreeMap<String, String>,
    pub fetch_counts: BTreeMap<String, FetchCount>,
    pub frontier_residue: BTreeMap<String, u64>,
    pub flush_events: u64,
    pub discoveries: u64,
    pub malformed_links: u64,
    pub routed: u64,
    pub deferred: u64,
}

pub fn compute_metrics(run: &RunState, truth: Option<&GroundTruth>, wall: Duration) -> CrawlReport {
    let mut per_domain_fetched = BTreeMap::new();
    for domain in run.classified.values() {
        *per_domain_fetched.entry(domain.clone()).or_insert(0) += 1;
    }
    let url_overlap = run
        .fetch_counts
        .values()
        .map(|c| u64::from(c.completed.saturating_sub(1)))
        .sum();
    let (misclassified, coverage) = match truth {
        Some(t) => {
            let wrong = run
                .classified
                .iter()
                .filter(|(url, d)| t.true_domain_of(url) != Some(d.as_str()))
                .count() as u64;
            let reachable = t.reachable_primaries();
            let covered = reachable
                .iter()
                .filter(|u| run.classified.contains_key(**u))
                .count();
            let coverage = if reachable.is_empty() {
                1.0
            } else {
                covered as f64 / reachable.len() as f64
            };
            (Some(wrong), Some(coverage))
        }
        None => (None, None),
    };
    CrawlReport {
        stop_reason: run.stop_reason.unwrap_or(StopReason::Exhausted),
        rounds: run.rounds,
        workers: run.workers,
        live_workers: run.live_workers,
        killed_worker: run.killed_worker.map(|w| w.to_string()),
        domain_spread: run.domain_spread,
        pages_issued: run.issued,
        pages_fetched: run.classified.len() as u64,
        fetch_errors: run.fetch_errors,
        backend_calls: run.backend_calls,
        per_domain_fetched,
        reassigned: run.reassigned,
        url_overlap,
        content_duplicates: run.content_duplicates,
        stored_bodies: run.stored_bodies,
        frontier_residue: run.frontier_residue.clone(),
        flush_events: run.flush_events,
        total_discoveries: run.discoveries,
        malformed_links: run.malformed_links,
        routed: run.routed,
        deferred: run.deferred,
        misclassified,
        coverage,
        wall_time_ms: wall.as_millis() as u64,
    }
}

/// Everything a finished crawl leaves behind.
pub struct CrawlOutcome {
    pub report: CrawlReport,
    pub run: RunState,
    pub repository: Repository,
    pub urldb: UrlDb,
    pub frontier: GlobalFrontier,
    pub assignment: Assignment,
    pub truth: Option<GroundTruth>,
}

fn load_web(src: &SimSource) -> Result<SyntheticWeb, ConfigError> {
    match (&src.params, &src.graph_file) {
        (Some(p), None) => Ok(generate(p)?),
        (None, Some(f)) => Ok(SyntheticWeb::load(f)?),
        _ => Err(ConfigError::Invariant(
            "the sim backend takes exactly one of params and graph_file".into(),
        )),
    }
}

/// Domain profiles the crawl runs with. A simulated web brings its own seeds.
fn crawl_profiles(
    config: &Config,
    web: Option<&SyntheticWeb>,
) -> Result<Vec<DomainProfile>, ConfigError> {
    let profiles = match web {
        Some(w) => w.profiles().to_vec(),
        None => config.domains.clone(),
    };
    if profiles.is_empty() {
        return Err(ConfigError::Invariant(
            "at least one domain is required".into(),
        ));
    }
    Ok(profiles)
}

fn seed(
    profiles: &[DomainProfile],
    frontier: &mut GlobalFrontier,
    db: &mut UrlDb,
    skip: &BTreeSet<String>,
) -> Result<(), EngineError> {
    for p in profiles {
        if !p.is_unclassified() {
            frontier.create_pool(DomainProfile {
                seeds: Vec::new(),
                ..p.clone()
            })?;
        }
    }
    for p in profiles {
        for url in &p.seeds {
            if skip.contains(&url.render()) {
                continue;
            }
            frontier.admit(&p.name, url.clone(), 0, 0)?;
            if !db.contains(url) {
                db.insert_seed(url, &p.name)?;
            }
        }
    }
    Ok(())
}

pub fn run_crawl(config: &Config) -> Result<CrawlReport, EngineError> {
    execute(config).map(|o| o.report)
}

pub fn execute(config: &Config) -> Result<CrawlOutcome, EngineError> {
    config.validate()?;
    let started = Instant::now();
    let web = match &config.backend {
        Backend::Sim(src) => Some(load_web(src)?),
        Backend::Live => None,
    };
    let profiles = crawl_profiles(config, web.as_ref())?;
    let workers = config.workers.unwrap_or(profiles.len());
    config.check_workers(workers)?;

    let http;
    let inner: &dyn FetchBackend = match &web {
        Some(w) => w,
        None => {
            http = HttpBackend::new(Duration::from_millis(config.timeout_ms));
            &http
        }
    };
    let backend = InstrumentedBackend::new(inner);
    let politeness = Politeness::new(config.politeness());

    let (repository, mut db) = match &config.output_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            (
                Repository::on_disk(dir.join("repository"))?,
                UrlDb::with_log(dir.join("urldb.jsonl"))?,
            )
        }
        None => (Repository::in_memory(), UrlDb::in_memory()),
    };
    let repo = Mutex::new(repository);

    let mut frontier = GlobalFrontier::new(config.score_weights);
    seed(&profiles, &mut frontier, &mut db, &BTreeSet::new())?;
    let assignment = Assignment::round_robin(frontier.domains(), workers);
    let mut allocator = Allocator::new(assignment, config.inbox_capacity);
    let mut dispatcher = Dispatcher::new(config.batch_size, profiles.clone());

    let mut run = RunState {
        workers,
        ..RunState::default()
    };

    loop {
        if frontier.is_empty() && allocator.in_flight() == 0 {
            run.stop_reason = Some(StopReason::Exhausted);
            break;
        }
        if config.max_pages.is_some_and(|m| run.issued >= m) {
            run.stop_reason = Some(StopReason::MaxPages);
            break;
        }
        if config.max_rounds.is_some_and(|m| run.rounds >= m) {
            run.stop_reason = Some(StopReason::MaxRounds);
            break;
        }
        run.rounds += 1;
        let round = run.rounds;

        loop {
            let budget = config
                .max_pages
                .map_or(usize::MAX, |m| m.saturating_sub(run.issued) as usize);
            if budget == 0 {
                break;
            }
            let delivered: usize = allocator
                .allocate_round_limited(&mut frontier, budget)
                .values()
                .map(Vec::len)
                .sum();
            if delivered == 0 {
                break;
            }
            run.issued += delivered as u64;
        }

        if let Some(k) = config.kill_worker {
            if k.round == round && allocator.assignment().is_live(k.worker) {
                allocator.rebalance_on_failure(k.worker, &mut frontier)?;
                run.killed_worker = Some(k.worker);
            }
        }

        let sink: Mutex<Vec<FetchedPage>> = Mutex::new(Vec::new());
        let cycles = {
            let (backend, politeness, repo, sink) = (&backend, &politeness, &repo, &sink);
            thread::scope(|s| {
                let handles: Vec<_> = allocator
                    .inboxes_mut()
                    .iter_mut()
                    .filter(|inbox| !inbox.is_empty())
                    .map(|inbox| {
                        s.spawn(move || worker_cycle(inbox, backend, politeness, repo, sink, round))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("worker thread panicked"))
                    .collect::<Vec<_>>()
            })
        };

        for cycle in cycles {
            let cycle = cycle?;
            run.backend_calls += cycle.backend_calls as u64;
            for e in cycle.entries {
                if let Some(addr) = e.resolved_addr {
                    frontier.set_resolved_addr(&e.url, addr);
                }
                frontier.mark_fetched(&e.url)?;
                match e.outcome {
                    FetchOutcome::Failed { .. } => {
                        run.fetch_errors += 1;
                        db.set_state(&e.url, UrlState::Failed)?;
                    }
                    FetchOutcome::Stored => {
                        run.stored_bodies += 1;
                        db.set_state(&e.url, UrlState::Fetched)?;
                    }
                    FetchOutcome::Duplicate { .. } => {
                        run.content_duplicates += 1;
                        db.set_state(&e.url, UrlState::Fetched)?;
                    }
                }
            }
        }

        let mut pages = sink.into_inner().expect("sink lock");
        pages.sort_by_key(|p| (p.worker, p.seq));
        for page in pages {
            let (winner, links) = if is_html(&page.content_type) {
                let tokens = extract_text(&page.body);
                let winner = classify(&tokens, &profiles).winner;
                (winner, Some(extract_links(&page.body, &page.url)))
            } else {
                (page.domain.clone(), None)
            };
            repo.lock()
                .expect("repository lock")
                .tag_page(&page.url, &winner)?;
            tag_url(&mut db, &page.url, &winner)?;
            if winner != page.domain {
                run.reassigned += 1;
            }
            if let Some(links) = links {
                dispatcher.dispatch_page(&links, &winner, &mut db, &mut frontier)?;
            }
            run.classified.insert(page.url.render(), winner);
        }
        dispatcher.end_of_cycle(&mut db, &mut frontier)?;
    }

    let assignment = allocator.assignment().clone();
    let stats = dispatcher.stats();
    let alloc_stats = allocator.stats();
    run.live_workers = assignment.live_workers().count();
    run.domain_spread = assignment.spread();
    run.fetch_counts = backend.counts();
    run.flush_events = stats.flush_events;
    run.discoveries = stats.discoveries;
    run.malformed_links = stats.malformed;
    run.routed = alloc_stats.routed;
    run.deferred = alloc_stats.deferred;
    // Anything still sitting in an inbox was issued but never fetched.
    for inbox in allocator.inboxes() {
        for e in inbox.iter() {
            *run.frontier_residue.entry(e.domain.clone()).or_insert(0) += 1;
        }
    }
    for d in frontier.domains() {
        let n = frontier.pending_len(d)? as u64;
        *run.frontier_residue.entry(d.to_string()).or_insert(0) += n;
    }
    let truth = web.as_ref().map(|w| w.ground_truth().clone());
    let report = compute_metrics(&run, truth.as_ref(), started.elapsed());
    Ok(CrawlOutcome {
        report,
        run,
        repository: repo.into_inner().expect("repository lock"),
        urldb: db,
        frontier,
        assignment,
        truth,
    })
}

/// Writes the queue of `domain` as the crawl would start it: the seeds, plus
/// whatever a previous run left enqueued in `<output_dir>/urldb.jsonl`.
pub fn frontier_dump<W: Write>(
    config: &Config,
    domain: &str,
    out: &mut W,
) -> Result<(), EngineError> {
    config.validate()?;
    let web = match &config.backend {
        Backend::Sim(src) => Some(load_web(src)?),
        Backend::Live => None,
    };
    let profiles = crawl_profiles(config, web.as_ref())?;
    let mut frontier = GlobalFrontier::new(config.score_weights);
    let log = config
        .output_dir
        .as_ref()
        .map(|d| d.join("urldb.jsonl"))
        .filter(|p| p.exists());
    let mut db = UrlDb::in_memory();
    let mut done = BTreeSet::new();
    let previous = match &log {
        Some(path) => Some(UrlDb::replay(path)?),
        None => None,
    };
    if let Some(prev) = &previous {
        for e in prev.entries() {
            if matches!(e.state, UrlState::Fetched | UrlState::Failed) {
                done.insert(e.url.render());
            }
        }
    }
    seed(&profiles, &mut frontier, &mut db, &done)?;
    if let Some(prev) = &previous {
        for e in prev.entries() {
            if e.state != UrlState::Enqueued || frontier.contains(&e.url) {
                continue;
            }
            let d = if frontier.has_domain(&e.domain) {
                e.domain.as_str()
            } else {
                UNCLASSIFIED
            };
            frontier.admit(d, e.url.clone(), e.inlink_count, 0)?;
        }
    }
    if !frontier.has_domain(domain) {
        return Err(ConfigError::Invariant(format!("unknown domain `{domain}`")).into());
    }
    frontier.write_dump(domain, out)?;
    Ok(())
}

/// Human-readable form of a report.
pub fn render_report(r: &CrawlReport) -> String {
    let mut s = String::new();
    let opt = |v: Option<String>| v.unwrap_or_else(|| "-".to_string());
    let lines = [
        ("stop reason", format!("{:?}", r.stop_reason).to_lowercase()),
        ("rounds", r.rounds.to_string()),
        (
            "workers",
            format!("{} ({} live)", r.workers, r.live_workers),
        ),
        ("killed worker", opt(r.killed_worker.clone())),
        ("domain spread", r.domain_spread.to_string()),
        ("pages issued", r.pages_issued.to_string()),
        ("pages fetched", r.pages_fetched.to_string()),
        ("fetch errors", r.fetch_errors.to_string()),
        ("backend calls", r.backend_calls.to_string()),
        ("url overlap", r.url_overlap.to_string()),
        ("content duplicates", r.content_duplicates.to_string()),
        ("stored bodies", r.stored_bodies.to_string()),
        ("reassigned", r.reassigned.to_string()),
        ("discoveries", r.total_discoveries.to_string()),
        ("malformed links", r.malformed_links.to_string()),
        ("flush events", r.flush_events.to_string()),
        ("routed", r.routed.to_string()),
        ("deferred", r.deferred.to_string()),
        ("misclassified", opt(r.misclassified.map(|m| m.to_string()))),
        ("coverage", opt(r.coverage.map(|c| format!("{c:.4}")))),
        ("wall time", format!("{} ms", r.wall_time_ms)),
    ];
    for (k, v) in lines {
        s.push_str(&format!("{k:<20}{v}\n"));
    }
    s.push_str("per domain           fetched  residue\n");
    let names: BTreeSet<&String> = r
        .per_domain_fetched
        .keys()
        .chain(r.frontier_residue.keys())
        .collect();
    for d in names {
        s.push_str(&format!(
            "  {d:<18} {:>7}  {:>7}\n",
            r.per_domain_fetched.get(d).copied().unwrap_or(0),
            r.frontier_residue.get(d).copied().unwrap_or(0)
        ));
    }
    s
}
