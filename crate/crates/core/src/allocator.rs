//! Distribution of frontier URLs to fetch workers.
//!
//! Each domain is owned by exactly one live worker. A round pulls at most one
//! URL per domain and places it in the owner's bounded inbox; a domain whose
//! owner inbox is full is skipped without touching its queue, so nothing is
//! dequeued and then dropped. When a worker dies its domains move to the
//! least-loaded survivors and its queued URLs are re-routed.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontier::{FrontierError, GlobalFrontier, PoolEntry};

pub const DEFAULT_INBOX_CAPACITY: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AllocError {
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),
    #[error("worker {0} does not exist")]
    UnknownWorker(WorkerId),
    #[error("worker {0} was the only live worker")]
    NoSurvivors(WorkerId),
    #[error(transparent)]
    Frontier(#[from] FrontierError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WorkerId(pub usize);

impl fmt::Display for WorkerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w{}", self.0)
    }
}

/// Bounded FIFO of URLs waiting for one worker.
#[derive(Debug, Clone)]
pub struct WorkerInbox {
    owner: WorkerId,
    domains: BTreeSet<String>,
    slots: VecDeque<PoolEntry>,
    capacity: usize,
}

impl WorkerInbox {
    pub fn new(owner: WorkerId, capacity: usize) -> Self {
        WorkerInbox {
            owner,
            domains: BTreeSet::new(),
            slots: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn owner(&self) -> WorkerId {
        self.owner
    }

    pub fn domains(&self) -> &BTreeSet<String> {
        &self.domains
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.slots.len() >= self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Appends an entry; hands it back if the inbox is full or does not serve
    /// the entry's domain.
    #[allow(clippy::result_large_err)]
    pub fn push(&mut self, entry: PoolEntry) -> Result<(), PoolEntry> {
        if self.is_full() || !self.domains.contains(&entry.domain) {
            return Err(entry);
        }
        self.slots.push_back(entry);
        Ok(())
    }

    pub fn pop(&mut self) -> Option<PoolEntry> {
        self.slots.pop_front()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PoolEntry> {
        self.slots.iter()
    }

    fn drain(&mut self) -> Vec<PoolEntry> {
        self.slots.drain(..).collect()
    }
}

/// Domain ownership plus worker liveness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    owners: BTreeMap<String, WorkerId>,
    live: Vec<bool>,
}

impl Assignment {
    /// Deals domains to workers in sorted-name order, `i`-th domain to
    /// worker `i mod workers`. With as many workers as domains this is one
    /// worker per domain.
    pub fn round_robin<'a>(domains: impl IntoIterator<Item = &'a str>, workers: usize) -> Self {
        assert!(workers >= 1, "at least one worker");
        let sorted: BTreeSet<&str> = domains.into_iter().collect();
        let owners = sorted
            .into_iter()
            .enumerate()
            .map(|(i, d)| (d.to_string(), WorkerId(i % workers)))
            .collect();
        Assignment {
            owners,
            live: vec![true; workers],
        }
    }

    pub fn worker_count(&self) -> usize {
        self.live.len()
    }

    pub fn owner_of(&self, domain: &str) -> Option<WorkerId> {
        self.owners.get(domain).copied()
    }

    pub fn is_live(&self, w: WorkerId) -> bool {
        self.live.get(w.0).copied().unwrap_or(false)
    }

    pub fn live_workers(&self) -> impl Iterator<Item = WorkerId> + '_ {
        self.live
            .iter()
            .enumerate()
            .filter(|(_, l)| **l)
            .map(|(i, _)| WorkerId(i))
    }

    pub fn domains_of(&self, w: WorkerId) -> BTreeSet<String> {
        self.owners
            .iter()
            .filter(|(_, o)| **o == w)
            .map(|(d, _)| d.clone())
            .collect()
    }

    pub fn load(&self, w: WorkerId) -> usize {
        self.owners.values().filter(|o| **o == w).count()
    }

    pub fn owners(&self) -> &BTreeMap<String, WorkerId> {
        &self.owners
    }

    /// max minus min domains owned, over live workers.
    pub fn spread(&self) -> usize {
        let loads: Vec<usize> = self.live_workers().map(|w| self.load(w)).collect();
        match (loads.iter().max(), loads.iter().min()) {
            (Some(max), Some(min)) => max - min,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocStats {
    pub rounds: u64,
    pub delivered: u64,
    pub skipped_empty: u64,
    pub skipped_full: u64,
    /// Must stay zero: a dequeue for a domain whose owner inbox was full.
    pub dequeued_while_full: u64,
    pub routed: u64,
    pub deferred: u64,
    pub rebalances: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteOutcome {
    Delivered(WorkerId),
    Deferred,
}

pub type Delivery = BTreeMap<WorkerId, Vec<PoolEntry>>;

#[derive(Debug, Clone)]
pub struct Allocator {
    assignment: Assignment,
    inboxes: Vec<WorkerInbox>,
    stats: AllocStats,
}

impl Allocator {
    pub fn new(assignment: Assignment, capacity: usize) -> Self {
        let mut inboxes: Vec<WorkerInbox> = (0..assignment.worker_count())
            .map(|i| WorkerInbox::new(WorkerId(i), capacity))
            .collect();
        for (domain, owner) in &assignment.owners {
            inboxes[owner.0].domains.insert(domain.clone());
        }
        Allocator {
            assignment,
            inboxes,
            stats: AllocStats::default(),
        }
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    pub fn inboxes(&self) -> &[WorkerInbox] {
        &self.inboxes
    }

    pub fn inboxes_mut(&mut self) -> &mut [WorkerInbox] {
        &mut self.inboxes
    }

    pub fn inbox(&self, w: WorkerId) -> Option<&WorkerInbox> {
        self.inboxes.get(w.0)
    }

    pub fn stats(&self) -> AllocStats {
        self.stats
    }

    pub fn in_flight(&self) -> usize {
        self.inboxes.iter().map(WorkerInbox::len).sum()
    }

    /// One URL from each domain with a non-empty queue and a non-full owner inbox.
    pub fn allocate_round(&mut self, frontier: &mut GlobalFrontier) -> Delivery {
        self.allocate_round_limited(frontier, usize::MAX)
    }

    /// As [`allocate_round`](Self::allocate_round), delivering at most `limit` URLs.
    pub fn allocate_round_limited(
        &mut self,
        frontier: &mut GlobalFrontier,
        limit: usize,
    ) -> Delivery {
        self.stats.rounds += 1;
        let mut delivery = Delivery::new();
        let mut delivered = 0;
        for (domain, owner) in &self.assignment.owners {
            if delivered >= limit {
                break;
            }
            let inbox = &mut self.inboxes[owner.0];
            if inbox.is_full() {
                self.stats.skipped_full += 1;
                continue;
            }
            let Some(entry) = frontier
                .dequeue(domain)
                .expect("assigned domains are registered")
            else {
                self.stats.skipped_empty += 1;
                continue;
            };
            if inbox.is_full() {
                self.stats.dequeued_while_full += 1;
            }
            frontier
                .record_request(&entry.url)
                .expect("dequeued urls are known");
            delivery.entry(*owner).or_default().push(entry.clone());
            inbox
                .push(entry)
                .expect("inbox has room and serves the domain");
            delivered += 1;
        }
        self.stats.delivered += delivered as u64;
        delivery
    }

    /// Sends an entry to the owner of `target_domain`, or back to the frontier
    /// at its score when that inbox is full.
    pub fn route(
        &mut self,
        mut entry: PoolEntry,
        target_domain: &str,
        frontier: &mut GlobalFrontier,
    ) -> Result<RouteOutcome, AllocError> {
        let owner = self
            .assignment
            .owner_of(target_domain)
            .ok_or_else(|| AllocError::UnknownDomain(target_domain.to_string()))?;
        entry.domain = target_domain.to_string();
        match self.inboxes[owner.0].push(entry) {
            Ok(()) => {
                self.stats.routed += 1;
                Ok(RouteOutcome::Delivered(owner))
            }
            Err(entry) => {
                frontier.requeue(&entry, target_domain)?;
                self.stats.deferred += 1;
                Ok(RouteOutcome::Deferred)
            }
        }
    }

    /// Marks `failed` dead, hands each of its domains to the live worker owning
    /// the fewest domains (lowest id on ties), then re-routes its inbox.
    pub fn rebalance_on_failure(
        &mut self,
        failed: WorkerId,
        frontier: &mut GlobalFrontier,
    ) -> Result<Assignment, AllocError> {
        if failed.0 >= self.assignment.worker_count() {
            return Err(AllocError::UnknownWorker(failed));
        }
        if !self.assignment.is_live(failed) {
            return Ok(self.assignment.clone());
        }
        if self.assignment.live_workers().all(|w| w == failed) {
            return Err(AllocError::NoSurvivors(failed));
        }
        self.assignment.live[failed.0] = false;
        for domain in self.assignment.domains_of(failed) {
            let target = self
                .assignment
                .live_workers()
                .min_by_key(|w| (self.assignment.load(*w), *w))
                .expect("a survivor exists");
            self.assignment.owners.insert(domain.clone(), target);
            self.inboxes[failed.0].domains.remove(&domain);
            self.inboxes[target.0].domains.insert(domain);
        }
        for entry in self.inboxes[failed.0].drain() {
            let domain = entry.domain.clone();
            self.route(entry, &domain, frontier)?;
        }
        self.stats.rebalances += 1;
        Ok(self.assignment.clone())
    }
}
