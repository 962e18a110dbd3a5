//! The global URL frontier: one prioritized queue per topical domain.
//!
//! Each domain pool holds its queue as a chain of score buckets ordered by
//! descending score. A bucket keeps the URLs sharing its score in FIFO order,
//! so the head of the first bucket is always the most relevant, oldest URL.
//! Bucket positions are not stored; they are the bucket's rank in the chain.
//!
//! All pools share one `seen` table. Admission is first-wins: a canonical URL
//! string is admitted at most once over the frontier's lifetime, and later
//! sightings only move its counters. Mutation goes through `&mut self`, so a
//! frontier behind a single lock is linearizable.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::io::{self, Write};
use std::net::IpAddr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::url_model::CanonicalUrl;

/// Reserved pool for pages no profile claims.
pub const UNCLASSIFIED: &str = "unclassified";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontierError {
    #[error("domain `{0}` is already registered")]
    DuplicateDomain(String),
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),
    #[error("unknown url `{0}`")]
    UnknownUrl(String),
    #[error("invalid domain profile `{name}`: {reason}")]
    InvalidProfile { name: String, reason: String },
    #[error("url `{0}` is not issued and cannot be requeued")]
    NotIssued(String),
}

/// A topical domain: its keywords and its seed URLs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainProfile {
    pub name: String,
    pub keywords: BTreeSet<String>,
    #[serde(default)]
    pub seeds: Vec<CanonicalUrl>,
}

impl DomainProfile {
    pub fn new<I, S>(
        name: &str,
        keywords: I,
        seeds: Vec<CanonicalUrl>,
    ) -> Result<Self, FrontierError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let profile = DomainProfile {
            name: name.to_string(),
            keywords: keywords
                .into_iter()
                .map(|k| k.as_ref().to_string())
                .collect(),
            seeds,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn unclassified() -> Self {
        DomainProfile {
            name: UNCLASSIFIED.to_string(),
            keywords: BTreeSet::new(),
            seeds: Vec::new(),
        }
    }

    pub fn is_unclassified(&self) -> bool {
        self.name == UNCLASSIFIED
    }

    pub fn validate(&self) -> Result<(), FrontierError> {
        let invalid = |reason: &str| FrontierError::InvalidProfile {
            name: self.name.clone(),
            reason: reason.to_string(),
        };
        if self.name.is_empty() {
            return Err(invalid("empty name"));
        }
        if self
            .name
            .chars()
            .any(|c| c.is_uppercase() || c.is_whitespace())
        {
            return Err(invalid("name must be lowercase without whitespace"));
        }
        if self.is_unclassified() {
            return if self.keywords.is_empty() {
                Ok(())
            } else {
                Err(invalid("the reserved domain takes no keywords"))
            };
        }
        if self.keywords.is_empty() {
            return Err(invalid("keyword set is empty"));
        }
        if let Some(k) = self
            .keywords
            .iter()
            .find(|k| k.is_empty() || k.chars().any(|c| !c.is_alphanumeric() || c.is_uppercase()))
        {
            return Err(invalid(&format!(
                "keyword `{k}` must be a single lowercase alphanumeric token"
            )));
        }
        Ok(())
    }
}

/// Weights of the relevance score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        ScoreWeights {
            alpha: 1.0,
            beta: 0.5,
        }
    }
}

/// `floor(alpha * inlinks + beta * requests)`.
pub fn relevance_score(inlinks: u64, requests: u64, weights: ScoreWeights) -> u64 {
    let alpha = weights.alpha.max(0.0);
    let beta = weights.beta.max(0.0);
    (alpha * inlinks as f64 + beta * requests as f64).floor() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryState {
    Pending,
    Issued,
    Fetched,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolEntry {
    pub url: CanonicalUrl,
    pub domain: String,
    pub inlink_count: u64,
    pub request_count: u64,
    pub score: u64,
    pub state: EntryState,
    /// Filled by the fetcher when the backend resolves the host.
    pub resolved_addr: Option<IpAddr>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolStats {
    pub admitted: u64,
    pub dequeued: u64,
    pub requeued: u64,
}

#[derive(Debug, Clone)]
struct DomainPool {
    profile: DomainProfile,
    buckets: BTreeMap<Reverse<u64>, VecDeque<String>>,
    pending: usize,
    stats: PoolStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    Admitted,
    RejectedDuplicate,
}

/// One node of a domain queue as seen by [`GlobalFrontier::snapshot`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueueNode {
    pub position: usize,
    pub score: u64,
    pub fifo: Vec<CanonicalUrl>,
}

#[derive(Debug, Clone)]
pub struct GlobalFrontier {
    pools: BTreeMap<String, DomainPool>,
    entries: HashMap<String, PoolEntry>,
    weights: ScoreWeights,
}

impl GlobalFrontier {
    /// A frontier holding only the reserved unclassified pool.
    pub fn new(weights: ScoreWeights) -> Self {
        let mut frontier = GlobalFrontier {
            pools: BTreeMap::new(),
            entries: HashMap::new(),
            weights,
        };
        frontier
            .create_pool(DomainProfile::unclassified())
            .expect("fresh frontier");
        frontier
    }

    pub fn weights(&self) -> ScoreWeights {
        self.weights
    }

    /// Registers a domain pool and admits its seeds at zero counters.
    pub fn create_pool(&mut self, profile: DomainProfile) -> Result<(), FrontierError> {
        profile.validate()?;
        if self.pools.contains_key(&profile.name) {
            return Err(FrontierError::DuplicateDomain(profile.name));
        }
        let name = profile.name.clone();
        let seeds = profile.seeds.clone();
        self.pools.insert(
            name.clone(),
            DomainPool {
                profile,
                buckets: BTreeMap::new(),
                pending: 0,
                stats: PoolStats::default(),
            },
        );
        for seed in seeds {
            self.admit(&name, seed, 0, 0)?;
        }
        Ok(())
    }

    pub fn domains(&self) -> impl Iterator<Item = &str> {
        self.pools.keys().map(String::as_str)
    }

    pub fn profiles(&self) -> impl Iterator<Item = &DomainProfile> {
        self.pools.values().map(|p| &p.profile)
    }

    pub fn has_domain(&self, domain: &str) -> bool {
        self.pools.contains_key(domain)
    }

    /// Whether the URL was ever admitted.
    pub fn contains(&self, url: &CanonicalUrl) -> bool {
        self.entries.contains_key(&url.render())
    }

    pub fn entry(&self, url: &CanonicalUrl) -> Option<&PoolEntry> {
        self.entries.get(&url.render())
    }

    pub fn seen_len(&self) -> usize {
        self.entries.len()
    }

    /// Admits a URL with the score its counters earn.
    pub fn admit(
        &mut self,
        domain: &str,
        url: CanonicalUrl,
        inlinks: u64,
        requests: u64,
    ) -> Result<Admission, FrontierError> {
        let score = relevance_score(inlinks, requests, self.weights);
        self.insert(domain, url, score, inlinks, requests)
    }

    /// Admits a URL at an explicit score, unless it was ever admitted before.
    pub fn enqueue(
        &mut self,
        domain: &str,
        url: CanonicalUrl,
        score: u64,
    ) -> Result<Admission, FrontierError> {
        self.insert(domain, url, score, 0, 0)
    }

    fn insert(
        &mut self,
        domain: &str,
        url: CanonicalUrl,
        score: u64,
        inlinks: u64,
        requests: u64,
    ) -> Result<Admission, FrontierError> {
        let pool = self
            .pools
            .get_mut(domain)
            .ok_or_else(|| FrontierError::UnknownDomain(domain.to_string()))?;
        let key = url.render();
        if self.entries.contains_key(&key) {
            return Ok(Admission::RejectedDuplicate);
        }
        pool.buckets
            .entry(Reverse(score))
            .or_default()
            .push_back(key.clone());
        pool.pending += 1;
        pool.stats.admitted += 1;
        self.entries.insert(
            key,
            PoolEntry {
                url,
                domain: domain.to_string(),
                inlink_count: inlinks,
                request_count: requests,
                score,
                state: EntryState::Pending,
                resolved_addr: None,
            },
        );
        Ok(Admission::Admitted)
    }

    /// Pops the head of the highest-score bucket and marks it issued.
    pub fn dequeue(&mut self, domain: &str) -> Result<Option<PoolEntry>, FrontierError> {
        let pool = self
            .pools
            .get_mut(domain)
            .ok_or_else(|| FrontierError::UnknownDomain(domain.to_string()))?;
        let Some(mut node) = pool.buckets.first_entry() else {
            return Ok(None);
        };
        let key = node.get_mut().pop_front().expect("buckets are never empty");
        if node.get().is_empty() {
            node.remove();
        }
        pool.pending -= 1;
        pool.stats.dequeued += 1;
        let entry = self.entries.get_mut(&key).expect("queued urls are seen");
        entry.state = EntryState::Issued;
        Ok(Some(entry.clone()))
    }

    /// Puts an issued entry back at the tail of its score bucket in `domain`.
    /// The dedup table is not consulted; the URL was admitted already.
    pub fn requeue(&mut self, entry: &PoolEntry, domain: &str) -> Result<(), FrontierError> {
        let pool = self
            .pools
            .get_mut(domain)
            .ok_or_else(|| FrontierError::UnknownDomain(domain.to_string()))?;
        let key = entry.url.render();
        let stored = self
            .entries
            .get_mut(&key)
            .ok_or_else(|| FrontierError::UnknownUrl(key.clone()))?;
        if stored.state != EntryState::Issued {
            return Err(FrontierError::NotIssued(key));
        }
        stored.state = EntryState::Pending;
        stored.domain = domain.to_string();
        let score = stored.score;
        pool.buckets
            .entry(Reverse(score))
            .or_default()
            .push_back(key);
        pool.pending += 1;
        pool.stats.requeued += 1;
        Ok(())
    }

    pub fn mark_fetched(&mut self, url: &CanonicalUrl) -> Result<(), FrontierError> {
        let entry = self
            .entries
            .get_mut(&url.render())
            .ok_or_else(|| FrontierError::UnknownUrl(url.render()))?;
        entry.state = EntryState::Fetched;
        Ok(())
    }

    pub fn set_resolved_addr(&mut self, url: &CanonicalUrl, addr: IpAddr) {
        if let Some(entry) = self.entries.get_mut(&url.render()) {
            entry.resolved_addr = Some(addr);
        }
    }

    /// Counts one more page linking to `url`. A pending entry keeps its place.
    pub fn record_inlink(&mut self, url: &CanonicalUrl) -> Result<u64, FrontierError> {
        let entry = self
            .entries
            .get_mut(&url.render())
            .ok_or_else(|| FrontierError::UnknownUrl(url.render()))?;
        entry.inlink_count += 1;
        Ok(entry.inlink_count)
    }

    pub fn record_request(&mut self, url: &CanonicalUrl) -> Result<u64, FrontierError> {
        let entry = self
            .entries
            .get_mut(&url.render())
            .ok_or_else(|| FrontierError::UnknownUrl(url.render()))?;
        entry.request_count += 1;
        Ok(entry.request_count)
    }

    /// The queue in dequeue order.
    pub fn snapshot(&self, domain: &str) -> Result<Vec<QueueNode>, FrontierError> {
        let pool = self
            .pools
            .get(domain)
            .ok_or_else(|| FrontierError::UnknownDomain(domain.to_string()))?;
        Ok(pool
            .buckets
            .iter()
            .enumerate()
            .map(|(i, (Reverse(score), fifo))| QueueNode {
                position: i + 1,
                score: *score,
                fifo: fifo.iter().map(|k| self.entries[k].url.clone()).collect(),
            })
            .collect())
    }

    /// Writes `domain \t rank \t score \t url` lines in dequeue order.
    pub fn write_dump<W: Write>(&self, domain: &str, out: &mut W) -> io::Result<()> {
        let nodes = self
            .snapshot(domain)
            .map_err(|e| io::Error::new(io::ErrorKind::NotFound, e))?;
        for node in nodes {
            for url in &node.fifo {
                writeln!(out, "{domain}\t{}\t{}\t{url}", node.position, node.score)?;
            }
        }
        Ok(())
    }

    pub fn pending_len(&self, domain: &str) -> Result<usize, FrontierError> {
        self.pools
            .get(domain)
            .map(|p| p.pending)
            .ok_or_else(|| FrontierError::UnknownDomain(domain.to_string()))
    }

    pub fn total_pending(&self) -> usize {
        self.pools.values().map(|p| p.pending).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total_pending() == 0
    }

    pub fn stats(&self, domain: &str) -> Result<PoolStats, FrontierError> {
        self.pools
            .get(domain)
            .map(|p| p.stats)
            .ok_or_else(|| FrontierError::UnknownDomain(domain.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::url_model::canonicalize;

    fn u(s: &str) -> CanonicalUrl {
        canonicalize(&format!("http://t.test/{s}")).unwrap()
    }

    fn frontier_with(domain: &str) -> GlobalFrontier {
        let mut f = GlobalFrontier::new(ScoreWeights::default());
        f.create_pool(DomainProfile::new(domain, ["kw"], vec![]).unwrap())
            .unwrap();
        f
    }

    fn check_structure(f: &GlobalFrontier) {
        for d in f.domains() {
            let snap = f.snapshot(d).unwrap();
            for (i, node) in snap.iter().enumerate() {
                assert_eq!(node.position, i + 1);
                assert!(!node.fifo.is_empty());
                if i > 0 {
                    assert!(snap[i - 1].score > node.score);
                }
            }
            let n: usize = snap.iter().map(|n| n.fifo.len()).sum();
            assert_eq!(n, f.pending_len(d).unwrap());
        }
    }

    #[test]
    fn create_pool_admits_seeds_at_zero() {
        let mut f = GlobalFrontier::new(ScoreWeights::default());
        let p =
            DomainProfile::new("sports", ["football", "score"], vec![u("s1"), u("s2")]).unwrap();
        f.create_pool(p.clone()).unwrap();
        let snap = f.snapshot("sports").unwrap();
        assert_eq!(snap.len(), 1);
        assert_eq!(snap[0].score, 0);
        assert_eq!(snap[0].fifo, vec![u("s1"), u("s2")]);
        assert_eq!(
            f.create_pool(p),
            Err(FrontierError::DuplicateDomain("sports".into()))
        );
    }

    #[test]
    fn empty_seed_list_is_valid() {
        let f = frontier_with("news");
        assert_eq!(f.pending_len("news").unwrap(), 0);
        assert!(f.snapshot("news").unwrap().is_empty());
    }

    #[test]
    fn profile_validation() {
        assert!(DomainProfile::new("x", Vec::<String>::new(), vec![]).is_err());
        assert!(DomainProfile::new("X", ["a"], vec![]).is_err());
        assert!(DomainProfile::new("x", ["Foo"], vec![]).is_err());
        assert!(DomainProfile::new("x", ["two words"], vec![]).is_err());
        let mut f = GlobalFrontier::new(ScoreWeights::default());
        assert!(matches!(
            f.create_pool(DomainProfile::unclassified()),
            Err(FrontierError::DuplicateDomain(_))
        ));
    }

    #[test]
    fn relevance_score_examples() {
        let w = |a, b| ScoreWeights { alpha: a, beta: b };
        assert_eq!(relevance_score(0, 0, w(1.0, 0.5)), 0);
        assert_eq!(relevance_score(3, 2, w(1.0, 1.0)), 5);
        assert_eq!(relevance_score(3, 3, w(1.0, 0.5)), 4);
    }

    #[test]
    fn enqueue_groups_by_score() {
        let mut f = frontier_with("d");
        assert_eq!(f.enqueue("d", u("u1"), 5).unwrap(), Admission::Admitted);
        f.enqueue("d", u("u2"), 3).unwrap();
        f.enqueue("d", u("u3"), 5).unwrap();
        let snap = f.snapshot("d").unwrap();
        assert_eq!(
            snap,
            vec![
                QueueNode {
                    position: 1,
                    score: 5,
                    fifo: vec![u("u1"), u("u3")]
                },
                QueueNode {
                    position: 2,
                    score: 3,
                    fifo: vec![u("u2")]
                },
            ]
        );
        let drained: Vec<_> = std::iter::from_fn(|| f.dequeue("d").unwrap())
            .map(|e| e.url)
            .collect();
        assert_eq!(drained, vec![u("u1"), u("u3"), u("u2")]);
        assert_eq!(f.dequeue("d").unwrap(), None);
        assert!(f.snapshot("d").unwrap().is_empty());
    }

    #[test]
    fn duplicate_rejected_across_domains() {
        let mut f = frontier_with("a");
        f.create_pool(DomainProfile::new("b", ["kw"], vec![]).unwrap())
            .unwrap();
        f.enqueue("a", u("u1"), 5).unwrap();
        assert_eq!(
            f.enqueue("a", u("u1"), 5).unwrap(),
            Admission::RejectedDuplicate
        );
        assert_eq!(
            f.enqueue("b", u("u1"), 9).unwrap(),
            Admission::RejectedDuplicate
        );
        // still rejected after it left the queue
        f.dequeue("a").unwrap();
        assert_eq!(
            f.enqueue("a", u("u1"), 1).unwrap(),
            Admission::RejectedDuplicate
        );
    }

    #[test]
    fn single_enqueue_is_position_one() {
        let mut f = frontier_with("d");
        f.enqueue("d", u("x"), 7).unwrap();
        let snap = f.snapshot("d").unwrap();
        assert_eq!(snap.len(), 1);
        assert_eq!(snap[0].position, 1);
    }

    #[test]
    fn unknown_domain_errors() {
        let mut f = frontier_with("d");
        assert!(matches!(
            f.enqueue("zz", u("x"), 1),
            Err(FrontierError::UnknownDomain(_))
        ));
        assert!(matches!(
            f.dequeue("zz"),
            Err(FrontierError::UnknownDomain(_))
        ));
        assert!(matches!(
            f.snapshot("zz"),
            Err(FrontierError::UnknownDomain(_))
        ));
    }

    #[test]
    fn counters_do_not_rescore_pending() {
        let mut f = frontier_with("d");
        f.enqueue("d", u("a"), 2).unwrap();
        f.enqueue("d", u("b"), 2).unwrap();
        for _ in 0..3 {
            f.record_request(&u("a")).unwrap();
        }
        assert_eq!(f.entry(&u("a")).unwrap().request_count, 3);
        f.record_inlink(&u("b")).unwrap();
        let snap = f.snapshot("d").unwrap();
        assert_eq!(snap[0].score, 2);
        assert_eq!(snap[0].fifo, vec![u("a"), u("b")]);
        assert_eq!(
            f.record_inlink(&u("nope")),
            Err(FrontierError::UnknownUrl(u("nope").render()))
        );
    }

    #[test]
    fn requeue_goes_to_bucket_tail() {
        let mut f = frontier_with("d");
        f.enqueue("d", u("a"), 4).unwrap();
        f.enqueue("d", u("b"), 4).unwrap();
        let a = f.dequeue("d").unwrap().unwrap();
        assert_eq!(a.state, EntryState::Issued);
        f.requeue(&a, "d").unwrap();
        let order: Vec<_> = std::iter::from_fn(|| f.dequeue("d").unwrap())
            .map(|e| e.url)
            .collect();
        assert_eq!(order, vec![u("b"), u("a")]);
        f.mark_fetched(&a.url).unwrap();
        assert!(matches!(
            f.requeue(&a, "d"),
            Err(FrontierError::NotIssued(_))
        ));
    }

    #[test]
    fn snapshot_flattening_matches_drain() {
        let mut f = frontier_with("d");
        for (i, s) in [3u64, 1, 3, 0, 9, 1, 9].iter().enumerate() {
            f.enqueue("d", u(&format!("p{i}")), *s).unwrap();
        }
        check_structure(&f);
        let flat: Vec<_> = f
            .snapshot("d")
            .unwrap()
            .into_iter()
            .flat_map(|n| n.fifo)
            .collect();
        let drained: Vec<_> = std::iter::from_fn(|| f.dequeue("d").unwrap())
            .map(|e| e.url)
            .collect();
        assert_eq!(flat, drained);
    }

    #[test]
    fn dump_format() {
        let mut f = frontier_with("d");
        f.enqueue("d", u("a"), 5).unwrap();
        f.enqueue("d", u("b"), 1).unwrap();
        let mut out = Vec::new();
        f.write_dump("d", &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "d\t1\t5\thttp://t.test/a\nd\t2\t1\thttp://t.test/b\n"
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        #[derive(Debug, Clone)]
        enum Op {
            Enqueue(u8, u8, u64),
            Dequeue(u8),
            Inlink(u8),
        }

        fn op() -> impl Strategy<Value = Op> {
            prop_oneof![
                (0u8..3, 0u8..40, 0u64..6).prop_map(|(d, k, s)| Op::Enqueue(d, k, s)),
                (0u8..3).prop_map(Op::Dequeue),
                (0u8..40).prop_map(Op::Inlink),
            ]
        }

        proptest! {
            #[test]
            fn structure_holds_and_nothing_dequeued_twice(ops in prop::collection::vec(op(), 0..200)) {
                let names = ["a", "b", "c"];
                let mut f = GlobalFrontier::new(ScoreWeights::default());
                for n in names {
                    f.create_pool(DomainProfile::new(n, ["kw"], vec![]).unwrap()).unwrap();
                }
                let mut dequeued = std::collections::HashSet::new();
                for op in ops {
                    match op {
                        Op::Enqueue(d, k, s) => {
                            f.enqueue(names[d as usize], u(&format!("k{k}")), s).unwrap();
                        }
                        Op::Dequeue(d) => {
                            if let Some(e) = f.dequeue(names[d as usize]).unwrap() {
                                prop_assert!(dequeued.insert(e.url.render()));
                            }
                        }
                        Op::Inlink(k) => {
                            let url = u(&format!("k{k}"));
                            if f.contains(&url) {
                                f.record_inlink(&url).unwrap();
                            }
                        }
                    }
                    check_structure(&f);
                }
            }

            #[test]
            fn relevance_score_is_monotone(i in 0u64..1000, r in 0u64..1000, a in 0.0f64..10.0, b in 0.0f64..10.0) {
                let w = ScoreWeights { alpha: a, beta: b };
                let s = relevance_score(i, r, w);
                prop_assert!(relevance_score(i + 1, r, w) >= s);
                prop_assert!(relevance_score(i, r + 1, w) >= s);
            }
        }
    }
}
