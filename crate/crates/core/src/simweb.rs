//! A deterministic synthetic web with ground truth.
//!
//! Pages are minted as `http://<domain>.test/p<i>` and aliases as
//! `http://<domain>.test/alias/p<i>`. Generation is a pure function of
//! [`GraphParams`]; randomness comes from ChaCha8 seeded with `rng_seed`.
//! Implementations in other languages share fixtures through the JSON dump
//! ([`SyntheticWeb::to_json`]) rather than through the RNG stream.
//!
//! Construction rules:
//! - domain `d` has pages `p0..p{P-1}`; `p0` is its seed;
//! - the first intra-domain link of `p<i>` goes to `p<(i+1) mod P>` by its
//!   primary URL, so every page of a domain is reachable from its seed
//!   whenever `intra_links >= 1`; the remaining intra links and all cross
//!   links go to distinct random targets, by alias URL when the target has one;
//! - a body holds each true-domain keyword exactly `keyword_freq` times,
//!   `floor(noise_ratio * keywords * keyword_freq)` distinct keywords of other
//!   domains (at most once each), and filler words, in shuffled order.
//!
//! Keyword sets must be pairwise disjoint. Then every other domain scores at
//! most the noise count, which is below the true domain's score whenever
//! `noise_ratio < 1`, so the keyword classifier recovers the true domain.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;
use std::time::Duration;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fetcher::{FetchBackend, FetchResult, STATUS_NOT_FOUND};
use crate::frontier::DomainProfile;
use crate::url_model::{canonicalize, CanonicalUrl};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid graph parameters: {0}")]
    InvalidParams(String),
    #[error("graph file {path}: {message}")]
    Load { path: String, message: String },
}

const FILLER: &[&str] = &[
    "lorem",
    "ipsum",
    "dolor",
    "sit",
    "amet",
    "consectetur",
    "adipiscing",
    "elit",
    "sed",
    "do",
    "eiusmod",
    "tempor",
    "incididunt",
    "ut",
    "labore",
    "et",
    "dolore",
    "magna",
    "aliqua",
];
const FILLER_PER_PAGE: usize = 8;

/// Topics used by [`GraphParams::balanced`].
const TOPICS: &[(&str, [&str; 4])] = &[
    ("sports", ["football", "cricket", "tennis", "tournament"]),
    ("news", ["election", "parliament", "headline", "reporter"]),
    ("science", ["physics", "chemistry", "biology", "experiment"]),
    ("travel", ["airline", "hotel", "passport", "tourism"]),
    ("health", ["nutrition", "vaccine", "clinic", "fitness"]),
    ("finance", ["stocks", "banking", "invest", "currency"]),
    ("music", ["guitar", "concert", "album", "melody"]),
    ("cooking", ["recipe", "oven", "spice", "baking"]),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphParams {
    pub domains: Vec<DomainProfile>,
    pub pages_per_domain: usize,
    pub intra_links: usize,
    pub cross_links: usize,
    pub keyword_freq: usize,
    pub noise_ratio: f64,
    pub alias_fraction: f64,
    pub rng_seed: u64,
}

impl Default for GraphParams {
    fn default() -> Self {
        GraphParams {
            domains: Vec::new(),
            pages_per_domain: 10,
            intra_links: 3,
            cross_links: 1,
            keyword_freq: 3,
            noise_ratio: 0.0,
            alias_fraction: 0.0,
            rng_seed: 42,
        }
    }
}

impl GraphParams {
    /// `domains` built-in topics with four keywords each.
    pub fn balanced(domains: usize, pages_per_domain: usize) -> Self {
        GraphParams {
            domains: topic_profiles(domains),
            pages_per_domain,
            ..GraphParams::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidParams(m));
        let d = self.domains.len();
        let p = self.pages_per_domain;
        if d == 0 {
            return bad("at least one domain is required".into());
        }
        if p == 0 {
            return bad("pages_per_domain must be at least 1".into());
        }
        if self.intra_links > p - 1 {
            return bad(format!(
                "intra_links {} exceeds the {} other pages of a domain",
                self.intra_links,
                p - 1
            ));
        }
        if self.cross_links > (d - 1) * p {
            return bad(format!(
                "cross_links {} exceeds the {} pages of other domains",
                self.cross_links,
                (d - 1) * p
            ));
        }
        if self.intra_links + self.cross_links >= d * p && d * p > 1 {
            return bad("intra_links + cross_links must be below the page count".into());
        }
        for (name, v) in [
            ("noise_ratio", self.noise_ratio),
            ("alias_fraction", self.alias_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} {v} is outside [0, 1]"));
            }
        }
        let mut names = BTreeSet::new();
        let mut owners: BTreeMap<&str, &str> = BTreeMap::new();
        for profile in &self.domains {
            profile
                .validate()
                .map_err(|e| SimError::InvalidParams(e.to_string()))?;
            if profile.is_unclassified() {
                return bad("the reserved unclassified domain cannot be generated".into());
            }
            if !names.insert(profile.name.as_str()) {
                return bad(format!("duplicate domain `{}`", profile.name));
            }
            if canonicalize(&format!("http://{}.test/", profile.name)).is_err()
                || profile.name.contains(['/', '?', '#', '@', ':'])
            {
                return bad(format!(
                    "domain `{}` is not a valid host label",
                    profile.name
                ));
            }
            for k in &profile.keywords {
                if let Some(other) = owners.insert(k, &profile.name) {
                    return bad(format!(
                        "keyword `{k}` is shared by `{other}` and `{}`",
                        profile.name
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Built-in topic profiles, then `topicN` with keywords `tNkwA..tNkwD`.
pub fn topic_profiles(n: usize) -> Vec<DomainProfile> {
    (0..n)
        .map(|i| {
            match TOPICS.get(i) {
                Some((name, kws)) => DomainProfile::new(name, kws, vec![]),
                None => {
                    let kws: Vec<String> = ["a", "b", "c", "d"]
                        .iter()
                        .map(|s| format!("t{i}kw{s}"))
                        .collect();
                    DomainProfile::new(&format!("topic{i}"), kws, vec![])
                }
            }
            .expect("built-in profiles are valid")
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimPage {
    pub domain: String,
    pub body: String,
    pub links: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Primary URLs per true domain.
    pub domains: BTreeMap<String, BTreeSet<String>>,
    /// Seed URL per domain.
    pub seeds: BTreeMap<String, String>,
    pub aliases: BTreeMap<String, String>,
    /// URLs, primary and alias, reachable from the seeds.
    pub reachable: BTreeSet<String>,
}

impl GroundTruth {
    pub fn true_domain_of(&self, url: &str) -> Option<&str> {
        let primary = self.aliases.get(url).map_or(url, String::as_str);
        self.domains
            .iter()
            .find(|(_, pages)| pages.contains(primary))
            .map(|(d, _)| d.as_str())
    }

    pub fn reachable_primaries(&self) -> BTreeSet<&str> {
        self.reachable
            .iter()
            .filter(|u| !self.aliases.contains_key(*u))
            .map(String::as_str)
            .collect()
    }

    pub fn is_primary(&self, url: &str) -> bool {
        self.domains.values().any(|p| p.contains(url))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticWeb {
    pub params: GraphParams,
    pub pages: BTreeMap<String, SimPage>,
    pub aliases: BTreeMap<String, String>,
    pub truth: GroundTruth,
}

fn page_url(domain: &str, i: usize) -> String {
    format!("http://{domain}.test/p{i}")
}

fn alias_url(domain: &str, i: usize) -> String {
    format!("http://{domain}.test/alias/p{i}")
}

pub fn generate(params: &GraphParams) -> Result<SyntheticWeb, SimError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let d_count = params.domains.len();
    let p_count = params.pages_per_domain;
    let total = d_count * p_count;
    let names: Vec<&str> = params.domains.iter().map(|d| d.name.as_str()).collect();

    let alias_count = (params.alias_fraction * total as f64).floor() as usize;
    let aliased: BTreeSet<usize> = rand::seq::index::sample(&mut rng, total, alias_count)
        .into_iter()
        .collect();
    let link_to = |flat: usize| -> String {
        let (d, i) = (flat / p_count, flat % p_count);
        if aliased.contains(&flat) {
            alias_url(names[d], i)
        } else {
            page_url(names[d], i)
        }
    };

    let all_keywords: Vec<Vec<&str>> = params
        .domains
        .iter()
        .map(|p| p.keywords.iter().map(String::as_str).collect())
        .collect();
    let keyword_set: BTreeSet<&str> = all_keywords.iter().flatten().copied().collect();
    let filler: Vec<&str> = FILLER
        .iter()
        .copied()
        .filter(|w| !keyword_set.contains(w))
        .collect();

    let mut pages = BTreeMap::new();
    for (d, profile) in params.domains.iter().enumerate() {
        for i in 0..p_count {
            let mut links = Vec::with_capacity(params.intra_links + params.cross_links);
            if params.intra_links > 0 {
                let ring = (i + 1) % p_count;
                links.push(page_url(&profile.name, ring));
                let others: Vec<usize> = (0..p_count).filter(|&j| j != i && j != ring).collect();
                for &j in others.choose_multiple(&mut rng, params.intra_links - 1) {
                    links.push(link_to(d * p_count + j));
                }
            }
            if params.cross_links > 0 {
                let others: Vec<usize> = (0..total).filter(|f| f / p_count != d).collect();
                for &f in others.choose_multiple(&mut rng, params.cross_links) {
                    links.push(link_to(f));
                }
            }

            let own = &all_keywords[d];
            let mut words: Vec<&str> = Vec::new();
            for k in own {
                words.extend(std::iter::repeat_n(*k, params.keyword_freq));
            }
            let noise_pool: Vec<&str> = all_keywords
                .iter()
                .enumerate()
                .filter(|(od, _)| *od != d)
                .flat_map(|(_, k)| k.iter().copied())
                .collect();
            let noise_count = ((params.noise_ratio * (own.len() * params.keyword_freq) as f64)
                .floor() as usize)
                .min(noise_pool.len());
            words.extend(noise_pool.choose_multiple(&mut rng, noise_count));
            for _ in 0..FILLER_PER_PAGE {
                if let Some(w) = filler.choose(&mut rng) {
                    words.push(w);
                }
            }
            words.shuffle(&mut rng);

            let body = render_page(&profile.name, i, &words, &links);
            pages.insert(
                page_url(&profile.name, i),
                SimPage {
                    domain: profile.name.clone(),
                    body,
                    links,
                },
            );
        }
    }

    let aliases: BTreeMap<String, String> = aliased
        .iter()
        .map(|&f| {
            let (d, i) = (f / p_count, f % p_count);
            (alias_url(names[d], i), page_url(names[d], i))
        })
        .collect();

    let mut domains = Vec::with_capacity(d_count);
    for p in &params.domains {
        let mut p = p.clone();
        p.seeds = vec![canonicalize(&page_url(&p.name, 0)).expect("minted urls are canonical")];
        domains.push(p);
    }
    let params = GraphParams {
        domains,
        ..params.clone()
    };
    let truth = compute_truth(&params, &pages, &aliases);
    Ok(SyntheticWeb {
        params,
        pages,
        aliases,
        truth,
    })
}

/// Relative hrefs for same-host targets, absolute ones otherwise.
fn render_page(domain: &str, index: usize, words: &[&str], links: &[String]) -> String {
    let host_prefix = format!("http://{domain}.test");
    let mut html = format!(
        "<!DOCTYPE html>\n<html><head><title>p{index}</title></head>\n<body>\n<p>{}</p>\n<ul>\n",
        words.join(" ")
    );
    for link in links {
        let href = link.strip_prefix(&host_prefix).unwrap_or(link);
        let label = link.rsplit('/').next().unwrap_or("");
        html.push_str(&format!("<li><a href=\"{href}\">{label}</a></li>\n"));
    }
    html.push_str("</ul>\n</body></html>\n");
    html
}

fn compute_truth(
    params: &GraphParams,
    pages: &BTreeMap<String, SimPage>,
    aliases: &BTreeMap<String, String>,
) -> GroundTruth {
    let mut domains: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (url, page) in pages {
        domains
            .entry(page.domain.clone())
            .or_default()
            .insert(url.clone());
    }
    let seeds: BTreeMap<String, String> = params
        .domains
        .iter()
        .map(|d| (d.name.clone(), page_url(&d.name, 0)))
        .collect();
    let mut reachable = BTreeSet::new();
    let mut queue: VecDeque<String> = seeds.values().cloned().collect();
    while let Some(url) = queue.pop_front() {
        if !reachable.insert(url.clone()) {
            continue;
        }
        let primary = aliases.get(&url).unwrap_or(&url);
        if let Some(page) = pages.get(primary) {
            for l in &page.links {
                if !reachable.contains(l) {
                    queue.push_back(l.clone());
                }
            }
        }
    }
    GroundTruth {
        domains,
        seeds,
        aliases: aliases.clone(),
        reachable,
    }
}

impl SyntheticWeb {
    pub fn ground_truth(&self) -> &GroundTruth {
        &self.truth
    }

    /// Profiles with their generated seeds.
    pub fn profiles(&self) -> &[DomainProfile] {
        &self.params.domains
    }

    pub fn page(&self, url: &str) -> Option<&SimPage> {
        let primary = self.aliases.get(url).map_or(url, String::as_str);
        self.pages.get(primary)
    }

    pub fn sim_fetch(&self, url: &CanonicalUrl) -> FetchResult {
        match self.page(&url.render()) {
            Some(page) => FetchResult::ok(
                url.clone(),
                page.body.as_bytes().to_vec(),
                "text/html",
                Duration::ZERO,
            ),
            None => FetchResult::failed(url.clone(), STATUS_NOT_FOUND, Duration::ZERO),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("web serializes")
    }

    /// Parses a dump and checks its invariants.
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let web: SyntheticWeb = serde_json::from_str(text).map_err(|e| SimError::Load {
            path: "<string>".into(),
            message: e.to_string(),
        })?;
        web.check()?;
        Ok(web)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Load {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        SyntheticWeb::from_json(&text).map_err(|e| match e {
            SimError::Load { message, .. } => SimError::Load {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    fn check(&self) -> Result<(), SimError> {
        let fail = |m: String| Err(SimError::InvalidParams(m));
        for (url, page) in &self.pages {
            if canonicalize(url).map(|u| u.render()).as_deref() != Ok(url) {
                return fail(format!("page url `{url}` is not canonical"));
            }
            for l in &page.links {
                if !self.pages.contains_key(l) && !self.aliases.contains_key(l) {
                    return fail(format!("dangling link `{l}` on `{url}`"));
                }
            }
        }
        for (alias, primary) in &self.aliases {
            if !self.pages.contains_key(primary) {
                return fail(format!("alias `{alias}` points at missing `{primary}`"));
            }
        }
        Ok(())
    }
}

impl FetchBackend for SyntheticWeb {
    fn get(&self, url: &CanonicalUrl) -> FetchResult {
        self.sim_fetch(url)
    }
}
