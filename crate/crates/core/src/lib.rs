//! Domain-partitioned parallel web crawler.
//!
//! URLs are grouped into topical domains, each with its own score-ordered
//! queue. Every domain is owned by exactly one worker, so a URL is issued at
//! most once. Fetched pages are deduplicated by content, classified by keyword
//! counts, and their links are dispatched back into the queues in batches.
//!
//! [`simweb`] builds a seeded synthetic web with ground truth, which makes
//! crawls reproducible and their metrics checkable.
//!
//! ```
//! use webparf::engine::{run_crawl, Config};
//! use webparf::simweb::GraphParams;
//!
//! let report = run_crawl(&Config::sim(GraphParams::balanced(2, 20))).unwrap();
//! assert_eq!(report.url_overlap, 0);
//! assert_eq!(report.coverage, Some(1.0));
//! ```

pub mod allocator;
pub mod analyzer;
pub mod dispatcher;
pub mod engine;
pub mod fetcher;
pub mod frontier;
pub mod simweb;
pub mod url_model;

pub use allocator::{Allocator, Assignment, WorkerId};
pub use analyzer::{classify, extract_links, extract_text};
pub use dispatcher::{Dispatcher, UrlDb};
pub use engine::{load_config, run_crawl, Config, CrawlReport};
pub use fetcher::{FetchBackend, Repository};
pub use frontier::{DomainProfile, GlobalFrontier, ScoreWeights};
pub use simweb::{generate, GraphParams, SyntheticWeb};
pub use url_model::{canonicalize, resolve, CanonicalUrl, RawHref};
