//! Crawls a synthetic web, optionally killing a worker mid-run.
//!
//! cargo run --example simulated_crawl -- [workers] [kill, e.g. 2@5]

use webparf::engine::{render_report, run_crawl, Config};
use webparf::simweb::GraphParams;

fn main() {
    let mut args = std::env::args().skip(1);
    let workers: usize = args.next().map_or(4, |w| w.parse().expect("worker count"));
    let mut config = Config::sim(GraphParams {
        intra_links: 3,
        cross_links: 1,
        alias_fraction: 0.2,
        noise_ratio: 0.5,
        ..GraphParams::balanced(4, 100)
    });
    config.workers = Some(workers);
    config.kill_worker = args.next().map(|k| k.parse().expect("kill spec"));

    let report = run_crawl(&config).unwrap();
    print!("{}", render_report(&report));
}
