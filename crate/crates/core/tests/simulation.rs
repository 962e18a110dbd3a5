use std::collections::BTreeSet;

use proptest::prelude::*;
use webparf::engine::{execute, run_crawl, Config, KillSpec, StopReason};
use webparf::simweb::GraphParams;
use webparf::WorkerId;

fn params(d: usize, p: usize, intra: usize, cross: usize, seed: u64) -> GraphParams {
    GraphParams {
        intra_links: intra,
        cross_links: cross,
        rng_seed: seed,
        ..GraphParams::balanced(d, p)
    }
}

#[test]
fn max_pages_slack() {
    for w in 1..=4 {
        let mut c = Config::sim(params(4, 100, 3, 1, 42));
        c.workers = Some(w);
        c.max_pages = Some(10);
        let r = run_crawl(&c).unwrap();
        assert_eq!(r.stop_reason, StopReason::MaxPages);
        assert!(
            r.pages_fetched < 10 + w as u64,
            "{} with {w} workers",
            r.pages_fetched
        );
    }
}

#[test]
fn worker_count_does_not_change_what_is_fetched() {
    let mut seen = Vec::new();
    for w in [1, 2, 3, 5] {
        let mut c = Config::sim(GraphParams {
            alias_fraction: 0.1,
            ..params(5, 40, 3, 2, 9)
        });
        c.workers = Some(w);
        let out = execute(&c).unwrap();
        assert_eq!(out.report.url_overlap, 0);
        seen.push(out.run.classified.keys().cloned().collect::<BTreeSet<_>>());
    }
    assert!(seen.windows(2).all(|p| p[0] == p[1]));
}

#[test]
fn on_disk_repository_has_one_file_per_body() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = Config::sim(GraphParams {
        alias_fraction: 0.3,
        ..params(2, 30, 4, 1, 3)
    });
    c.output_dir = Some(dir.path().to_path_buf());
    let r = run_crawl(&c).unwrap();
    let files = std::fs::read_dir(dir.path().join("repository/pages"))
        .unwrap()
        .count();
    assert_eq!(files as u64, r.stored_bodies);
    let index = std::fs::read_to_string(dir.path().join("repository/index.jsonl")).unwrap();
    assert_eq!(index.lines().count() as u64, r.pages_fetched);
}

#[test]
fn killing_every_round_number() {
    for round in 1..=8 {
        let mut c = Config::sim(params(4, 50, 3, 1, 42));
        c.workers = Some(4);
        c.kill_worker = Some(KillSpec {
            worker: WorkerId(round as usize % 4),
            round,
        });
        let r = run_crawl(&c).unwrap();
        assert_eq!(r.coverage, Some(1.0), "kill at round {round}");
        assert_eq!(r.url_overlap, 0);
        assert!(r.domain_spread <= 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn run_invariants(
        d in 1usize..5,
        p in 2usize..30,
        intra in 1usize..4,
        cross in 0usize..3,
        alias in 0.0f64..0.5,
        seed in any::<u64>(),
        w in 1usize..5,
        b in 1usize..80,
        cap in 1usize..20,
    ) {
        let intra = intra.min(p - 1);
        let cross = if d == 1 { 0 } else { cross };
        let mut c = Config::sim(GraphParams { alias_fraction: alias, ..params(d, p, intra, cross, seed) });
        c.workers = Some(w);
        c.batch_size = b;
        c.inbox_capacity = cap;
        let out = execute(&c).unwrap();
        let r = &out.report;
        prop_assert_eq!(r.url_overlap, 0);
        prop_assert_eq!(r.coverage, Some(1.0));
        prop_assert_eq!(r.misclassified, Some(0));
        prop_assert_eq!(r.stored_bodies + r.content_duplicates, r.pages_fetched);
        let distinct: BTreeSet<&[u8]> = out.repository.records().map(|x| x.body.as_slice()).collect();
        prop_assert_eq!(distinct.len() as u64, r.stored_bodies);
        prop_assert!(r.flush_events <= r.total_discoveries.div_ceil(b as u64) + r.rounds);
        prop_assert!(r.frontier_residue.values().all(|&n| n == 0));
    }
}
