//! Round-robin ownership, bounded inboxes, and rebalancing after a failure.

use webparf::allocator::{Allocator, Assignment, WorkerId};
use webparf::frontier::{DomainProfile, GlobalFrontier, ScoreWeights};
use webparf::url_model::canonicalize;

fn main() {
    let mut frontier = GlobalFrontier::new(ScoreWeights::default());
    let domains = ["finance", "health", "news", "sports", "travel"];
    for d in domains {
        frontier
            .create_pool(DomainProfile::new(d, [d], vec![]).unwrap())
            .unwrap();
        for i in 0..6 {
            let url = canonicalize(&format!("http://{d}.test/p{i}")).unwrap();
            frontier.admit(d, url, 0, 0).unwrap();
        }
    }

    let assignment = Assignment::round_robin(frontier.domains(), 3);
    let mut alloc = Allocator::new(assignment, 4);
    for (d, w) in alloc.assignment().owners() {
        println!("{d:<13} -> {w}");
    }

    for pass in 1..=3 {
        let delivery = alloc.allocate_round(&mut frontier);
        let n: usize = delivery.values().map(Vec::len).sum();
        println!(
            "pass {pass}: delivered {n}, in flight {}",
            alloc.in_flight()
        );
    }

    let after = alloc
        .rebalance_on_failure(WorkerId(1), &mut frontier)
        .unwrap();
    println!("\nafter w1 fails (spread {}):", after.spread());
    for (d, w) in after.owners() {
        println!("{d:<13} -> {w}");
    }
    let s = alloc.stats();
    println!(
        "routed {} deferred {} back to the frontier",
        s.routed, s.deferred
    );
}
