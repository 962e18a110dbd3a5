//! Score-bucketed queues with first-wins admission.

use webparf::frontier::{Admission, DomainProfile, GlobalFrontier, ScoreWeights};
use webparf::url_model::canonicalize;

fn main() {
    let mut frontier = GlobalFrontier::new(ScoreWeights::default());
    let seed = canonicalize("http://sports.test/").unwrap();
    frontier
        .create_pool(DomainProfile::new("sports", ["football", "tennis"], vec![seed]).unwrap())
        .unwrap();

    // (path, inlinks, requests)
    for (path, inlinks, requests) in [("/a", 3, 0), ("/b", 1, 4), ("/c", 3, 1), ("/d", 0, 0)] {
        let url = canonicalize(&format!("http://sports.test{path}")).unwrap();
        frontier.admit("sports", url, inlinks, requests).unwrap();
    }
    let again = frontier
        .admit(
            "sports",
            canonicalize("http://sports.test/a").unwrap(),
            9,
            9,
        )
        .unwrap();
    assert_eq!(again, Admission::RejectedDuplicate);

    println!("domain\trank\tscore\turl");
    frontier
        .write_dump("sports", &mut std::io::stdout())
        .unwrap();

    println!("\ndequeue order:");
    while let Some(e) = frontier.dequeue("sports").unwrap() {
        println!("  {} (score {})", e.url, e.score);
    }
}
