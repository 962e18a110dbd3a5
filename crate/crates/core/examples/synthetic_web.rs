//! Generates a small synthetic web and prints its ground truth.
//!
//! cargo run --example synthetic_web -- web.json   (also saves it)

use webparf::simweb::{generate, GraphParams};

fn main() {
    let params = GraphParams {
        intra_links: 2,
        cross_links: 1,
        alias_fraction: 0.25,
        noise_ratio: 0.5,
        ..GraphParams::balanced(3, 4)
    };
    let web = generate(&params).unwrap();
    let truth = web.ground_truth();

    for (domain, pages) in &truth.domains {
        println!(
            "{domain}: {} pages, seed {}",
            pages.len(),
            truth.seeds[domain]
        );
    }
    println!("aliases:");
    for (alias, primary) in &truth.aliases {
        println!("  {alias} = {primary}");
    }
    println!("reachable URLs: {}", truth.reachable.len());

    let (url, page) = web.pages.iter().next().unwrap();
    println!("\n{url} links to {:?}\n{}", page.links, page.body);

    if let Some(path) = std::env::args().nth(1) {
        web.save(&path).unwrap();
        println!("saved to {path}");
    }
}
