//! Text extraction, link extraction and keyword classification of one page.
//!
//! cargo run --example classify_page -- page.html

use webparf::analyzer::{classify, extract_links, extract_text};
use webparf::frontier::DomainProfile;
use webparf::url_model::canonicalize;

const SAMPLE: &str = r#"<!DOCTYPE html>
<html><head><title>Match report</title><script>var football = 1;</script></head>
<body><p>The tennis final went to five sets; football fans &amp; tennis fans alike
watched the tournament.</p>
<a href="/results">results</a> <A HREF='../archive/2019'>archive</a>
<a href=https://news.test/election>election coverage</a> <a href="javascript:void(0)">x</a>
</body></html>"#;

fn main() {
    let html = match std::env::args().nth(1) {
        Some(path) => std::fs::read(path).expect("readable file"),
        None => SAMPLE.as_bytes().to_vec(),
    };
    let profiles = vec![
        DomainProfile::new("sports", ["football", "tennis", "tournament"], vec![]).unwrap(),
        DomainProfile::new("news", ["election", "parliament"], vec![]).unwrap(),
    ];
    let base = canonicalize("http://sports.test/reports/today").unwrap();

    let tokens = extract_text(&html);
    let result = classify(&tokens, &profiles);
    println!("scores: {:?}", result.scores);
    println!("winner: {}", result.winner);

    println!("links:");
    for href in extract_links(&html, &base).hrefs {
        println!("  {}", href.as_str());
    }
}
