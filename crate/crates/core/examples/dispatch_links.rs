//! Domain prediction and batched insertion of discovered links.

use webparf::analyzer::extract_links;
use webparf::dispatcher::{predict_domain_with_rule, Dispatcher, UrlDb};
use webparf::frontier::{DomainProfile, GlobalFrontier, ScoreWeights};
use webparf::url_model::canonicalize;

fn main() {
    let profiles = vec![
        DomainProfile::new("sports", ["football", "tennis"], vec![]).unwrap(),
        DomainProfile::new("news", ["election"], vec![]).unwrap(),
    ];
    let mut frontier = GlobalFrontier::new(ScoreWeights::default());
    for p in &profiles {
        frontier.create_pool(p.clone()).unwrap();
    }
    let mut db = UrlDb::in_memory();
    let mut dispatcher = Dispatcher::new(3, profiles.clone());

    let page = canonicalize("http://portal.test/home").unwrap();
    let html = br#"<a href="/tennis/open">t</a> <a href="http://daily.test/election-night">e</a>
        <a href="/about">a</a> <a href="/tennis/open">again</a> <a href="/contact">c</a>"#;
    let links = extract_links(html, &page);
    for href in &links.hrefs {
        let url = webparf::resolve(&page, href).unwrap();
        let (domain, rule) = predict_domain_with_rule(&url, "sports", &db, &profiles);
        println!("{url:<36} -> {domain:<8} ({rule:?})");
    }

    let flushes = dispatcher
        .dispatch_page(&links, "sports", &mut db, &mut frontier)
        .unwrap();
    println!("\nflushed during dispatch: {flushes:?}");
    println!("pending before end of cycle: {}", dispatcher.batch().len());
    dispatcher.end_of_cycle(&mut db, &mut frontier).unwrap();
    println!("flush sizes: {:?}", dispatcher.flush_sizes());
    for d in ["sports", "news"] {
        println!("--- {d}");
        frontier.write_dump(d, &mut std::io::stdout()).unwrap();
    }
}
