//! Canonical forms and reference resolution.
//!
//! cargo run --example canonicalize_urls -- "HTTP://Example.COM:80/a/./b/../c?q=%7e#frag"

use webparf::url_model::{canonicalize, resolve, RawHref};

fn main() {
    let inputs: Vec<String> = std::env::args().skip(1).collect();
    let inputs = if inputs.is_empty() {
        vec![
            "HTTP://Example.COM:80/a/./b/../c?q=%7e#frag".to_string(),
            "https://user:pw@host.test:443".to_string(),
            "ftp://files.test/x".to_string(),
        ]
    } else {
        inputs
    };
    for raw in &inputs {
        match canonicalize(raw) {
            Ok(u) => println!("{raw}\n  -> {u}"),
            Err(e) => println!("{raw}\n  !! {e}"),
        }
    }

    let base = canonicalize("http://a/b/c/d;p?q").unwrap();
    println!("\nrelative to {base}:");
    for href in [
        "g",
        "../g",
        "../../../g",
        "?y",
        "//other.test/x",
        "mailto:a@b",
    ] {
        match resolve(&base, &RawHref::new(href)) {
            Ok(u) => println!("  {href:<16} {u}"),
            Err(e) => println!("  {href:<16} rejected ({e})"),
        }
    }
}
