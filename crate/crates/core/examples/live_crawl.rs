//! Crawls over real HTTP. Without arguments it serves a three-page site on
//! localhost and crawls that.
//!
//! cargo run --example live_crawl -- http://example.com/ 20

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::thread;

use webparf::engine::{render_report, run_crawl, Backend, Config};
use webparf::frontier::DomainProfile;
use webparf::url_model::canonicalize;

fn local_site() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}/", listener.local_addr().unwrap());
    thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let mut reader = BufReader::new(&stream);
            let mut line = String::new();
            reader.read_line(&mut line).ok();
            let path = line.split_whitespace().nth(1).unwrap_or("/").to_string();
            loop {
                let mut h = String::new();
                if reader.read_line(&mut h).unwrap_or(0) == 0 || h == "\r\n" {
                    break;
                }
            }
            let body = match path.as_str() {
                "/" => "<p>football scores</p><a href=/news>news</a> <a href=/match>match</a>",
                "/news" => "<p>election night, the reporter said</p><a href=/>home</a>",
                "/match" => "<p>tennis and football</p>",
                _ => "",
            };
            let status = if body.is_empty() {
                "404 Not Found"
            } else {
                "200 OK"
            };
            let _ = write!(
                &stream,
                "HTTP/1.1 {status}\r\nContent-Type: text/html\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    base
}

fn main() {
    let mut args = std::env::args().skip(1);
    let (seed, local) = match args.next() {
        Some(url) => (url, false),
        None => (local_site(), true),
    };
    let max_pages = args.next().map_or(20, |n| n.parse().expect("page budget"));

    let mut config = Config::new(Backend::Live);
    config.domains = vec![
        DomainProfile::new(
            "sports",
            ["football", "tennis", "match"],
            vec![canonicalize(&seed).expect("seed url")],
        )
        .unwrap(),
        DomainProfile::new("news", ["election", "reporter"], vec![]).unwrap(),
    ];
    config.max_pages = Some(max_pages);
    if local {
        config.politeness_ms = Some(0);
    }
    let report = run_crawl(&config).unwrap();
    print!("{}", render_report(&report));
}
