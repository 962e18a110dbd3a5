use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use webparf::engine::{execute, Backend, Config, StopReason};
use webparf::fetcher::{fetch, FetchBackend, HttpBackend, Politeness, USER_AGENT};
use webparf::url_model::canonicalize;
use webparf::DomainProfile;

struct Server {
    base: String,
    flaky_hits: Arc<AtomicUsize>,
}

/// Serves a tiny site until the test process exits.
fn serve() -> Server {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let flaky_hits = Arc::new(AtomicUsize::new(0));
    let hits = flaky_hits.clone();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request = String::new();
            if reader.read_line(&mut request).is_err() {
                continue;
            }
            let mut agent = String::new();
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                if line.to_ascii_lowercase().starts_with("user-agent:") {
                    agent = line[11..].trim().to_string();
                }
            }
            let path = request.split_whitespace().nth(1).unwrap_or("/").to_string();
            let (status, body) = match path.as_str() {
                "/" => (
                    "200 OK",
                    r#"<html><body>football tennis football
                    <a href="/a">a</a> <a href="b">b</a> <a href="/missing">m</a>
                    <a href="/flaky">f</a> <a href="mailto:x@y">mail</a></body></html>"#
                        .to_string(),
                ),
                "/a" => (
                    "200 OK",
                    "<p>election reporter election</p><a href='/'>home</a>".to_string(),
                ),
                "/b" => ("200 OK", "<p>football</p><a href='/a'>a</a>".to_string()),
                "/ua" => ("200 OK", agent),
                "/flaky" => {
                    if hits.fetch_add(1, Ordering::SeqCst) == 0 {
                        ("503 Service Unavailable", String::new())
                    } else {
                        ("200 OK", "<p>tennis</p>".to_string())
                    }
                }
                _ => ("404 Not Found", String::new()),
            };
            let _ = write!(
                stream,
                "HTTP/1.1 {status}\r\nContent-Type: text/html\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    Server { base, flaky_hits }
}

#[test]
fn backend_statuses_and_user_agent() {
    let s = serve();
    let http = HttpBackend::new(Duration::from_secs(5));
    let ok = http.get(&canonicalize(&format!("{}/a", s.base)).unwrap());
    assert_eq!(ok.status, 200);
    assert!(ok.content_type.starts_with("text/html"));
    let miss = http.get(&canonicalize(&format!("{}/nope", s.base)).unwrap());
    assert_eq!(miss.status, 404);
    let ua = http.get(&canonicalize(&format!("{}/ua", s.base)).unwrap());
    assert_eq!(String::from_utf8(ua.body).unwrap(), USER_AGENT);
    assert!(http.resolve_addr("127.0.0.1").is_some());
}

#[test]
fn server_errors_are_retried_once() {
    let s = serve();
    let http = HttpBackend::new(Duration::from_secs(5));
    let r = fetch(
        &http,
        &canonicalize(&format!("{}/flaky", s.base)).unwrap(),
        &Politeness::new(Duration::ZERO),
    );
    assert_eq!(r.status, 200);
    assert_eq!(s.flaky_hits.load(Ordering::SeqCst), 2);
}

#[test]
fn unreachable_host() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let http = HttpBackend::new(Duration::from_secs(2));
    let r = http.get(&canonicalize(&format!("http://{addr}/")).unwrap());
    assert!(r.status == 502 || r.status == 0, "{}", r.status);
}

#[test]
fn live_crawl_of_local_site() {
    let s = serve();
    let seed = canonicalize(&format!("{}/", s.base)).unwrap();
    let mut c = Config::new(Backend::Live);
    c.domains = vec![
        DomainProfile::new("sports", ["football", "tennis"], vec![seed]).unwrap(),
        DomainProfile::new("news", ["election", "reporter"], vec![]).unwrap(),
    ];
    c.workers = Some(2);
    c.politeness_ms = Some(0);
    c.max_pages = Some(50);
    let out = execute(&c).unwrap();
    let r = &out.report;
    assert_eq!(r.stop_reason, StopReason::Exhausted);
    assert_eq!(r.url_overlap, 0);
    assert_eq!(r.pages_fetched, 4);
    assert_eq!(r.fetch_errors, 1);
    assert_eq!(r.malformed_links, 1);
    assert_eq!(r.per_domain_fetched.get("news"), Some(&1));
    assert_eq!(r.per_domain_fetched.get("sports"), Some(&3));
    assert_eq!(r.coverage, None);
    let a = canonicalize(&format!("{}/a", s.base)).unwrap();
    assert_eq!(out.urldb.get(&a).unwrap().domain, "news");
}
