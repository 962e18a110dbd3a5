//! Page analysis: link extraction, text extraction and keyword classification.
//!
//! The HTML scanner is tolerant rather than conforming. It never fails: bytes
//! are decoded lossily, unterminated constructs run to end of input, and
//! anything it cannot make sense of is skipped.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dispatcher::{DispatchError, UrlDb, UrlDbEntry};
use crate::frontier::{DomainProfile, UNCLASSIFIED};
use crate::url_model::{CanonicalUrl, RawHref};

/// Hrefs of one page, in document order, duplicates kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkSet {
    pub base: CanonicalUrl,
    pub hrefs: Vec<RawHref>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub scores: BTreeMap<String, u64>,
    pub winner: String,
}

/// Every `href` of every `<a>` element.
pub fn extract_links(html: &[u8], base: &CanonicalUrl) -> LinkSet {
    let mut hrefs = Vec::new();
    scan(html, |event| {
        if let Event::Tag { name, attrs } = event {
            if name == "a" {
                if let Some((_, v)) = attrs.into_iter().find(|(k, _)| k == "href") {
                    hrefs.push(RawHref(v));
                }
            }
        }
    });
    LinkSet {
        base: base.clone(),
        hrefs,
    }
}

/// Lowercased alphanumeric tokens of the visible text; script and style
/// contents are dropped.
pub fn extract_text(html: &[u8]) -> Vec<String> {
    let mut tokens = Vec::new();
    scan(html, |event| {
        if let Event::Text(text) = event {
            tokens.extend(tokenize(&text));
        }
    });
    tokens
}

pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Keyword-hit counting. The highest score wins, ties go to the
/// lexicographically smallest name, and all-zero is unclassified.
pub fn classify(tokens: &[String], profiles: &[DomainProfile]) -> ClassificationResult {
    let mut scores = BTreeMap::new();
    for p in profiles.iter().filter(|p| !p.is_unclassified()) {
        let hits = tokens.iter().filter(|t| p.keywords.contains(*t)).count() as u64;
        scores.insert(p.name.clone(), hits);
    }
    // BTreeMap iterates names ascending, so strict > keeps the smallest on ties
    let mut winner = UNCLASSIFIED;
    let mut best = 0;
    for (name, &score) in &scores {
        if score > best {
            best = score;
            winner = name;
        }
    }
    ClassificationResult {
        winner: winner.to_string(),
        scores,
    }
}

/// Records the classified domain of a fetched URL in the URL database.
pub fn tag_url<'a>(
    db: &'a mut UrlDb,
    url: &CanonicalUrl,
    domain: &str,
) -> Result<&'a UrlDbEntry, DispatchError> {
    db.tag_classified(url, domain)
}

pub fn is_html(content_type: &str) -> bool {
    let ct = content_type.trim().to_ascii_lowercase();
    ct.is_empty() || ct.starts_with("text/html") || ct.starts_with("application/xhtml")
}

enum Event {
    Tag {
        name: String,
        attrs: Vec<(String, String)>,
    },
    Text(String),
}

fn scan(html: &[u8], mut emit: impl FnMut(Event)) {
    let doc = String::from_utf8_lossy(html);
    let s = doc.as_ref();
    let bytes = s.as_bytes();
    let mut i = 0;
    let mut text_start = 0;
    let flush_text = |from: usize, to: usize, emit: &mut dyn FnMut(Event)| {
        if to > from {
            emit(Event::Text(decode_entities(&s[from..to])));
        }
    };
    while i < bytes.len() {
        if bytes[i] != b'<' {
            i += 1;
            continue;
        }
        let rest = &s[i..];
        if rest.starts_with("<!--") {
            flush_text(text_start, i, &mut emit);
            i = find_from(s, i + 4, "-->").map_or(bytes.len(), |j| j + 3);
            text_start = i;
            continue;
        }
        let next = bytes.get(i + 1).copied();
        let is_tag = matches!(next, Some(c) if c.is_ascii_alphabetic() || c == b'/' || c == b'!' || c == b'?');
        if !is_tag {
            i += 1;
            continue;
        }
        flush_text(text_start, i, &mut emit);
        let (tag, end) = parse_tag(s, i + 1);
        i = end;
        text_start = i;
        if let Some((name, attrs, closing)) = tag {
            if !closing && (name == "script" || name == "style") {
                let close = format!("</{name}");
                i = find_from_ci(s, i, &close)
                    .map(|j| find_from(s, j, ">").map_or(bytes.len(), |k| k + 1))
                    .unwrap_or(bytes.len());
                text_start = i;
            }
            if !closing {
                emit(Event::Tag { name, attrs });
            }
        }
    }
    flush_text(text_start, bytes.len(), &mut emit);
}

type ParsedTag = (String, Vec<(String, String)>, bool);

/// Parses from just after `<`; returns the tag (if well-formed enough) and
/// the index just past it.
fn parse_tag(s: &str, start: usize) -> (Option<ParsedTag>, usize) {
    let bytes = s.as_bytes();
    let mut i = start;
    if matches!(bytes.get(i), Some(b'!') | Some(b'?')) {
        // doctype or processing instruction
        return (None, find_from(s, i, ">").map_or(bytes.len(), |j| j + 1));
    }
    let closing = bytes.get(i) == Some(&b'/');
    if closing {
        i += 1;
    }
    let name_start = i;
    while i < bytes.len()
        && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'-' || bytes[i] == b':')
    {
        i += 1;
    }
    let name = s[name_start..i].to_ascii_lowercase();
    let mut attrs = Vec::new();
    loop {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'/') {
            i += 1;
        }
        if i >= bytes.len() {
            return (None, bytes.len());
        }
        if bytes[i] == b'>' {
            i += 1;
            break;
        }
        let key_start = i;
        while i < bytes.len()
            && !bytes[i].is_ascii_whitespace()
            && !matches!(bytes[i], b'=' | b'>' | b'/')
        {
            i += 1;
        }
        let key = s[key_start..i].to_ascii_lowercase();
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if bytes.get(i) != Some(&b'=') {
            attrs.push((key, String::new()));
            continue;
        }
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let value = match bytes.get(i) {
            Some(&q) if q == b'"' || q == b'\'' => {
                let Some(close) = s[i + 1..].find(q as char).map(|j| j + i + 1) else {
                    // unterminated quote: drop the rest of the tag
                    return (
                        None,
                        find_from(s, i + 1, ">").map_or(bytes.len(), |j| j + 1),
                    );
                };
                let v = &s[i + 1..close];
                i = close + 1;
                v
            }
            _ => {
                let v_start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'>' {
                    i += 1;
                }
                &s[v_start..i]
            }
        };
        attrs.push((key, decode_entities(value)));
    }
    if name.is_empty() {
        return (None, i);
    }
    (Some((name, attrs, closing)), i)
}

fn find_from(s: &str, from: usize, needle: &str) -> Option<usize> {
    s.get(from..)?.find(needle).map(|j| j + from)
}

fn find_from_ci(s: &str, from: usize, needle: &str) -> Option<usize> {
    let hay = s.get(from..)?.as_bytes();
    let n = needle.as_bytes();
    hay.windows(n.len())
        .position(|w| w.eq_ignore_ascii_case(n))
        .map(|j| j + from)
}

fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let decoded = rest.find(';').filter(|&semi| semi <= 10).and_then(|semi| {
            let ent = &rest[1..semi];
            let ch = match ent {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some(' '),
                _ => ent
                    .strip_prefix("#x")
                    .or_else(|| ent.strip_prefix("#X"))
                    .and_then(|h| u32::from_str_radix(h, 16).ok())
                    .or_else(|| ent.strip_prefix('#').and_then(|d| d.parse().ok()))
                    .and_then(char::from_u32),
            };
            ch.map(|c| (c, semi))
        });
        match decoded {
            Some((c, semi)) => {
                out.push(c);
                rest = &rest[semi + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::url_model::{canonicalize, resolve};

    fn base() -> CanonicalUrl {
        canonicalize("http://a.com/d/").unwrap()
    }

    fn hrefs(html: &str) -> Vec<String> {
        extract_links(html.as_bytes(), &base())
            .hrefs
            .into_iter()
            .map(|h| h.0)
            .collect()
    }

    fn profile(name: &str, kws: &[&str]) -> DomainProfile {
        DomainProfile::new(name, kws, vec![]).unwrap()
    }

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn anchor_with_space_after_equals() {
        assert_eq!(
            hrefs(r#"<A HREF= "http://www.w3schools.com"> this is a Link</A>"#),
            vec!["http://www.w3schools.com"]
        );
    }

    #[test]
    fn no_links() {
        assert!(hrefs("<p>no links</p>").is_empty());
    }

    #[test]
    fn quoting_styles_and_resolution() {
        let set = extract_links(b"<a href='x.html'><a href=y.html>", &base());
        let raw: Vec<_> = set.hrefs.iter().map(|h| h.as_str()).collect();
        assert_eq!(raw, vec!["x.html", "y.html"]);
        let resolved: Vec<_> = set
            .hrefs
            .iter()
            .map(|h| resolve(&set.base, h).unwrap().render())
            .collect();
        assert_eq!(
            resolved,
            vec!["http://a.com/d/x.html", "http://a.com/d/y.html"]
        );
    }

    #[test]
    fn order_and_duplicates_kept() {
        assert_eq!(
            hrefs(r#"<a href="b"></a><a class=x href="a">A</a><a href="b">again</a>"#),
            vec!["b", "a", "b"]
        );
    }

    #[test]
    fn ignores_non_anchor_hrefs_and_comments() {
        assert_eq!(
            hrefs(r#"<link href="s.css"><!-- <a href="hidden"> --><abbr href="no"><a href="yes">"#),
            vec!["yes"]
        );
    }

    #[test]
    fn entities_in_href() {
        assert_eq!(hrefs(r#"<a href="?a=1&amp;b=2">"#), vec!["?a=1&b=2"]);
    }

    #[test]
    fn malformed_fragments_skipped() {
        // an unbalanced quote swallows markup up to the next quote, as browsers do
        assert_eq!(
            hrefs(r#"<a href="broken><a href="ok">"#),
            vec![r#"broken><a href="#]
        );
        assert_eq!(hrefs(r#"< a href="x"> <a href="ok"> <a"#), vec!["ok"]);
        assert_eq!(hrefs("<a href"), Vec::<String>::new());
    }

    #[test]
    fn text_extraction() {
        assert_eq!(
            extract_text(b"<b>Football Score</b>"),
            toks(&["football", "score"])
        );
        assert_eq!(
            extract_text(b"<script>var x=1</script>hello"),
            toks(&["hello"])
        );
        assert_eq!(
            extract_text(b"<STYLE>p{color:red}</Style>a&amp;b <!-- skip me --> c"),
            toks(&["a", "b", "c"])
        );
        assert!(extract_text(b"").is_empty());
        assert_eq!(extract_text(b"<script>never closed"), Vec::<String>::new());
    }

    #[test]
    fn classify_examples() {
        let profiles = vec![
            profile("sports", &["football", "score"]),
            profile("news", &["election", "headline"]),
            DomainProfile::unclassified(),
        ];
        let r = classify(&toks(&["football", "score", "x"]), &profiles);
        assert_eq!(r.winner, "sports");
        assert_eq!(r.scores["sports"], 2);
        assert_eq!(r.scores["news"], 0);
        assert!(!r.scores.contains_key(UNCLASSIFIED));

        assert_eq!(classify(&[], &profiles).winner, UNCLASSIFIED);

        let tie = classify(&toks(&["football", "election"]), &profiles);
        assert_eq!(tie.winner, "news");
    }

    #[test]
    fn tag_via_analyzer() {
        let mut db = UrlDb::in_memory();
        let u = canonicalize("http://a.com/x").unwrap();
        db.insert_seed(&u, "news").unwrap();
        let e = tag_url(&mut db, &u, "sports").unwrap();
        assert_eq!(e.domain, "sports");
        assert!(tag_url(&mut db, &canonicalize("http://b.com/").unwrap(), "news").is_err());
    }

    #[test]
    fn html_content_types() {
        assert!(is_html("text/html; charset=utf-8"));
        assert!(is_html(""));
        assert!(!is_html("image/png"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn scanner_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..512)) {
                let _ = extract_links(&bytes, &base());
                let _ = extract_text(&bytes);
            }

            #[test]
            fn scanner_survives_tag_soup(parts in prop::collection::vec(
                prop::sample::select(vec!["<a", " href=", "\"", "'", ">", "</a>", "x", "<!--", "-->",
                    "<script>", "</script>", "&amp;", "&", "=", " ", "<", "/"]), 0..64)) {
                let html = parts.concat();
                let _ = extract_links(html.as_bytes(), &base());
                let _ = extract_text(html.as_bytes());
            }

            #[test]
            fn classify_is_deterministic(words in prop::collection::vec(
                prop::sample::select(vec!["football", "score", "election", "headline", "other"]), 0..30)) {
                let profiles = vec![profile("sports", &["football", "score"]), profile("news", &["election", "headline"])];
                let tokens = toks(&words);
                let a = classify(&tokens, &profiles);
                let b = classify(&tokens, &profiles);
                prop_assert_eq!(&a, &b);
                let best = a.scores.values().copied().max().unwrap_or(0);
                if best == 0 {
                    prop_assert_eq!(a.winner.as_str(), UNCLASSIFIED);
                } else {
                    prop_assert_eq!(a.scores[&a.winner], best);
                }
            }
        }
    }
}
