//! URL canonicalization and relative-reference resolution.
//!
//! A [`CanonicalUrl`] is the identity under which every deduplication in the
//! crawler operates. Its rendering, `scheme "://" host [":" port] path ["?" query]`,
//! is the dedup key and the repository index key.
//!
//! Canonical form:
//! - scheme and host are lowercased; only `http` and `https` are accepted
//! - the scheme-default port is dropped
//! - dot-segments are removed from the path, and an empty path becomes `/`
//! - hex digits of percent-encoded triplets are uppercased, nothing is decoded
//! - the query is kept byte-for-byte, the fragment is dropped
//! - userinfo is dropped

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UrlError {
    #[error("malformed url `{url}`: {reason}")]
    MalformedUrl { url: String, reason: &'static str },
}

impl UrlError {
    fn malformed(url: &str, reason: &'static str) -> Self {
        UrlError::MalformedUrl {
            url: url.to_string(),
            reason,
        }
    }
}

/// A normalized absolute http(s) URL.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CanonicalUrl {
    scheme: String,
    host: String,
    port: Option<u16>,
    path: String,
    query: Option<String>,
}

/// An href value exactly as it appeared in a document.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RawHref(pub String);

impl RawHref {
    pub fn new(text: impl Into<String>) -> Self {
        RawHref(text.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for RawHref {
    fn from(s: &str) -> Self {
        RawHref(s.to_string())
    }
}

impl CanonicalUrl {
    pub fn scheme(&self) -> &str {
        &self.scheme
    }

    pub fn host(&self) -> &str {
        &self.host
    }

    pub fn port(&self) -> Option<u16> {
        self.port
    }

    pub fn path(&self) -> &str {
        &self.path
    }

    pub fn query(&self) -> Option<&str> {
        self.query.as_deref()
    }

    /// The canonical string form; equal URLs render identically.
    pub fn render(&self) -> String {
        let mut out =
            String::with_capacity(self.scheme.len() + self.host.len() + self.path.len() + 16);
        out.push_str(&self.scheme);
        out.push_str("://");
        out.push_str(&self.host);
        if let Some(port) = self.port {
            out.push(':');
            out.push_str(&port.to_string());
        }
        out.push_str(&self.path);
        if let Some(q) = &self.query {
            out.push('?');
            out.push_str(q);
        }
        out
    }
}

impl fmt::Display for CanonicalUrl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl FromStr for CanonicalUrl {
    type Err = UrlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        canonicalize(s)
    }
}

impl TryFrom<String> for CanonicalUrl {
    type Error = UrlError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        canonicalize(&s)
    }
}

impl From<CanonicalUrl> for String {
    fn from(u: CanonicalUrl) -> Self {
        u.render()
    }
}

/// Parses an absolute http(s) URL into canonical form.
pub fn canonicalize(raw: &str) -> Result<CanonicalUrl, UrlError> {
    let parts = Reference::parse(raw);
    let scheme = parts
        .scheme
        .ok_or_else(|| UrlError::malformed(raw, "missing scheme"))?
        .to_ascii_lowercase();
    let default_port = match scheme.as_str() {
        "http" => 80,
        "https" => 443,
        _ => return Err(UrlError::malformed(raw, "unsupported scheme")),
    };
    let authority = parts
        .authority
        .ok_or_else(|| UrlError::malformed(raw, "empty host"))?;
    // userinfo is not part of the resource identity
    let host_port = match authority.rfind('@') {
        Some(at) => &authority[at + 1..],
        None => authority,
    };
    let (host, port_text) = split_host_port(host_port);
    if host.is_empty() {
        return Err(UrlError::malformed(raw, "empty host"));
    }
    if host
        .chars()
        .any(|c| c.is_whitespace() || c.is_control() || c == '\\')
    {
        return Err(UrlError::malformed(raw, "invalid host"));
    }
    let port = match port_text {
        None | Some("") => None,
        Some(p) => {
            if !p.bytes().all(|b| b.is_ascii_digit()) {
                return Err(UrlError::malformed(raw, "invalid port"));
            }
            let n: u16 = p
                .parse()
                .map_err(|_| UrlError::malformed(raw, "invalid port"))?;
            (n != default_port).then_some(n)
        }
    };
    let mut path = normalize_percent(&remove_dot_segments(parts.path));
    if path.is_empty() {
        path.push('/');
    }
    Ok(CanonicalUrl {
        scheme,
        host: host.to_ascii_lowercase(),
        port,
        path,
        query: parts.query.map(normalize_percent),
    })
}

/// Resolves an href against a canonical base, then canonicalizes the result.
///
/// Leading and trailing ASCII whitespace of the href is ignored, as browsers do.
pub fn resolve(base: &CanonicalUrl, reference: &RawHref) -> Result<CanonicalUrl, UrlError> {
    let text = reference.0.trim_matches(|c: char| c.is_ascii_whitespace());
    let resolved = resolve_reference(&base.render(), text);
    canonicalize(&resolved).map_err(|e| match e {
        UrlError::MalformedUrl { reason, .. } => UrlError::malformed(text, reason),
    })
}

pub fn host_of(u: &CanonicalUrl) -> &str {
    u.host()
}

/// Generic reference resolution over arbitrary URI strings, without any
/// canonicalization. The result keeps the fragment and any scheme.
pub fn resolve_reference(base: &str, reference: &str) -> String {
    let b = Reference::parse(base);
    let r = Reference::parse(reference);

    let (scheme, authority, path, query);
    if let Some(s) = r.scheme {
        scheme = Some(s);
        authority = r.authority;
        path = remove_dot_segments(r.path);
        query = r.query;
    } else {
        scheme = b.scheme;
        if r.authority.is_some() {
            authority = r.authority;
            path = remove_dot_segments(r.path);
            query = r.query;
        } else {
            authority = b.authority;
            if r.path.is_empty() {
                path = b.path.to_string();
                query = r.query.or(b.query);
            } else {
                path = if r.path.starts_with('/') {
                    remove_dot_segments(r.path)
                } else {
                    remove_dot_segments(&merge(&b, r.path))
                };
                query = r.query;
            }
        }
    }

    let mut out = String::new();
    if let Some(s) = scheme {
        out.push_str(s);
        out.push(':');
    }
    if let Some(a) = authority {
        out.push_str("//");
        out.push_str(a);
    }
    out.push_str(&path);
    if let Some(q) = query {
        out.push('?');
        out.push_str(q);
    }
    if let Some(f) = r.fragment {
        out.push('#');
        out.push_str(f);
    }
    out
}

fn merge(base: &Reference<'_>, rel: &str) -> String {
    if base.authority.is_some() && base.path.is_empty() {
        format!("/{rel}")
    } else {
        match base.path.rfind('/') {
            Some(i) => format!("{}{}", &base.path[..=i], rel),
            None => rel.to_string(),
        }
    }
}

/// Removes `.` and `..` segments from a path.
pub fn remove_dot_segments(path: &str) -> String {
    let mut input = path;
    let mut output = String::with_capacity(path.len());
    while !input.is_empty() {
        if let Some(rest) = input.strip_prefix("../") {
            input = rest;
        } else if let Some(rest) = input.strip_prefix("./") {
            input = rest;
        } else if input.starts_with("/./") {
            input = &input[2..];
        } else if input == "/." {
            input = "/";
        } else if input.starts_with("/../") {
            input = &input[3..];
            pop_last_segment(&mut output);
        } else if input == "/.." {
            input = "/";
            pop_last_segment(&mut output);
        } else if input == "." || input == ".." {
            input = "";
        } else {
            let start = usize::from(input.starts_with('/'));
            let end = input[start..].find('/').map_or(input.len(), |i| i + start);
            output.push_str(&input[..end]);
            input = &input[end..];
        }
    }
    output
}

fn pop_last_segment(output: &mut String) {
    match output.rfind('/') {
        Some(i) => output.truncate(i),
        None => output.clear(),
    }
}

fn split_host_port(host_port: &str) -> (&str, Option<&str>) {
    if host_port.starts_with('[') {
        // IP literal
        return match host_port.find(']') {
            Some(close) => {
                let rest = &host_port[close + 1..];
                (&host_port[..=close], rest.strip_prefix(':'))
            }
            None => (host_port, None),
        };
    }
    match host_port.rfind(':') {
        Some(i) => (&host_port[..i], Some(&host_port[i + 1..])),
        None => (host_port, None),
    }
}

fn normalize_percent(s: &str) -> String {
    let bytes = s.as_bytes();
    let mut out = String::with_capacity(s.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%'
            && i + 2 < bytes.len()
            && bytes[i + 1].is_ascii_hexdigit()
            && bytes[i + 2].is_ascii_hexdigit()
        {
            out.push('%');
            out.push(bytes[i + 1].to_ascii_uppercase() as char);
            out.push(bytes[i + 2].to_ascii_uppercase() as char);
            i += 3;
        } else {
            let ch = s[i..].chars().next().expect("char boundary");
            out.push(ch);
            i += ch.len_utf8();
        }
    }
    out
}

/// The five components of a URI reference, split without validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Reference<'a> {
    scheme: Option<&'a str>,
    authority: Option<&'a str>,
    path: &'a str,
    query: Option<&'a str>,
    fragment: Option<&'a str>,
}

impl<'a> Reference<'a> {
    fn parse(s: &'a str) -> Self {
        let mut rest = s;
        let (rest_nofrag, fragment) = match rest.find('#') {
            Some(i) => (&rest[..i], Some(&rest[i + 1..])),
            None => (rest, None),
        };
        rest = rest_nofrag;
        let scheme = match rest.find([':', '/', '?']) {
            Some(i) if i > 0 && rest.as_bytes()[i] == b':' && is_scheme(&rest[..i]) => {
                let s = &rest[..i];
                rest = &rest[i + 1..];
                Some(s)
            }
            _ => None,
        };
        let authority = match rest.strip_prefix("//") {
            Some(after) => {
                let end = after.find(['/', '?']).unwrap_or(after.len());
                rest = &after[end..];
                Some(&after[..end])
            }
            None => None,
        };
        let (path, query) = match rest.find('?') {
            Some(i) => (&rest[..i], Some(&rest[i + 1..])),
            None => (rest, None),
        };
        Reference {
            scheme,
            authority,
            path,
            query,
            fragment,
        }
    }
}

fn is_scheme(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> CanonicalUrl {
        canonicalize(s).unwrap()
    }

    #[test]
    fn canonicalize_lowercases_and_strips() {
        let u = c("HTTP://A.com:80/p#frag");
        assert_eq!(u.scheme(), "http");
        assert_eq!(u.host(), "a.com");
        assert_eq!(u.port(), None);
        assert_eq!(u.path(), "/p");
        assert_eq!(u.render(), "http://a.com/p");
    }

    #[test]
    fn canonicalize_identity() {
        assert_eq!(c("http://a.com/p").render(), "http://a.com/p");
    }

    #[test]
    fn canonicalize_removes_dot_segments() {
        // x/../y: "/x" is emitted, then "/../" pops it, leaving "/y"
        assert_eq!(c("http://a.com/x/../y").path(), "/y");
    }

    #[test]
    fn empty_path_becomes_slash() {
        assert_eq!(c("https://b.org").render(), "https://b.org/");
        assert_eq!(c("https://b.org?q=1").render(), "https://b.org/?q=1");
    }

    #[test]
    fn non_default_port_kept() {
        assert_eq!(c("https://b.org:8080/x").render(), "https://b.org:8080/x");
        assert_eq!(c("https://b.org:443/x").render(), "https://b.org/x");
        assert_eq!(c("http://b.org:443/x").render(), "http://b.org:443/x");
    }

    #[test]
    fn query_preserved_and_percent_uppercased() {
        let u = c("http://a.com/%7ex?b=2&a=1%2f");
        assert_eq!(u.render(), "http://a.com/%7Ex?b=2&a=1%2F");
    }

    #[test]
    fn userinfo_dropped() {
        assert_eq!(c("http://user:pw@a.com/").render(), "http://a.com/");
    }

    #[test]
    fn malformed_inputs() {
        for bad in [
            "a.com/p",
            "ftp://a.com/",
            "mailto:x@y.z",
            "javascript:void(0)",
            "http:///p",
            "http://a.com:99999/",
            "http://a.com:8x/",
            "http:g",
        ] {
            assert!(
                matches!(canonicalize(bad), Err(UrlError::MalformedUrl { .. })),
                "{bad} should be rejected"
            );
        }
    }

    #[test]
    fn host_of_examples() {
        assert_eq!(host_of(&c("http://a.com/p")), "a.com");
        assert_eq!(host_of(&c("http://A.COM/p")), "a.com");
        assert_eq!(host_of(&c("https://b.org:8080/x")), "b.org");
    }

    #[test]
    fn resolve_examples() {
        let base = c("http://a/b/c/d;p?q");
        assert_eq!(
            resolve(&base, &"g".into()).unwrap().render(),
            "http://a/b/c/g"
        );
        assert_eq!(
            resolve(&base, &"../g".into()).unwrap().render(),
            "http://a/b/g"
        );
        assert_eq!(
            resolve(&base, &"http://x.com/z".into()).unwrap().render(),
            "http://x.com/z"
        );
        assert_eq!(
            resolve(&base, &"  g#frag ".into()).unwrap().render(),
            "http://a/b/c/g"
        );
    }

    #[test]
    fn resolve_rejects_other_schemes() {
        let base = c("http://a.com/x/");
        for bad in ["javascript:void(0)", "mailto:a@b.c", "ftp://f/x", "g:h"] {
            assert!(resolve(&base, &bad.into()).is_err(), "{bad}");
        }
    }

    #[test]
    fn ipv6_literal_host() {
        assert_eq!(c("http://[::1]:8080/x").render(), "http://[::1]:8080/x");
        assert_eq!(c("http://[::1]:80/x").render(), "http://[::1]/x");
    }

    #[test]
    fn serde_as_string() {
        let u = c("http://a.com/p?x");
        let json = serde_json::to_string(&u).unwrap();
        assert_eq!(json, "\"http://a.com/p?x\"");
        let back: CanonicalUrl = serde_json::from_str(&json).unwrap();
        assert_eq!(back, u);
        assert!(serde_json::from_str::<CanonicalUrl>("\"ftp://x/\"").is_err());
    }
}
