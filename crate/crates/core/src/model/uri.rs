//! Absolute URI canonicalization and deterministic minting.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// An absolute URI in canonical form.
///
/// Canonical form: Unicode NFC, scheme and host lowercased, percent-escapes
/// with uppercase hex digits, escaped unreserved characters decoded, and no
/// trailing slash on the path.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EntityUri(String);

impl EntityUri {
    pub fn parse(raw: &str) -> Result<Self> {
        canonicalize(raw).map(EntityUri)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for EntityUri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for EntityUri {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        EntityUri::parse(&value)
    }
}

impl From<EntityUri> for String {
    fn from(uri: EntityUri) -> String {
        uri.0
    }
}

impl std::str::FromStr for EntityUri {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EntityUri::parse(s)
    }
}

fn invalid(uri: &str, reason: &str) -> Error {
    Error::InvalidUri {
        uri: uri.to_string(),
        reason: reason.to_string(),
    }
}

fn is_unreserved(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'-' | b'.' | b'_' | b'~')
}

/// Canonicalizes an absolute URI. Idempotent.
pub fn canonicalize(raw: &str) -> Result<String> {
    let nfc: String = raw.trim().nfc().collect();
    let colon = nfc
        .find(':')
        .ok_or_else(|| invalid(raw, "missing scheme"))?;
    let scheme = &nfc[..colon];
    let mut chars = scheme.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return Err(invalid(raw, "scheme must start with a letter")),
    }
    if !chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.')) {
        return Err(invalid(raw, "illegal character in scheme"));
    }
    let rest = &nfc[colon + 1..];
    if let Some(bad) = rest
        .chars()
        .find(|c| c.is_whitespace() || c.is_control() || "<>\"{}|\\^`".contains(*c))
    {
        return Err(invalid(raw, &format!("illegal character {bad:?}")));
    }

    let (authority, tail) = match rest.strip_prefix("//") {
        Some(after) => {
            let end = after.find(['/', '?', '#']).unwrap_or(after.len());
            (Some(&after[..end]), &after[end..])
        }
        None => (None, rest),
    };

    let mut out = String::with_capacity(nfc.len());
    out.push_str(&scheme.to_ascii_lowercase());
    out.push(':');
    if let Some(auth) = authority {
        out.push_str("//");
        let auth = normalize_escapes(auth, raw)?;
        match auth.rfind('@') {
            Some(at) => {
                out.push_str(&auth[..=at]);
                out.push_str(&auth[at + 1..].to_lowercase());
            }
            None => out.push_str(&auth.to_lowercase()),
        }
    }

    let tail = normalize_escapes(tail, raw)?;
    let path_end = tail.find(['?', '#']).unwrap_or(tail.len());
    let (path, suffix) = tail.split_at(path_end);
    out.push_str(path.trim_end_matches('/'));
    out.push_str(suffix);

    if out.len() == scheme.len() + 1 {
        return Err(invalid(raw, "empty scheme-specific part"));
    }
    Ok(out)
}

fn normalize_escapes(s: &str, raw: &str) -> Result<String> {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = bytes
                .get(i + 1..i + 3)
                .filter(|h| h.iter().all(u8::is_ascii_hexdigit))
                .ok_or_else(|| invalid(raw, "malformed percent-escape"))?;
            let value = u8::from_str_radix(std::str::from_utf8(hex).unwrap(), 16).unwrap();
            if is_unreserved(value) {
                out.push(value);
            } else {
                out.push(b'%');
                out.extend(hex.iter().map(u8::to_ascii_uppercase));
            }
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    // Only ASCII escapes were rewritten, so the buffer is still valid UTF-8.
    Ok(String::from_utf8(out).expect("escape rewriting preserves UTF-8"))
}

/// Base URI under which new entities are minted. Always ends in `/`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Namespace(String);

impl Namespace {
    pub fn parse(raw: &str) -> Result<Self> {
        let raw = raw.trim();
        if !raw.ends_with('/') {
            return Err(Error::Config(format!(
                "namespace {raw:?} must end with '/'"
            )));
        }
        let canon = canonicalize(raw).map_err(|e| Error::Config(format!("namespace: {e}")))?;
        Ok(Namespace(format!("{canon}/")))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Namespace {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Namespace::parse(&value)
    }
}

impl From<Namespace> for String {
    fn from(ns: Namespace) -> String {
        ns.0
    }
}

/// Ordered list of normalized tokens used as a minting key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CanonicalKey {
    parts: Vec<String>,
}

impl CanonicalKey {
    pub fn new<I, S>(parts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        CanonicalKey {
            parts: parts
                .into_iter()
                .map(|p| normalize_key_part(p.as_ref()))
                .collect(),
        }
    }

    pub fn parts(&self) -> &[String] {
        &self.parts
    }

    /// Parts joined with `|`; literal `|` and `\` inside parts are escaped.
    pub fn serialize(&self) -> String {
        self.parts
            .iter()
            .map(|p| p.replace('\\', "\\\\").replace('|', "\\|"))
            .collect::<Vec<_>>()
            .join("|")
    }
}

/// NFC, case-folded, whitespace-collapsed.
pub fn normalize_key_part(raw: &str) -> String {
    let folded: String = raw.nfc().flat_map(char::to_lowercase).collect();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn is_class_tag(tag: &str) -> bool {
    !tag.is_empty()
        && tag
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || matches!(c, '-' | '_'))
}

/// Mints `namespace + class_tag + "/" + first 16 hex chars of SHA-256(key)`.
pub fn mint_deterministic_uri(
    namespace: &Namespace,
    class_tag: &str,
    key: &CanonicalKey,
) -> Result<EntityUri> {
    if !is_class_tag(class_tag) {
        return Err(Error::Config(format!("invalid class tag {class_tag:?}")));
    }
    let digest = Sha256::digest(key.serialize().as_bytes());
    let hex = hex::encode(digest);
    EntityUri::parse(&format!(
        "{}{}/{}",
        namespace.as_str(),
        class_tag,
        &hex[..16]
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_form() {
        let u = EntityUri::parse("HTTP://VIAF.org/viaf/76586951/").unwrap();
        assert_eq!(u.as_str(), "http://viaf.org/viaf/76586951");
        let u = EntityUri::parse("http://Example.org/a%7eb%2fc%c3%a9?x=1#F").unwrap();
        assert_eq!(u.as_str(), "http://example.org/a~b%2Fc%C3%A9?x=1#F");
        let u = EntityUri::parse("http://example.org/a/?q").unwrap();
        assert_eq!(u.as_str(), "http://example.org/a?q");
        // NFC: e + combining acute becomes precomposed.
        let u = EntityUri::parse("http://example.org/Bo\u{0308}hm").unwrap();
        assert_eq!(u.as_str(), "http://example.org/B\u{f6}hm");
        let u = EntityUri::parse("urn:uuid:ABC").unwrap();
        assert_eq!(u.as_str(), "urn:uuid:ABC");
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "",
            "no-scheme",
            "1http://x",
            "http://x y",
            "http://x/%zz",
            "urn:",
            "http:/",
        ] {
            assert!(EntityUri::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn namespace_requires_trailing_slash() {
        assert!(Namespace::parse("https://data.example.org/id").is_err());
        assert!(Namespace::parse("not a uri/").is_err());
        let ns = Namespace::parse("HTTPS://Data.Example.org/id/").unwrap();
        assert_eq!(ns.as_str(), "https://data.example.org/id/");
    }

    #[test]
    fn minting_is_deterministic_and_normalizing() {
        let ns = Namespace::parse("https://data.example.org/").unwrap();
        let k = CanonicalKey::new(["anon", "florentine", "1501-1600"]);
        let a = mint_deterministic_uri(&ns, "anon", &k).unwrap();
        let b = mint_deterministic_uri(&ns, "anon", &k).unwrap();
        assert_eq!(a, b);
        assert!(a.as_str().starts_with("https://data.example.org/anon/"));
        assert_eq!(
            a.as_str().len(),
            "https://data.example.org/anon/".len() + 16
        );

        let x = mint_deterministic_uri(&ns, "umbrella", &CanonicalKey::new(["böhm"])).unwrap();
        let y = mint_deterministic_uri(&ns, "umbrella", &CanonicalKey::new(["BÖHM "])).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn minting_rejects_bad_class_tag() {
        let ns = Namespace::parse("https://data.example.org/").unwrap();
        let k = CanonicalKey::new(["x"]);
        assert!(mint_deterministic_uri(&ns, "", &k).is_err());
        assert!(mint_deterministic_uri(&ns, "Has Space", &k).is_err());
    }

    #[test]
    fn key_serialization_escapes_separator() {
        let a = CanonicalKey::new(["a|b"]);
        let b = CanonicalKey::new(["a", "b"]);
        assert_ne!(a.serialize(), b.serialize());
    }

    proptest! {
        #[test]
        fn canonicalization_is_idempotent(
            scheme in "[a-zA-Z][a-zA-Z0-9+.-]{0,5}",
            host in "[a-zA-Z0-9.-]{0,12}",
            path in "(/[a-zA-Z0-9%._~äöü-]{0,6}){0,4}/{0,2}",
            query in proptest::option::of("[a-z0-9=&%]{0,6}"),
        ) {
            let raw = match &query {
                Some(q) => format!("{scheme}://{host}{path}?{q}"),
                None => format!("{scheme}://{host}{path}"),
            };
            if let Ok(once) = canonicalize(&raw) {
                prop_assert_eq!(canonicalize(&once).unwrap(), once);
            }
        }
    }
}
