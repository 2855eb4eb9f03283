//! Syntactic URL checks: placeholder links and homepage-only landings.

use url::Url;

/// Multi-label and common single-label public suffixes. Unlisted TLDs fall
/// back to the implicit `*` rule (the last label alone is the suffix).
const PUBLIC_SUFFIXES: &[&str] = &[
    "com",
    "org",
    "net",
    "edu",
    "gov",
    "mil",
    "int",
    "io",
    "ai",
    "co",
    "app",
    "dev",
    "me",
    "info",
    "biz",
    "xyz",
    "test",
    "example",
    "invalid",
    "localhost",
    "uk",
    "co.uk",
    "org.uk",
    "ac.uk",
    "gov.uk",
    "me.uk",
    "ltd.uk",
    "plc.uk",
    "au",
    "com.au",
    "net.au",
    "org.au",
    "edu.au",
    "gov.au",
    "nz",
    "co.nz",
    "org.nz",
    "net.nz",
    "jp",
    "co.jp",
    "ne.jp",
    "or.jp",
    "ac.jp",
    "go.jp",
    "br",
    "com.br",
    "net.br",
    "org.br",
    "cn",
    "com.cn",
    "net.cn",
    "org.cn",
    "in",
    "co.in",
    "net.in",
    "org.in",
    "za",
    "co.za",
    "org.za",
    "kr",
    "co.kr",
    "or.kr",
    "tw",
    "com.tw",
    "org.tw",
    "hk",
    "com.hk",
    "org.hk",
    "sg",
    "com.sg",
    "org.sg",
    "mx",
    "com.mx",
    "ar",
    "com.ar",
    "tr",
    "com.tr",
    "de",
    "fr",
    "es",
    "it",
    "nl",
    "eu",
    "ca",
    "us",
    "ch",
    "se",
    "no",
    "ru",
    "pl",
];

/// Registrable domains reserved for documentation.
const RESERVED_EXAMPLE_DOMAINS: &[&str] = &["example.com", "example.org", "example.net"];

fn public_suffix_len(labels: &[&str]) -> usize {
    (1..=labels.len())
        .rev()
        .find(|&n| {
            let candidate = labels[labels.len() - n..].join(".");
            PUBLIC_SUFFIXES.contains(&candidate.as_str())
        })
        .unwrap_or(1)
}

/// Public suffix plus one label, or `None` when the host is itself a suffix.
pub fn registrable_domain(host: &str) -> Option<String> {
    let host = host.trim_end_matches('.').to_ascii_lowercase();
    let labels: Vec<&str> = host.split('.').collect();
    if labels.iter().any(|l| l.is_empty()) {
        return None;
    }
    let suffix = public_suffix_len(&labels);
    if labels.len() <= suffix {
        return None;
    }
    Some(labels[labels.len() - suffix - 1..].join("."))
}

pub fn is_placeholder(url: &Url) -> bool {
    let Some(host) = url.host_str() else {
        return false;
    };
    let host = host.trim_end_matches('.').to_ascii_lowercase();
    if host.rsplit('.').next() == Some("example") {
        return true;
    }
    registrable_domain(&host).is_some_and(|r| RESERVED_EXAMPLE_DOMAINS.contains(&r.as_str()))
}

/// True when the post-redirect URL is a bare site root.
pub fn is_homepage_only(final_url: &Url) -> bool {
    matches!(final_url.path(), "" | "/") && final_url.query().is_none_or(str::is_empty)
}
