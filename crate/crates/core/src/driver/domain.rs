//! Host name normalization for declared third-party domains.

use thiserror::Error;
use url::Url;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("empty domain")]
    Empty,
    #[error("invalid host {0:?}")]
    InvalidHost(String),
}

/// Lowercases, trims, strips a trailing dot and any scheme/path/port a
/// developer pasted into the domain slot. Subdomains are kept.
pub fn normalize_domain(raw: &str) -> Result<String, DomainError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(DomainError::Empty);
    }
    let host = if trimmed.contains("://") {
        let url = Url::parse(trimmed).map_err(|_| DomainError::InvalidHost(trimmed.to_owned()))?;
        url.host_str()
            .ok_or_else(|| DomainError::InvalidHost(trimmed.to_owned()))?
            .to_owned()
    } else {
        let end = trimmed.find(['/', '?', '#']).unwrap_or(trimmed.len());
        let authority = &trimmed[..end];
        let authority = authority.rsplit('@').next().unwrap_or(authority);
        match authority.rsplit_once(':') {
            Some((h, port)) if port.chars().all(|c| c.is_ascii_digit()) => h.to_owned(),
            _ => authority.to_owned(),
        }
    };
    let host = host.to_ascii_lowercase();
    let host = host.strip_suffix('.').unwrap_or(&host).to_owned();
    if is_valid_host(&host) {
        Ok(host)
    } else {
        Err(DomainError::InvalidHost(raw.trim().to_owned()))
    }
}

/// Dot-separated labels of `[a-z0-9-]`, no empty label.
pub fn is_valid_host(host: &str) -> bool {
    !host.is_empty()
        && host.len() <= 253
        && host.split('.').all(|label| {
            !label.is_empty()
                && label.len() <= 63
                && label
                    .bytes()
                    .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-')
        })
}
