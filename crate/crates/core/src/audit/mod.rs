//! Privacy policy link auditing.
//!
//! Each declared policy URL is classified into one of five outcomes. The
//! rules are applied in a fixed order and the first that fires wins:
//!
//! 1. the declared URL points at a reserved example domain: broken (placeholder)
//! 2. a host on the redirect chain does not resolve: broken (DNS)
//! 3. no response within the timeout, after retries: timeout
//! 4. final status 5xx: server error
//! 5. final status 4xx: broken (client error); too many redirects reports a
//!    synthetic 310, a redirect without a usable `Location` reports its own status
//! 6. final status 2xx on a bare site root: homepage only
//! 7. any other final 2xx: accessible; the text is extracted and hashed

mod rules;
mod text;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use tokio::time::Instant;
use url::Url;

pub use rules::{is_homepage_only, is_placeholder, registrable_domain};
pub use text::{collapse_whitespace, extract_text};

use crate::driver::{error_chain, PrivacyEntry, PrivacyPanel};
use crate::hash::sha256_hex;
use crate::model::GizmoId;
use crate::net::{build_client, HostResolver};

/// Status reported when a redirect chain exceeds `max_redirects`.
pub const TOO_MANY_REDIRECTS: u16 = 310;

const MAX_BODY_BYTES: usize = 8 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BrokenCause {
    Placeholder,
    DnsFailure,
    ClientError(u16),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AuditOutcome {
    Accessible,
    BrokenLink(BrokenCause),
    HomepageOnly,
    Timeout,
    ServerError(u16),
}

/// The five top-level outcome columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Accessible,
    BrokenLink,
    HomepageOnly,
    Timeout,
    ServerError,
}

impl OutcomeKind {
    pub const ALL: [OutcomeKind; 5] = [
        OutcomeKind::Accessible,
        OutcomeKind::BrokenLink,
        OutcomeKind::HomepageOnly,
        OutcomeKind::Timeout,
        OutcomeKind::ServerError,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeKind::Accessible => "accessible",
            OutcomeKind::BrokenLink => "broken_link",
            OutcomeKind::HomepageOnly => "homepage_only",
            OutcomeKind::Timeout => "timeout",
            OutcomeKind::ServerError => "server_error",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl AuditOutcome {
    pub fn kind(self) -> OutcomeKind {
        match self {
            AuditOutcome::Accessible => OutcomeKind::Accessible,
            AuditOutcome::BrokenLink(_) => OutcomeKind::BrokenLink,
            AuditOutcome::HomepageOnly => OutcomeKind::HomepageOnly,
            AuditOutcome::Timeout => OutcomeKind::Timeout,
            AuditOutcome::ServerError(_) => OutcomeKind::ServerError,
        }
    }

    /// Serialized `cause` column: `placeholder`, `dns_failure`, `client_error:NNN`.
    pub fn cause(self) -> Option<String> {
        match self {
            AuditOutcome::BrokenLink(BrokenCause::Placeholder) => Some("placeholder".into()),
            AuditOutcome::BrokenLink(BrokenCause::DnsFailure) => Some("dns_failure".into()),
            AuditOutcome::BrokenLink(BrokenCause::ClientError(s)) => {
                Some(format!("client_error:{s}"))
            }
            _ => None,
        }
    }

    fn from_columns(
        outcome: &str,
        cause: Option<&str>,
        http_status: Option<u16>,
    ) -> Result<Self, String> {
        let kind =
            OutcomeKind::parse(outcome).ok_or_else(|| format!("unknown outcome {outcome:?}"))?;
        Ok(match kind {
            OutcomeKind::Accessible => AuditOutcome::Accessible,
            OutcomeKind::HomepageOnly => AuditOutcome::HomepageOnly,
            OutcomeKind::Timeout => AuditOutcome::Timeout,
            OutcomeKind::ServerError => {
                AuditOutcome::ServerError(http_status.ok_or("server_error without http_status")?)
            }
            OutcomeKind::BrokenLink => AuditOutcome::BrokenLink(match cause {
                Some("placeholder") => BrokenCause::Placeholder,
                Some("dns_failure") => BrokenCause::DnsFailure,
                Some(c) => {
                    let status = c
                        .strip_prefix("client_error:")
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| format!("unknown cause {c:?}"))?;
                    BrokenCause::ClientError(status)
                }
                None => return Err("broken_link without cause".into()),
            }),
        })
    }
}

impl fmt::Display for AuditOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.cause() {
            Some(c) => write!(f, "{}({c})", self.kind().as_str()),
            None => f.write_str(self.kind().as_str()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AuditPolicy {
    /// Budget for one attempt, covering the whole redirect chain.
    pub timeout: Duration,
    pub max_redirects: usize,
    /// Extra attempts granted to links that got no response.
    pub timeout_retries: u32,
    pub parallelism: usize,
    pub per_host: usize,
}

impl Default for AuditPolicy {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(10),
            max_redirects: 10,
            timeout_retries: 1,
            parallelism: 8,
            per_host: 2,
        }
    }
}

/// Audit of one link, before it is attributed to an app.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkAudit {
    pub entry: PrivacyEntry,
    pub outcome: AuditOutcome,
    pub final_url: Option<String>,
    pub http_status: Option<u16>,
    pub content_hash: Option<String>,
    pub fetched_at: DateTime<Utc>,
    pub elapsed: Duration,
    /// Extracted policy text for accessible links.
    pub text: Option<String>,
}

/// One link audit attributed to the app that declared it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "AuditLine", try_from = "AuditLine")]
pub struct AuditRecord {
    pub gizmo_id: GizmoId,
    pub entry: PrivacyEntry,
    pub outcome: AuditOutcome,
    pub final_url: Option<String>,
    pub http_status: Option<u16>,
    pub content_hash: Option<String>,
    pub fetched_at: DateTime<Utc>,
    /// Millisecond resolution.
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AuditLine {
    gizmo_id: GizmoId,
    entry_domain: String,
    policy_url: String,
    outcome: String,
    cause: Option<String>,
    final_url: Option<String>,
    http_status: Option<u16>,
    content_hash: Option<String>,
    fetched_at: DateTime<Utc>,
    elapsed_ms: u64,
}

impl From<AuditRecord> for AuditLine {
    fn from(r: AuditRecord) -> Self {
        AuditLine {
            gizmo_id: r.gizmo_id,
            entry_domain: r.entry.domain,
            policy_url: r.entry.policy_url,
            outcome: r.outcome.kind().as_str().to_owned(),
            cause: r.outcome.cause(),
            final_url: r.final_url,
            http_status: r.http_status,
            content_hash: r.content_hash,
            fetched_at: r.fetched_at,
            elapsed_ms: r.elapsed.as_millis() as u64,
        }
    }
}

impl TryFrom<AuditLine> for AuditRecord {
    type Error = String;

    fn try_from(l: AuditLine) -> Result<Self, Self::Error> {
        let entry = PrivacyEntry::new(&l.entry_domain, &l.policy_url).map_err(|e| e.to_string())?;
        let outcome = AuditOutcome::from_columns(&l.outcome, l.cause.as_deref(), l.http_status)?;
        if outcome.kind() == OutcomeKind::Accessible && l.content_hash.is_none() {
            return Err("accessible record without content_hash".into());
        }
        if outcome.kind() != OutcomeKind::Accessible && l.content_hash.is_some() {
            return Err("content_hash on a non-accessible record".into());
        }
        Ok(AuditRecord {
            gizmo_id: l.gizmo_id,
            entry,
            outcome,
            final_url: l.final_url,
            http_status: l.http_status,
            content_hash: l.content_hash,
            fetched_at: l.fetched_at,
            elapsed: Duration::from_millis(l.elapsed_ms),
        })
    }
}

/// Extracted text of an accessible policy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyDocument {
    pub gizmo_id: GizmoId,
    pub entry: PrivacyEntry,
    pub text: String,
    pub content_hash: String,
    pub fetched_at: DateTime<Utc>,
}

impl PolicyDocument {
    pub fn new(
        gizmo_id: GizmoId,
        entry: PrivacyEntry,
        text: String,
        fetched_at: DateTime<Utc>,
    ) -> Self {
        let content_hash = sha256_hex(text.as_bytes());
        Self {
            gizmo_id,
            entry,
            text,
            content_hash,
            fetched_at,
        }
    }
}

impl LinkAudit {
    /// Attributes the audit to an app; a document is produced for accessible
    /// links with non-empty text.
    pub fn attribute(
        &self,
        gizmo_id: &GizmoId,
        entry: &PrivacyEntry,
    ) -> (AuditRecord, Option<PolicyDocument>) {
        let record = AuditRecord {
            gizmo_id: gizmo_id.clone(),
            entry: entry.clone(),
            outcome: self.outcome,
            final_url: self.final_url.clone(),
            http_status: self.http_status,
            content_hash: self.content_hash.clone(),
            fetched_at: self.fetched_at,
            elapsed: self.elapsed,
        };
        let doc = match (&self.text, &self.content_hash) {
            (Some(text), Some(hash)) if !text.is_empty() => Some(PolicyDocument {
                gizmo_id: gizmo_id.clone(),
                entry: entry.clone(),
                text: text.clone(),
                content_hash: hash.clone(),
                fetched_at: self.fetched_at,
            }),
            _ => None,
        };
        (record, doc)
    }
}

#[derive(Debug, Default)]
pub struct AuditBatch {
    pub records: Vec<AuditRecord>,
    pub documents: Vec<PolicyDocument>,
    /// Network audits performed (distinct policy URLs).
    pub fetched_urls: usize,
}

enum Walk {
    Dns {
        last: Option<(Url, u16)>,
    },
    NoResponse {
        last: Option<(Url, u16)>,
    },
    TooManyRedirects {
        last: (Url, u16),
    },
    BadRedirect {
        last: (Url, u16),
    },
    Response {
        url: Url,
        status: u16,
        content_type: Option<String>,
        body: Vec<u8>,
    },
}

#[derive(Debug, Clone)]
pub struct Auditor {
    client: reqwest::Client,
    resolver: Arc<HostResolver>,
    policy: AuditPolicy,
}

impl Auditor {
    pub fn new(policy: AuditPolicy, resolver: HostResolver) -> reqwest::Result<Self> {
        let resolver = Arc::new(resolver);
        Ok(Self {
            client: build_client(resolver.clone())?,
            resolver,
            policy,
        })
    }

    pub fn policy(&self) -> &AuditPolicy {
        &self.policy
    }

    pub async fn audit_link(&self, entry: &PrivacyEntry) -> LinkAudit {
        let fetched_at = Utc::now();
        let started = Instant::now();
        let declared = entry.url();
        let finish = |outcome,
                      last: Option<(Url, u16)>,
                      hash: Option<String>,
                      text: Option<String>| LinkAudit {
            entry: entry.clone(),
            outcome,
            final_url: last.as_ref().map(|(u, _)| u.to_string()),
            http_status: last.map(|(_, s)| s),
            content_hash: hash,
            fetched_at,
            elapsed: Duration::from_millis(started.elapsed().as_millis() as u64),
            text,
        };

        if is_placeholder(&declared) {
            return finish(
                AuditOutcome::BrokenLink(BrokenCause::Placeholder),
                None,
                None,
                None,
            );
        }

        let mut retries_left = self.policy.timeout_retries;
        let walk = loop {
            match self.walk(declared.clone()).await {
                Walk::NoResponse { .. } if retries_left > 0 => {
                    retries_left -= 1;
                    tracing::debug!(url = %declared, "no response, retrying");
                }
                w => break w,
            }
        };

        match walk {
            Walk::Dns { last } => finish(
                AuditOutcome::BrokenLink(BrokenCause::DnsFailure),
                last,
                None,
                None,
            ),
            Walk::NoResponse { last } => finish(AuditOutcome::Timeout, last, None, None),
            Walk::TooManyRedirects { last } => finish(
                AuditOutcome::BrokenLink(BrokenCause::ClientError(TOO_MANY_REDIRECTS)),
                Some(last),
                None,
                None,
            ),
            Walk::BadRedirect { last } => {
                let status = last.1;
                finish(
                    AuditOutcome::BrokenLink(BrokenCause::ClientError(status)),
                    Some(last),
                    None,
                    None,
                )
            }
            Walk::Response {
                url,
                status,
                content_type,
                body,
            } => {
                let last = Some((url.clone(), status));
                match status {
                    500..=599 => finish(AuditOutcome::ServerError(status), last, None, None),
                    200..=299 if is_homepage_only(&url) => {
                        finish(AuditOutcome::HomepageOnly, last, None, None)
                    }
                    200..=299 => {
                        let (hash, text) = fingerprint(content_type.as_deref(), &body);
                        finish(AuditOutcome::Accessible, last, Some(hash), text)
                    }
                    _ => finish(
                        AuditOutcome::BrokenLink(BrokenCause::ClientError(status)),
                        last,
                        None,
                        None,
                    ),
                }
            }
        }
    }

    /// Follows the redirect chain from `url` within one attempt's time budget.
    async fn walk(&self, mut url: Url) -> Walk {
        let deadline = Instant::now() + self.policy.timeout;
        let mut last: Option<(Url, u16)> = None;
        let mut redirects = 0usize;
        loop {
            let host = url.host_str().unwrap_or_default().to_owned();
            if self.resolver.lookup(&host).await.is_err() {
                return Walk::Dns { last };
            }
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                return Walk::NoResponse { last };
            }
            let resp = match self.client.get(url.clone()).timeout(remaining).send().await {
                Ok(r) => r,
                Err(e) => {
                    tracing::debug!(%url, error = %error_chain(&e), "request failed");
                    return Walk::NoResponse { last };
                }
            };
            let status = resp.status().as_u16();
            last = Some((url.clone(), status));
            if resp.status().is_redirection() {
                let next = resp
                    .headers()
                    .get(reqwest::header::LOCATION)
                    .and_then(|v| v.to_str().ok())
                    .and_then(|loc| url.join(loc).ok())
                    .filter(|u| matches!(u.scheme(), "http" | "https"));
                let Some(next) = next else {
                    return Walk::BadRedirect {
                        last: last.expect("set above"),
                    };
                };
                if redirects >= self.policy.max_redirects {
                    return Walk::TooManyRedirects {
                        last: last.expect("set above"),
                    };
                }
                redirects += 1;
                url = next;
                continue;
            }
            let content_type = resp
                .headers()
                .get(reqwest::header::CONTENT_TYPE)
                .and_then(|v| v.to_str().ok())
                .map(str::to_ascii_lowercase);
            let body = match read_body(resp).await {
                Ok(b) => b,
                Err(e) => {
                    tracing::debug!(%url, error = %error_chain(&e), "body read failed");
                    return Walk::NoResponse { last };
                }
            };
            return Walk::Response {
                url,
                status,
                content_type,
                body,
            };
        }
    }

    /// Audits every entry of every panel. Identical URLs are fetched once;
    /// output is ordered by (gizmo id, declaration order).
    pub async fn audit_corpus(&self, panels: &[PrivacyPanel]) -> AuditBatch {
        let mut ordered: Vec<&PrivacyPanel> = panels.iter().collect();
        ordered.sort_by(|a, b| a.gizmo_id.cmp(&b.gizmo_id));

        let mut unique: BTreeMap<String, PrivacyEntry> = BTreeMap::new();
        for panel in &ordered {
            for entry in &panel.entries {
                unique
                    .entry(entry.policy_url.clone())
                    .or_insert_with(|| entry.clone());
            }
        }

        let global = Arc::new(Semaphore::new(self.policy.parallelism.max(1)));
        let mut per_host: HashMap<String, Arc<Semaphore>> = HashMap::new();
        let mut tasks = tokio::task::JoinSet::new();
        for (url, entry) in unique {
            let host = entry.url().host_str().unwrap_or_default().to_owned();
            let host_gate = per_host
                .entry(host)
                .or_insert_with(|| Arc::new(Semaphore::new(self.policy.per_host.max(1))))
                .clone();
            let global = global.clone();
            let auditor = self.clone();
            tasks.spawn(async move {
                let _host = host_gate.acquire_owned().await.expect("semaphore open");
                let _slot = global.acquire_owned().await.expect("semaphore open");
                (url, auditor.audit_link(&entry).await)
            });
        }

        let mut results: HashMap<String, LinkAudit> = HashMap::new();
        while let Some(joined) = tasks.join_next().await {
            let (url, audit) = joined.expect("audit task panicked");
            results.insert(url, audit);
        }

        let mut batch = AuditBatch {
            fetched_urls: results.len(),
            ..AuditBatch::default()
        };
        for panel in ordered {
            for entry in &panel.entries {
                let audit = &results[&entry.policy_url];
                let (record, doc) = audit.attribute(&panel.gizmo_id, entry);
                batch.records.push(record);
                batch.documents.extend(doc);
            }
        }
        batch
    }
}

async fn read_body(mut resp: reqwest::Response) -> reqwest::Result<Vec<u8>> {
    let mut body = Vec::new();
    while let Some(chunk) = resp.chunk().await? {
        let room = MAX_BODY_BYTES.saturating_sub(body.len());
        body.extend_from_slice(&chunk[..chunk.len().min(room)]);
        if room <= chunk.len() {
            break;
        }
    }
    Ok(body)
}

/// Content hash and, for textual bodies, the extracted text.
fn fingerprint(content_type: Option<&str>, body: &[u8]) -> (String, Option<String>) {
    let mime = content_type
        .and_then(|c| c.split(';').next())
        .map(str::trim)
        .unwrap_or("text/html");
    let text = if mime.contains("html") {
        extract_text(body)
    } else if mime.starts_with("text/") {
        collapse_whitespace(&String::from_utf8_lossy(body))
    } else {
        return (sha256_hex(body), Some(extract_text(b"")));
    };
    (sha256_hex(text.as_bytes()), Some(text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outcome_columns_round_trip() {
        let all = [
            AuditOutcome::Accessible,
            AuditOutcome::BrokenLink(BrokenCause::Placeholder),
            AuditOutcome::BrokenLink(BrokenCause::DnsFailure),
            AuditOutcome::BrokenLink(BrokenCause::ClientError(404)),
            AuditOutcome::BrokenLink(BrokenCause::ClientError(TOO_MANY_REDIRECTS)),
            AuditOutcome::HomepageOnly,
            AuditOutcome::Timeout,
            AuditOutcome::ServerError(503),
        ];
        for o in all {
            let status = match o {
                AuditOutcome::ServerError(s) => Some(s),
                _ => None,
            };
            let back = AuditOutcome::from_columns(o.kind().as_str(), o.cause().as_deref(), status)
                .unwrap();
            assert_eq!(back, o);
        }
        assert!(AuditOutcome::from_columns("broken_link", None, None).is_err());
        assert!(AuditOutcome::from_columns("gone", None, None).is_err());
    }

    #[test]
    fn fingerprint_by_content_type() {
        let (h, t) = fingerprint(Some("text/html; charset=utf-8"), b"<p>a  b</p>");
        assert_eq!(t.as_deref(), Some("a b"));
        assert_eq!(h, sha256_hex(b"a b"));
        let (_, t) = fingerprint(Some("text/plain"), b"x\n\ny <b>");
        assert_eq!(t.as_deref(), Some("x y <b>"));
        let (h, t) = fingerprint(Some("application/pdf"), b"%PDF-1.4");
        assert_eq!(h, sha256_hex(b"%PDF-1.4"));
        assert_eq!(t.as_deref(), Some(""));
    }

    #[tokio::test]
    async fn placeholder_never_touches_network() {
        // strict empty table: any lookup would fail as DNS
        let auditor =
            Auditor::new(AuditPolicy::default(), HostResolver::strict(HashMap::new())).unwrap();
        let entry =
            PrivacyEntry::new("app.test", "https://app.example.com/privacy_policy").unwrap();
        let audit = auditor.audit_link(&entry).await;
        assert_eq!(
            audit.outcome,
            AuditOutcome::BrokenLink(BrokenCause::Placeholder)
        );
        assert_eq!(audit.final_url, None);
        assert_eq!(audit.content_hash, None);
    }

    #[tokio::test]
    async fn unresolvable_host_is_dns_failure() {
        let auditor =
            Auditor::new(AuditPolicy::default(), HostResolver::strict(HashMap::new())).unwrap();
        let entry = PrivacyEntry::new("gone.test", "http://gone.test/privacy").unwrap();
        let audit = auditor.audit_link(&entry).await;
        assert_eq!(
            audit.outcome,
            AuditOutcome::BrokenLink(BrokenCause::DnsFailure)
        );
        assert_eq!(audit.http_status, None);
    }

    #[tokio::test]
    async fn empty_corpus() {
        let auditor = Auditor::new(AuditPolicy::default(), HostResolver::default()).unwrap();
        let batch = auditor.audit_corpus(&[]).await;
        assert!(batch.records.is_empty());
        assert_eq!(batch.fetched_urls, 0);
    }
}
