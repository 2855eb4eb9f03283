//! Store drivers: the page-interaction workflow (open an app by id, expand
//! its details, open the privacy-settings panel, read every domain/policy
//! pair) behind one trait.
//!
//! [`SimulatedDriver`] talks to the fixture store over HTTP.
//! [`NativeUiDriver`] is the slot for desktop UI automation and is not
//! implemented on any platform.

mod domain;
mod rate;

use std::collections::HashSet;
use std::future::Future;
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

pub use domain::{is_valid_host, normalize_domain, DomainError};
pub use rate::RateLimiter;

use crate::model::GizmoId;
use crate::net::{build_client, HostResolver};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EntryError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("policy url {0:?} is not an absolute http(s) URL")]
    PolicyUrl(String),
}

/// One (third-party domain, privacy policy URL) pair from a privacy panel.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawEntry")]
pub struct PrivacyEntry {
    pub domain: String,
    /// As declared by the developer; guaranteed to parse as http(s).
    pub policy_url: String,
}

#[derive(Deserialize)]
struct RawEntry {
    domain: String,
    policy_url: String,
}

impl TryFrom<RawEntry> for PrivacyEntry {
    type Error = EntryError;

    fn try_from(raw: RawEntry) -> Result<Self, Self::Error> {
        PrivacyEntry::new(&raw.domain, &raw.policy_url)
    }
}

impl PrivacyEntry {
    pub fn new(domain: &str, policy_url: &str) -> Result<Self, EntryError> {
        let domain = normalize_domain(domain)?;
        let policy_url = policy_url.trim();
        match Url::parse(policy_url) {
            Ok(u) if matches!(u.scheme(), "http" | "https") && u.host_str().is_some() => {}
            _ => return Err(EntryError::PolicyUrl(policy_url.to_owned())),
        }
        Ok(Self {
            domain,
            policy_url: policy_url.to_owned(),
        })
    }

    pub fn url(&self) -> Url {
        Url::parse(&self.policy_url).expect("validated at construction")
    }
}

/// Contents of one app's privacy-settings panel. An empty entry list means
/// the app has no panel (no actions).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivacyPanel {
    pub gizmo_id: GizmoId,
    pub entries: Vec<PrivacyEntry>,
    pub retrieved_at: DateTime<Utc>,
}

impl PrivacyPanel {
    /// Drops repeated (domain, policy_url) pairs, keeping the first.
    pub fn new(gizmo_id: GizmoId, entries: Vec<PrivacyEntry>, retrieved_at: DateTime<Utc>) -> Self {
        let mut seen = HashSet::new();
        let entries = entries
            .into_iter()
            .filter(|e| seen.insert(e.clone()))
            .collect();
        Self {
            gizmo_id,
            entries,
            retrieved_at,
        }
    }

    pub fn distinct_domains(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.entries
            .iter()
            .map(|e| e.domain.as_str())
            .filter(|d| seen.insert(*d))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DriverError {
    #[error("app not found in store")]
    AppNotFound,
    #[error("privacy panel unavailable")]
    PanelUnavailable,
    #[error("transport failure: {0}")]
    TransportFailure(String),
    #[error("rate limited by store")]
    RateLimited,
}

/// Backoff ladder; one retry per rung.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub backoff: Vec<Duration>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            backoff: vec![
                Duration::from_millis(250),
                Duration::from_millis(500),
                Duration::from_millis(1000),
            ],
        }
    }
}

pub const DEFAULT_RATE_LIMIT: f64 = 2.0;

pub trait StoreDriver: Send + Sync {
    fn fetch_privacy_panel(
        &self,
        id: &GizmoId,
    ) -> impl Future<Output = Result<PrivacyPanel, DriverError>> + Send;
}

/// Wire format of `GET {base}/g/g-{id}/privacy`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelPayload {
    pub gizmo_id: String,
    pub entries: Vec<PayloadEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayloadEntry {
    pub domain: String,
    pub privacy_policy: String,
}

pub struct SimulatedDriver {
    base: String,
    client: reqwest::Client,
    limiter: Arc<RateLimiter>,
    retry: RetryPolicy,
}

impl SimulatedDriver {
    pub fn new(base: &str, requests_per_second: f64) -> reqwest::Result<Self> {
        Ok(Self {
            base: base.trim_end_matches('/').to_owned(),
            client: build_client(Arc::new(HostResolver::System))?,
            limiter: Arc::new(RateLimiter::per_second(requests_per_second)),
            retry: RetryPolicy::default(),
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn panel_url(&self, id: &GizmoId) -> String {
        format!("{}/privacy", crate::model::build_access_url(&self.base, id))
    }

    async fn attempt(&self, url: &str) -> Attempt {
        self.limiter.acquire().await;
        let resp = match self.client.get(url).send().await {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(DriverError::TransportFailure(error_chain(&e))),
        };
        let status = resp.status();
        if status == reqwest::StatusCode::NOT_FOUND {
            return Attempt::Done(Err(DriverError::AppNotFound));
        }
        if status == reqwest::StatusCode::TOO_MANY_REQUESTS {
            return Attempt::Retry(DriverError::RateLimited);
        }
        if status.is_server_error() {
            return Attempt::Retry(DriverError::TransportFailure(format!(
                "store returned {status}"
            )));
        }
        if !status.is_success() {
            tracing::debug!(%url, %status, "panel refused");
            return Attempt::Done(Err(DriverError::PanelUnavailable));
        }
        match resp.json::<PanelPayload>().await {
            Ok(p) => Attempt::Done(Ok(p)),
            Err(e) if e.is_decode() => Attempt::Done(Err(DriverError::TransportFailure(format!(
                "malformed panel payload: {e}"
            )))),
            Err(e) => Attempt::Retry(DriverError::TransportFailure(error_chain(&e))),
        }
    }
}

enum Attempt {
    Done(Result<PanelPayload, DriverError>),
    Retry(DriverError),
}

impl StoreDriver for SimulatedDriver {
    async fn fetch_privacy_panel(&self, id: &GizmoId) -> Result<PrivacyPanel, DriverError> {
        let url = self.panel_url(id);
        let mut rungs = self.retry.backoff.iter();
        let payload = loop {
            match self.attempt(&url).await {
                Attempt::Done(result) => break result?,
                Attempt::Retry(err) => match rungs.next() {
                    Some(delay) => {
                        tracing::debug!(%id, error = %err, ?delay, "retrying panel fetch");
                        tokio::time::sleep(*delay).await;
                    }
                    None => return Err(err),
                },
            }
        };
        if payload.gizmo_id != id.as_str() {
            return Err(DriverError::TransportFailure(format!(
                "panel for {} answered with id {}",
                id, payload.gizmo_id
            )));
        }
        Ok(panel_from_payload(id.clone(), payload, Utc::now()))
    }
}

/// Normalizes a wire payload into a panel. Entries whose domain or URL
/// cannot be normalized are dropped with a warning.
pub fn panel_from_payload(
    id: GizmoId,
    payload: PanelPayload,
    retrieved_at: DateTime<Utc>,
) -> PrivacyPanel {
    let entries = payload
        .entries
        .into_iter()
        .filter_map(|e| match PrivacyEntry::new(&e.domain, &e.privacy_policy) {
            Ok(entry) => Some(entry),
            Err(err) => {
                tracing::warn!(%id, domain = %e.domain, error = %err, "dropping panel entry");
                None
            }
        })
        .collect();
    PrivacyPanel::new(id, entries, retrieved_at)
}

pub(crate) fn error_chain(err: &dyn std::error::Error) -> String {
    let mut out = err.to_string();
    let mut source = err.source();
    while let Some(s) = source {
        out.push_str(": ");
        out.push_str(&s.to_string());
        source = s.source();
    }
    out
}

/// Placeholder for desktop UI automation. Always fails.
#[derive(Debug, Default)]
pub struct NativeUiDriver;

pub const NATIVE_UNSUPPORTED: &str = "native UI driver is not implemented on this platform";

impl StoreDriver for NativeUiDriver {
    async fn fetch_privacy_panel(&self, _id: &GizmoId) -> Result<PrivacyPanel, DriverError> {
        Err(DriverError::TransportFailure(NATIVE_UNSUPPORTED.to_owned()))
    }
}
