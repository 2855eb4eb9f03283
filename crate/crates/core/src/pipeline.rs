//! Crawl orchestration: panels through a driver, then link audits, then one
//! snapshot.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use chrono::Utc;
use tokio::sync::Semaphore;
use tokio::task::JoinSet;
use url::Url;

use crate::audit::{AuditPolicy, Auditor};
use crate::driver::{DriverError, StoreDriver};
use crate::fixture::HOSTS_PATH;
use crate::model::{GizmoId, GptMetadata};
use crate::net::HostResolver;
use crate::store::{new_snapshot_id, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriverKind {
    Simulated,
    NativeStub,
}

impl std::str::FromStr for DriverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "simulated" => Ok(DriverKind::Simulated),
            "native-stub" | "native" => Ok(DriverKind::NativeStub),
            other => Err(format!(
                "unknown driver {other:?} (expected simulated or native-stub)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub base_url: Url,
    pub driver: DriverKind,
    pub audit: AuditPolicy,
    pub snapshot_root: PathBuf,
    /// Concurrent panel fetches.
    pub parallelism: usize,
    pub rate_limit: f64,
    /// Resolve policy hosts through the fixture's host table instead of DNS.
    pub fixture_dns: bool,
}

impl RunConfig {
    pub fn new(base_url: &str, snapshot_root: impl Into<PathBuf>) -> Result<Self, String> {
        let base_url = Url::parse(base_url).map_err(|e| format!("base url {base_url:?}: {e}"))?;
        if base_url.cannot_be_a_base() {
            return Err(format!("base url {base_url} is not absolute"));
        }
        Ok(Self {
            base_url,
            driver: DriverKind::Simulated,
            audit: AuditPolicy::default(),
            snapshot_root: snapshot_root.into(),
            parallelism: 8,
            rate_limit: crate::driver::DEFAULT_RATE_LIMIT,
            fixture_dns: false,
        })
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.parallelism == 0 || self.audit.parallelism == 0 || self.audit.per_host == 0 {
            return Err("parallelism must be at least 1".into());
        }
        if self.rate_limit.is_nan() || self.rate_limit < 0.0 {
            return Err("rate limit must be non-negative".into());
        }
        Ok(())
    }

    pub fn base(&self) -> &str {
        self.base_url.as_str().trim_end_matches('/')
    }
}

/// Builds the resolver used for policy links. With `fixture_dns` the store is
/// asked for its host list and every listed name maps to the store address.
pub async fn policy_resolver(config: &RunConfig) -> Result<HostResolver, String> {
    if !config.fixture_dns {
        return Ok(HostResolver::System);
    }
    let url = format!("{}{HOSTS_PATH}", config.base());
    let hosts: Vec<String> = reqwest::get(&url)
        .await
        .and_then(|r| r.error_for_status())
        .map_err(|e| format!("fetching fixture hosts from {url}: {e}"))?
        .json()
        .await
        .map_err(|e| format!("decoding fixture hosts: {e}"))?;
    let host = config.base_url.host_str().ok_or("base url has no host")?;
    let port = config
        .base_url
        .port_or_known_default()
        .ok_or("base url has no port")?;
    let addr: SocketAddr = HostResolver::System
        .lookup(host)
        .await
        .map_err(|e| format!("resolving {host}: {e}"))?
        .into_iter()
        .next()
        .map(|a| SocketAddr::new(a.ip(), port))
        .ok_or_else(|| format!("{host} resolved to nothing"))?;
    Ok(HostResolver::strict(
        hosts.into_iter().map(|h| (h, addr)).collect(),
    ))
}

#[derive(Debug)]
pub struct CrawlOutcome {
    pub snapshot: Snapshot,
    pub failures: Vec<(GizmoId, DriverError)>,
}

impl CrawlOutcome {
    /// A transport failure survived the retry ladder.
    pub fn transport_failed(&self) -> bool {
        self.failures
            .iter()
            .any(|(_, e)| matches!(e, DriverError::TransportFailure(_)))
    }
}

/// Fetches a panel for every app, audits every entry and assembles the
/// snapshot. Driver failures mark the snapshot partial; the app stays in the
/// snapshot without a panel.
pub async fn crawl<D: StoreDriver + 'static>(
    apps: Vec<GptMetadata>,
    driver: Arc<D>,
    auditor: &Auditor,
    parallelism: usize,
) -> CrawlOutcome {
    let gate = Arc::new(Semaphore::new(parallelism.max(1)));
    let mut tasks = JoinSet::new();
    for (idx, app) in apps.iter().enumerate() {
        let id = app.gizmo_id.clone();
        let driver = driver.clone();
        let gate = gate.clone();
        tasks.spawn(async move {
            let _permit = gate.acquire_owned().await.expect("gate closed");
            (idx, id.clone(), driver.fetch_privacy_panel(&id).await)
        });
    }
    let mut results = Vec::with_capacity(apps.len());
    while let Some(joined) = tasks.join_next().await {
        results.push(joined.expect("panel task panicked"));
    }
    results.sort_by_key(|(idx, _, _)| *idx);

    let mut panels = Vec::new();
    let mut failures = Vec::new();
    for (_, id, result) in results {
        match result {
            Ok(panel) => panels.push(panel),
            Err(err) => {
                tracing::warn!(app = %id, error = %err, "panel fetch failed");
                failures.push((id, err));
            }
        }
    }

    let batch = auditor.audit_corpus(&panels).await;
    let snapshot = Snapshot {
        snapshot_id: new_snapshot_id(Utc::now()),
        partial: !failures.is_empty(),
        apps,
        panels,
        audits: batch.records,
        documents: batch.documents,
    };
    CrawlOutcome { snapshot, failures }
}

/// Re-audits the panels of an existing snapshot into a fresh one.
pub async fn reaudit(source: &Snapshot, auditor: &Auditor) -> Snapshot {
    let batch = auditor.audit_corpus(&source.panels).await;
    Snapshot {
        snapshot_id: new_snapshot_id(Utc::now()),
        partial: source.partial,
        apps: source.apps.clone(),
        panels: source.panels.clone(),
        audits: batch.records,
        documents: batch.documents,
    }
}

/// Replaces timestamp-like fields of a JSON Lines audit dump with a fixed
/// token, so two runs can be compared byte for byte.
pub fn mask_volatile(jsonl: &str) -> String {
    const VOLATILE: [&str; 3] = ["fetched_at", "elapsed_ms", "retrieved_at"];
    let mut out = String::with_capacity(jsonl.len());
    for line in jsonl.lines() {
        let masked = match serde_json::from_str::<serde_json::Value>(line) {
            Ok(mut v) => {
                if let Some(obj) = v.as_object_mut() {
                    for key in VOLATILE {
                        if let Some(slot) = obj.get_mut(key) {
                            *slot = serde_json::Value::String("*".into());
                        }
                    }
                }
                v.to_string()
            }
            Err(_) => line.to_owned(),
        };
        out.push_str(&masked);
        out.push('\n');
    }
    out
}
