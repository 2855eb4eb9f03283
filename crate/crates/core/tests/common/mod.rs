#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use gptaudit::audit::{AuditOutcome, AuditPolicy, Auditor};
use gptaudit::driver::{PrivacyEntry, SimulatedDriver};
use gptaudit::fixture::{
    BodyKind, Corpus, FixtureApp, FixtureEntry, FixtureHandle, PolicyBehavior,
};
use gptaudit::model::{ActionDescriptor, GizmoId, GptMetadata};
use gptaudit::pipeline::{crawl, CrawlOutcome};

pub fn gid(s: &str) -> GizmoId {
    GizmoId::parse(s).unwrap()
}

pub fn page_text(host: &str) -> String {
    format!("Privacy Policy for {host}. We keep request logs for seven days and never sell them.")
}

/// Entry at `http://{host}{path}`. Dedicated pages and hangs get a body.
pub fn entry(host: &str, path: &str, behavior: PolicyBehavior) -> FixtureEntry {
    let text = matches!(
        behavior,
        PolicyBehavior::Ok {
            body: BodyKind::DedicatedPolicy
        } | PolicyBehavior::Hang { .. }
    )
    .then(|| page_text(host));
    FixtureEntry {
        domain: host.to_owned(),
        policy_url: format!("http://{host}{path}"),
        behavior,
        policy_text: text,
    }
}

pub fn dedicated() -> PolicyBehavior {
    PolicyBehavior::Ok {
        body: BodyKind::DedicatedPolicy,
    }
}

pub fn app(id: &str, entries: Vec<FixtureEntry>) -> FixtureApp {
    let mut metadata = GptMetadata::new(gid(id), format!("App {id}"), "Be helpful.").unwrap();
    if !entries.is_empty() {
        metadata.actions = Some(
            entries
                .iter()
                .map(|e| ActionDescriptor {
                    domain: e.domain.clone(),
                    privacy_policy: e.policy_url.clone(),
                })
                .collect(),
        );
    }
    FixtureApp { metadata, entries }
}

pub fn fast_policy(timeout: Duration) -> AuditPolicy {
    AuditPolicy {
        timeout,
        ..AuditPolicy::default()
    }
}

pub fn auditor_for(handle: &FixtureHandle, policy: AuditPolicy) -> Auditor {
    Auditor::new(policy, handle.resolver()).unwrap()
}

/// Crawls every app of `corpus` against `handle` with no store rate limit.
pub async fn crawl_fixture(
    corpus: &Corpus,
    handle: &FixtureHandle,
    policy: AuditPolicy,
) -> CrawlOutcome {
    let driver = SimulatedDriver::new(&handle.base_url(), 0.0).unwrap();
    let auditor = auditor_for(handle, policy);
    crawl(
        corpus.metadata().cloned().collect(),
        Arc::new(driver),
        &auditor,
        8,
    )
    .await
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Twelve links covering every outcome and the precedence collisions, with
/// the outcome each must produce under a sub-second timeout. The corpus
/// also carries helper routes that are not audited directly.
pub fn precedence_cases() -> (Corpus, Vec<(FixtureEntry, AuditOutcome)>) {
    use gptaudit::audit::BrokenCause::*;
    use gptaudit::fixture::PLACEHOLDER_URL;
    use AuditOutcome::*;

    let mut placeholder = entry(
        "app.example.com",
        "/privacy_policy",
        PolicyBehavior::Placeholder,
    );
    placeholder.policy_url = PLACEHOLDER_URL.to_owned();
    let redirect = |status: u16, location: &str| PolicyBehavior::Redirect {
        status,
        location: location.to_owned(),
    };
    let cases = vec![
        (placeholder, BrokenLink(Placeholder)),
        // Placeholder wins over the host also being unresolvable.
        (
            entry("api.example.org", "/privacy", PolicyBehavior::DnsFailure),
            BrokenLink(Placeholder),
        ),
        (
            entry("gone.nowhere.test", "/privacy", PolicyBehavior::DnsFailure),
            BrokenLink(DnsFailure),
        ),
        (
            entry(
                "slow.host.test",
                "/privacy",
                PolicyBehavior::Hang { delay_ms: 5_000 },
            ),
            Timeout,
        ),
        (
            entry("down.host.test", "/privacy", PolicyBehavior::ServerError),
            ServerError(500),
        ),
        (
            entry("missing.host.test", "/privacy", PolicyBehavior::NotFound),
            BrokenLink(ClientError(404)),
        ),
        (
            entry("loop.host.test", "/loop", redirect(302, "/loop")),
            BrokenLink(ClientError(310)),
        ),
        // 5xx reached through a redirect is a server error, not a redirect issue.
        (
            entry("moved.host.test", "/privacy", redirect(301, "/down")),
            ServerError(503),
        ),
        (
            entry(
                "home.host.test",
                "/privacy-policy",
                PolicyBehavior::Ok {
                    body: BodyKind::HomepageRedirect,
                },
            ),
            HomepageOnly,
        ),
        // A root path with a query string is not a bare homepage.
        (
            entry("query.host.test", "/?page=privacy", dedicated()),
            Accessible,
        ),
        (entry("good.host.test", "/privacy", dedicated()), Accessible),
        // Redirect status without a Location header.
        (
            entry(
                "bad.host.test",
                "/privacy",
                PolicyBehavior::Status { status: 302 },
            ),
            BrokenLink(ClientError(302)),
        ),
    ];
    let helpers = vec![entry(
        "moved.host.test",
        "/down",
        PolicyBehavior::Status { status: 503 },
    )];
    let mut entries: Vec<FixtureEntry> = cases.iter().map(|(e, _)| e.clone()).collect();
    entries.extend(helpers);
    let corpus = Corpus {
        apps: vec![app("PRECEDENC", entries)],
    };
    (corpus, cases)
}

pub fn privacy_entry(e: &FixtureEntry) -> PrivacyEntry {
    PrivacyEntry::new(&e.domain, &e.policy_url).unwrap()
}

pub mod random {
    use std::time::Duration;

    use chrono::{DateTime, TimeZone, Utc};
    use gptaudit::audit::{AuditOutcome, AuditRecord, BrokenCause, PolicyDocument};
    use gptaudit::driver::{PrivacyEntry, PrivacyPanel};
    use gptaudit::model::{ActionDescriptor, GizmoId, GptMetadata, KnowledgeFile};
    use gptaudit::store::Snapshot;
    use rand::seq::SliceRandom;
    use rand::Rng;

    const DOMAINS: &[&str] = &[
        "a.test",
        "b.test",
        "gpts.webpilot.ai",
        "b12.io",
        "swan-api.jobright.ai",
    ];
    const PATHS: &[&str] = &["/privacy", "/legal"];
    const TEXTS: &[&str] = &[
        "Policy one.",
        "Policy two, revised.",
        "Policy \"three\"\nwith a newline.",
    ];
    const NAMES: &[&str] = &["Writer", "Tutor, \"pro\"", "Ünïcode helper"];

    /// Sixty fixed ids, so two random snapshots overlap heavily.
    pub fn id_pool() -> Vec<GizmoId> {
        (0..60)
            .map(|i| GizmoId::parse(&format!("app{i:06}")).unwrap())
            .collect()
    }

    fn instant(rng: &mut impl Rng) -> DateTime<Utc> {
        Utc.timestamp_millis_opt(rng.gen_range(1_700_000_000_000..1_800_000_000_000))
            .unwrap()
    }

    fn outcome(rng: &mut impl Rng) -> AuditOutcome {
        match rng.gen_range(0..7) {
            0..=2 => AuditOutcome::Accessible,
            3 => AuditOutcome::BrokenLink(
                *[
                    BrokenCause::Placeholder,
                    BrokenCause::DnsFailure,
                    BrokenCause::ClientError(404),
                    BrokenCause::ClientError(310),
                ]
                .choose(rng)
                .unwrap(),
            ),
            4 => AuditOutcome::HomepageOnly,
            5 => AuditOutcome::Timeout,
            _ => AuditOutcome::ServerError(*[500, 502, 503].choose(rng).unwrap()),
        }
    }

    /// A valid snapshot over at most `max_apps` apps from [`id_pool`].
    pub fn snapshot(rng: &mut impl Rng, snapshot_id: &str, max_apps: usize) -> Snapshot {
        let mut s = Snapshot::empty(snapshot_id);
        s.partial = rng.gen_bool(0.2);
        let mut ids = id_pool();
        ids.shuffle(rng);
        ids.truncate(rng.gen_range(0..=max_apps.min(ids.len())));
        ids.sort();
        for id in ids {
            let mut entries = Vec::new();
            for _ in 0..rng.gen_range(0..=3) {
                let domain = DOMAINS.choose(rng).unwrap();
                let url = format!("https://{domain}{}", PATHS.choose(rng).unwrap());
                entries.push(PrivacyEntry::new(domain, &url).unwrap());
            }
            let mut meta =
                GptMetadata::new(id.clone(), *NAMES.choose(rng).unwrap(), "Answer briefly.")
                    .unwrap();
            if rng.gen_bool(0.3) {
                meta.description = Some("Desc".into());
            }
            if rng.gen_bool(0.4) {
                meta.knowledge = Some(vec![KnowledgeFile {
                    name: "notes.pdf".into(),
                    bytes: rng.gen_range(1..10_000),
                }]);
            }
            if !entries.is_empty() || rng.gen_bool(0.1) {
                meta.actions = Some(
                    entries
                        .iter()
                        .map(|e| ActionDescriptor {
                            domain: e.domain.clone(),
                            privacy_policy: e.policy_url.clone(),
                        })
                        .collect(),
                );
            }
            s.apps.push(meta);
            if rng.gen_bool(0.1) {
                continue; // panel never captured
            }
            let panel = PrivacyPanel::new(id.clone(), entries, instant(rng));
            for entry in &panel.entries {
                if rng.gen_bool(0.15) {
                    continue;
                }
                let outcome = outcome(rng);
                let at = instant(rng);
                let (hash, status) = match outcome {
                    AuditOutcome::Accessible => {
                        let doc = PolicyDocument::new(
                            id.clone(),
                            entry.clone(),
                            TEXTS.choose(rng).unwrap().to_string(),
                            at,
                        );
                        let hash = doc.content_hash.clone();
                        s.documents.push(doc);
                        (Some(hash), Some(200))
                    }
                    AuditOutcome::ServerError(code) => (None, Some(code)),
                    AuditOutcome::Timeout => (None, None),
                    _ => (None, rng.gen_bool(0.5).then_some(404)),
                };
                s.audits.push(AuditRecord {
                    gizmo_id: id.clone(),
                    entry: entry.clone(),
                    outcome,
                    final_url: status.map(|_| entry.policy_url.clone()),
                    http_status: status,
                    content_hash: hash,
                    fetched_at: at,
                    elapsed: Duration::from_millis(rng.gen_range(0..20_000)),
                });
            }
            s.panels.push(panel);
        }
        s
    }
}

/// Pairwise comparator built from linear scans over the raw vectors.
pub fn brute_force_diff(
    a: &gptaudit::store::Snapshot,
    b: &gptaudit::store::Snapshot,
) -> std::collections::HashSet<gptaudit::store::ChangeEvent> {
    use gptaudit::audit::AuditOutcome;
    use gptaudit::store::{ChangeEvent, Snapshot};

    fn panel_of<'a>(s: &'a Snapshot, id: &GizmoId) -> Option<&'a gptaudit::driver::PrivacyPanel> {
        s.panels.iter().find(|p| &p.gizmo_id == id)
    }
    fn urls(p: &gptaudit::driver::PrivacyPanel, domain: &str) -> Vec<String> {
        let mut v: Vec<String> = p
            .entries
            .iter()
            .filter(|e| e.domain == domain)
            .map(|e| e.policy_url.clone())
            .collect();
        v.sort();
        v.dedup();
        v
    }
    fn hash(s: &Snapshot, id: &GizmoId, url: &str) -> Option<String> {
        s.audits
            .iter()
            .find(|r| {
                &r.gizmo_id == id
                    && r.entry.policy_url == url
                    && r.outcome == AuditOutcome::Accessible
            })
            .and_then(|r| r.content_hash.clone())
    }

    let mut events = std::collections::HashSet::new();
    for x in &a.apps {
        if !b.apps.iter().any(|y| y.gizmo_id == x.gizmo_id) {
            events.insert(ChangeEvent::AppRemoved {
                gizmo_id: x.gizmo_id.clone(),
                name: x.name.clone(),
            });
        }
    }
    for y in &b.apps {
        let Some(x) = a.apps.iter().find(|x| x.gizmo_id == y.gizmo_id) else {
            events.insert(ChangeEvent::AppAdded {
                gizmo_id: y.gizmo_id.clone(),
                name: y.name.clone(),
            });
            continue;
        };
        let id = &y.gizmo_id;
        if gptaudit::model::classify(x) != gptaudit::model::classify(y) {
            events.insert(ChangeEvent::ClassChanged {
                gizmo_id: id.clone(),
                before: gptaudit::model::classify(x),
                after: gptaudit::model::classify(y),
            });
        }
        let (Some(pa), Some(pb)) = (panel_of(a, id), panel_of(b, id)) else {
            continue;
        };
        let mut domains: Vec<&str> = pa
            .entries
            .iter()
            .chain(&pb.entries)
            .map(|e| e.domain.as_str())
            .collect();
        domains.sort();
        domains.dedup();
        for d in domains {
            let (ua, ub) = (urls(pa, d), urls(pb, d));
            match (ua.is_empty(), ub.is_empty()) {
                (true, false) => {
                    events.insert(ChangeEvent::DomainAdded {
                        gizmo_id: id.clone(),
                        domain: d.to_owned(),
                    });
                }
                (false, true) => {
                    events.insert(ChangeEvent::DomainRemoved {
                        gizmo_id: id.clone(),
                        domain: d.to_owned(),
                    });
                }
                _ => {
                    if ua != ub {
                        events.insert(ChangeEvent::PolicyUrlChanged {
                            gizmo_id: id.clone(),
                            domain: d.to_owned(),
                            before: ua.clone(),
                            after: ub.clone(),
                        });
                    }
                    for u in ua.iter().filter(|u| ub.contains(u)) {
                        if let (Some(h1), Some(h2)) = (hash(a, id, u), hash(b, id, u)) {
                            if h1 != h2 {
                                events.insert(ChangeEvent::PolicyTextChanged {
                                    gizmo_id: id.clone(),
                                    domain: d.to_owned(),
                                    policy_url: u.clone(),
                                    before: h1,
                                    after: h2,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    events
}
