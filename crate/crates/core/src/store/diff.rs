//! Change detection between two snapshots.
//!
//! Per app: an app present on one side only yields a single `AppAdded` /
//! `AppRemoved`. For apps on both sides the declared domain sets are
//! compared, then the URL set of every shared domain, then the content hash
//! of every shared URL that was accessible on both sides. Audit outcome
//! changes alone (say accessible to timeout) are not events. Apps whose panel
//! is missing on either side (a partial capture) get no domain-level events.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::Snapshot;
use crate::audit::OutcomeKind;
use crate::model::{GizmoId, GptClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeKind {
    DomainAdded,
    DomainRemoved,
    PolicyUrlChanged,
    PolicyTextChanged,
    AppAdded,
    AppRemoved,
    ClassChanged,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChangeEvent {
    DomainAdded {
        gizmo_id: GizmoId,
        domain: String,
    },
    DomainRemoved {
        gizmo_id: GizmoId,
        domain: String,
    },
    PolicyUrlChanged {
        gizmo_id: GizmoId,
        domain: String,
        before: Vec<String>,
        after: Vec<String>,
    },
    PolicyTextChanged {
        gizmo_id: GizmoId,
        domain: String,
        policy_url: String,
        before: String,
        after: String,
    },
    AppAdded {
        gizmo_id: GizmoId,
        name: String,
    },
    AppRemoved {
        gizmo_id: GizmoId,
        name: String,
    },
    ClassChanged {
        gizmo_id: GizmoId,
        before: GptClass,
        after: GptClass,
    },
}

impl ChangeEvent {
    pub fn kind(&self) -> ChangeKind {
        match self {
            ChangeEvent::DomainAdded { .. } => ChangeKind::DomainAdded,
            ChangeEvent::DomainRemoved { .. } => ChangeKind::DomainRemoved,
            ChangeEvent::PolicyUrlChanged { .. } => ChangeKind::PolicyUrlChanged,
            ChangeEvent::PolicyTextChanged { .. } => ChangeKind::PolicyTextChanged,
            ChangeEvent::AppAdded { .. } => ChangeKind::AppAdded,
            ChangeEvent::AppRemoved { .. } => ChangeKind::AppRemoved,
            ChangeEvent::ClassChanged { .. } => ChangeKind::ClassChanged,
        }
    }

    pub fn gizmo_id(&self) -> &GizmoId {
        match self {
            ChangeEvent::DomainAdded { gizmo_id, .. }
            | ChangeEvent::DomainRemoved { gizmo_id, .. }
            | ChangeEvent::PolicyUrlChanged { gizmo_id, .. }
            | ChangeEvent::PolicyTextChanged { gizmo_id, .. }
            | ChangeEvent::AppAdded { gizmo_id, .. }
            | ChangeEvent::AppRemoved { gizmo_id, .. }
            | ChangeEvent::ClassChanged { gizmo_id, .. } => gizmo_id,
        }
    }

    fn detail_key(&self) -> (&str, &str) {
        match self {
            ChangeEvent::DomainAdded { domain, .. }
            | ChangeEvent::DomainRemoved { domain, .. }
            | ChangeEvent::PolicyUrlChanged { domain, .. } => (domain, ""),
            ChangeEvent::PolicyTextChanged {
                domain, policy_url, ..
            } => (domain, policy_url),
            _ => ("", ""),
        }
    }

    /// The event seen from the other direction (`diff(b, a)`).
    pub fn reversed(&self) -> ChangeEvent {
        match self.clone() {
            ChangeEvent::DomainAdded { gizmo_id, domain } => {
                ChangeEvent::DomainRemoved { gizmo_id, domain }
            }
            ChangeEvent::DomainRemoved { gizmo_id, domain } => {
                ChangeEvent::DomainAdded { gizmo_id, domain }
            }
            ChangeEvent::PolicyUrlChanged {
                gizmo_id,
                domain,
                before,
                after,
            } => ChangeEvent::PolicyUrlChanged {
                gizmo_id,
                domain,
                before: after,
                after: before,
            },
            ChangeEvent::PolicyTextChanged {
                gizmo_id,
                domain,
                policy_url,
                before,
                after,
            } => ChangeEvent::PolicyTextChanged {
                gizmo_id,
                domain,
                policy_url,
                before: after,
                after: before,
            },
            ChangeEvent::AppAdded { gizmo_id, name } => ChangeEvent::AppRemoved { gizmo_id, name },
            ChangeEvent::AppRemoved { gizmo_id, name } => ChangeEvent::AppAdded { gizmo_id, name },
            ChangeEvent::ClassChanged {
                gizmo_id,
                before,
                after,
            } => ChangeEvent::ClassChanged {
                gizmo_id,
                before: after,
                after: before,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotDiff {
    pub from_id: String,
    pub to_id: String,
    pub events: Vec<ChangeEvent>,
}

impl SnapshotDiff {
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Domain → declared URLs for one app's panel.
type DomainUrls<'a> = BTreeMap<&'a str, BTreeSet<&'a str>>;

struct Side<'a> {
    apps: BTreeMap<&'a GizmoId, &'a crate::model::GptMetadata>,
    panels: HashMap<&'a GizmoId, DomainUrls<'a>>,
    hashes: HashMap<(&'a GizmoId, &'a str), &'a str>,
}

impl<'a> Side<'a> {
    fn new(s: &'a Snapshot) -> Self {
        let apps = s.apps.iter().map(|a| (&a.gizmo_id, a)).collect();
        let mut panels: HashMap<&GizmoId, DomainUrls> = HashMap::new();
        for p in &s.panels {
            let map = panels.entry(&p.gizmo_id).or_default();
            for e in &p.entries {
                map.entry(e.domain.as_str())
                    .or_default()
                    .insert(e.policy_url.as_str());
            }
        }
        let hashes = s
            .audits
            .iter()
            .filter(|r| r.outcome.kind() == OutcomeKind::Accessible)
            .filter_map(|r| {
                r.content_hash
                    .as_deref()
                    .map(|h| ((&r.gizmo_id, r.entry.policy_url.as_str()), h))
            })
            .collect();
        Self {
            apps,
            panels,
            hashes,
        }
    }
}

pub fn diff_snapshots(a: &Snapshot, b: &Snapshot) -> SnapshotDiff {
    let from = Side::new(a);
    let to = Side::new(b);
    let ids: BTreeSet<&GizmoId> = from.apps.keys().chain(to.apps.keys()).copied().collect();
    let mut events = Vec::new();

    for id in ids {
        let (before, after) = match (from.apps.get(id), to.apps.get(id)) {
            (None, Some(m)) => {
                events.push(ChangeEvent::AppAdded {
                    gizmo_id: id.clone(),
                    name: m.name.clone(),
                });
                continue;
            }
            (Some(m), None) => {
                events.push(ChangeEvent::AppRemoved {
                    gizmo_id: id.clone(),
                    name: m.name.clone(),
                });
                continue;
            }
            (Some(x), Some(y)) => (x, y),
            (None, None) => unreachable!("id drawn from the union"),
        };

        if before.class() != after.class() {
            events.push(ChangeEvent::ClassChanged {
                gizmo_id: id.clone(),
                before: before.class(),
                after: after.class(),
            });
        }

        let (Some(old), Some(new)) = (from.panels.get(id), to.panels.get(id)) else {
            continue;
        };
        for domain in new.keys().filter(|d| !old.contains_key(*d)) {
            events.push(ChangeEvent::DomainAdded {
                gizmo_id: id.clone(),
                domain: (*domain).to_owned(),
            });
        }
        for domain in old.keys().filter(|d| !new.contains_key(*d)) {
            events.push(ChangeEvent::DomainRemoved {
                gizmo_id: id.clone(),
                domain: (*domain).to_owned(),
            });
        }
        for (domain, old_urls) in old {
            let Some(new_urls) = new.get(domain) else {
                continue;
            };
            if old_urls != new_urls {
                events.push(ChangeEvent::PolicyUrlChanged {
                    gizmo_id: id.clone(),
                    domain: (*domain).to_owned(),
                    before: old_urls.iter().map(|u| (*u).to_owned()).collect(),
                    after: new_urls.iter().map(|u| (*u).to_owned()).collect(),
                });
            }
            for url in old_urls.intersection(new_urls) {
                let (Some(h1), Some(h2)) =
                    (from.hashes.get(&(id, *url)), to.hashes.get(&(id, *url)))
                else {
                    continue;
                };
                if h1 != h2 {
                    events.push(ChangeEvent::PolicyTextChanged {
                        gizmo_id: id.clone(),
                        domain: (*domain).to_owned(),
                        policy_url: (*url).to_owned(),
                        before: (*h1).to_owned(),
                        after: (*h2).to_owned(),
                    });
                }
            }
        }
    }

    sort_events(&mut events);
    SnapshotDiff {
        from_id: a.snapshot_id.clone(),
        to_id: b.snapshot_id.clone(),
        events,
    }
}

/// Orders events by gizmo id, then kind, then domain and URL.
pub fn sort_events(events: &mut [ChangeEvent]) {
    events.sort_by(|x, y| {
        (x.gizmo_id(), x.kind(), x.detail_key()).cmp(&(y.gizmo_id(), y.kind(), y.detail_key()))
    });
}
