//! Deterministic stand-in for the app store and every third-party policy host.
//!
//! [`generate_corpus`] synthesizes a population from a [`CorpusConfig`] and a
//! seed; [`serve`] exposes it on one loopback listener. Store requests are
//! answered on any host; policy hosts are selected by the `Host` header, so
//! clients point every fixture host name at the listener address (see
//! [`FixtureHandle::resolver`]).

mod server;
mod words;

use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use server::{serve, FixtureHandle, HOSTS_PATH};

use crate::model::{ActionDescriptor, GizmoId, GptMetadata, KnowledgeFile, RawMetadata};

/// Declared URL of every placeholder entry; its host is never served.
pub const PLACEHOLDER_URL: &str = "https://app.example.com/privacy_policy";

pub const DEFAULT_HANG_MS: u64 = 15_000;

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("inconsistent corpus config: {0}")]
    InconsistentConfig(String),
    #[error("cannot bind fixture listener: {0}")]
    BindFailure(#[source] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyKind {
    DedicatedPolicy,
    HomepageRedirect,
}

/// How a policy URL answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PolicyBehavior {
    Ok {
        body: BodyKind,
    },
    NotFound,
    ServerError,
    /// Holds the request for `delay_ms` before answering.
    Hang {
        delay_ms: u64,
    },
    Placeholder,
    /// Host is never registered with the fixture resolver.
    DnsFailure,
    /// Redirect to `location` (absolute or relative).
    Redirect {
        status: u16,
        location: String,
    },
    /// Bare status with a short body and no `Location`.
    Status {
        status: u16,
    },
}

impl PolicyBehavior {
    pub fn kind(&self) -> Option<BehaviorKind> {
        Some(match self {
            PolicyBehavior::Ok {
                body: BodyKind::DedicatedPolicy,
            } => BehaviorKind::DedicatedPolicy,
            PolicyBehavior::Ok {
                body: BodyKind::HomepageRedirect,
            } => BehaviorKind::HomepageRedirect,
            PolicyBehavior::NotFound => BehaviorKind::NotFound,
            PolicyBehavior::ServerError => BehaviorKind::ServerError,
            PolicyBehavior::Hang { .. } => BehaviorKind::Hang,
            PolicyBehavior::Placeholder => BehaviorKind::Placeholder,
            PolicyBehavior::DnsFailure => BehaviorKind::DnsFailure,
            PolicyBehavior::Redirect { .. } | PolicyBehavior::Status { .. } => return None,
        })
    }
}

/// Behavior classes counted by a [`CorpusConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorKind {
    DedicatedPolicy,
    HomepageRedirect,
    NotFound,
    ServerError,
    Hang,
    Placeholder,
    DnsFailure,
}

impl BehaviorKind {
    fn behavior(self, hang_ms: u64) -> PolicyBehavior {
        match self {
            BehaviorKind::DedicatedPolicy => PolicyBehavior::Ok {
                body: BodyKind::DedicatedPolicy,
            },
            BehaviorKind::HomepageRedirect => PolicyBehavior::Ok {
                body: BodyKind::HomepageRedirect,
            },
            BehaviorKind::NotFound => PolicyBehavior::NotFound,
            BehaviorKind::ServerError => PolicyBehavior::ServerError,
            BehaviorKind::Hang => PolicyBehavior::Hang { delay_ms: hang_ms },
            BehaviorKind::Placeholder => PolicyBehavior::Placeholder,
            BehaviorKind::DnsFailure => PolicyBehavior::DnsFailure,
        }
    }
}

fn default_hang_ms() -> u64 {
    DEFAULT_HANG_MS
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub total_apps: usize,
    pub zero_domain_apps: usize,
    pub one_domain_apps: usize,
    pub multi_domain_apps: usize,
    pub multi_domain_total_entries: usize,
    pub behavior_counts: BTreeMap<BehaviorKind, usize>,
    pub seed: u64,
    #[serde(default = "default_hang_ms")]
    pub hang_delay_ms: u64,
}

impl CorpusConfig {
    /// The measured population: 500 apps in 409/79/12 domain buckets and a
    /// 92/9/5/2/2 accessibility split (one placeholder among the 9 broken).
    pub fn replica(seed: u64) -> Self {
        Self {
            total_apps: 500,
            zero_domain_apps: 409,
            one_domain_apps: 79,
            multi_domain_apps: 12,
            multi_domain_total_entries: 31,
            behavior_counts: BTreeMap::from([
                (BehaviorKind::DedicatedPolicy, 92),
                (BehaviorKind::Placeholder, 1),
                (BehaviorKind::NotFound, 8),
                (BehaviorKind::HomepageRedirect, 5),
                (BehaviorKind::Hang, 2),
                (BehaviorKind::ServerError, 2),
            ]),
            seed,
            hang_delay_ms: DEFAULT_HANG_MS,
        }
    }

    pub fn entry_count(&self) -> usize {
        self.one_domain_apps + self.multi_domain_total_entries
    }

    pub fn validate(&self) -> Result<(), FixtureError> {
        let bad = |msg: String| Err(FixtureError::InconsistentConfig(msg));
        let buckets = self.zero_domain_apps + self.one_domain_apps + self.multi_domain_apps;
        if buckets != self.total_apps {
            return bad(format!(
                "zero_domain_apps + one_domain_apps + multi_domain_apps = {buckets} != total_apps = {}",
                self.total_apps
            ));
        }
        if self.multi_domain_total_entries < 2 * self.multi_domain_apps {
            return bad(format!(
                "multi_domain_total_entries = {} < 2 x multi_domain_apps = {}",
                self.multi_domain_total_entries,
                2 * self.multi_domain_apps
            ));
        }
        if self.multi_domain_apps == 0 && self.multi_domain_total_entries > 0 {
            return bad(format!(
                "multi_domain_total_entries = {} with multi_domain_apps = 0",
                self.multi_domain_total_entries
            ));
        }
        let behaviors: usize = self.behavior_counts.values().sum();
        if behaviors != self.entry_count() {
            return bad(format!(
                "sum of behavior_counts = {behaviors} != one_domain_apps + multi_domain_total_entries = {}",
                self.entry_count()
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureEntry {
    /// As it appears in the store panel (not necessarily normalized).
    pub domain: String,
    pub policy_url: String,
    pub behavior: PolicyBehavior,
    /// Visible text of a dedicated policy page.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureApp {
    pub metadata: GptMetadata,
    pub entries: Vec<FixtureEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Corpus {
    pub apps: Vec<FixtureApp>,
}

impl Corpus {
    pub fn entry_count(&self) -> usize {
        self.apps.iter().map(|a| a.entries.len()).sum()
    }

    pub fn metadata(&self) -> impl Iterator<Item = &GptMetadata> {
        self.apps.iter().map(|a| &a.metadata)
    }

    pub fn app(&self, id: &GizmoId) -> Option<&FixtureApp> {
        self.apps.iter().find(|a| &a.metadata.gizmo_id == id)
    }

    pub fn entries(&self) -> impl Iterator<Item = &FixtureEntry> {
        self.apps.iter().flat_map(|a| a.entries.iter())
    }

    /// Metadata as JSON Lines, one app per line.
    pub fn metadata_jsonl(&self) -> String {
        let mut out = String::new();
        for meta in self.metadata() {
            out.push_str(&serde_json::to_string(meta).expect("metadata serializes"));
            out.push('\n');
        }
        out
    }

    /// Count of entries per behavior class.
    pub fn behavior_histogram(&self) -> BTreeMap<BehaviorKind, usize> {
        let mut hist = BTreeMap::new();
        for kind in self.entries().filter_map(|e| e.behavior.kind()) {
            *hist.entry(kind).or_default() += 1;
        }
        hist
    }
}

impl fmt::Display for Corpus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} apps, {} policy entries",
            self.apps.len(),
            self.entry_count()
        )
    }
}

/// Deterministic in (config, seed).
pub fn generate_corpus(config: &CorpusConfig) -> Result<Corpus, FixtureError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut ids = Vec::with_capacity(config.total_apps);
    let mut seen = std::collections::HashSet::new();
    while ids.len() < config.total_apps {
        let raw: String = (0..crate::model::GIZMO_ID_LEN)
            .map(|_| *words::ALNUM.choose(&mut rng).expect("non-empty") as char)
            .collect();
        if seen.insert(raw.clone()) {
            ids.push(GizmoId::parse(&raw).expect("generated ids are valid"));
        }
    }

    let mut domain_counts = Vec::with_capacity(config.total_apps);
    domain_counts.extend(std::iter::repeat_n(0usize, config.zero_domain_apps));
    domain_counts.extend(std::iter::repeat_n(1usize, config.one_domain_apps));
    let mut multi = vec![2usize; config.multi_domain_apps];
    for _ in 0..config.multi_domain_total_entries - 2 * config.multi_domain_apps {
        let i = rng.gen_range(0..multi.len());
        multi[i] += 1;
    }
    domain_counts.extend(multi);
    domain_counts.shuffle(&mut rng);

    let mut behaviors: Vec<BehaviorKind> = config
        .behavior_counts
        .iter()
        .flat_map(|(kind, n)| std::iter::repeat_n(*kind, *n))
        .collect();
    behaviors.shuffle(&mut rng);
    let mut behaviors = behaviors.into_iter();

    let mut domains = words::DomainPool::default();
    let mut apps = Vec::with_capacity(config.total_apps);
    for (id, count) in ids.into_iter().zip(domain_counts) {
        let entries: Vec<FixtureEntry> = (0..count)
            .map(|_| {
                let kind = behaviors.next().expect("behavior count validated");
                let domain = domains.next(&mut rng);
                make_entry(&mut rng, domain, kind.behavior(config.hang_delay_ms))
            })
            .collect();
        let metadata = make_metadata(&mut rng, id, &entries);
        apps.push(FixtureApp { metadata, entries });
    }
    Ok(Corpus { apps })
}

/// Builds an entry with the conventional URL shape for its behavior.
pub fn make_entry(rng: &mut impl Rng, domain: String, behavior: PolicyBehavior) -> FixtureEntry {
    let policy_url = match behavior {
        PolicyBehavior::Placeholder => PLACEHOLDER_URL.to_owned(),
        PolicyBehavior::Ok {
            body: BodyKind::HomepageRedirect,
        } => format!("http://{domain}/privacy-policy"),
        _ => format!("http://{domain}/privacy"),
    };
    let policy_text = matches!(
        behavior,
        PolicyBehavior::Ok {
            body: BodyKind::DedicatedPolicy
        } | PolicyBehavior::Hang { .. }
    )
    .then(|| words::policy_text(rng, &domain));
    FixtureEntry {
        domain,
        policy_url,
        behavior,
        policy_text,
    }
}

fn make_metadata(rng: &mut impl Rng, id: GizmoId, entries: &[FixtureEntry]) -> GptMetadata {
    let name = format!(
        "{} {}",
        words::ADJECTIVES.choose(rng).expect("non-empty"),
        words::NOUNS.choose(rng).expect("non-empty")
    );
    let instructions = format!(
        "You are a {} assistant. Answer concisely and stay on topic.",
        words::NOUNS.choose(rng).expect("non-empty").to_lowercase()
    );
    let description = rng.gen_bool(0.7).then(|| {
        format!(
            "Helps with {}.",
            words::NOUNS.choose(rng).expect("non-empty").to_lowercase()
        )
    });
    let conversation = rng.gen_bool(0.6).then(|| {
        (0..rng.gen_range(1..=4))
            .map(|i| format!("Starter prompt {}", i + 1))
            .collect()
    });
    let capabilities = rng.gen_bool(0.5).then(|| {
        words::CAPABILITIES
            .iter()
            .filter(|_| rng.gen_bool(0.5))
            .map(|c| (*c).to_owned())
            .collect()
    });
    let knowledge_p = if entries.is_empty() { 0.3 } else { 0.25 };
    let knowledge = rng.gen_bool(knowledge_p).then(|| {
        (0..rng.gen_range(1..=3))
            .map(|i| KnowledgeFile {
                name: format!("doc{}.pdf", i + 1),
                bytes: rng.gen_range(1_000..5_000_000),
            })
            .collect()
    });
    let actions = (!entries.is_empty()).then(|| {
        entries
            .iter()
            .map(|e| ActionDescriptor {
                domain: e.domain.clone(),
                privacy_policy: e.policy_url.clone(),
            })
            .collect()
    });
    GptMetadata::try_from(RawMetadata {
        gizmo_id: Some(id.into()),
        name: Some(name),
        instructions: Some(instructions),
        description,
        conversation,
        knowledge,
        capabilities,
        actions,
    })
    .expect("generated metadata is valid")
}

/// Hang delay used by a behavior, if any.
pub fn hang_delay(behavior: &PolicyBehavior) -> Option<Duration> {
    match behavior {
        PolicyBehavior::Hang { delay_ms } => Some(Duration::from_millis(*delay_ms)),
        _ => None,
    }
}
