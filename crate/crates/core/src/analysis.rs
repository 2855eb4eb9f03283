//! Corpus-level measurements over a snapshot and their CSV/JSON export.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::{AuditRecord, OutcomeKind};
use crate::model::{GizmoId, GptClass};
use crate::store::Snapshot;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("app {0} declares third-party domains but has no actions metadata")]
    InconsistentSnapshot(GizmoId),
    #[error("i/o failure: {0}")]
    IoFailure(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DomainCountDistribution {
    pub zero: usize,
    pub one: usize,
    pub two_plus: usize,
    #[serde(skip)]
    pub per_app: BTreeMap<GizmoId, usize>,
}

/// Distinct declared domains per app, bucketed 0 / 1 / 2+. Apps without a
/// captured panel count as zero.
pub fn domain_count_distribution(s: &Snapshot) -> DomainCountDistribution {
    let panels: HashMap<&GizmoId, usize> = s
        .panels
        .iter()
        .map(|p| (&p.gizmo_id, p.distinct_domains().len()))
        .collect();
    let mut dist = DomainCountDistribution::default();
    for app in &s.apps {
        let n = panels.get(&app.gizmo_id).copied().unwrap_or(0);
        match n {
            0 => dist.zero += 1,
            1 => dist.one += 1,
            _ => dist.two_plus += 1,
        }
        dist.per_app.insert(app.gizmo_id.clone(), n);
    }
    dist
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainUsage {
    pub domain: String,
    pub app_count: usize,
}

/// Distinct apps per domain, by count descending then domain ascending.
pub fn domain_frequency(s: &Snapshot) -> Vec<DomainUsage> {
    let mut apps_per_domain: HashMap<&str, HashSet<&GizmoId>> = HashMap::new();
    for panel in &s.panels {
        for entry in &panel.entries {
            apps_per_domain
                .entry(entry.domain.as_str())
                .or_default()
                .insert(&panel.gizmo_id);
        }
    }
    let mut freq: Vec<DomainUsage> = apps_per_domain
        .into_iter()
        .map(|(domain, apps)| DomainUsage {
            domain: domain.to_owned(),
            app_count: apps.len(),
        })
        .collect();
    freq.sort_by(|a, b| {
        b.app_count
            .cmp(&a.app_count)
            .then_with(|| a.domain.cmp(&b.domain))
    });
    freq
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AuditDistribution {
    pub accessible: usize,
    pub broken: usize,
    pub homepage: usize,
    pub timeout: usize,
    pub server_error: usize,
}

impl AuditDistribution {
    pub fn total(&self) -> usize {
        self.accessible + self.broken + self.homepage + self.timeout + self.server_error
    }

    pub fn rows(&self) -> [(&'static str, usize); 5] {
        [
            ("accessible", self.accessible),
            ("broken", self.broken),
            ("homepage", self.homepage),
            ("timeout", self.timeout),
            ("server_error", self.server_error),
        ]
    }
}

pub fn audit_distribution(records: &[AuditRecord]) -> AuditDistribution {
    let mut d = AuditDistribution::default();
    for r in records {
        match r.outcome.kind() {
            OutcomeKind::Accessible => d.accessible += 1,
            OutcomeKind::BrokenLink => d.broken += 1,
            OutcomeKind::HomepageOnly => d.homepage += 1,
            OutcomeKind::Timeout => d.timeout += 1,
            OutcomeKind::ServerError => d.server_error += 1,
        }
    }
    d
}

/// Apps per class. Every class is present, possibly with zero. Fails when an
/// app with panel entries is not action-based.
pub fn classification_distribution(
    s: &Snapshot,
) -> Result<BTreeMap<GptClass, usize>, AnalysisError> {
    let with_entries: HashSet<&GizmoId> = s
        .panels
        .iter()
        .filter(|p| !p.entries.is_empty())
        .map(|p| &p.gizmo_id)
        .collect();
    let mut counts: BTreeMap<GptClass, usize> = GptClass::ALL.iter().map(|c| (*c, 0)).collect();
    for app in &s.apps {
        let class = app.class();
        if with_entries.contains(&app.gizmo_id) && class != GptClass::ActionBased {
            return Err(AnalysisError::InconsistentSnapshot(app.gizmo_id.clone()));
        }
        *counts.entry(class).or_default() += 1;
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    fn ext(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!(
                "unknown report format {other:?} (expected csv or json)"
            )),
        }
    }
}

#[derive(Serialize)]
struct BucketsJson {
    zero: usize,
    one: usize,
    two_plus: usize,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Writes the four report tables into `dir` and returns the paths written.
/// Output is a pure function of the snapshot.
pub fn export_report(
    s: &Snapshot,
    format: ReportFormat,
    dir: &Path,
) -> Result<Vec<PathBuf>, AnalysisError> {
    let buckets = domain_count_distribution(s);
    let freq = domain_frequency(s);
    let audits = audit_distribution(&s.audits);
    let classes = classification_distribution(s)?;
    fs::create_dir_all(dir)?;

    let files: [(&str, String); 4] = match format {
        ReportFormat::Csv => {
            let mut counts = String::from("bucket,count\n");
            for (bucket, n) in [
                ("0", buckets.zero),
                ("1", buckets.one),
                ("2+", buckets.two_plus),
            ] {
                writeln!(counts, "{bucket},{n}").expect("string write");
            }
            let mut frequency = String::from("domain,app_count\n");
            for u in &freq {
                writeln!(frequency, "{},{}", csv_field(&u.domain), u.app_count)
                    .expect("string write");
            }
            let mut outcome = String::from("outcome,count\n");
            for (name, n) in audits.rows() {
                writeln!(outcome, "{name},{n}").expect("string write");
            }
            let mut class = String::from("class,count\n");
            for (c, n) in &classes {
                writeln!(class, "{c},{n}").expect("string write");
            }
            [
                ("domain_count_distribution", counts),
                ("domain_frequency", frequency),
                ("audit_distribution", outcome),
                ("classification", class),
            ]
        }
        ReportFormat::Json => {
            let pretty = |v: serde_json::Value| {
                let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
                s.push('\n');
                s
            };
            let class_map: BTreeMap<&str, usize> =
                classes.iter().map(|(c, n)| (c.as_str(), *n)).collect();
            [
                (
                    "domain_count_distribution",
                    pretty(serde_json::json!(BucketsJson {
                        zero: buckets.zero,
                        one: buckets.one,
                        two_plus: buckets.two_plus,
                    })),
                ),
                ("domain_frequency", pretty(serde_json::json!(freq))),
                ("audit_distribution", pretty(serde_json::json!(audits))),
                ("classification", pretty(serde_json::json!(class_map))),
            ]
        }
    };

    let mut written = Vec::with_capacity(files.len());
    for (stem, body) in files {
        let path = dir.join(format!("{stem}.{}", format.ext()));
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}
