//! Timestamped snapshots on disk.
//!
//! Layout: `{root}/{snapshot_id}/{apps,panels,audits,documents}.jsonl` plus
//! `manifest.json` with per-file record counts and SHA-256 digests. A
//! snapshot directory is assembled under a temporary name and renamed into
//! place, so readers never observe a partial snapshot.

mod diff;

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use diff::{diff_snapshots, ChangeEvent, ChangeKind, SnapshotDiff};

use crate::audit::{AuditRecord, PolicyDocument};
use crate::driver::PrivacyPanel;
use crate::hash::sha256_hex;
use crate::model::GptMetadata;

pub const MANIFEST_FILE: &str = "manifest.json";
const DATA_FILES: [&str; 4] = ["apps", "panels", "audits", "documents"];

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o failure: {0}")]
    IoFailure(#[from] io::Error),
    #[error("snapshot {0} already exists")]
    DuplicateSnapshotId(String),
    #[error("snapshot {0} not found")]
    NotFound(String),
    #[error("corrupt snapshot: {0} does not match its manifest")]
    CorruptManifest(String),
    #[error("{file}.jsonl line {line}: {detail}")]
    Malformed {
        file: String,
        line: usize,
        detail: String,
    },
    #[error("invalid snapshot: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub snapshot_id: String,
    /// Set when the capture did not complete for every app.
    pub partial: bool,
    pub apps: Vec<GptMetadata>,
    pub panels: Vec<PrivacyPanel>,
    pub audits: Vec<AuditRecord>,
    pub documents: Vec<PolicyDocument>,
}

/// RFC 3339 timestamp plus a 4-character disambiguator.
pub fn new_snapshot_id(at: DateTime<Utc>) -> String {
    const CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
    let mut rng = rand::thread_rng();
    let tag: String = (0..4)
        .map(|_| CHARS[rng.gen_range(0..CHARS.len())] as char)
        .collect();
    format!("{}-{tag}", at.to_rfc3339_opts(SecondsFormat::Secs, true))
}

impl Snapshot {
    pub fn empty(snapshot_id: impl Into<String>) -> Self {
        Self {
            snapshot_id: snapshot_id.into(),
            partial: false,
            apps: Vec::new(),
            panels: Vec::new(),
            audits: Vec::new(),
            documents: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        if self.snapshot_id.is_empty()
            || self.snapshot_id.starts_with('.')
            || self.snapshot_id.contains(['/', '\\'])
        {
            return Err(StoreError::Invalid(format!(
                "unusable snapshot id {:?}",
                self.snapshot_id
            )));
        }
        let mut ids = HashSet::new();
        for app in &self.apps {
            if !ids.insert(&app.gizmo_id) {
                return Err(StoreError::Invalid(format!(
                    "duplicate app {}",
                    app.gizmo_id
                )));
            }
        }
        let mut declared = HashSet::new();
        for panel in &self.panels {
            if !ids.contains(&panel.gizmo_id) {
                return Err(StoreError::Invalid(format!(
                    "panel for unknown app {}",
                    panel.gizmo_id
                )));
            }
            for entry in &panel.entries {
                declared.insert((&panel.gizmo_id, entry));
            }
        }
        for audit in &self.audits {
            if !declared.contains(&(&audit.gizmo_id, &audit.entry)) {
                return Err(StoreError::Invalid(format!(
                    "audit of {} for {} not declared in any panel",
                    audit.gizmo_id, audit.entry.policy_url
                )));
            }
        }
        Ok(())
    }

    pub fn app(&self, id: &crate::model::GizmoId) -> Option<&GptMetadata> {
        self.apps.iter().find(|a| &a.gizmo_id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub apps: usize,
    pub panels: usize,
    pub audits: usize,
    pub documents: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Digests {
    pub apps: String,
    pub panels: String,
    pub audits: String,
    pub documents: String,
}

impl Digests {
    fn get(&self, file: &str) -> &str {
        match file {
            "apps" => &self.apps,
            "panels" => &self.panels,
            "audits" => &self.audits,
            _ => &self.documents,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub snapshot_id: String,
    pub partial: bool,
    pub counts: Counts,
    pub digests: Digests,
}

fn to_jsonl<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("records serialize");
        out.push(b'\n');
    }
    out
}

fn from_jsonl<T: DeserializeOwned>(file: &str, bytes: &[u8]) -> Result<Vec<T>, StoreError> {
    let text =
        std::str::from_utf8(bytes).map_err(|_| StoreError::CorruptManifest(file.to_owned()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| StoreError::Malformed {
                file: file.to_owned(),
                line: i + 1,
                detail: e.to_string(),
            })
        })
        .collect()
}

/// Writes `s` under `root` and returns the snapshot directory.
pub fn write_snapshot(s: &Snapshot, root: &Path) -> Result<PathBuf, StoreError> {
    s.validate()?;
    fs::create_dir_all(root)?;
    let dest = root.join(&s.snapshot_id);
    if dest.exists() {
        return Err(StoreError::DuplicateSnapshotId(s.snapshot_id.clone()));
    }

    let files = [
        to_jsonl(&s.apps),
        to_jsonl(&s.panels),
        to_jsonl(&s.audits),
        to_jsonl(&s.documents),
    ];
    let manifest = Manifest {
        snapshot_id: s.snapshot_id.clone(),
        partial: s.partial,
        counts: Counts {
            apps: s.apps.len(),
            panels: s.panels.len(),
            audits: s.audits.len(),
            documents: s.documents.len(),
        },
        digests: Digests {
            apps: sha256_hex(&files[0]),
            panels: sha256_hex(&files[1]),
            audits: sha256_hex(&files[2]),
            documents: sha256_hex(&files[3]),
        },
    };

    let tmp = root.join(format!(
        ".tmp-{}-{}",
        std::process::id(),
        rand::thread_rng().gen::<u64>()
    ));
    fs::create_dir(&tmp)?;
    let result = (|| -> io::Result<()> {
        for (name, bytes) in DATA_FILES.iter().zip(&files) {
            fs::write(tmp.join(format!("{name}.jsonl")), bytes)?;
        }
        let mut manifest_bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        manifest_bytes.push(b'\n');
        fs::write(tmp.join(MANIFEST_FILE), manifest_bytes)?;
        fs::rename(&tmp, &dest)
    })();
    if let Err(e) = result {
        let _ = fs::remove_dir_all(&tmp);
        if dest.exists() {
            return Err(StoreError::DuplicateSnapshotId(s.snapshot_id.clone()));
        }
        return Err(e.into());
    }
    Ok(dest)
}

pub fn read_manifest(root: &Path, snapshot_id: &str) -> Result<Manifest, StoreError> {
    let dir = root.join(snapshot_id);
    if snapshot_id.is_empty() || !dir.is_dir() {
        return Err(StoreError::NotFound(snapshot_id.to_owned()));
    }
    let bytes = fs::read(dir.join(MANIFEST_FILE))?;
    serde_json::from_slice(&bytes).map_err(|_| StoreError::CorruptManifest("manifest".into()))
}

/// Loads and verifies a snapshot written by [`write_snapshot`].
pub fn load_snapshot(root: &Path, snapshot_id: &str) -> Result<Snapshot, StoreError> {
    let manifest = read_manifest(root, snapshot_id)?;
    if manifest.snapshot_id != snapshot_id {
        return Err(StoreError::CorruptManifest("manifest".into()));
    }
    let dir = root.join(snapshot_id);
    let mut contents = Vec::with_capacity(DATA_FILES.len());
    for name in DATA_FILES {
        let bytes = match fs::read(dir.join(format!("{name}.jsonl"))) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(StoreError::CorruptManifest(name.to_owned()))
            }
            Err(e) => return Err(e.into()),
        };
        if sha256_hex(&bytes) != manifest.digests.get(name) {
            return Err(StoreError::CorruptManifest(name.to_owned()));
        }
        contents.push(bytes);
    }
    let snapshot = Snapshot {
        snapshot_id: snapshot_id.to_owned(),
        partial: manifest.partial,
        apps: from_jsonl("apps", &contents[0])?,
        panels: from_jsonl("panels", &contents[1])?,
        audits: from_jsonl("audits", &contents[2])?,
        documents: from_jsonl("documents", &contents[3])?,
    };
    let counts = Counts {
        apps: snapshot.apps.len(),
        panels: snapshot.panels.len(),
        audits: snapshot.audits.len(),
        documents: snapshot.documents.len(),
    };
    if counts != manifest.counts {
        return Err(StoreError::CorruptManifest("manifest".into()));
    }
    snapshot.validate()?;
    Ok(snapshot)
}

/// Snapshot ids under `root`, oldest first.
pub fn list_snapshots(root: &Path) -> Result<Vec<String>, StoreError> {
    let mut ids = Vec::new();
    let entries = match fs::read_dir(root) {
        Ok(e) => e,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(ids),
        Err(e) => return Err(e.into()),
    };
    for entry in entries {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if !name.starts_with('.') && entry.path().join(MANIFEST_FILE).is_file() {
            ids.push(name);
        }
    }
    ids.sort();
    Ok(ids)
}
