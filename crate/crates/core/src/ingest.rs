//! JSON Lines ingestion of app metadata.

use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;

use thiserror::Error;

use crate::model::{GptClass, GptMetadata, RawMetadata};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("line {line}: malformed JSON: {detail}")]
    ParseFailure { line: usize, detail: String },
    #[error("line {line}: invalid `{field}`: {reason}")]
    ValidationFailure {
        line: usize,
        field: String,
        reason: String,
    },
}

impl IngestError {
    pub fn line(&self) -> usize {
        match self {
            IngestError::ParseFailure { line, .. }
            | IngestError::ValidationFailure { line, .. } => *line,
        }
    }
}

/// Result of ingesting a metadata file. Rejected lines do not stop ingestion.
#[derive(Debug, Default)]
pub struct IngestReport {
    pub apps: Vec<GptMetadata>,
    pub rejected: Vec<IngestError>,
}

impl IngestReport {
    pub fn class_counts(&self) -> BTreeMap<GptClass, usize> {
        let mut counts: BTreeMap<GptClass, usize> = GptClass::ALL.iter().map(|c| (*c, 0)).collect();
        for app in &self.apps {
            *counts.entry(app.class()).or_default() += 1;
        }
        counts
    }

    pub fn summary(&self) -> String {
        format!(
            "{} ingested, {} rejected",
            self.apps.len(),
            self.rejected.len()
        )
    }
}

/// Parses one line (1-based `line` number used for diagnostics).
pub fn parse_line(line: usize, text: &str) -> Result<GptMetadata, IngestError> {
    let raw: RawMetadata = serde_json::from_str(text).map_err(|e| IngestError::ParseFailure {
        line,
        detail: e.to_string(),
    })?;
    GptMetadata::try_from(raw).map_err(|e| IngestError::ValidationFailure {
        line,
        field: e.field.to_owned(),
        reason: e.reason,
    })
}

/// Reads a JSON Lines stream. Blank lines are skipped; a repeated gizmo id is
/// rejected against the later line.
pub fn ingest<R: BufRead>(reader: R) -> std::io::Result<IngestReport> {
    let mut report = IngestReport::default();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(lineno, &line) {
            Ok(meta) => {
                if seen.insert(meta.gizmo_id.clone()) {
                    report.apps.push(meta);
                } else {
                    report.rejected.push(IngestError::ValidationFailure {
                        line: lineno,
                        field: "gizmo_id".into(),
                        reason: format!("duplicate id {}", meta.gizmo_id),
                    });
                }
            }
            Err(e) => report.rejected.push(e),
        }
    }
    Ok(report)
}

pub fn ingest_path(path: &std::path::Path) -> std::io::Result<IngestReport> {
    let file = std::fs::File::open(path)?;
    ingest(std::io::BufReader::new(file))
}
