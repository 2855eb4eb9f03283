//! GPT metadata records, identifier rules and the three-way app classifier.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Length of a store identifier.
pub const GIZMO_ID_LEN: usize = 9;

/// Production store host. Fixture runs substitute a loopback base.
pub const DEFAULT_STORE_BASE: &str = "https://chatgpt.com";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GizmoIdError {
    #[error("gizmo id must be exactly {GIZMO_ID_LEN} characters, got {0}")]
    InvalidLength(usize),
    #[error("gizmo id contains non-alphanumeric character {0:?}")]
    InvalidCharacter(char),
}

/// The 9-character alphanumeric identifier of a store app; the only identity key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GizmoId(String);

impl GizmoId {
    pub fn parse(raw: &str) -> Result<Self, GizmoIdError> {
        validate_gizmo_id(raw)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

pub fn validate_gizmo_id(raw: &str) -> Result<GizmoId, GizmoIdError> {
    let len = raw.chars().count();
    if len != GIZMO_ID_LEN {
        return Err(GizmoIdError::InvalidLength(len));
    }
    if let Some(bad) = raw.chars().find(|c| !c.is_ascii_alphanumeric()) {
        return Err(GizmoIdError::InvalidCharacter(bad));
    }
    Ok(GizmoId(raw.to_owned()))
}

impl TryFrom<String> for GizmoId {
    type Error = GizmoIdError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        validate_gizmo_id(&value)
    }
}

impl From<GizmoId> for String {
    fn from(id: GizmoId) -> Self {
        id.0
    }
}

impl fmt::Display for GizmoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Access URL of an app's interaction page: `{base}/g/g-{id}`.
pub fn build_access_url(base: &str, id: &GizmoId) -> String {
    format!("{}/g/g-{}", base.trim_end_matches('/'), id)
}

/// [`build_access_url`] against the production store.
pub fn default_access_url(id: &GizmoId) -> String {
    build_access_url(DEFAULT_STORE_BASE, id)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeFile {
    pub name: String,
    pub bytes: u64,
}

/// One declared third-party integration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionDescriptor {
    pub domain: String,
    pub privacy_policy: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("field `{field}`: {reason}")]
pub struct MetadataError {
    pub field: &'static str,
    pub reason: String,
}

impl MetadataError {
    fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self {
            field,
            reason: reason.into(),
        }
    }
}

/// Wire form of a metadata record. Every field is optional here so that
/// validation can name the offending field.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RawMetadata {
    pub gizmo_id: Option<String>,
    pub name: Option<String>,
    pub instructions: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conversation: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub knowledge: Option<Vec<KnowledgeFile>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capabilities: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub actions: Option<Vec<ActionDescriptor>>,
}

/// An app's metadata slots. `None` means the developer never supplied the
/// slot; `Some(vec![])` is a supplied but empty slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMetadata")]
pub struct GptMetadata {
    pub gizmo_id: GizmoId,
    pub name: String,
    pub instructions: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conversation: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub knowledge: Option<Vec<KnowledgeFile>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capabilities: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub actions: Option<Vec<ActionDescriptor>>,
}

impl GptMetadata {
    /// A record carrying only the two mandatory slots.
    pub fn new(
        gizmo_id: GizmoId,
        name: impl Into<String>,
        instructions: impl Into<String>,
    ) -> Result<Self, MetadataError> {
        Self::try_from(RawMetadata {
            gizmo_id: Some(gizmo_id.into()),
            name: Some(name.into()),
            instructions: Some(instructions.into()),
            ..RawMetadata::default()
        })
    }

    pub fn has_knowledge(&self) -> bool {
        self.knowledge.as_ref().is_some_and(|k| !k.is_empty())
    }

    pub fn has_actions(&self) -> bool {
        self.actions.as_ref().is_some_and(|a| !a.is_empty())
    }

    pub fn class(&self) -> GptClass {
        classify(self)
    }
}

impl TryFrom<RawMetadata> for GptMetadata {
    type Error = MetadataError;

    fn try_from(raw: RawMetadata) -> Result<Self, Self::Error> {
        let gizmo_id = raw
            .gizmo_id
            .ok_or_else(|| MetadataError::new("gizmo_id", "missing"))?;
        let gizmo_id =
            GizmoId::parse(&gizmo_id).map_err(|e| MetadataError::new("gizmo_id", e.to_string()))?;
        let name = non_empty("name", raw.name)?;
        let instructions = non_empty("instructions", raw.instructions)?;
        if let Some(actions) = &raw.actions {
            if let Some(i) = actions.iter().position(|a| a.domain.trim().is_empty()) {
                return Err(MetadataError::new(
                    "actions",
                    format!("entry {i} names no domain"),
                ));
            }
        }
        Ok(Self {
            gizmo_id,
            name,
            instructions,
            description: raw.description,
            conversation: raw.conversation,
            knowledge: raw.knowledge,
            capabilities: raw.capabilities,
            actions: raw.actions,
        })
    }
}

fn non_empty(field: &'static str, value: Option<String>) -> Result<String, MetadataError> {
    match value {
        None => Err(MetadataError::new(field, "missing")),
        Some(v) if v.trim().is_empty() => Err(MetadataError::new(field, "empty")),
        Some(v) => Ok(v),
    }
}

/// Three-way partition of the app universe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GptClass {
    PromptBased,
    KnowledgeBased,
    ActionBased,
}

impl GptClass {
    pub const ALL: [GptClass; 3] = [
        GptClass::PromptBased,
        GptClass::KnowledgeBased,
        GptClass::ActionBased,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GptClass::PromptBased => "prompt_based",
            GptClass::KnowledgeBased => "knowledge_based",
            GptClass::ActionBased => "action_based",
        }
    }
}

impl fmt::Display for GptClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Actions dominate knowledge; empty slots count as absent.
pub fn classify(meta: &GptMetadata) -> GptClass {
    if meta.has_actions() {
        GptClass::ActionBased
    } else if meta.has_knowledge() {
        GptClass::KnowledgeBased
    } else {
        GptClass::PromptBased
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> GizmoId {
        GizmoId::parse(s).unwrap()
    }

    fn base_meta() -> GptMetadata {
        GptMetadata::new(id("1abcD2EFG"), "PDF helper", "Answer questions about PDFs").unwrap()
    }

    #[test]
    fn gizmo_id_rules() {
        assert_eq!(
            validate_gizmo_id("1abcD2EFG").unwrap().as_str(),
            "1abcD2EFG"
        );
        assert_eq!(validate_gizmo_id(""), Err(GizmoIdError::InvalidLength(0)));
        assert_eq!(
            validate_gizmo_id("1abcD2EF!"),
            Err(GizmoIdError::InvalidCharacter('!'))
        );
        assert_eq!(
            validate_gizmo_id("1abcD2EFGH"),
            Err(GizmoIdError::InvalidLength(10))
        );
        // multibyte characters count once
        assert_eq!(
            validate_gizmo_id("1abcD2EFé"),
            Err(GizmoIdError::InvalidCharacter('é'))
        );
    }

    #[test]
    fn access_urls() {
        assert_eq!(
            default_access_url(&id("1abcD2EFG")),
            "https://chatgpt.com/g/g-1abcD2EFG"
        );
        assert_eq!(
            default_access_url(&id("AAAAAAAAA")),
            "https://chatgpt.com/g/g-AAAAAAAAA"
        );
        assert_eq!(
            build_access_url("http://127.0.0.1:4321/", &id("1abcD2EFG")),
            "http://127.0.0.1:4321/g/g-1abcD2EFG"
        );
    }

    #[test]
    fn classification_examples() {
        let mut m = base_meta();
        assert_eq!(classify(&m), GptClass::PromptBased);
        m.knowledge = Some(vec![KnowledgeFile {
            name: "f1.pdf".into(),
            bytes: 10,
        }]);
        assert_eq!(classify(&m), GptClass::KnowledgeBased);
        m.actions = Some(vec![ActionDescriptor {
            domain: "aipdf.myaidrive.com".into(),
            privacy_policy: "https://myaidrive.com/privacy".into(),
        }]);
        assert_eq!(classify(&m), GptClass::ActionBased);
    }

    #[test]
    fn empty_slots_count_as_absent() {
        let mut m = base_meta();
        m.knowledge = Some(vec![]);
        m.actions = Some(vec![]);
        assert_eq!(classify(&m), GptClass::PromptBased);
    }

    #[test]
    fn empty_shell_rejected() {
        let raw: RawMetadata =
            serde_json::from_str(r#"{"gizmo_id":"1abcD2EFG","name":"Shell"}"#).unwrap();
        let err = GptMetadata::try_from(raw).unwrap_err();
        assert_eq!(err.field, "instructions");

        let raw: RawMetadata =
            serde_json::from_str(r#"{"gizmo_id":"1abcD2EFG","name":" ","instructions":"x"}"#)
                .unwrap();
        assert_eq!(GptMetadata::try_from(raw).unwrap_err().field, "name");
    }

    #[test]
    fn absent_and_empty_survive_serialization() {
        let mut m = base_meta();
        m.knowledge = Some(vec![]);
        let line = serde_json::to_string(&m).unwrap();
        assert_eq!(
            line,
            r#"{"gizmo_id":"1abcD2EFG","name":"PDF helper","instructions":"Answer questions about PDFs","knowledge":[]}"#
        );
        let back: GptMetadata = serde_json::from_str(&line).unwrap();
        assert_eq!(back, m);
        assert!(back.conversation.is_none());
    }
}
