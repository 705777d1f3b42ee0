//! Reference sets: ESCO occupations, ESCO skills and EQF qualifications.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

/// The three kinds of taxonomy entity a vacancy can be linked to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityKind {
    Occupation,
    Skill,
    Qualification,
}

impl EntityKind {
    pub const ALL: [EntityKind; 3] = [EntityKind::Occupation, EntityKind::Skill, EntityKind::Qualification];

    /// Label-vocabulary name, as used in BIO tags (`B-Skill`).
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Occupation => "Occupation",
            EntityKind::Skill => "Skill",
            EntityKind::Qualification => "Qualification",
        }
    }

    /// Lower-case name used on the command line and in file names.
    pub fn slug(self) -> &'static str {
        match self {
            EntityKind::Occupation => "occupation",
            EntityKind::Skill => "skill",
            EntityKind::Qualification => "qualification",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            EntityKind::Occupation => 0,
            EntityKind::Skill => 1,
            EntityKind::Qualification => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(EntityKind::Occupation),
            1 => Some(EntityKind::Skill),
            2 => Some(EntityKind::Qualification),
            _ => None,
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownEntityKind(pub String);

impl fmt::Display for UnknownEntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown entity kind `{}`", self.0)
    }
}

impl core::error::Error for UnknownEntityKind {}

impl FromStr for EntityKind {
    type Err = UnknownEntityKind;

    /// Accepts the tag name or the slug, case-insensitively, plus the
    /// plural forms and `eqf`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "occupation" | "occupations" => Ok(EntityKind::Occupation),
            "skill" | "skills" => Ok(EntityKind::Skill),
            "qualification" | "qualifications" | "eqf" => Ok(EntityKind::Qualification),
            _ => Err(UnknownEntityKind(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaxonomyError {
    DuplicateId(String),
    EmptyPreferredLabel {
        id: String,
    },
    KindMismatch {
        id: String,
        expected: EntityKind,
        found: EntityKind,
    },
    EqfLevelOutOfRange {
        id: String,
        level: u8,
    },
    MissingEqfLevel {
        id: String,
    },
    UnexpectedEqfLevel {
        id: String,
    },
    InvalidAltLabels {
        id: String,
    },
    NotFound(String),
}

impl fmt::Display for TaxonomyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaxonomyError::DuplicateId(id) => write!(f, "duplicate node id `{id}`"),
            TaxonomyError::EmptyPreferredLabel { id } => {
                write!(f, "node `{id}` has an empty preferred label")
            }
            TaxonomyError::KindMismatch { id, expected, found } => {
                write!(f, "node `{id}` is a {found}, expected {expected}")
            }
            TaxonomyError::EqfLevelOutOfRange { id, level } => {
                write!(f, "node `{id}` has EQF level {level}, expected 1..=8")
            }
            TaxonomyError::MissingEqfLevel { id } => {
                write!(f, "qualification `{id}` has no EQF level")
            }
            TaxonomyError::UnexpectedEqfLevel { id } => {
                write!(f, "non-qualification node `{id}` carries an EQF level")
            }
            TaxonomyError::InvalidAltLabels { id } => {
                write!(f, "node `{id}` has empty or duplicate alternative labels")
            }
            TaxonomyError::NotFound(id) => write!(f, "no node with id `{id}`"),
        }
    }
}

impl core::error::Error for TaxonomyError {}

pub const MIN_EQF_LEVEL: u8 = 1;
pub const MAX_EQF_LEVEL: u8 = 8;

/// One occupation, skill or qualification entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaxonomyNode {
    pub id: String,
    pub kind: EntityKind,
    pub preferred_label: String,
    pub description: String,
    pub alt_labels: Vec<String>,
    pub eqf_level: Option<u8>,
    pub country: Option<String>,
}

impl TaxonomyNode {
    pub fn new(id: impl Into<String>, kind: EntityKind, preferred_label: impl Into<String>) -> Self {
        TaxonomyNode {
            id: id.into(),
            kind,
            preferred_label: preferred_label.into(),
            description: String::new(),
            alt_labels: Vec::new(),
            eqf_level: None,
            country: None,
        }
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    pub fn with_alt_labels<I, S>(mut self, labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.alt_labels = labels.into_iter().map(Into::into).collect();
        self
    }

    /// Builds a qualification row. The id is synthetic and assigned by the
    /// loader from row order.
    pub fn qualification(
        id: impl Into<String>,
        qualification: impl Into<String>,
        country: impl Into<String>,
        level: u8,
    ) -> Self {
        TaxonomyNode {
            id: id.into(),
            kind: EntityKind::Qualification,
            preferred_label: qualification.into(),
            description: String::new(),
            alt_labels: Vec::new(),
            eqf_level: Some(level),
            country: Some(country.into()),
        }
    }

    /// The label an evaluation set uses for this node: `EQF<level>` for
    /// qualifications, the node id otherwise.
    pub fn target_label(&self) -> String {
        match (self.kind, self.eqf_level) {
            (EntityKind::Qualification, Some(level)) => format!("EQF{level}"),
            _ => self.id.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), TaxonomyError> {
        if self.preferred_label.trim().is_empty() {
            return Err(TaxonomyError::EmptyPreferredLabel { id: self.id.clone() });
        }
        match (self.kind, self.eqf_level) {
            (EntityKind::Qualification, None) => return Err(TaxonomyError::MissingEqfLevel { id: self.id.clone() }),
            (EntityKind::Qualification, Some(level)) if !(MIN_EQF_LEVEL..=MAX_EQF_LEVEL).contains(&level) => {
                return Err(TaxonomyError::EqfLevelOutOfRange {
                    id: self.id.clone(),
                    level,
                })
            }
            (EntityKind::Occupation | EntityKind::Skill, Some(_)) => {
                return Err(TaxonomyError::UnexpectedEqfLevel { id: self.id.clone() })
            }
            _ => {}
        }
        let clean = self.alt_labels.iter().all(|l| !l.is_empty() && l.trim() == l.as_str());
        let mut seen: Vec<&str> = self.alt_labels.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        if !clean || seen.len() != self.alt_labels.len() {
            return Err(TaxonomyError::InvalidAltLabels { id: self.id.clone() });
        }
        Ok(())
    }
}

/// Splits a newline-separated alternative-label cell: each label trimmed,
/// empties dropped, later duplicates dropped.
pub fn split_alt_labels(field: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for label in field.split('\n').map(str::trim) {
        if !label.is_empty() && !out.iter().any(|l| l == label) {
            out.push(label.to_string());
        }
    }
    out
}

/// An immutable, validated collection of nodes of one kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceSet {
    kind: EntityKind,
    version_tag: String,
    nodes: Vec<TaxonomyNode>,
    by_id: BTreeMap<String, usize>,
}

impl ReferenceSet {
    pub fn new(
        kind: EntityKind,
        nodes: Vec<TaxonomyNode>,
        version_tag: impl Into<String>,
    ) -> Result<Self, TaxonomyError> {
        let mut by_id = BTreeMap::new();
        for (i, node) in nodes.iter().enumerate() {
            if node.kind != kind {
                return Err(TaxonomyError::KindMismatch {
                    id: node.id.clone(),
                    expected: kind,
                    found: node.kind,
                });
            }
            node.validate()?;
            if by_id.insert(node.id.clone(), i).is_some() {
                return Err(TaxonomyError::DuplicateId(node.id.clone()));
            }
        }
        Ok(ReferenceSet {
            kind,
            version_tag: version_tag.into(),
            nodes,
            by_id,
        })
    }

    pub fn kind(&self) -> EntityKind {
        self.kind
    }

    pub fn version_tag(&self) -> &str {
        &self.version_tag
    }

    pub fn nodes(&self) -> &[TaxonomyNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, id: &str) -> Result<&TaxonomyNode, TaxonomyError> {
        self.by_id
            .get(id)
            .map(|&i| &self.nodes[i])
            .ok_or_else(|| TaxonomyError::NotFound(id.to_string()))
    }

    /// Node counts per EQF level, index 0 holding level 1.
    pub fn eqf_level_counts(&self) -> [usize; MAX_EQF_LEVEL as usize] {
        let mut counts = [0usize; MAX_EQF_LEVEL as usize];
        for level in self.nodes.iter().filter_map(|n| n.eqf_level) {
            counts[usize::from(level - 1)] += 1;
        }
        counts
    }
}
