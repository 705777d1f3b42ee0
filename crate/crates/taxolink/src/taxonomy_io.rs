//! CSV ingestion and canonical export of reference sets.
//!
//! Canonical schemas (UTF-8, header row required, RFC 4180 quoting):
//!
//! * occupations / skills: `id,preferredLabel,altLabels,description`, with
//!   alternative labels newline-separated inside one cell;
//! * EQF: `qualification,country,eqf_level`.
//!
//! Official ESCO v1.1.1 exports (`occupations_en.csv`, `skills_en.csv`) are
//! read directly: when there is no `id` column the node id is taken from
//! `code` if present and non-empty, else from `conceptUri`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use taxolink_core::taxonomy::{split_alt_labels, EntityKind, ReferenceSet, TaxonomyNode, MAX_EQF_LEVEL, MIN_EQF_LEVEL};

use crate::error::IngestError;

pub const DEFAULT_ESCO_VERSION: &str = "ESCO 1.1.1";
pub const DEFAULT_EQF_VERSION: &str = "EQF";

pub const ESCO_HEADER: [&str; 4] = ["id", "preferredLabel", "altLabels", "description"];
pub const EQF_HEADER: [&str; 3] = ["qualification", "country", "eqf_level"];

/// Synthetic id of the `row`-th (1-based) qualification.
pub fn eqf_node_id(row: u64) -> String {
    format!("eqf-{row}")
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize, IngestError> {
    optional_column(headers, name).ok_or_else(|| IngestError::MissingColumn {
        path: path.to_path_buf(),
        column: name.to_string(),
    })
}

fn optional_column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim_start_matches('\u{feff}') == name)
}

enum IdSource {
    Id(usize),
    Official { code: Option<usize>, uri: usize },
}

pub fn load_occupations(path: &Path) -> Result<ReferenceSet, IngestError> {
    read_esco(open(path)?, EntityKind::Occupation, DEFAULT_ESCO_VERSION, path)
}

pub fn load_skills(path: &Path) -> Result<ReferenceSet, IngestError> {
    read_esco(open(path)?, EntityKind::Skill, DEFAULT_ESCO_VERSION, path)
}

pub fn load_eqf(path: &Path) -> Result<ReferenceSet, IngestError> {
    read_eqf(open(path)?, DEFAULT_EQF_VERSION, path)
}

/// Loads whichever reference set `kind` names.
pub fn load_reference_set(kind: EntityKind, path: &Path) -> Result<ReferenceSet, IngestError> {
    match kind {
        EntityKind::Occupation => load_occupations(path),
        EntityKind::Skill => load_skills(path),
        EntityKind::Qualification => load_eqf(path),
    }
}

/// Reads an occupations or skills CSV. `source` names the input in errors.
pub fn read_esco<R: Read>(
    reader: R,
    kind: EntityKind,
    version_tag: &str,
    source: &Path,
) -> Result<ReferenceSet, IngestError> {
    let csv_err = |e| IngestError::Csv {
        path: source.to_path_buf(),
        source: e,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();

    let id_source = match optional_column(&headers, "id") {
        Some(i) => IdSource::Id(i),
        None => IdSource::Official {
            code: optional_column(&headers, "code"),
            uri: column(&headers, "conceptUri", source).map_err(|_| IngestError::MissingColumn {
                path: source.to_path_buf(),
                column: "id".to_string(),
            })?,
        },
    };
    let label_col = column(&headers, "preferredLabel", source)?;
    let alt_col = column(&headers, "altLabels", source)?;
    let desc_col = column(&headers, "description", source)?;

    let mut nodes = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = i as u64 + 1;
        let field = |c: usize| record.get(c).unwrap_or("");
        let id = match id_source {
            IdSource::Id(c) => field(c).trim().to_string(),
            IdSource::Official { code, uri } => code
                .map(|c| field(c).trim())
                .filter(|c| !c.is_empty())
                .unwrap_or_else(|| field(uri).trim())
                .to_string(),
        };
        if id.is_empty() {
            return Err(IngestError::EmptyId {
                path: source.to_path_buf(),
                row,
            });
        }
        let label = field(label_col).trim();
        if label.is_empty() {
            return Err(IngestError::EmptyLabel {
                path: source.to_path_buf(),
                row,
            });
        }
        if !seen.insert(id.clone()) {
            return Err(IngestError::DuplicateId {
                path: source.to_path_buf(),
                id,
                row,
            });
        }
        nodes.push(
            TaxonomyNode::new(id, kind, label)
                .with_description(field(desc_col).trim())
                .with_alt_labels(split_alt_labels(field(alt_col))),
        );
    }
    ReferenceSet::new(kind, nodes, version_tag).map_err(|source_err| IngestError::Taxonomy {
        path: source.to_path_buf(),
        source: source_err,
    })
}

fn parse_level(value: &str) -> Option<u8> {
    let digits = value.trim();
    let digits = digits
        .strip_prefix("EQF")
        .or_else(|| digits.strip_prefix("eqf"))
        .unwrap_or(digits)
        .trim();
    digits
        .parse::<u8>()
        .ok()
        .filter(|l| (MIN_EQF_LEVEL..=MAX_EQF_LEVEL).contains(l))
}

/// Reads an EQF CSV. Ids are assigned from row order.
pub fn read_eqf<R: Read>(reader: R, version_tag: &str, source: &Path) -> Result<ReferenceSet, IngestError> {
    let csv_err = |e| IngestError::Csv {
        path: source.to_path_buf(),
        source: e,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let qual_col = column(&headers, "qualification", source)?;
    let country_col = column(&headers, "country", source)?;
    let level_col = column(&headers, "eqf_level", source)?;

    let mut nodes = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = i as u64 + 1;
        let qualification = record.get(qual_col).unwrap_or("").trim();
        if qualification.is_empty() {
            return Err(IngestError::MissingQualification {
                path: source.to_path_buf(),
                row,
            });
        }
        let raw_level = record.get(level_col).unwrap_or("");
        let level = parse_level(raw_level).ok_or_else(|| IngestError::EqfLevel {
            path: source.to_path_buf(),
            row,
            value: raw_level.to_string(),
        })?;
        let country = record.get(country_col).unwrap_or("").trim();
        nodes.push(TaxonomyNode::qualification(
            eqf_node_id(row),
            qualification,
            country,
            level,
        ));
    }
    ReferenceSet::new(EntityKind::Qualification, nodes, version_tag).map_err(|e| IngestError::Taxonomy {
        path: source.to_path_buf(),
        source: e,
    })
}

/// Writes `set` in its canonical schema.
pub fn write_reference_set<W: Write>(set: &ReferenceSet, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    match set.kind() {
        EntityKind::Qualification => {
            w.write_record(EQF_HEADER)?;
            for n in set.nodes() {
                let level = n.eqf_level.map(|l| l.to_string()).unwrap_or_default();
                w.write_record([
                    n.preferred_label.as_str(),
                    n.country.as_deref().unwrap_or(""),
                    level.as_str(),
                ])?;
            }
        }
        EntityKind::Occupation | EntityKind::Skill => {
            w.write_record(ESCO_HEADER)?;
            for n in set.nodes() {
                w.write_record([
                    n.id.as_str(),
                    n.preferred_label.as_str(),
                    n.alt_labels.join("\n").as_str(),
                    n.description.as_str(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
