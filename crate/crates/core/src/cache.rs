//! Binary embedding-cache codec.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "TXLK" | u16 version | u8 normalized | u32 dim | u64 count
//! count × ( u32 id_len | id bytes (UTF-8) | u8 entity_kind
//!           | u8 field_kind | u16 alt_index | dim × f32 )
//! ```

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::embedding::{EmbeddingRecord, EmbeddingVector, FieldTag};
use crate::taxonomy::EntityKind;

pub const MAGIC: [u8; 4] = *b"TXLK";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 1 + 4 + 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheError {
    BadMagic,
    UnsupportedVersion(u16),
    Truncated,
    TrailingBytes(usize),
    MixedDimensions { expected: usize, found: usize },
    InvalidUtf8,
    InvalidEntityKind(u8),
    InvalidFieldTag { kind: u8, index: u16 },
    NonFiniteValue,
    EmptyDimension,
}

impl fmt::Display for CacheError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CacheError::BadMagic => f.write_str("not an embedding cache (bad magic)"),
            CacheError::UnsupportedVersion(v) => write!(f, "unsupported cache version {v}"),
            CacheError::Truncated => f.write_str("embedding cache is truncated"),
            CacheError::TrailingBytes(n) => write!(f, "{n} unexpected bytes after last record"),
            CacheError::MixedDimensions { expected, found } => {
                write!(f, "records have mixed dimensions ({expected} and {found})")
            }
            CacheError::InvalidUtf8 => f.write_str("node id is not valid UTF-8"),
            CacheError::InvalidEntityKind(k) => write!(f, "invalid entity kind code {k}"),
            CacheError::InvalidFieldTag { kind, index } => {
                write!(f, "invalid field tag ({kind}, {index})")
            }
            CacheError::NonFiniteValue => f.write_str("cache holds a non-finite value"),
            CacheError::EmptyDimension => f.write_str("header declares records of dimension 0"),
        }
    }
}

impl core::error::Error for CacheError {}

/// Decoded cache contents.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheContents {
    pub normalized: bool,
    pub dim: usize,
    pub records: Vec<EmbeddingRecord>,
}

/// Serializes `records`. An empty list encodes with dimension 0.
pub fn encode(records: &[EmbeddingRecord], normalized: bool) -> Result<Vec<u8>, CacheError> {
    let dim = records.first().map_or(0, |r| r.vector.dim());
    if let Some(r) = records.iter().find(|r| r.vector.dim() != dim) {
        return Err(CacheError::MixedDimensions {
            expected: dim,
            found: r.vector.dim(),
        });
    }
    let dim32 = u32::try_from(dim).expect("vector dimension exceeds u32");
    let payload: usize = records.iter().map(|r| 4 + r.node_id.len() + 1 + 1 + 2 + 4 * dim).sum();
    let mut out = Vec::with_capacity(HEADER_LEN + payload);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(u8::from(normalized));
    out.extend_from_slice(&dim32.to_le_bytes());
    out.extend_from_slice(&(records.len() as u64).to_le_bytes());
    for r in records {
        let id_len = u32::try_from(r.node_id.len()).expect("node id longer than 4 GiB");
        out.extend_from_slice(&id_len.to_le_bytes());
        out.extend_from_slice(r.node_id.as_bytes());
        out.push(r.kind.code());
        let (field_kind, alt_index) = r.field.to_parts();
        out.push(field_kind);
        out.extend_from_slice(&alt_index.to_le_bytes());
        for v in r.vector.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CacheError> {
        if self.bytes.len() < n {
            return Err(CacheError::Truncated);
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], CacheError> {
        let mut buf = [0u8; N];
        buf.copy_from_slice(self.take(N)?);
        Ok(buf)
    }

    fn u8(&mut self) -> Result<u8, CacheError> {
        Ok(self.array::<1>()?[0])
    }

    fn u16(&mut self) -> Result<u16, CacheError> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32, CacheError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64, CacheError> {
        Ok(u64::from_le_bytes(self.array()?))
    }
}

pub fn decode(bytes: &[u8]) -> Result<CacheContents, CacheError> {
    let mut r = Reader { bytes };
    if bytes.len() < MAGIC.len() || r.array::<4>()? != MAGIC {
        return Err(CacheError::BadMagic);
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(CacheError::UnsupportedVersion(version));
    }
    let normalized = r.u8()? != 0;
    let dim = r.u32()? as usize;
    let count = r.u64()?;
    if count > 0 && dim == 0 {
        return Err(CacheError::EmptyDimension);
    }
    // Each record occupies at least 8 + 4·dim bytes; reject absurd counts
    // before allocating.
    let min_record = 8 + 4 * dim as u64;
    if count.saturating_mul(min_record) > r.bytes.len() as u64 {
        return Err(CacheError::Truncated);
    }
    let mut records = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let id_len = r.u32()? as usize;
        let node_id = String::from_utf8(r.take(id_len)?.to_vec()).map_err(|_| CacheError::InvalidUtf8)?;
        let kind_code = r.u8()?;
        let kind = EntityKind::from_code(kind_code).ok_or(CacheError::InvalidEntityKind(kind_code))?;
        let field_kind = r.u8()?;
        let alt_index = r.u16()?;
        let field = FieldTag::from_parts(field_kind, alt_index).ok_or(CacheError::InvalidFieldTag {
            kind: field_kind,
            index: alt_index,
        })?;
        let raw = r.take(4 * dim)?;
        let values: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let vector = EmbeddingVector::new(values).map_err(|_| CacheError::NonFiniteValue)?;
        records.push(EmbeddingRecord {
            node_id,
            kind,
            field,
            vector,
        });
    }
    if !r.bytes.is_empty() {
        return Err(CacheError::TrailingBytes(r.bytes.len()));
    }
    Ok(CacheContents {
        normalized,
        dim,
        records,
    })
}
