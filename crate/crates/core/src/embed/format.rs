//! Record files shared by embeddings (`EMB1`) and posteriors (`POS1`).
//!
//! Binary layout, little-endian: 4-byte magic, `u32` dim, `u32` count, then
//! per record a `u16` id length, the UTF-8 id, and `dim` f32 values.
//! Files that do not start with a known magic are read as CSV with rows
//! `id,v1,…,vD`; lines starting with `#` are skipped.

use std::path::Path;

use super::{ClassPosterior, EmbedError, Embedding, EmbeddingSet, Modality, PosteriorSet, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordKind {
    Embedding,
    Posterior,
}

impl RecordKind {
    pub fn magic(self) -> &'static [u8; 4] {
        match self {
            RecordKind::Embedding => b"EMB1",
            RecordKind::Posterior => b"POS1",
        }
    }

    fn from_magic(m: &[u8]) -> Option<Self> {
        match m {
            b"EMB1" => Some(RecordKind::Embedding),
            b"POS1" => Some(RecordKind::Posterior),
            _ => None,
        }
    }
}

/// Raw file contents, before any normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordSet {
    pub kind: RecordKind,
    pub dim: usize,
    pub records: Vec<(String, Vec<f32>)>,
}

pub fn write_records(set: &RecordSet) -> Result<Vec<u8>> {
    let dim = u32::try_from(set.dim).map_err(|_| EmbedError::SchemaError("dim too large".into()))?;
    let count = u32::try_from(set.records.len())
        .map_err(|_| EmbedError::SchemaError("too many records".into()))?;
    let mut out = Vec::with_capacity(12 + set.records.len() * (8 + set.dim * 4));
    out.extend_from_slice(set.kind.magic());
    out.extend_from_slice(&dim.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    for (id, values) in &set.records {
        if values.len() != set.dim {
            return Err(EmbedError::DimMismatch {
                id: id.clone(),
                expected: set.dim,
                got: values.len(),
            });
        }
        let len = u16::try_from(id.len())
            .map_err(|_| EmbedError::SchemaError(format!("id {id:?} longer than 65535 bytes")))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(id.as_bytes());
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.bytes.get(self.at..self.at.checked_add(n)?)?;
        self.at += n;
        Some(s)
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.at
    }
}

/// Parses a binary record file.
pub fn read_records(bytes: &[u8]) -> Result<RecordSet> {
    let truncated = || EmbedError::SchemaError("file truncated".into());
    let mut cur = Cursor { bytes, at: 0 };
    let kind = cur
        .take(4)
        .and_then(RecordKind::from_magic)
        .ok_or_else(|| EmbedError::SchemaError("unknown magic".into()))?;
    let word = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap()) as usize;
    let dim = word(cur.take(4).ok_or_else(truncated)?);
    let count = word(cur.take(4).ok_or_else(truncated)?);
    let mut records = Vec::with_capacity(count.min(1 << 20));
    for i in 0..count {
        let len = cur.take(2).ok_or_else(truncated)?;
        let len = u16::from_le_bytes([len[0], len[1]]) as usize;
        let id = cur.take(len).ok_or_else(truncated)?;
        let id = std::str::from_utf8(id)
            .map_err(|_| EmbedError::SchemaError(format!("record {i} id is not UTF-8")))?
            .to_string();
        let Some(raw) = cur.take(dim * 4) else {
            let left = cur.remaining();
            if i + 1 == count && left % 4 == 0 {
                return Err(EmbedError::DimMismatch {
                    id,
                    expected: dim,
                    got: left / 4,
                });
            }
            return Err(truncated());
        };
        let values = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        records.push((id, values));
    }
    if cur.remaining() != 0 {
        return Err(EmbedError::SchemaError(format!(
            "{} trailing bytes after {count} records",
            cur.remaining()
        )));
    }
    Ok(RecordSet {
        kind,
        dim,
        records,
    })
}

fn read_csv(bytes: &[u8], kind: RecordKind) -> Result<RecordSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut dim = None;
    let mut records = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| EmbedError::SchemaError(format!("csv: {e}")))?;
        let mut fields = row.iter();
        let id = fields
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| EmbedError::SchemaError(format!("csv row {line} has no id")))?
            .to_string();
        let values = fields
            .map(|f| {
                f.parse::<f32>().map_err(|_| {
                    EmbedError::SchemaError(format!("csv row {line}: {f:?} is not a number"))
                })
            })
            .collect::<Result<Vec<f32>>>()?;
        let expected = *dim.get_or_insert(values.len());
        if values.len() != expected {
            return Err(EmbedError::DimMismatch {
                id,
                expected,
                got: values.len(),
            });
        }
        records.push((id, values));
    }
    let dim = dim.ok_or_else(|| EmbedError::SchemaError("empty csv".into()))?;
    if dim == 0 {
        return Err(EmbedError::SchemaError("csv rows carry no values".into()));
    }
    Ok(RecordSet {
        kind,
        dim,
        records,
    })
}

fn read_any(bytes: &[u8], want: RecordKind) -> Result<RecordSet> {
    let set = match bytes.get(..4).and_then(RecordKind::from_magic) {
        Some(_) => read_records(bytes)?,
        None => read_csv(bytes, want)?,
    };
    if set.kind != want {
        return Err(EmbedError::SchemaError(format!(
            "expected a {:?} file, found {:?}",
            want, set.kind
        )));
    }
    Ok(set)
}

pub fn parse_embedding_set<S: Real>(bytes: &[u8], modality: Modality) -> Result<EmbeddingSet<S>> {
    let raw = read_any(bytes, RecordKind::Embedding)?;
    let mut set = EmbeddingSet::new(raw.dim);
    for (id, values) in raw.records {
        let vector = values.into_iter().map(|v| S::lit(f64::from(v))).collect();
        set.insert(Embedding::new(id, modality, vector)?)?;
    }
    Ok(set)
}

pub fn parse_posterior_set(bytes: &[u8]) -> Result<PosteriorSet> {
    let raw = read_any(bytes, RecordKind::Posterior)?;
    let mut set = PosteriorSet::new(raw.dim);
    for (id, values) in raw.records {
        set.insert(ClassPosterior::new(id, values.into_iter().map(f64::from).collect())?)?;
    }
    Ok(set)
}

pub fn load_embedding_set<S: Real>(path: impl AsRef<Path>, modality: Modality) -> Result<EmbeddingSet<S>> {
    parse_embedding_set(&std::fs::read(path)?, modality)
}

pub fn load_posterior_set(path: impl AsRef<Path>) -> Result<PosteriorSet> {
    parse_posterior_set(&std::fs::read(path)?)
}

/// Writes the binary format with values rounded to f32.
pub fn save_embedding_set<S: Real>(set: &EmbeddingSet<S>, path: impl AsRef<Path>) -> Result<()> {
    let raw = RecordSet {
        kind: RecordKind::Embedding,
        dim: set.dim(),
        records: set
            .iter()
            .map(|e| (e.id.clone(), e.vector.iter().map(|v| v.as_f32()).collect()))
            .collect(),
    };
    crate::io_util::write_atomic(path.as_ref(), &write_records(&raw)?)?;
    Ok(())
}

pub fn save_posterior_set(set: &PosteriorSet, path: impl AsRef<Path>) -> Result<()> {
    let raw = RecordSet {
        kind: RecordKind::Posterior,
        dim: set.k(),
        records: set
            .iter()
            .map(|p| (p.id.clone(), p.probs.iter().map(|&v| v as f32).collect()))
            .collect(),
    };
    crate::io_util::write_atomic(path.as_ref(), &write_records(&raw)?)?;
    Ok(())
}
