//! Binary codec files.
//!
//! Layout, all little-endian: magic `BMPC`, `u32` version, `u32` P, `u32` C,
//! 32-byte SHA-256 of the parameter bytes, then `P²` f32 mean values and
//! `C·P²` f32 basis values row-major.

use std::path::Path;

use super::pca::parameter_bytes;
use super::{CodecError, LatentCodec, PcaCodec, Result};

pub const CODEC_MAGIC: &[u8; 4] = b"BMPC";
pub const CODEC_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 32;

impl PcaCodec {
    pub fn to_bytes(&self) -> Vec<u8> {
        let params = parameter_bytes(self.mean(), self.basis());
        let hash = hex::decode(self.codec_id()).expect("codec id is hex");
        let mut out = Vec::with_capacity(HEADER_LEN + params.len());
        out.extend_from_slice(CODEC_MAGIC);
        out.extend_from_slice(&CODEC_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.patch_size() as u32).to_le_bytes());
        out.extend_from_slice(&(self.channels() as u32).to_le_bytes());
        out.extend_from_slice(&hash);
        out.extend_from_slice(&params);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(CodecError::SchemaError(format!(
                "{} bytes is shorter than the header",
                bytes.len()
            )));
        }
        if &bytes[..4] != CODEC_MAGIC {
            return Err(CodecError::SchemaError("bad magic".into()));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        let version = word(4);
        if version != CODEC_VERSION {
            return Err(CodecError::SchemaError(format!("unsupported version {version}")));
        }
        let (p, c) = (word(8) as usize, word(12) as usize);
        let d = p
            .checked_mul(p)
            .ok_or_else(|| CodecError::SchemaError("patch size overflow".into()))?;
        if p == 0 || c == 0 || c > d {
            return Err(CodecError::SchemaError(format!("invalid geometry P={p}, C={c}")));
        }
        let body = &bytes[HEADER_LEN..];
        let expected = (d + c * d) * 4;
        if body.len() != expected {
            return Err(CodecError::SchemaError(format!(
                "body has {} bytes, expected {expected}",
                body.len()
            )));
        }
        let stored = hex::encode(&bytes[16..HEADER_LEN]);
        let computed = crate::io_util::sha256_hex(body);
        if stored != computed {
            return Err(CodecError::HashMismatch { stored, computed });
        }
        let floats: Vec<f32> = body
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let (mean, basis) = floats.split_at(d);
        PcaCodec::from_parts(p, c, mean.to_vec(), basis.to_vec())
    }
}

pub fn save_codec(codec: &PcaCodec, path: impl AsRef<Path>) -> Result<()> {
    crate::io_util::write_atomic(path.as_ref(), &codec.to_bytes())?;
    Ok(())
}

pub fn load_codec(path: impl AsRef<Path>) -> Result<PcaCodec> {
    PcaCodec::from_bytes(&std::fs::read(path)?)
}
