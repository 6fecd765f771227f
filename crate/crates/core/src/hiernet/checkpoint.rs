//! Binary checkpoint container.
//!
//! Layout (all integers little-endian `u32`):
//!
//! ```text
//! b"HSCK" | version | manifest_len | manifest JSON
//! entry_count | { name_len | name | frozen u8 | ndim | dims.. | f32 data.. }*
//! ```

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndgrad::Tensor;
use crate::textproc::{BpeModel, Segmentation, TextCodec, Vocabulary};

use super::config::ModelConfig;
use super::model::HierModel;
use super::params::{ParamEntry, ParamGroup, Parameters};

const MAGIC: &[u8; 4] = b"HSCK";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format_version: u32,
    config: ModelConfig,
    segmentation: Segmentation,
    vocabulary: String,
    merges: Option<String>,
    vocab_fingerprint: String,
}

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Data(format!("value {v} does not fit a checkpoint field")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

pub fn to_bytes(model: &HierModel) -> Result<Vec<u8>> {
    let codec = &model.codec;
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        config: model.config.clone(),
        segmentation: codec.segmentation(),
        vocabulary: codec.vocab.to_file_string(),
        merges: codec.bpe.as_ref().map(BpeModel::to_file_string),
        vocab_fingerprint: codec.fingerprint(),
    };
    let json = serde_json::to_vec(&manifest)?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, FORMAT_VERSION as usize)?;
    put_u32(&mut out, json.len())?;
    out.extend_from_slice(&json);
    let params = &model.params;
    put_u32(&mut out, params.len())?;
    for e in params.entries() {
        put_u32(&mut out, e.name.len())?;
        out.extend_from_slice(e.name.as_bytes());
        out.push(params.is_frozen(e.group) as u8);
        put_u32(&mut out, e.tensor.shape().len())?;
        for &dim in e.tensor.shape() {
            put_u32(&mut out, dim)?;
        }
        for &x in e.tensor.data() {
            out.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Data(format!("checkpoint truncated at byte {}", self.at)))?;
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<HierModel> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Data("not a checkpoint file".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION as usize {
        return Err(Error::Data(format!("unsupported checkpoint version {version}")));
    }
    let len = r.u32()?;
    let manifest: Manifest =
        serde_json::from_slice(r.take(len)?).map_err(|e| Error::Data(format!("checkpoint manifest: {e}")))?;
    let config = manifest.config;
    config.validate()?;

    let vocab = Vocabulary::from_file_string(&manifest.vocabulary)?;
    let bpe = match (manifest.segmentation, manifest.merges) {
        (Segmentation::Word, None) => None,
        (Segmentation::Bpe, Some(m)) => Some(BpeModel::from_file_string(&m)?),
        _ => return Err(Error::Data("checkpoint segmentation and merge list disagree".into())),
    };
    let codec = TextCodec { bpe, vocab };
    if codec.fingerprint() != manifest.vocab_fingerprint {
        return Err(Error::Data("checkpoint vocabulary fingerprint mismatch".into()));
    }
    if codec.vocab.len() != config.vocab_size {
        return Err(Error::Data(format!(
            "checkpoint vocabulary has {} entries, config says {}",
            codec.vocab.len(),
            config.vocab_size
        )));
    }

    let groups: std::collections::HashMap<String, ParamGroup> = Parameters::expected_shapes(&config)
        .into_iter()
        .map(|(name, group, _)| (name, group))
        .collect();
    let count = r.u32()?;
    let mut entries = Vec::with_capacity(count);
    let mut frozen = BTreeSet::new();
    for _ in 0..count {
        let n = r.u32()?;
        let name = String::from_utf8(r.take(n)?.to_vec()).map_err(|_| Error::Data("parameter name is not UTF-8".into()))?;
        let group = *groups
            .get(&name)
            .ok_or_else(|| Error::Data(format!("unexpected parameter {name}")))?;
        if r.take(1)?[0] != 0 {
            frozen.insert(group);
        }
        let ndim = r.u32()?;
        let shape = (0..ndim).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let numel: usize = shape.iter().product();
        let raw = r.take(numel.checked_mul(4).ok_or_else(|| Error::Data(format!("parameter {name} too large")))?)?;
        let data = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
            .collect();
        let tensor = Tensor::new(shape, data).map_err(|e| Error::Data(format!("parameter {name}: {e}")))?;
        entries.push(ParamEntry { name, group, tensor });
    }
    if r.at != bytes.len() {
        return Err(Error::Data("trailing bytes after checkpoint entries".into()));
    }
    let params = Parameters::from_entries(entries, frozen);
    params.validate(&config)?;
    Ok(HierModel { config, params, codec })
}

pub fn save(model: &HierModel, path: &Path) -> Result<()> {
    crate::io::write_atomic(path, &to_bytes(model)?)
}

pub fn load(path: &Path) -> Result<HierModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    from_bytes(&bytes)
}
