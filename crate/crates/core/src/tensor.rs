//! Binary tensor container used for feature and weight files.
//!
//! Layout: the 8 bytes `PSRGTNSR`, a little-endian `u64` header length, a JSON
//! header `[{"name", "shape", "dtype": "f32", "offset"}, ...]` (offsets are
//! relative to the first data byte), then raw little-endian `f32` data.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const MAGIC: &[u8; 8] = b"PSRGTNSR";

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::InvalidInput(format!(
                "shape {shape:?} does not hold {} values",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    /// Row-major copy of a matrix.
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for r in m.row_iter() {
            data.extend(r.iter().map(|&v| v as f32));
        }
        Self {
            shape: vec![m.nrows(), m.ncols()],
            data,
        }
    }

    /// Interprets a 2-D tensor (or 1-D as a single row) as a matrix.
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        let (r, c) = match self.shape[..] {
            [r, c] => (r, c),
            [c] => (1, c),
            [] => (1, 1),
            _ => return Err(Error::Schema(format!("expected a matrix, got shape {:?}", self.shape))),
        };
        Ok(DMatrix::from_row_iterator(r, c, self.data.iter().map(|&v| v as f64)))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    name: String,
    shape: Vec<usize>,
    dtype: String,
    offset: usize,
}

pub fn encode_tensors(tensors: &BTreeMap<String, Tensor>) -> Vec<u8> {
    let mut entries = Vec::new();
    let mut offset = 0;
    for (name, t) in tensors {
        entries.push(Entry {
            name: name.clone(),
            shape: t.shape.clone(),
            dtype: "f32".into(),
            offset,
        });
        offset += 4 * t.data.len();
    }
    let header = serde_json::to_vec(&entries).expect("header serializes");
    let mut out = Vec::with_capacity(16 + header.len() + offset);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for t in tensors.values() {
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_tensors(bytes: &[u8], path: &Path) -> Result<BTreeMap<String, Tensor>> {
    let err = |m: String| Error::Schema(format!("{}: {m}", path.display()));
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(err("not a tensor file (bad magic)".into()));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let header = bytes
        .get(16..16usize.saturating_add(hlen))
        .ok_or_else(|| err("truncated header".into()))?;
    let entries: Vec<Entry> = serde_json::from_slice(header).map_err(|e| err(format!("header: {e}")))?;
    let data = &bytes[16 + hlen..];
    let mut out = BTreeMap::new();
    for e in entries {
        if e.dtype != "f32" {
            return Err(err(format!("tensor {}: unsupported dtype {}", e.name, e.dtype)));
        }
        let n: usize = e.shape.iter().product();
        let raw = e
            .offset
            .checked_add(4 * n)
            .and_then(|end| data.get(e.offset..end))
            .ok_or_else(|| err(format!("tensor {} runs past the end of the file", e.name)))?;
        let values: Vec<f32> = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(err(format!("tensor {} has non-finite values", e.name)));
        }
        if out.insert(e.name.clone(), Tensor { shape: e.shape, data: values }).is_some() {
            return Err(err(format!("duplicate tensor {}", e.name)));
        }
    }
    Ok(out)
}

pub fn write_tensors(path: impl AsRef<Path>, tensors: &BTreeMap<String, Tensor>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_tensors(tensors)).map_err(|e| Error::io(path, e))
}

pub fn read_tensors(path: impl AsRef<Path>) -> Result<BTreeMap<String, Tensor>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tensors(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> BTreeMap<String, Tensor> {
        let mut m = BTreeMap::new();
        m.insert("b".into(), Tensor::new(vec![2], vec![1.5, -2.0]).unwrap());
        m.insert("a".into(), Tensor::new(vec![1, 3], vec![0.0, 1.0, 2.0]).unwrap());
        m
    }

    #[test]
    fn layout_is_documented_bytes() {
        let bytes = encode_tensors(&sample());
        let header = br#"[{"name":"a","shape":[1,3],"dtype":"f32","offset":0},{"name":"b","shape":[2],"dtype":"f32","offset":12}]"#;
        let mut want = b"PSRGTNSR".to_vec();
        want.extend_from_slice(&(header.len() as u64).to_le_bytes());
        want.extend_from_slice(header);
        for v in [0.0f32, 1.0, 2.0, 1.5, -2.0] {
            want.extend_from_slice(&v.to_le_bytes());
        }
        assert_eq!(bytes, want);
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.bin");
        write_tensors(&p, &sample()).unwrap();
        assert_eq!(read_tensors(&p).unwrap(), sample());
    }

    #[test]
    fn corrupt_files_rejected() {
        let p = Path::new("x");
        let good = encode_tensors(&sample());
        assert!(decode_tensors(b"NOTATENSORFILE!!", p).is_err());
        assert!(decode_tensors(&good[..good.len() - 1], p).is_err());
        let mut bad_len = good.clone();
        bad_len[8..16].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(decode_tensors(&bad_len, p).is_err());
    }

    #[test]
    fn matrix_conversion_is_row_major() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let t = Tensor::from_matrix(&m);
        assert_eq!(t.data, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(t.to_matrix().unwrap(), m);
    }
}
