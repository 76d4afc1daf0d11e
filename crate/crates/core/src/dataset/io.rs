//! Sample directory layout:
//!
//! | file              | contents                                                     |
//! |-------------------|--------------------------------------------------------------|
//! | `complete.ply`    | X, binary little-endian `double` x y z nx ny nz              |
//! | `partial.ply`     | Y, same encoding                                             |
//! | `gt_deformed.ply` | deformed position of every X point (Y frame), x y z only     |
//! | `gt_matches.json` | `[[i, j], ...]`, one pair per Y point in ascending `j`       |
//! | `meta.json`       | [`SampleMeta`], pretty-printed                               |

use super::{gt_overlap_labels, DatasetSample, SampleMeta};
use crate::error::{Error, Result};
use crate::geometry::{read_ply_cloud, write_ply_cloud, PlyEncoding, PointCloud};
use std::fs;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T, pretty: bool) -> Result<()> {
    let mut text = if pretty {
        serde_json::to_string_pretty(value)
    } else {
        serde_json::to_string(value)
    }
    .map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn write_sample(sample: &DatasetSample, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_ply_cloud(dir.join("complete.ply"), &sample.complete, None, PlyEncoding::BinaryF64)?;
    write_ply_cloud(dir.join("partial.ply"), &sample.partial, None, PlyEncoding::BinaryF64)?;
    write_ply_cloud(
        dir.join("gt_deformed.ply"),
        &PointCloud::new(sample.gt_deformed.clone()),
        None,
        PlyEncoding::BinaryF64,
    )?;
    write_json(&dir.join("gt_matches.json"), &sample.gt_matches, false)?;
    write_json(&dir.join("meta.json"), &sample.meta, true)
}

fn required(dir: &Path, name: &str) -> Result<std::path::PathBuf> {
    let p = dir.join(name);
    if p.is_file() {
        Ok(p)
    } else {
        Err(Error::Schema(format!("{}: missing {name}", dir.display())))
    }
}

pub fn read_sample(dir: impl AsRef<Path>) -> Result<DatasetSample> {
    let dir = dir.as_ref();
    let meta_path = required(dir, "meta.json")?;
    let raw: serde_json::Value = read_json(&meta_path)?;
    match raw.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        other => {
            return Err(Error::Schema(format!(
                "{}: schema_version {other:?}, expected {SCHEMA_VERSION}",
                meta_path.display()
            )))
        }
    }
    let meta: SampleMeta = serde_json::from_value(raw).map_err(|e| Error::Json {
        path: meta_path,
        source: e,
    })?;
    let complete = read_ply_cloud(required(dir, "complete.ply")?)?;
    let partial = read_ply_cloud(required(dir, "partial.ply")?)?;
    let gt_deformed = read_ply_cloud(required(dir, "gt_deformed.ply")?)?.points;
    let gt_matches: Vec<[usize; 2]> = read_json(&required(dir, "gt_matches.json")?)?;
    let mut sample = DatasetSample {
        complete,
        partial,
        gt_matches,
        gt_overlap_x: Vec::new(),
        gt_overlap_y: Vec::new(),
        gt_deformed,
        meta,
    };
    if sample.gt_matches.iter().any(|&[i, _]| i >= sample.complete.len()) {
        return Err(Error::Schema(format!("{}: match index out of range", dir.display())));
    }
    (sample.gt_overlap_x, sample.gt_overlap_y) = gt_overlap_labels(&sample);
    sample.validate().map_err(|e| Error::Schema(format!("{}: {e}", dir.display())))?;
    Ok(sample)
}
