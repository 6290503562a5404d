//! Binary field snapshots and the JSON manifest that indexes a sequence of
//! them.
//!
//! Layout: a 32-byte header (`b"EULB"`, `u16` version, `u16` dims, `u32`
//! points per axis, `u32` component count, 16 reserved zero bytes) followed
//! by each component's samples in row-major order as little-endian `f64`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, VelocityField};
use crate::grid::PeriodicGrid;

pub const MAGIC: &[u8; 4] = b"EULB";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 32;

pub fn write_components<W: Write>(mut w: W, components: &[&ScalarField]) -> Result<()> {
    let first = components
        .first()
        .ok_or_else(|| Error::Format("a snapshot needs at least one component".into()))?;
    let grid = *first.grid();
    for c in components {
        grid.ensure_same(c.grid())?;
    }
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(MAGIC);
    header[4..6].copy_from_slice(&VERSION.to_le_bytes());
    header[6..8].copy_from_slice(&(grid.dims() as u16).to_le_bytes());
    header[8..12].copy_from_slice(&(grid.n_per_axis() as u32).to_le_bytes());
    header[12..16].copy_from_slice(&(components.len() as u32).to_le_bytes());
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(grid.len() * 8);
    for c in components {
        buf.clear();
        for v in c.values() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_components<R: Read>(mut r: R) -> Result<(PeriodicGrid, Vec<ScalarField>)> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[0..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dims = u16::from_le_bytes([header[6], header[7]]) as usize;
    let n = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let count = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let grid = PeriodicGrid::new(dims, n).map_err(|e| Error::Format(format!("header: {e}")))?;
    let mut out = Vec::with_capacity(count);
    let mut bytes = vec![0u8; grid.len() * 8];
    for _ in 0..count {
        r.read_exact(&mut bytes)?;
        let values = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        out.push(ScalarField::new(grid, values)?);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after the last component".into()));
    }
    Ok((grid, out))
}

pub fn write_snapshot(path: &Path, components: &[&ScalarField]) -> Result<()> {
    write_components(BufWriter::new(File::create(path)?), components)
}

pub fn read_snapshot(path: &Path) -> Result<(PeriodicGrid, Vec<ScalarField>)> {
    read_components(BufReader::new(File::open(path)?))
}

pub fn write_velocity(path: &Path, u: &VelocityField) -> Result<()> {
    let c: Vec<&ScalarField> = u.components().iter().collect();
    write_snapshot(path, &c)
}

/// Reads a velocity snapshot; the divergence-free flag is not stored, so the
/// result is unflagged.
pub fn read_velocity(path: &Path) -> Result<VelocityField> {
    let (grid, comps) = read_snapshot(path)?;
    if comps.len() != grid.dims() {
        return Err(Error::Format(format!(
            "{} components for a {}-d velocity",
            comps.len(),
            grid.dims()
        )));
    }
    VelocityField::new(comps)
}

/// Index of a persisted trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotManifest {
    pub config_hash: String,
    /// Names of the stored components, in file order.
    pub components: Vec<String>,
    pub times: Vec<f64>,
    /// Snapshot file names relative to the manifest directory.
    pub files: Vec<String>,
    pub ledgers: BTreeMap<String, Vec<f64>>,
}

/// Writes one snapshot per entry of `frames` as `{prefix}_{index:05}.eulb`
/// in `dir` and returns the manifest (not yet written).
pub fn write_frames(
    dir: &Path,
    prefix: &str,
    config_hash: &str,
    components: &[&str],
    frames: &[(f64, Vec<&ScalarField>)],
) -> Result<SnapshotManifest> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(frames.len());
    for (i, (_, comps)) in frames.iter().enumerate() {
        if comps.len() != components.len() {
            return Err(Error::Format("component names do not match the frame".into()));
        }
        let name = format!("{prefix}_{i:05}.eulb");
        write_snapshot(&dir.join(&name), comps)?;
        files.push(name);
    }
    Ok(SnapshotManifest {
        config_hash: config_hash.to_string(),
        components: components.iter().map(|s| s.to_string()).collect(),
        times: frames.iter().map(|f| f.0).collect(),
        files,
        ledgers: BTreeMap::new(),
    })
}

impl SnapshotManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        f.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }

    pub fn paths(&self, dir: &Path) -> Vec<PathBuf> {
        self.files.iter().map(|f| dir.join(f)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let g = PeriodicGrid::new(2, 8).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0] - 2.0 * x[1]);
        let mut buf = Vec::new();
        write_components(&mut buf, &[&f, &f]).unwrap();
        assert_eq!(buf.len(), 32 + 2 * 64 * 8);
        assert_eq!(&buf[0..4], b"EULB");
        assert_eq!(u16::from_le_bytes([buf[4], buf[5]]), 1);
        assert_eq!(u16::from_le_bytes([buf[6], buf[7]]), 2);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 8);
        assert_eq!(u32::from_le_bytes(buf[12..16].try_into().unwrap()), 2);
        assert!(buf[16..32].iter().all(|&b| b == 0));
        assert_eq!(f64::from_le_bytes(buf[32..40].try_into().unwrap()), f.values()[0]);
    }

    #[test]
    fn rejects_truncated_and_trailing() {
        let g = PeriodicGrid::new(2, 8).unwrap();
        let f = ScalarField::constant(g, 1.0);
        let mut buf = Vec::new();
        write_components(&mut buf, &[&f]).unwrap();
        assert!(read_components(&buf[..buf.len() - 1]).is_err());
        let mut long = buf.clone();
        long.push(0);
        assert!(read_components(&long[..]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_components(&bad[..]), Err(Error::Format(_))));
    }
}
