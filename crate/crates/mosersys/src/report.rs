//! Artifact emission: field CSVs with metadata sidecars, JSON reports, and
//! the run manifest with content checksums. Every file a run writes goes
//! through one [`OutputDir`] sink, so the manifest is complete by
//! construction and no two workers ever interleave output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::grid::{Field, Grid, Shape};

/// Metadata sidecar accompanying every field CSV.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FieldMeta {
    pub shape: Shape,
    pub n: usize,
    pub h: f64,
}

/// Render a field as CSV with header `i,j,value`: one row per interior node
/// in storage order (row-major over the lattice). Values print in shortest
/// round-trip form, so identical fields give identical bytes.
pub fn field_csv(grid: &Grid, u: &Field) -> Result<String> {
    grid.check(u)?;
    let mut out = String::with_capacity(16 + 24 * u.len());
    out.push_str("i,j,value\n");
    for k in 0..u.len() {
        let (i, j) = grid.lattice_coords(k);
        let _ = writeln!(out, "{i},{j},{}", u.values()[k]);
    }
    Ok(out)
}

/// One emitted artifact as recorded in the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct ManifestFile {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Run manifest: the regime executed, the seed, every certificate checked
/// with its outcome, and every file written (checksummed). Written last, so
/// it never lists itself.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub regime: String,
    pub seed: u64,
    pub all_pass: bool,
    pub certificates: BTreeMap<String, bool>,
    pub files: Vec<ManifestFile>,
}

/// Single collector for a run's output directory.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<ManifestFile>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<OutputDir> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(OutputDir {
            root,
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Write one text artifact and record its checksum.
    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let bytes = text.as_bytes();
        fs::write(self.root.join(name), bytes)?;
        self.written.push(ManifestFile {
            name: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Serialize `value` as pretty JSON with a trailing newline.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    /// Field CSV plus its `<stem>.meta.json` sidecar.
    pub fn write_field(&mut self, grid: &Grid, u: &Field, name: &str) -> Result<()> {
        self.write_text(name, &field_csv(grid, u)?)?;
        let meta = FieldMeta {
            shape: grid.shape(),
            n: grid.n(),
            h: grid.h(),
        };
        let stem = name.strip_suffix(".csv").unwrap_or(name);
        self.write_json(&format!("{stem}.meta.json"), &meta)
    }

    /// Write `manifest.json` and return the manifest. Consumes the sink:
    /// nothing can be written after the manifest is sealed.
    pub fn finish(
        self,
        regime: &str,
        seed: u64,
        certificates: BTreeMap<String, bool>,
    ) -> Result<Manifest> {
        let mut files = self.written;
        files.sort_by(|a, b| a.name.cmp(&b.name));
        let manifest = Manifest {
            regime: regime.to_string(),
            seed,
            all_pass: certificates.values().all(|&ok| ok),
            certificates,
            files,
        };
        let mut text =
            serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
        text.push('\n');
        fs::write(self.root.join("manifest.json"), text)?;
        Ok(manifest)
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}
