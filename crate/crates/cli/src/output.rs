//! Output directory handling and the hashed manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub struct OutDir {
    root: PathBuf,
}

#[derive(Debug, Serialize)]
struct ManifestEntry {
    path: String,
    bytes: u64,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    /// Seconds since the epoch; the only field that changes between
    /// identical runs.
    created_unix: u64,
    files: Vec<ManifestEntry>,
}

pub const MANIFEST: &str = "manifest.json";

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)?;
        Ok(OutDir { root: root.to_path_buf() })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write(
        &self,
        name: &str,
        body: impl FnOnce(&mut dyn Write) -> Result<(), CliError>,
    ) -> Result<PathBuf, CliError> {
        let path = self.root.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        body(&mut w)?;
        w.flush()?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    /// Hashes every file below the root except the manifest itself.
    pub fn write_manifest(&self, command: &str) -> Result<PathBuf, CliError> {
        let mut files = Vec::new();
        for entry in walkdir::WalkDir::new(&self.root).sort_by_file_name() {
            let entry = entry.map_err(|e| CliError::Io(e.into()))?;
            if !entry.file_type().is_file() {
                continue;
            }
            let rel = entry.path().strip_prefix(&self.root).unwrap_or(entry.path());
            if rel == Path::new(MANIFEST) {
                continue;
            }
            let bytes = std::fs::read(entry.path())?;
            files.push(ManifestEntry {
                path: rel.to_string_lossy().replace('\\', "/"),
                bytes: bytes.len() as u64,
                sha256: hex::encode(Sha256::digest(&bytes)),
            });
        }
        let created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        self.write_json(MANIFEST, &Manifest { command, created_unix, files })
    }
}
