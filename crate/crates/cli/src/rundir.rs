//! Run directories and their manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use dnls_core::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub run_id: String,
    pub kind: String,
    pub config_sha256: String,
    pub code_version: String,
    pub seed: Option<u64>,
    pub started_unix: u64,
    pub wall_seconds: f64,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// An output directory that is filled and then sealed by its manifest.
pub struct RunDir {
    pub id: String,
    pub root: PathBuf,
    kind: String,
    started: Instant,
    started_unix: u64,
}

impl RunDir {
    /// Creates `parent/id`, or `parent/id-2`, `-3`, ... if taken.
    pub fn create(parent: &Path, id: &str, kind: &str) -> Result<Self> {
        fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
        let mut n = 1;
        let (id, root) = loop {
            let candidate = if n == 1 {
                id.to_string()
            } else {
                format!("{id}-{n}")
            };
            let root = parent.join(&candidate);
            match fs::create_dir(&root) {
                Ok(()) => break (candidate, root),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => n += 1,
                Err(e) => return Err(io(&root, e)),
            }
        };
        Ok(Self {
            id,
            root,
            kind: kind.into(),
            started: Instant::now(),
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn write(&self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let p = self.path(rel);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        }
        let mut f = fs::File::create(&p).map_err(|e| io(&p, e))?;
        f.write_all(bytes).map_err(|e| io(&p, e))?;
        Ok(p)
    }

    /// Writes the manifest listing every file under the directory.
    pub fn seal(self, config_text: &str, seed: Option<u64>) -> Result<PathBuf> {
        let mut files = Vec::new();
        collect(&self.root, &self.root, &mut files)?;
        files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = RunManifest {
            run_id: self.id.clone(),
            kind: self.kind.clone(),
            config_sha256: sha256_hex(config_text.as_bytes()),
            code_version: env!("CARGO_PKG_VERSION").into(),
            seed,
            started_unix: self.started_unix,
            wall_seconds: self.started.elapsed().as_secs_f64(),
            files,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        self.write(MANIFEST, text.as_bytes())?;
        Ok(self.root)
    }
}

fn collect(root: &Path, dir: &Path, out: &mut Vec<FileEntry>) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(|e| io(dir, e))? {
        let p = entry.map_err(|e| io(dir, e))?.path();
        if p.is_dir() {
            collect(root, &p, out)?;
        } else {
            let rel = p.strip_prefix(root).expect("inside root");
            if rel == Path::new(MANIFEST) {
                continue;
            }
            let bytes = fs::read(&p).map_err(|e| io(&p, e))?;
            out.push(FileEntry {
                path: rel.to_string_lossy().replace('\\', "/"),
                bytes: bytes.len() as u64,
                sha256: sha256_hex(&bytes),
            });
        }
    }
    Ok(())
}

/// Full double precision, locale independent.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}
