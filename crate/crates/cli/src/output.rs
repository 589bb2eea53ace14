//! Files, locks and the worker pool.

use std::fs::{self, OpenOptions};
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;

pub const LOCK_NAME: &str = ".gibbsfit.lock";

/// Sizes the global rayon pool from `GIBBSFIT_THREADS`, if set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("GIBBSFIT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("GIBBSFIT_THREADS must be a positive integer, got `{raw}`"))?;
    if n == 0 {
        bail!("GIBBSFIT_THREADS must be a positive integer, got 0");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the worker pool")?;
    Ok(())
}

/// Advisory lock on an output directory, released on drop.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(LOCK_NAME);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self { path }),
            Err(e) if e.kind() == ErrorKind::AlreadyExists => bail!(
                "{} is locked by another gibbsfit run (remove {} if that run is gone)",
                dir.display(),
                path.display()
            ),
            Err(e) => Err(e).with_context(|| format!("creating {}", path.display())),
        }
    }

    /// Locks the directory that will hold `file`.
    pub fn for_file(file: &Path) -> Result<Self> {
        let parent = match file.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        Self::acquire(parent)
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value = gibbsfit::io::from_json_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(value)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn normalized(p: &Path) -> PathBuf {
    if let Ok(c) = p.canonicalize() {
        return c;
    }
    // not there yet: resolve the parent and keep the final component
    match (p.parent(), p.file_name()) {
        (Some(parent), Some(name)) if !parent.as_os_str().is_empty() => match parent.canonicalize() {
            Ok(c) => c.join(name),
            Err(_) => p.to_path_buf(),
        },
        (_, Some(name)) => std::env::current_dir().map(|d| d.join(name)).unwrap_or_else(|_| p.to_path_buf()),
        _ => p.to_path_buf(),
    }
}

/// Refuses to write over any of the inputs.
pub fn ensure_distinct(inputs: &[&Path], outputs: &[&Path]) -> Result<()> {
    for o in outputs {
        let on = normalized(o);
        for i in inputs {
            if normalized(i) == on {
                bail!("output {} would overwrite an input", o.display());
            }
        }
    }
    Ok(())
}

/// Writes each `(name, contents)` into `dir`.
pub fn write_all(dir: &Path, files: &[(String, String)]) -> Result<()> {
    for (name, text) in files {
        write_text(&dir.join(name), text)?;
    }
    Ok(())
}
