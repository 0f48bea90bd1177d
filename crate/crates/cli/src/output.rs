use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;

/// Named outputs go to files under `dir`, or to standard output in order.
pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> Result<Self> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d).map_err(|e| io_error(e, d))?;
        }
        Ok(Self { dir })
    }

    pub fn has_dir(&self) -> bool {
        self.dir.is_some()
    }

    pub fn emit(&self, name: &str, bytes: &[u8]) -> Result<()> {
        match &self.dir {
            Some(d) => {
                let path = d.join(name);
                std::fs::write(&path, bytes).map_err(|e| io_error(e, &path))
            }
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes).and_then(|_| out.flush()).context("writing to standard output")
            }
        }
    }

    /// Like [`Sink::emit`], but only when writing to a directory.
    pub fn emit_file_only(&self, name: &str, bytes: &[u8]) -> Result<()> {
        if self.has_dir() {
            self.emit(name, bytes)
        } else {
            Ok(())
        }
    }

    pub fn emit_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.emit(name, text.as_bytes())
    }
}

fn io_error(e: std::io::Error, path: &std::path::Path) -> anyhow::Error {
    anyhow::Error::new(msve_core::Error::Io { path: path.to_owned(), source: e })
}
