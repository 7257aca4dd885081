//! Atomic file output with JSON metadata sidecars.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use qwalknet::io::Metadata;

pub struct OutDir {
    dir: PathBuf,
    config: serde_json::Value,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(dir: &Path, config: &impl Serialize) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(OutDir { dir: dir.to_path_buf(), config: serde_json::to_value(config)?, written: Vec::new() })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Writes `name` through a temporary file in the same directory, then renames it.
    pub fn write_with<F>(&mut self, name: &str, body: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut dyn Write) -> Result<()>,
    {
        let path = self.dir.join(name);
        let tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            body(&mut w)?;
            w.flush()?;
        }
        tmp.as_file().sync_all()?;
        tmp.persist(&path).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Data file plus `<name>.meta.json`.
    pub fn write_data<F>(
        &mut self,
        name: &str,
        schema: &str,
        columns: &[&str],
        extra: serde_json::Value,
        body: F,
    ) -> Result<PathBuf>
    where
        F: FnOnce(&mut dyn Write) -> Result<()>,
    {
        let path = self.write_with(name, body)?;
        let meta = Metadata::new(schema, columns, self.config.clone()).with_extra(extra);
        self.write_json(&format!("{name}.meta.json"), &meta)?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    /// JSON result file plus sidecar.
    pub fn write_result<T: Serialize>(&mut self, name: &str, schema: &str, value: &T) -> Result<PathBuf> {
        let path = self.write_json(name, value)?;
        let meta = Metadata::new(schema, &[], self.config.clone());
        self.write_json(&format!("{name}.meta.json"), &meta)?;
        Ok(path)
    }
}
