//! Artifact files. Reports are deterministic; wall-clock data goes to a
//! separate `metadata.json`.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use blockjacobi::export::to_json_string;
use blockjacobi::Result;
use serde::Serialize;

pub struct Output {
    dir: PathBuf,
    written: Vec<String>,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Output {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Subdirectory sharing the file list.
    pub fn child(&self, name: &str) -> Result<Output> {
        Output::new(&self.dir.join(name))
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        self.text(name, &to_json_string(value)?)
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, body)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    /// Writes `metadata.json` with the command, exit code and a timestamp.
    pub fn metadata(&mut self, command: &str, exit_code: i32) -> Result<()> {
        let ts = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        let meta = serde_json::json!({
            "command": command,
            "exit_code": exit_code,
            "files": self.written,
            "timestamp_unix": ts,
            "version": env!("CARGO_PKG_VERSION"),
        });
        std::fs::write(
            self.dir.join("metadata.json"),
            serde_json::to_string_pretty(&meta)? + "\n",
        )?;
        Ok(())
    }
}
