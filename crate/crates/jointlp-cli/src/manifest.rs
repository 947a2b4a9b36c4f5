//! Run manifests: every output file gets a sibling `<file>.manifest.toml`
//! echoing the resolved configuration, tool version, seed and timestamps,
//! so results stay reproducible. Output files are written atomically
//! (temp file + rename).

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::FileConfig;

#[derive(Serialize)]
pub struct Manifest {
    tool: String,
    version: String,
    created_utc: String,
    seed: u64,
    outputs: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<FileConfig>,
}

impl Manifest {
    pub fn new(seed: u64, config: Option<&FileConfig>) -> Self {
        Self {
            tool: "jointlp".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            created_utc: chrono::Utc::now().to_rfc3339(),
            seed,
            outputs: Vec::new(),
            note: None,
            config: config.cloned(),
        }
    }

    pub fn with_output(mut self, path: &Path) -> Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    pub fn with_note(mut self, note: String) -> Self {
        self.note = Some(note);
        self
    }

    /// Writes `<output>.manifest.toml` next to the output file.
    pub fn write_for(&self, output: &Path) -> std::io::Result<()> {
        let mut path = output.as_os_str().to_owned();
        path.push(".manifest.toml");
        let text = toml::to_string_pretty(self)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        write_atomic(Path::new(&path), &text)
    }
}

/// Writes via a temporary sibling file and an atomic rename.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}
