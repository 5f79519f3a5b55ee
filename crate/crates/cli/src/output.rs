//! Output files are staged in memory and written only once the command has
//! succeeded. Each file goes to a temporary sibling first and is renamed
//! into place, so a failed command leaves no partial output behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

#[derive(Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
    inputs: Vec<PathBuf>,
}

impl Outputs {
    /// Remembers an input so it can never be overwritten.
    pub fn protect(&mut self, input: &Path) {
        self.inputs.push(input.to_path_buf());
    }

    pub fn add(&mut self, path: impl Into<PathBuf>, bytes: impl Into<Vec<u8>>) {
        self.files.push((path.into(), bytes.into()));
    }

    pub fn json<T: serde::Serialize>(&mut self, path: impl Into<PathBuf>, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.add(path, text);
        Ok(())
    }

    /// Fails before touching the filesystem if any output would replace an
    /// input file.
    pub fn check_inputs(&self) -> Result<()> {
        for (out, _) in &self.files {
            for input in &self.inputs {
                if same_file(out, input) {
                    bail!("output {} would overwrite input {}", out.display(), input.display());
                }
            }
        }
        Ok(())
    }

    pub fn commit(self) -> Result<Vec<PathBuf>> {
        self.check_inputs()?;
        let mut written = Vec::with_capacity(self.files.len());
        for (path, bytes) in self.files {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
                _ => PathBuf::from("."),
            };
            std::fs::create_dir_all(&dir)
                .with_context(|| format!("cannot create {}", dir.display()))?;
            let mut tmp = tempfile::NamedTempFile::new_in(&dir)
                .with_context(|| format!("cannot stage a file in {}", dir.display()))?;
            tmp.write_all(&bytes)?;
            tmp.persist(&path)
                .with_context(|| format!("cannot write {}", path.display()))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}
