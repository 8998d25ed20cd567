//! Output-directory handling: atomic writes and versioned CSV headers.
//!
//! Every artifact is written to a hidden temporary file in the target
//! directory and renamed into place, so readers never observe a partial
//! file and a crashed run leaves its earlier artifacts intact. The tracker
//! remembers what was finalized; when a later write fails, the error
//! message flags those paths as partial results of an aborted run.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Tool name and version, stamped into every output schema.
pub const TOOL_VERSION: &str = concat!("gradmcmc-cli v", env!("CARGO_PKG_VERSION"));

/// Comment line opening each CSV artifact, naming the tool version and the
/// schema so downstream parsers can pin what they read.
pub fn csv_header(schema: &str) -> String {
    format!("# {TOOL_VERSION} {schema} schema v1\n")
}

/// Shortest-roundtrip decimal form of a float, for deterministic CSV cells.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// An output directory plus the artifacts already finalized in it.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    /// Creates the directory (and parents) if needed.
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| {
            CliError::Runtime(format!(
                "cannot create output directory {}: {e}; no outputs were written",
                dir.display()
            ))
        })?;
        Ok(Self {
            dir: dir.to_owned(),
            written: Vec::new(),
        })
    }

    /// The directory artifacts land in.
    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Scratch path for streaming writers; [`OutputDir::publish`] moves it
    /// into place. The leading dot keeps half-written files visually apart.
    pub fn scratch_path(&self, name: &str) -> PathBuf {
        self.dir.join(format!(".{name}.tmp"))
    }

    /// Atomically publishes `bytes` as `name` via a scratch file + rename.
    pub fn write_atomic(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let scratch = self.scratch_path(name);
        fs::write(&scratch, bytes)
            .map_err(|e| self.io_failure(format_args!("writing {}", scratch.display()), e))?;
        self.publish(&scratch, name)
    }

    /// Renames an already-written scratch file to its final name.
    pub fn publish(&mut self, scratch: &Path, name: &str) -> Result<PathBuf, CliError> {
        let target = self.dir.join(name);
        fs::rename(scratch, &target)
            .map_err(|e| self.io_failure(format_args!("finalizing {}", target.display()), e))?;
        self.written.push(target.clone());
        Ok(target)
    }

    /// Runtime error for a failed disk operation, flagging the artifacts
    /// this run had already finalized as partial outputs.
    pub fn io_failure(&self, action: impl Display, cause: impl Display) -> CliError {
        CliError::Runtime(format!("{action}: {cause}; {}", self.partial_note()))
    }

    fn partial_note(&self) -> String {
        if self.written.is_empty() {
            "no outputs were written".to_owned()
        } else {
            let list: Vec<String> = self
                .written
                .iter()
                .map(|p| p.display().to_string())
                .collect();
            format!("partial outputs left behind: {}", list.join(", "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_names_the_tool_version() {
        let h = csv_header("toy-tv");
        assert!(h.starts_with("# gradmcmc-cli v"), "{h}");
        assert!(h.contains("toy-tv schema v1"), "{h}");
        assert!(h.ends_with('\n'));
    }

    #[test]
    fn atomic_write_leaves_no_scratch_file() {
        let tmp = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(tmp.path()).unwrap();
        let path = out.write_atomic("a.csv", b"x,y\n").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"x,y\n");
        assert!(!out.scratch_path("a.csv").exists());
    }

    #[test]
    fn failures_after_a_write_flag_the_partial_output() {
        let tmp = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(tmp.path()).unwrap();
        out.write_atomic("done.csv", b"ok\n").unwrap();
        let err = out.io_failure("writing later artifact", "disk full");
        let msg = err.to_string();
        assert!(msg.contains("partial outputs left behind"), "{msg}");
        assert!(msg.contains("done.csv"), "{msg}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn create_fails_cleanly_when_the_target_is_a_file() {
        let tmp = tempfile::tempdir().unwrap();
        let blocker = tmp.path().join("occupied");
        fs::write(&blocker, b"").unwrap();
        let err = OutputDir::create(&blocker).unwrap_err();
        assert!(err.to_string().contains("no outputs were written"), "{err}");
    }

    #[test]
    fn floats_format_deterministically() {
        assert_eq!(fmt_f64(0.25), "0.25");
        assert_eq!(fmt_f64(1e-9), "0.000000001");
        assert_eq!(fmt_f64(2.0), "2");
        assert_eq!(fmt_f64(0.1 + 0.2), "0.30000000000000004");
    }
}
