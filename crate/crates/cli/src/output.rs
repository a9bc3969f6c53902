//! File emission. Every file carries the tool version and config hash.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rollkit_core::Error;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub struct OutputDir {
    dir: PathBuf,
    prefix: String,
    hash: String,
}

/// Abort record for runs stopped at the chart guard.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbortRecord {
    pub t: f64,
    pub theta: f64,
    pub last_t: f64,
    pub last_theta: f64,
    pub message: String,
}

impl AbortRecord {
    pub fn from_error(e: &Error) -> Self {
        let (t, theta, last_t, last_theta) = match *e {
            Error::Singularity {
                t,
                theta,
                last_t,
                last_theta,
            } => (t, theta, last_t, last_theta),
            _ => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        };
        Self {
            t,
            theta,
            last_t,
            last_theta,
            message: e.to_string(),
        }
    }

    pub fn csv_line(&self) -> String {
        format!(
            "# abort t={:.16e} theta={:.16e} last_t={:.16e} last_theta={:.16e}",
            self.t, self.theta, self.last_t, self.last_theta
        )
    }
}

impl OutputDir {
    pub fn new(dir: &Path, prefix: &str, hash: &str) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            prefix: prefix.to_string(),
            hash: hash.to_string(),
        })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn stamp(&self) -> String {
        format!("rollkit {VERSION} config_sha256={}", self.hash)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(format!("{}{name}", self.prefix))
    }

    fn write_with<F>(&self, name: &str, body: F) -> CliResult<PathBuf>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    /// CSV with a leading `# rollkit …` line and an optional abort record.
    pub fn csv<F>(&self, name: &str, abort: Option<&AbortRecord>, rows: F) -> CliResult<PathBuf>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let stamp = self.stamp();
        self.write_with(name, |w| {
            writeln!(w, "# {stamp}")?;
            rows(w)?;
            if let Some(a) = abort {
                writeln!(w, "{}", a.csv_line())?;
            }
            Ok(())
        })
    }

    /// Pretty JSON of `body` wrapped with tool, version and config hash.
    pub fn json<T: Serialize>(&self, name: &str, command: &str, body: &T) -> CliResult<PathBuf> {
        #[derive(Serialize)]
        struct Envelope<'a, T> {
            tool: &'static str,
            version: &'static str,
            config_sha256: &'a str,
            command: &'a str,
            #[serde(flatten)]
            body: &'a T,
        }
        let text = serde_json::to_string_pretty(&Envelope {
            tool: "rollkit",
            version: VERSION,
            config_sha256: &self.hash,
            command,
            body,
        })
        .map_err(|e| CliError::io(self.path(name), std::io::Error::other(e)))?;
        self.write_with(name, |w| writeln!(w, "{text}"))
    }

    pub fn svg(&self, name: &str, content: &str) -> CliResult<PathBuf> {
        self.write_with(name, |w| w.write_all(content.as_bytes()))
    }
}
