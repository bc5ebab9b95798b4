use std::path::{Path, PathBuf};

use frontier_core::domain::Transaction;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance stamped on every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub command: String,
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    meta: &'a Meta,
    data: &'a T,
}

#[derive(Deserialize)]
struct Loaded<T> {
    data: T,
}

/// The output directory of one run.
pub struct Workspace {
    dir: PathBuf,
    meta: Meta,
}

impl Workspace {
    pub fn new(dir: &Path, config_sha256: String, command: &str) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            meta: Meta {
                tool: "frontier".into(),
                version: VERSION.into(),
                config_sha256,
                command: command.into(),
            },
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn exists(&self, name: &str) -> bool {
        self.path(name).is_file()
    }

    /// Path of an upstream artifact, or an error naming the command that makes it.
    pub fn require(&self, name: &str, prerequisite: &'static str) -> Result<PathBuf> {
        let path = self.path(name);
        if path.is_file() {
            Ok(path)
        } else {
            Err(CliError::MissingArtifact { path, prerequisite })
        }
    }

    fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, bytes).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }

    /// CSV whose first line is a `#` comment carrying the provenance.
    pub fn write_csv(
        &self,
        name: &str,
        body: impl FnOnce(&mut Vec<u8>) -> frontier_core::Result<()>,
    ) -> Result<PathBuf> {
        let m = &self.meta;
        let mut buf = format!(
            "# {} {} config_sha256={} command={}\n",
            m.tool, m.version, m.config_sha256, m.command
        )
        .into_bytes();
        body(&mut buf)?;
        self.write_bytes(name, &buf)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, data: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(&Stamped { meta: &self.meta, data })?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    pub fn read_json<T: DeserializeOwned>(&self, name: &str, prerequisite: &'static str) -> Result<T> {
        let path = self.require(name, prerequisite)?;
        let text = read_to_string(&path)?;
        let loaded: Loaded<T> = serde_json::from_str(&text)?;
        Ok(loaded.data)
    }

    /// Transactions with their log prices, in serde column order.
    pub fn write_transactions(&self, name: &str, txs: &[Transaction]) -> Result<PathBuf> {
        self.write_csv(name, |buf| {
            let mut w = csv::Writer::from_writer(buf);
            for t in txs {
                w.serialize(t)?;
            }
            w.flush().map_err(|e| frontier_core::Error::Io {
                path: name.into(),
                source: e,
            })?;
            Ok(())
        })
    }

    pub fn read_transactions(&self, name: &str, prerequisite: &'static str) -> Result<Vec<Transaction>> {
        let path = self.require(name, prerequisite)?;
        let bytes = read_uncommented(&path)?;
        let mut r = csv::Reader::from_reader(bytes.as_slice());
        let txs = r.deserialize().collect::<Result<Vec<Transaction>, _>>()?;
        Ok(txs)
    }
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

/// File contents without leading `#` lines.
pub fn read_uncommented(path: &Path) -> Result<Vec<u8>> {
    let text = read_to_string(path)?;
    let mut rest = text.as_str();
    while rest.starts_with('#') {
        rest = rest.split_once('\n').map_or("", |(_, r)| r);
    }
    Ok(rest.as_bytes().to_vec())
}
