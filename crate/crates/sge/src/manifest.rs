//! Run manifests: ordered `key = value` lines describing how an output was
//! produced.

use std::fmt::Display;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    /// Starts with the tool name, version and command.
    pub fn new(command: &str) -> Self {
        let mut m = Self::default();
        m.push("tool", "sge");
        m.push("version", TOOL_VERSION);
        m.push("command", command);
        m
    }

    pub fn push(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render()).map_err(Error::io(path))
    }
}
