//! Upper bounds on kissing numbers, loaded from a plain-text table.
//!
//! Format: one entry per line, `<d> <K_d upper bound> <citation-key>`.
//! Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

const DEFAULT_TABLE: &str = include_str!("../data/kissing_numbers.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KissingEntry {
    pub upper: u64,
    pub citation: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KissingNumberTable {
    entries: BTreeMap<usize, KissingEntry>,
}

impl Default for KissingNumberTable {
    fn default() -> Self {
        Self::parse(DEFAULT_TABLE).expect("embedded kissing-number table is well formed")
    }
}

impl KissingNumberTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| Error::Config(format!("kissing table line {}: {msg}", lineno + 1));
            let mut fields = line.split_whitespace();
            let (Some(d), Some(k), Some(cite), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(bad("expected `<d> <K_d> <citation-key>`"));
            };
            let d: usize = d.parse().map_err(|_| bad("dimension is not an integer"))?;
            let upper: u64 = k.parse().map_err(|_| bad("bound is not an integer"))?;
            if d == 0 {
                return Err(bad("dimension must be >= 1"));
            }
            if upper == 0 {
                return Err(bad("bound must be >= 1"));
            }
            let entry = KissingEntry {
                upper,
                citation: cite.to_string(),
            };
            if entries.insert(d, entry).is_some() {
                return Err(bad("duplicate dimension"));
            }
        }
        let table = Self { entries };
        if let Some(&k1) = table.entries.get(&1).map(|e| &e.upper) {
            if k1 != 2 {
                return Err(Error::Config(format!("K_1 must be 2, table has {k1}")));
            }
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn upper(&self, d: usize) -> Result<u64> {
        self.entry(d).map(|e| e.upper)
    }

    pub fn entry(&self, d: usize) -> Result<&KissingEntry> {
        self.entries.get(&d).ok_or(Error::UnsupportedDimension(d))
    }

    /// Largest dimension with an entry.
    pub fn max_dim(&self) -> usize {
        self.entries.keys().next_back().copied().unwrap_or(0)
    }

    pub fn dims(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }
}
