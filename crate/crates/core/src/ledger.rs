//! Append-only (epsilon, delta) accounting under sequential composition.

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub description: String,
    pub epsilon: f64,
    pub delta: f64,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetLedger {
    entries: Vec<LedgerEntry>,
    total_epsilon: f64,
    total_delta: f64,
}

impl BudgetLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_spend(&mut self, description: impl Into<String>, epsilon: f64, delta: f64) -> Result<()> {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        self.record_spend_at(description, epsilon, delta, timestamp)
    }

    pub fn record_spend_at(
        &mut self,
        description: impl Into<String>,
        epsilon: f64,
        delta: f64,
        timestamp: u64,
    ) -> Result<()> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) || !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "privacy spends must be finite and non-negative, got ({epsilon}, {delta})"
            )));
        }
        self.entries.push(LedgerEntry {
            description: description.into(),
            epsilon,
            delta,
            timestamp,
        });
        self.total_epsilon += epsilon;
        self.total_delta += delta;
        Ok(())
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn total_epsilon(&self) -> f64 {
        self.total_epsilon
    }

    pub fn total_delta(&self) -> f64 {
        self.total_delta
    }

    /// One JSON object per line: `{description, epsilon, delta, timestamp}`.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.entries {
            serde_json::to_writer(&mut out, e).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals_are_additive() {
        let mut l = BudgetLedger::new();
        l.record_spend("a", 0.5, 0.01).unwrap();
        assert_eq!((l.total_epsilon(), l.total_delta()), (0.5, 0.01));
        l.record_spend("b", 0.25, 0.0).unwrap();
        assert_eq!((l.total_epsilon(), l.total_delta()), (0.75, 0.01));
        assert_eq!(l.entries().len(), 2);
    }

    #[test]
    fn rejects_negative_spend() {
        let mut l = BudgetLedger::new();
        assert!(l.record_spend("neg", -0.1, 0.0).is_err());
        assert!(l.record_spend("neg", 0.1, -1e-9).is_err());
        assert!(l.record_spend("nan", f64::NAN, 0.0).is_err());
        assert!(l.entries().is_empty());
    }

    #[test]
    fn jsonl_export() {
        let mut l = BudgetLedger::new();
        l.record_spend_at("top-h", 1.0, 0.0, 7).unwrap();
        l.record_spend_at("count {1}", 0.25, 0.005, 8).unwrap();
        let mut buf = Vec::new();
        l.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let v: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(v["description"], "count {1}");
        assert_eq!(v["epsilon"], 0.25);
        assert_eq!(v["delta"], 0.005);
        assert_eq!(v["timestamp"], 8);
    }
}
