//! Defect reports shared by every verification routine.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub op: String,
    pub samples: usize,
    pub max_defect: f64,
    pub mean_defect: f64,
    pub tol: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<Report>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub data: BTreeMap<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Per-sample defects, in sample order. Written to CSV, not to JSON.
    #[serde(skip)]
    pub defects: Vec<f64>,
}

fn summarize(defects: &[f64]) -> (f64, f64) {
    if defects.is_empty() {
        return (0.0, 0.0);
    }
    let max = defects
        .iter()
        .map(|&d| if d.is_nan() { f64::INFINITY } else { d })
        .fold(0.0, f64::max);
    let mean = defects.iter().sum::<f64>() / defects.len() as f64;
    (max, mean)
}

impl Report {
    pub fn from_defects(op: impl Into<String>, defects: Vec<f64>, tol: f64) -> Self {
        let (max_defect, mean_defect) = summarize(&defects);
        Self {
            op: op.into(),
            samples: defects.len(),
            max_defect,
            mean_defect,
            tol,
            pass: max_defect < tol,
            components: Vec::new(),
            data: BTreeMap::new(),
            notes: Vec::new(),
            defects,
        }
    }

    /// A report that failed before producing defects.
    pub fn failure(op: impl Into<String>, tol: f64, reason: impl Into<String>) -> Self {
        let mut r = Self::from_defects(op, Vec::new(), tol);
        r.max_defect = f64::INFINITY;
        r.mean_defect = f64::INFINITY;
        r.pass = false;
        r.notes.push(reason.into());
        r
    }

    /// Passes iff every component passes; defects are the per-sample maxima
    /// over components when they share a sample count, otherwise concatenated.
    pub fn combine(op: impl Into<String>, components: Vec<Report>) -> Self {
        let tol = components.iter().map(|c| c.tol).fold(0.0, f64::max);
        let same_len = components
            .windows(2)
            .all(|w| w[0].defects.len() == w[1].defects.len());
        let defects: Vec<f64> = if same_len && !components.is_empty() {
            (0..components[0].defects.len())
                .map(|i| {
                    components
                        .iter()
                        .map(|c| c.defects[i])
                        .fold(0.0, f64::max)
                })
                .collect()
        } else {
            components.iter().flat_map(|c| c.defects.clone()).collect()
        };
        let mut r = Self::from_defects(op, defects, tol);
        r.pass = components.iter().all(|c| c.pass);
        r.max_defect = components
            .iter()
            .map(|c| c.max_defect)
            .fold(r.max_defect, f64::max);
        r.components = components;
        r
    }

    pub fn with_data(mut self, key: &str, value: impl Serialize) -> Self {
        self.data.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        );
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn component(&self, op: &str) -> Option<&Report> {
        self.components.iter().find(|c| c.op == op)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `sample_index,defect` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "sample_index,defect")?;
        for (i, d) in self.defects.iter().enumerate() {
            writeln!(f, "{i},{d:e}")?;
        }
        f.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_and_pass() {
        let r = Report::from_defects("x", vec![1e-3, 3e-3], 1e-2);
        assert_eq!(r.samples, 2);
        assert!((r.mean_defect - 2e-3).abs() < 1e-15);
        assert!(r.pass);
        let bad = Report::from_defects("y", vec![f64::NAN], 1.0);
        assert!(!bad.pass);
    }

    #[test]
    fn combined_fails_if_any_component_fails() {
        let a = Report::from_defects("a", vec![0.0, 0.1], 1.0);
        let b = Report::from_defects("b", vec![0.5, 0.0], 0.2);
        let c = Report::combine("ab", vec![a, b]);
        assert!(!c.pass);
        assert_eq!(c.defects, vec![0.5, 0.1]);
        assert!(c.component("b").is_some());
    }

    #[test]
    fn json_has_contract_fields() {
        let r = Report::from_defects("op", vec![0.25], 0.5);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for k in ["op", "samples", "max_defect", "mean_defect", "tol", "pass"] {
            assert!(v.get(k).is_some(), "{k}");
        }
    }
}
