//! Scenario files, the built-in registry and the runner behind the CLI.

mod builders;
mod run;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use builders::{build, cylinder, so2_plane, suspension, unit_circle, z2_line, Setup, BUILDERS};
pub use run::{run, run_scenario, write_outputs, CheckOutcome, Overrides, RunReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Axioms,
    Simplicial,
    NMetric,
    Linearization,
    Holonomy,
    Algebroid,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::Axioms => "axioms",
            Check::Simplicial => "simplicial",
            Check::NMetric => "n-metric",
            Check::Linearization => "linearization",
            Check::Holonomy => "holonomy",
            Check::Algebroid => "algebroid",
        }
    }
}

/// A scenario file. Missing checks, tolerances and budgets fall back to the
/// builder's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub builder: String,
    #[serde(default)]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl Scenario {
    /// The built-in scenario of that name with its default checks.
    pub fn builtin(name: &str) -> Result<Self> {
        if !BUILDERS.contains(&name) {
            return Err(Error::UnknownBuilder(name.to_string()));
        }
        Ok(Self {
            name: name.to_string(),
            builder: name.to_string(),
            checks: Vec::new(),
            tol: None,
            samples: None,
            seed: 0,
            params: BTreeMap::new(),
        })
    }

    /// TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            return serde_json::from_str(text).map_err(|e| Error::ConfigParseError {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            });
        }
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
            Error::ConfigParseError {
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Built-in scenario names containing `filter`, alphabetically.
pub fn list_scenarios(filter: &str) -> Vec<&'static str> {
    let mut out: Vec<&'static str> = BUILDERS.iter().copied().filter(|n| n.contains(filter)).collect();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_toml_and_json() {
        let t = Scenario::parse(
            "name = \"a\"\nbuilder = \"z2-line\"\nchecks = [\"axioms\", \"n-metric\"]\nseed = 3\n[params]\nradius = 0.2\n",
        )
        .unwrap();
        assert_eq!(t.checks, vec![Check::Axioms, Check::NMetric]);
        assert_eq!(t.params["radius"], 0.2);
        let j = Scenario::parse(r#"{"name": "a", "builder": "z2-line", "checks": ["axioms", "n-metric"], "seed": 3, "params": {"radius": 0.2}}"#).unwrap();
        assert_eq!(t, j);
    }

    #[test]
    fn parse_errors_carry_positions() {
        match Scenario::parse("name = \"a\"\nbuilder = \"b\"\nchecks = [\"axioms\",\n  oops]\n") {
            Err(Error::ConfigParseError { line, column, .. }) => assert_eq!((line, column), (4, 3)),
            other => panic!("{other:?}"),
        }
        match Scenario::parse("{\n  \"name\": \"a\",\n  \"builder\": 3\n}") {
            Err(Error::ConfigParseError { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(Scenario::parse("name = \"a\"\nbuilder = \"b\"\ncolour = 1\n"), Err(Error::ConfigParseError { line: 3, .. })));
    }

    #[test]
    fn listing() {
        let all = list_scenarios("");
        for n in ["ehresmann", "slice-so2", "z2-line", "mobius-holonomy"] {
            assert!(all.contains(&n));
        }
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert!(list_scenarios("no-such").is_empty());
        assert_eq!(list_scenarios("so2"), vec!["slice-so2", "so2-algebroid", "so2-gauge"]);
    }
}
