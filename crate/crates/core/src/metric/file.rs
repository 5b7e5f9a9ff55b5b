//! Custom metric and connection files (TOML, schema version 1).
//!
//! ```toml
//! schema = 1
//! name = "cone"
//! variables = ["r", "theta"]          # dimension = number of variables
//! signature = "riemannian"            # or "pseudo"; optional
//! guards = ["r"]                      # each expression must be > 0
//! bounds = [[0.5, 3.0], [0.0, 6.28]]  # sampling box; optional
//!
//! [components]                        # metric file: 1-based "i,j" keys
//! "1,1" = "1"
//! "2,2" = "r^2/4"
//!
//! [gamma]                             # connection file instead: "k,i,j" keys for Γ^k_ij
//! "1,1,2" = "1"
//! ```
//!
//! A file carries exactly one of `[components]` or `[gamma]`. Giving both `"i,j"`
//! and `"j,i"` with different expressions is a schema error.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::{MetricSpec, Signature};
use crate::connection::CustomConnection;
use crate::error::{Error, Result};
use crate::expr::parse_with;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceFile {
    schema: u32,
    name: String,
    dim: Option<usize>,
    variables: Vec<String>,
    signature: Option<Signature>,
    #[serde(default)]
    guards: Vec<String>,
    bounds: Option<Vec<[f64; 2]>>,
    components: Option<BTreeMap<String, String>>,
    gamma: Option<BTreeMap<String, String>>,
}

/// What a custom file defines.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricSource {
    Metric(MetricSpec),
    Connection(CustomConnection),
}

impl MetricSource {
    pub fn name(&self) -> &str {
        match self {
            MetricSource::Metric(m) => &m.name,
            MetricSource::Connection(c) => &c.name,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MetricSource::Metric(m) => m.dim(),
            MetricSource::Connection(c) => c.dim(),
        }
    }
}

fn parse_key(key: &str, arity: usize, n: usize) -> Result<Vec<usize>> {
    let parts: Vec<&str> = key.split(',').map(str::trim).collect();
    let bad = || {
        Error::Schema(format!(
            "key `{key}` must be {arity} comma-separated indices in 1..={n}"
        ))
    };
    if parts.len() != arity {
        return Err(bad());
    }
    parts
        .iter()
        .map(|p| match p.parse::<usize>() {
            Ok(i) if (1..=n).contains(&i) => Ok(i - 1),
            _ => Err(bad()),
        })
        .collect()
}

pub fn parse_source(text: &str) -> Result<MetricSource> {
    let file: SourceFile =
        toml::from_str(text).map_err(|e| Error::Schema(e.message().to_string()))?;
    if file.schema != SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "unsupported schema version {} (expected {SCHEMA_VERSION})",
            file.schema
        )));
    }
    let n = file.variables.len();
    if n == 0 {
        return Err(Error::Schema("at least one variable is required".into()));
    }
    if let Some(dim) = file.dim {
        if dim != n {
            return Err(Error::Schema(format!(
                "dim = {dim} but {n} variables are listed"
            )));
        }
    }
    let vars: Vec<&str> = file.variables.iter().map(String::as_str).collect();
    let guards: Vec<&str> = file.guards.iter().map(String::as_str).collect();
    let sample_box = match &file.bounds {
        Some(b) if b.len() != n => {
            return Err(Error::Schema(format!(
                "bounds has {} entries for {n} variables",
                b.len()
            )))
        }
        Some(b) => b.iter().map(|[lo, hi]| (*lo, *hi)).collect(),
        None => vec![(-1.0, 1.0); n],
    };
    if sample_box.iter().any(|(lo, hi)| !(lo < hi)) {
        return Err(Error::Schema("bounds must satisfy lo < hi".into()));
    }

    match (&file.components, &file.gamma) {
        (Some(_), Some(_)) => Err(Error::Schema(
            "a file defines either [components] or [gamma], not both".into(),
        )),
        (None, None) => Err(Error::Schema(
            "missing [components] (metric) or [gamma] (connection)".into(),
        )),
        (Some(comps), None) => {
            let table = super::VarTable::with_aliases(&vars);
            let mut entries: BTreeMap<(usize, usize), &str> = BTreeMap::new();
            for (key, src) in comps {
                let idx = parse_key(key, 2, n)?;
                let (i, j) = (idx[0].max(idx[1]), idx[0].min(idx[1]));
                if let Some(prev) = entries.get(&(i, j)) {
                    if parse_with(prev, &table)? != parse_with(src, &table)? {
                        return Err(Error::Schema(format!(
                            "asymmetric components: g_{}{} = `{prev}` but g_{}{} = `{src}`",
                            i + 1,
                            j + 1,
                            j + 1,
                            i + 1
                        )));
                    }
                }
                entries.insert((i, j), src);
            }
            let comps: Vec<_> = entries.into_iter().collect();
            MetricSpec::new(
                &file.name,
                &vars,
                &comps,
                &guards,
                file.signature.unwrap_or(Signature::Riemannian),
                sample_box,
            )
            .map(MetricSource::Metric)
        }
        (None, Some(gamma)) => {
            let mut entries = Vec::new();
            for (key, src) in gamma {
                let idx = parse_key(key, 3, n)?;
                entries.push(((idx[0], idx[1], idx[2]), src.as_str()));
            }
            CustomConnection::new(&file.name, &vars, &entries, &guards, sample_box)
                .map(MetricSource::Connection)
        }
    }
}

pub fn load_source_file(path: &Path) -> Result<MetricSource> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))?;
    parse_source(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::metric_at;

    #[test]
    fn metric_file_round_trip() {
        let src = r#"
schema = 1
name = "cone"
variables = ["r", "theta"]
guards = ["r"]
bounds = [[0.5, 3.0], [0.0, 6.0]]

[components]
"1,1" = "1"
"2,2" = "r^2/4"
"#;
        let MetricSource::Metric(m) = parse_source(src).unwrap() else {
            panic!("expected a metric")
        };
        assert_eq!(m.dim(), 2);
        let g = metric_at(&m, &[2.0, 1.0]).unwrap();
        assert_eq!(g[(1, 1)], 1.0);
        assert!(metric_at(&m, &[-1.0, 1.0]).is_err());
    }

    #[test]
    fn asymmetric_components_are_rejected() {
        let src = r#"
schema = 1
name = "bad"
variables = ["x", "y"]
[components]
"1,1" = "1"
"2,2" = "1"
"1,2" = "x"
"2,1" = "y"
"#;
        assert!(matches!(parse_source(src), Err(Error::Schema(m)) if m.contains("asymmetric")));
    }

    #[test]
    fn both_orders_with_equal_expressions_are_fine() {
        let src = r#"
schema = 1
name = "ok"
variables = ["x", "y"]
[components]
"1,1" = "2"
"2,2" = "2"
"1,2" = "x*0.1"
"2,1" = "x * 0.1"
"#;
        assert!(parse_source(src).is_ok());
    }

    #[test]
    fn connection_file() {
        let src = r#"
schema = 1
name = "twist"
variables = ["x", "y"]
[gamma]
"1,1,2" = "1"
"#;
        let MetricSource::Connection(c) = parse_source(src).unwrap() else {
            panic!("expected a connection")
        };
        let chr = c.coefficients(&[0.0, 0.0]).unwrap();
        assert_eq!(chr.get(0, 0, 1), 1.0);
        assert_eq!(chr.get(0, 1, 0), 0.0);
    }

    #[test]
    fn schema_violations() {
        for src in [
            "schema = 2\nname='a'\nvariables=['x']\n[components]\n'1,1'='1'\n",
            "schema = 1\nname='a'\nvariables=['x']\n",
            "schema = 1\nname='a'\nvariables=['x']\n[components]\n'1,2'='1'\n",
            "schema = 1\nname='a'\ndim=2\nvariables=['x']\n[components]\n'1,1'='1'\n",
            "schema = 1\nname='a'\nvariables=['x']\nextra=1\n[components]\n'1,1'='1'\n",
            "schema = 1\nname='a'\nvariables=['x']\nbounds=[[1,0]]\n[components]\n'1,1'='1'\n",
        ] {
            assert!(matches!(parse_source(src), Err(Error::Schema(_))), "{src}");
        }
    }
}
