//! Chart-local metric definitions and their evaluation.

mod catalog;
mod file;

pub use catalog::{builtin, catalog, catalog_names, parse_metric_arg, Params};
pub use file::{load_source_file, parse_source, MetricSource, SCHEMA_VERSION};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{eval_jet2, eval_scalar, parse_with, Expr};
pub use crate::expr::VarTable;
use crate::linalg::{Matrix, Tensor3, Tensor4};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signature {
    Riemannian,
    Pseudo,
}

/// Positivity constraint `expr > 0` that every valid chart point satisfies.
#[derive(Debug, Clone, PartialEq)]
pub struct Guard {
    pub source: String,
    pub expr: Expr,
}

impl Guard {
    pub fn parse(source: &str, vars: &VarTable) -> Result<Self> {
        Ok(Self {
            source: source.to_string(),
            expr: parse_with(source, vars)?,
        })
    }
}

/// Checks `point` against dimension and guards.
pub(crate) fn check_guards(guards: &[Guard], dim: usize, point: &[f64]) -> Result<()> {
    if point.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: point.len(),
        });
    }
    if point.iter().any(|x| !x.is_finite()) {
        return Err(Error::OutOfDomain {
            guard: "finite coordinates".into(),
            value: f64::NAN,
            point: point.to_vec(),
        });
    }
    for g in guards {
        let value = eval_scalar(&g.expr, point).unwrap_or(f64::NAN);
        if !(value > 0.0) {
            return Err(Error::OutOfDomain {
                guard: format!("{} > 0", g.source),
                value,
                point: point.to_vec(),
            });
        }
    }
    Ok(())
}

/// A metric on one coordinate chart.
///
/// Components are stored once per unordered pair `(i, j)`, so `g_ij` and `g_ji`
/// share an expression tree.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    pub name: String,
    pub variables: Vec<String>,
    pub signature: Signature,
    pub guards: Vec<Guard>,
    /// Axis-aligned box used for random sampling of chart points.
    pub sample_box: Vec<(f64, f64)>,
    components: Vec<Expr>,
    sources: Vec<String>,
}

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

impl MetricSpec {
    /// Builds a metric from `(i, j)` (0-based) component expressions; missing entries are zero.
    pub fn new(
        name: &str,
        variables: &[&str],
        components: &[((usize, usize), &str)],
        guards: &[&str],
        signature: Signature,
        sample_box: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let n = variables.len();
        let vars = VarTable::with_aliases(variables);
        let mut exprs = vec![Expr::Const(0.0); n * (n + 1) / 2];
        let mut sources = vec!["0".to_string(); n * (n + 1) / 2];
        for &((i, j), src) in components {
            if i >= n || j >= n {
                return Err(Error::Schema(format!(
                    "component ({}, {}) outside dimension {n}",
                    i + 1,
                    j + 1
                )));
            }
            exprs[packed(i, j)] = parse_with(src, &vars)?;
            sources[packed(i, j)] = src.to_string();
        }
        let guards = guards
            .iter()
            .map(|g| Guard::parse(g, &vars))
            .collect::<Result<Vec<_>>>()?;
        if sample_box.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: sample_box.len(),
            });
        }
        Ok(Self {
            name: name.to_string(),
            variables: variables.iter().map(|s| s.to_string()).collect(),
            signature,
            guards,
            sample_box,
            components: exprs,
            sources,
        })
    }

    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn var_table(&self) -> VarTable {
        VarTable::with_aliases(&self.variables)
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.components[packed(i, j)]
    }

    pub fn component_source(&self, i: usize, j: usize) -> &str {
        &self.sources[packed(i, j)]
    }

    pub fn check_point(&self, point: &[f64]) -> Result<()> {
        check_guards(&self.guards, self.dim(), point)
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        self.check_point(point).is_ok()
    }
}

/// `g_ij` at `point`.
pub fn metric_at(spec: &MetricSpec, point: &[f64]) -> Result<Matrix> {
    spec.check_point(point)?;
    let n = spec.dim();
    let mut g = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let v = eval_scalar(spec.component(i, j), point)?;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// Relative determinant threshold below which a metric counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Inverse of a metric matrix, rejecting `|det g| < 1e-12 * (max |g_ij|)^n`.
pub fn inverse_metric(g: &Matrix) -> Result<Matrix> {
    let n = g.dim();
    let det = g.det();
    let scale = g.max_abs();
    if !det.is_finite() || det.abs() < DEGENERACY_TOL * scale.powi(n as i32) || scale == 0.0 {
        return Err(Error::DegenerateMetric { det });
    }
    Ok(g.inverse()?.symmetrized())
}

/// Metric value with its first and second partial derivatives at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricJet {
    pub point: Vec<f64>,
    pub g: Matrix,
    /// `dg[(i, j, k)] = ∂_k g_ij`
    pub dg: Tensor3,
    /// `d2g[(i, j, k, l)] = ∂_l ∂_k g_ij`
    pub d2g: Tensor4,
}

impl MetricJet {
    pub fn dim(&self) -> usize {
        self.g.dim()
    }
}

pub fn metric_jet(spec: &MetricSpec, point: &[f64]) -> Result<MetricJet> {
    spec.check_point(point)?;
    let n = spec.dim();
    let mut g = Matrix::zeros(n);
    let mut dg = Tensor3::zeros(n);
    let mut d2g = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let expr = spec.component(i, j);
            if expr.is_zero_constant() {
                continue;
            }
            let jet = eval_jet2(expr, point)?;
            for (a, b) in [(i, j), (j, i)] {
                g[(a, b)] = jet.value;
                for k in 0..n {
                    dg[(a, b, k)] = jet.grad[k];
                    for l in 0..n {
                        d2g[(a, b, k, l)] = jet.hess_at(k, l);
                    }
                }
            }
        }
    }
    Ok(MetricJet {
        point: point.to_vec(),
        g,
        dg,
        d2g,
    })
}
