//! Affine connections in the natural coordinate frame.
//!
//! Index convention: `gamma[(k, i, j)] = Γ^k_ij`, where `i` is the direction of
//! differentiation, so `∇_i v^j = ∂_i v^j + Γ^j_ik v^k`. Levi-Civita
//! coefficients are symmetric in `(i, j)` bit-for-bit.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{eval_jet2, eval_scalar, parse_with, Expr, Jet2, VarTable};
use crate::linalg::{Matrix, Tensor3, Tensor4};
use crate::metric::{check_guards, inverse_metric, metric_jet, Guard, MetricJet, MetricSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Christoffel {
    pub gamma: Tensor3,
    pub point: Vec<f64>,
    /// True for Levi-Civita connections, where `Γ^k_ij = Γ^k_ji` exactly.
    pub symmetric_lower: bool,
}

impl Christoffel {
    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[(k, i, j)]
    }
}

/// Connection coefficients together with their first partials,
/// `dgamma[(k, i, j, m)] = ∂_m Γ^k_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionJet {
    pub christoffel: Christoffel,
    pub dgamma: Tensor4,
}

impl ConnectionJet {
    pub fn dim(&self) -> usize {
        self.christoffel.dim()
    }

    pub fn gamma(&self) -> &Tensor3 {
        &self.christoffel.gamma
    }
}

/// Christoffel symbols of the first kind, `Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`.
pub(crate) fn first_kind(jet: &MetricJet) -> Tensor3 {
    let n = jet.dim();
    let dg = &jet.dg;
    let mut out = Tensor3::zeros(n);
    for l in 0..n {
        for i in 0..n {
            for j in i..n {
                let v = 0.5 * (dg[(j, l, i)] + dg[(i, l, j)] - dg[(i, j, l)]);
                out[(l, i, j)] = v;
                out[(l, j, i)] = v;
            }
        }
    }
    out
}

/// Levi-Civita coefficients `Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`.
pub fn christoffel_from_jet(jet: &MetricJet, ginv: &Matrix) -> Christoffel {
    let n = jet.dim();
    let low = first_kind(jet);
    let mut gamma = Tensor3::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let v: f64 = (0..n).map(|l| ginv[(k, l)] * low[(l, i, j)]).sum();
                gamma[(k, i, j)] = v;
                gamma[(k, j, i)] = v;
            }
        }
    }
    Christoffel {
        gamma,
        point: jet.point.clone(),
        symmetric_lower: true,
    }
}

pub fn christoffel(spec: &MetricSpec, point: &[f64]) -> Result<Christoffel> {
    let jet = metric_jet(spec, point)?;
    let ginv = inverse_metric(&jet.g)?;
    Ok(christoffel_from_jet(&jet, &ginv))
}

/// Levi-Civita coefficients and their analytic partials from a metric jet.
pub fn levi_civita_jet(jet: &MetricJet, ginv: &Matrix) -> ConnectionJet {
    let n = jet.dim();
    let christoffel = christoffel_from_jet(jet, ginv);
    let low = first_kind(jet);

    // ∂_m g^{kl} = −g^{ka} ∂_m g_ab g^{bl}
    let mut dginv = Tensor3::zeros(n);
    for k in 0..n {
        for l in 0..n {
            for m in 0..n {
                let mut s = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        s += ginv[(k, a)] * jet.dg[(a, b, m)] * ginv[(b, l)];
                    }
                }
                dginv[(k, l, m)] = -s;
            }
        }
    }

    let d2g = &jet.d2g;
    let mut dgamma = Tensor4::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                for m in 0..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        let dlow =
                            0.5 * (d2g[(j, l, i, m)] + d2g[(i, l, j, m)] - d2g[(i, j, l, m)]);
                        s += dginv[(k, l, m)] * low[(l, i, j)] + ginv[(k, l)] * dlow;
                    }
                    dgamma[(k, i, j, m)] = s;
                    dgamma[(k, j, i, m)] = s;
                }
            }
        }
    }
    ConnectionJet {
        christoffel,
        dgamma,
    }
}

pub fn levi_civita(spec: &MetricSpec, point: &[f64]) -> Result<(MetricJet, Matrix, ConnectionJet)> {
    let jet = metric_jet(spec, point)?;
    let ginv = inverse_metric(&jet.g)?;
    let conn = levi_civita_jet(&jet, &ginv);
    Ok((jet, ginv, conn))
}

/// A connection given directly by coefficient expressions, with no metric.
/// May carry torsion.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomConnection {
    pub name: String,
    pub variables: Vec<String>,
    pub guards: Vec<Guard>,
    pub sample_box: Vec<(f64, f64)>,
    /// `gamma[(k * n + i) * n + j]` is the expression for `Γ^k_ij`.
    gamma: Vec<Expr>,
}

impl CustomConnection {
    /// `entries` maps 0-based `(k, i, j)` to an expression; missing entries are zero.
    pub fn new(
        name: &str,
        variables: &[&str],
        entries: &[((usize, usize, usize), &str)],
        guards: &[&str],
        sample_box: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let n = variables.len();
        let vars = VarTable::with_aliases(variables);
        let mut gamma = vec![Expr::Const(0.0); n * n * n];
        for &((k, i, j), src) in entries {
            if k >= n || i >= n || j >= n {
                return Err(Error::Schema(format!(
                    "gamma entry ({}, {}, {}) outside dimension {n}",
                    k + 1,
                    i + 1,
                    j + 1
                )));
            }
            gamma[(k * n + i) * n + j] = parse_with(src, &vars)?;
        }
        if sample_box.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: sample_box.len(),
            });
        }
        Ok(Self {
            name: name.to_string(),
            variables: variables.iter().map(|s| s.to_string()).collect(),
            guards: guards
                .iter()
                .map(|g| Guard::parse(g, &vars))
                .collect::<Result<_>>()?,
            sample_box,
            gamma,
        })
    }

    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn check_point(&self, point: &[f64]) -> Result<()> {
        check_guards(&self.guards, self.dim(), point)
    }

    pub fn coefficients(&self, point: &[f64]) -> Result<Christoffel> {
        self.check_point(point)?;
        let n = self.dim();
        let mut gamma = Tensor3::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    gamma[(k, i, j)] = eval_scalar(&self.gamma[(k * n + i) * n + j], point)?;
                }
            }
        }
        Ok(Christoffel {
            gamma,
            point: point.to_vec(),
            symmetric_lower: false,
        })
    }

    /// Coefficients and exact first partials via jets.
    pub fn jet(&self, point: &[f64]) -> Result<ConnectionJet> {
        let christoffel = self.coefficients(point)?;
        let n = self.dim();
        let mut dgamma = Tensor4::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let e = &self.gamma[(k * n + i) * n + j];
                    if e.is_zero_constant() {
                        continue;
                    }
                    let jet = eval_jet2(e, point)?;
                    for m in 0..n {
                        dgamma[(k, i, j, m)] = jet.grad[m];
                    }
                }
            }
        }
        Ok(ConnectionJet {
            christoffel,
            dgamma,
        })
    }
}

/// The connection matrix `ω_i^j(X) = Γ^j_ik X^k`, stored as `[(i, j)]`.
pub fn connection_form(chr: &Christoffel, direction: &[f64]) -> Result<Matrix> {
    let n = chr.dim();
    if direction.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: direction.len(),
        });
    }
    Ok(Matrix::from_fn(n, |i, j| {
        (0..n).map(|k| chr.get(j, i, k) * direction[k]).sum()
    }))
}

/// `residual[(k, i, j)] = ∂_k g_ij − g_lj Γ^l_ki − g_il Γ^l_kj` for arbitrary coefficients.
pub fn compatibility_residual_for(jet: &MetricJet, chr: &Christoffel) -> Tensor3 {
    let n = jet.dim();
    let g = &jet.g;
    Tensor3::from_fn(n, |k, i, j| {
        let mut s = jet.dg[(i, j, k)];
        for l in 0..n {
            s -= g[(l, j)] * chr.get(l, k, i);
            s -= g[(i, l)] * chr.get(l, k, j);
        }
        s
    })
}

/// Metric compatibility of the Levi-Civita connection; vanishes identically.
pub fn compatibility_residual(spec: &MetricSpec, point: &[f64]) -> Result<Tensor3> {
    let jet = metric_jet(spec, point)?;
    let ginv = inverse_metric(&jet.g)?;
    let chr = christoffel_from_jet(&jet, &ginv);
    Ok(compatibility_residual_for(&jet, &chr))
}

/// Covariant derivative of a (0,2) tensor: `out[(k, i, j)] = ∇_k T_ij`
/// given `t[(i, j)]` and `dt[(i, j, k)] = ∂_k T_ij`.
pub fn covariant_derivative_02(t: &Matrix, dt: &Tensor3, chr: &Christoffel) -> Tensor3 {
    let n = t.dim();
    let mut out = Tensor3::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let corr_i: f64 = (0..n).map(|p| chr.get(p, k, i) * t[(p, j)]).sum();
                let corr_j: f64 = (0..n).map(|p| chr.get(p, k, j) * t[(i, p)]).sum();
                out[(k, i, j)] = dt[(i, j, k)] - corr_i - corr_j;
            }
        }
    }
    out
}

/// `T^k_ij = Γ^k_ij − Γ^k_ji`.
pub fn torsion(chr: &Christoffel) -> Tensor3 {
    let g = &chr.gamma;
    Tensor3::from_fn(chr.dim(), |k, i, j| g[(k, i, j)] - g[(k, j, i)])
}

/// A field given by one expression per component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentField {
    pub components: Vec<Expr>,
}

impl ComponentField {
    pub fn parse<S: AsRef<str>>(sources: &[S], vars: &VarTable) -> Result<Self> {
        if sources.len() != vars.dim() {
            return Err(Error::DimensionMismatch {
                expected: vars.dim(),
                got: sources.len(),
            });
        }
        Ok(Self {
            components: sources
                .iter()
                .map(|s| parse_with(s.as_ref(), vars))
                .collect::<Result<_>>()?,
        })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn values(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.components
            .iter()
            .map(|e| eval_scalar(e, point))
            .collect()
    }

    pub fn jets(&self, point: &[f64]) -> Result<Vec<Jet2>> {
        self.components.iter().map(|e| eval_jet2(e, point)).collect()
    }

    pub(crate) fn check(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

/// Components `v^j(x)` of a vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldSpec(pub ComponentField);

/// Components `v_j(x)` of a 1-form field.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormFieldSpec(pub ComponentField);

impl VectorFieldSpec {
    pub fn parse<S: AsRef<str>>(sources: &[S], vars: &VarTable) -> Result<Self> {
        ComponentField::parse(sources, vars).map(Self)
    }

    /// The 1-form `v_j = g_jk v^k`, built as an expression tree.
    pub fn lowered(&self, spec: &MetricSpec) -> Result<OneFormFieldSpec> {
        use crate::expr::BinOp;
        let n = spec.dim();
        self.0.check(n)?;
        let components = (0..n)
            .map(|j| {
                (0..n)
                    .map(|k| {
                        Expr::binary(
                            BinOp::Mul,
                            spec.component(j, k).clone(),
                            self.0.components[k].clone(),
                        )
                    })
                    .reduce(|a, b| Expr::binary(BinOp::Add, a, b))
                    .unwrap_or(Expr::Const(0.0))
            })
            .collect();
        Ok(OneFormFieldSpec(ComponentField { components }))
    }
}

impl OneFormFieldSpec {
    pub fn parse<S: AsRef<str>>(sources: &[S], vars: &VarTable) -> Result<Self> {
        ComponentField::parse(sources, vars).map(Self)
    }
}

/// `out[(i, j)] = ∇_i v^j = ∂_i v^j + Γ^j_ik v^k`.
pub fn covariant_derivative_vector(
    field: &VectorFieldSpec,
    spec: &MetricSpec,
    point: &[f64],
) -> Result<Matrix> {
    field.0.check(spec.dim())?;
    let chr = christoffel(spec, point)?;
    let jets = field.0.jets(point)?;
    Ok(covariant_derivative_vector_with(&jets, &chr))
}

pub(crate) fn covariant_derivative_vector_with(jets: &[Jet2], chr: &Christoffel) -> Matrix {
    let n = chr.dim();
    Matrix::from_fn(n, |i, j| {
        jets[j].grad[i] + (0..n).map(|k| chr.get(j, i, k) * jets[k].value).sum::<f64>()
    })
}

/// `out[(i, j)] = ∇_i v_j = ∂_i v_j − Γ^k_ij v_k`.
pub fn covariant_derivative_oneform(
    field: &OneFormFieldSpec,
    spec: &MetricSpec,
    point: &[f64],
) -> Result<Matrix> {
    field.0.check(spec.dim())?;
    let chr = christoffel(spec, point)?;
    let jets = field.0.jets(point)?;
    Ok(covariant_derivative_oneform_with(&jets, &chr))
}

pub(crate) fn covariant_derivative_oneform_with(jets: &[Jet2], chr: &Christoffel) -> Matrix {
    let n = chr.dim();
    Matrix::from_fn(n, |i, j| {
        jets[j].grad[i] - (0..n).map(|k| chr.get(k, i, j) * jets[k].value).sum::<f64>()
    })
}
