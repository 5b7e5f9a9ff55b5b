//! Geospin matrices: the connection contracted with a velocity.
//!
//! * `w_mixed[(i, j)] = W_i^j = Γ^j_ik v^k`
//! * `w_lower[(i, k)] = W_ik = Γ^j_ik v_j` (symmetric for Levi-Civita)
//! * `w_star[(i, j)] = W*_ij = g_ki W_j^k`
//!
//! With these, the geodesic equation reads `dv^k/dt = −W_j^k v^j`.

use serde::Serialize;

use crate::connection::{
    covariant_derivative_oneform_with, covariant_derivative_vector_with, first_kind, levi_civita,
    Christoffel, OneFormFieldSpec, VectorFieldSpec,
};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::metric::{inverse_metric, metric_jet, MetricJet, MetricSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeospinMatrix {
    pub point: Vec<f64>,
    pub velocity: Vec<f64>,
    /// `v_k = g_kl v^l`
    pub velocity_lower: Vec<f64>,
    pub g: Matrix,
    pub w_mixed: Matrix,
    pub w_lower: Matrix,
    pub w_star: Matrix,
}

impl GeospinMatrix {
    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    /// `(W v)^k = W_j^k v^j`, the contraction appearing in the geodesic equation.
    pub fn contract_velocity(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|k| (0..n).map(|j| self.w_mixed[(j, k)] * self.velocity[j]).sum())
            .collect()
    }
}

fn check_len(n: usize, v: &[f64]) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.len(),
        });
    }
    Ok(())
}

/// Assemble all three variants from one set of Christoffel symbols.
pub fn geospin_from(g: &Matrix, chr: &Christoffel, v: &[f64], v_lower: &[f64]) -> GeospinMatrix {
    let n = g.dim();
    let gam = &chr.gamma;
    let w_mixed = Matrix::from_fn(n, |i, j| (0..n).map(|k| gam[(j, i, k)] * v[k]).sum());
    let w_lower = Matrix::from_fn(n, |i, k| (0..n).map(|j| gam[(j, i, k)] * v_lower[j]).sum());
    let w_star = Matrix::from_fn(n, |i, j| (0..n).map(|k| g[(k, i)] * w_mixed[(j, k)]).sum());
    GeospinMatrix {
        point: chr.point.clone(),
        velocity: v.to_vec(),
        velocity_lower: v_lower.to_vec(),
        g: g.clone(),
        w_mixed,
        w_lower,
        w_star,
    }
}

pub fn geospin(spec: &MetricSpec, point: &[f64], v: &[f64]) -> Result<GeospinMatrix> {
    check_len(spec.dim(), v)?;
    let (jet, _, conn) = levi_civita(spec, point)?;
    let v_lower = jet.g.mul_vec(v);
    Ok(geospin_from(&jet.g, &conn.christoffel, v, &v_lower))
}

/// Geospin built from a covector `v_j`; `w_lower` uses the given components directly.
pub fn geospin_covector(spec: &MetricSpec, point: &[f64], v_lower: &[f64]) -> Result<GeospinMatrix> {
    check_len(spec.dim(), v_lower)?;
    let (jet, ginv, conn) = levi_civita(spec, point)?;
    let v = ginv.mul_vec(v_lower);
    Ok(geospin_from(&jet.g, &conn.christoffel, &v, v_lower))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalElements {
    /// `W_k^k` for each `k`
    pub diagonal: Vec<f64>,
    /// `Σ_k W_k^k`
    pub trace: f64,
    /// `½ g^{rp} ∂_i g_rp v^i`
    pub metric_route: f64,
    /// `½ (g^{rp} W*_rp + g^{rp} W*_pr)`
    pub star_route: f64,
}

impl DiagonalElements {
    /// Largest disagreement among the trace and the two closed-form routes.
    pub fn residual(&self) -> f64 {
        (self.metric_route - self.star_route)
            .abs()
            .max((self.metric_route - self.trace).abs())
            .max((self.star_route - self.trace).abs())
    }
}

/// The two closed forms for the diagonal both contract over the free index,
/// so they equal the trace of `W`; each `W_k^k` is listed as well.
pub fn diagonal_elements(gm: &GeospinMatrix, ginv: &Matrix, jet: &MetricJet) -> DiagonalElements {
    let n = gm.dim();
    let diagonal: Vec<f64> = (0..n).map(|k| gm.w_mixed[(k, k)]).collect();
    let mut metric_route = 0.0;
    let mut star_route = 0.0;
    for r in 0..n {
        for p in 0..n {
            let dg_v: f64 = (0..n).map(|i| jet.dg[(r, p, i)] * gm.velocity[i]).sum();
            metric_route += ginv[(r, p)] * dg_v;
            star_route += ginv[(r, p)] * (gm.w_star[(r, p)] + gm.w_star[(p, r)]);
        }
    }
    DiagonalElements {
        trace: diagonal.iter().sum(),
        diagonal,
        metric_route: 0.5 * metric_route,
        star_route: 0.5 * star_route,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometricAcceleration {
    /// `q^k = W_i^k v^i`
    pub q: Vec<f64>,
    /// The transposed contraction `W_k^j v^j`, kept for comparison.
    pub q_transposed: Vec<f64>,
    /// `Q = q^k v_k`
    pub big_q: f64,
    /// `½ v^l v^j v^i ∂_i g_jl`
    pub big_q_metric: f64,
}

pub fn geometric_acceleration(gm: &GeospinMatrix, jet: &MetricJet) -> GeometricAcceleration {
    let v = &gm.velocity;
    let q = gm.contract_velocity();
    let q_transposed = gm.w_mixed.mul_vec(v);
    GeometricAcceleration {
        big_q: dot(&q, &gm.velocity_lower),
        big_q_metric: 0.5 * cubic_metric_contraction(jet, v),
        q,
        q_transposed,
    }
}

/// `v^l v^j v^i ∂_i g_jl`
fn cubic_metric_contraction(jet: &MetricJet, v: &[f64]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                s += v[l] * v[j] * v[i] * jet.dg[(j, l, i)];
            }
        }
    }
    s
}

/// `max |W_kj − W_jk|` for the lowered matrix.
pub fn lowered_symmetry_residual(gm: &GeospinMatrix) -> f64 {
    gm.w_lower.sub(&gm.w_lower.transpose()).max_abs()
}

/// `max_ij |∂_k g_ij v^k − (W*_ji + W*_ij)|`
pub fn metric_derivative_residual(gm: &GeospinMatrix, jet: &MetricJet) -> f64 {
    let n = gm.dim();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let lhs: f64 = (0..n).map(|k| jet.dg[(i, j, k)] * gm.velocity[k]).sum();
            let rhs = gm.w_star[(j, i)] + gm.w_star[(i, j)];
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst
}

/// `max_i |2 W_i^k v_k − v^l v^j ∂_i g_jl|`
pub fn identity_contraction_residual(gm: &GeospinMatrix, jet: &MetricJet) -> f64 {
    let n = gm.dim();
    let v = &gm.velocity;
    let mut worst = 0.0f64;
    for i in 0..n {
        let lhs: f64 = 2.0 * (0..n).map(|k| gm.w_mixed[(i, k)] * gm.velocity_lower[k]).sum::<f64>();
        let mut rhs = 0.0;
        for j in 0..n {
            for l in 0..n {
                rhs += v[l] * v[j] * jet.dg[(j, l, i)];
            }
        }
        worst = worst.max((lhs - rhs).abs());
    }
    worst
}

/// Rebuilds `W*` and `W_ik` from first-kind symbols (no inverse metric) and
/// compares them with the stored matrices.
pub fn star_lower_consistency(gm: &GeospinMatrix, jet: &MetricJet) -> f64 {
    let n = gm.dim();
    let fk = first_kind(jet);
    let v = &gm.velocity;
    let star = Matrix::from_fn(n, |i, j| (0..n).map(|l| fk[(i, j, l)] * v[l]).sum());
    let lower = Matrix::from_fn(n, |i, k| (0..n).map(|l| fk[(l, i, k)] * v[l]).sum());
    let lowered_v = jet.g.mul_vec(v);
    star.sub(&gm.w_star)
        .max_abs()
        .max(lower.sub(&gm.w_lower).max_abs())
        .max(crate::linalg::max_abs_diff(&lowered_v, &gm.velocity_lower))
}

/// `∇_k v^j` assembled from Christoffel symbols vs `∂_k v^j + W_k^j`, with `W`
/// built from the field's value at the point.
pub fn covariant_rewrite_residual(
    field: &VectorFieldSpec,
    spec: &MetricSpec,
    point: &[f64],
) -> Result<f64> {
    field.0.check(spec.dim())?;
    let (jet, _, conn) = levi_civita(spec, point)?;
    let jets = field.0.jets(point)?;
    let v: Vec<f64> = jets.iter().map(|j| j.value).collect();
    let gm = geospin_from(&jet.g, &conn.christoffel, &v, &jet.g.mul_vec(&v));
    let direct = covariant_derivative_vector_with(&jets, &conn.christoffel);
    let n = spec.dim();
    let rewritten = Matrix::from_fn(n, |k, j| jets[j].grad[k] + gm.w_mixed[(k, j)]);
    Ok(direct.sub(&rewritten).max_abs())
}

/// The 1-form variant: `∇_k v_j` vs `∂_k v_j − W_kj`.
pub fn covariant_rewrite_residual_oneform(
    field: &OneFormFieldSpec,
    spec: &MetricSpec,
    point: &[f64],
) -> Result<f64> {
    field.0.check(spec.dim())?;
    let (jet, ginv, conn) = levi_civita(spec, point)?;
    let jets = field.0.jets(point)?;
    let v_lower: Vec<f64> = jets.iter().map(|j| j.value).collect();
    let gm = geospin_from(&jet.g, &conn.christoffel, &ginv.mul_vec(&v_lower), &v_lower);
    let direct = covariant_derivative_oneform_with(&jets, &conn.christoffel);
    let n = spec.dim();
    let rewritten = Matrix::from_fn(n, |k, j| jets[j].grad[k] - gm.w_lower[(k, j)]);
    Ok(direct.sub(&rewritten).max_abs())
}

/// Every pointwise geospin residual at one `(point, velocity)` sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeospinResiduals {
    pub lowered_symmetry: f64,
    pub metric_derivative: f64,
    pub contraction: f64,
    pub diagonal_routes: f64,
    pub q_routes: f64,
    pub star_lower: f64,
}

pub fn geospin_residuals(spec: &MetricSpec, point: &[f64], v: &[f64]) -> Result<GeospinResiduals> {
    check_len(spec.dim(), v)?;
    let jet = metric_jet(spec, point)?;
    let ginv = inverse_metric(&jet.g)?;
    let chr = crate::connection::christoffel_from_jet(&jet, &ginv);
    let gm = geospin_from(&jet.g, &chr, v, &jet.g.mul_vec(v));
    let acc = geometric_acceleration(&gm, &jet);
    Ok(GeospinResiduals {
        lowered_symmetry: lowered_symmetry_residual(&gm),
        metric_derivative: metric_derivative_residual(&gm, &jet),
        contraction: identity_contraction_residual(&gm, &jet),
        diagonal_routes: diagonal_elements(&gm, &ginv, &jet).residual(),
        q_routes: (acc.big_q - acc.big_q_metric).abs(),
        star_lower: star_lower_consistency(&gm, &jet),
    })
}
