//! Riemann, Ricci and scalar curvature, plus Bianchi and commutator residuals.
//!
//! Canonical ordering: `riemann_mixed[(k, i, j, l)] = R^k_ijl` with
//!
//! ```text
//! R^k_ijl = ∂_i Γ^k_jl − ∂_j Γ^k_il + Γ^k_ip Γ^p_jl − Γ^k_jp Γ^p_il
//! ```
//!
//! antisymmetric in the derivative pair `(i, j)`, and the lowered tensor
//! `R_ijkl = g_kp R^p_ijl`. With this ordering the unit sphere has
//! `R_θφθφ = sin²θ` and scalar curvature `+2`.

use serde::Serialize;

use crate::connection::{levi_civita, ConnectionJet, VectorFieldSpec};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Tensor4};
use crate::metric::{inverse_metric, metric_jet, MetricSpec};

/// `R^k_ijl` from connection coefficients and their partials; works for any connection.
pub fn riemann_from_connection(conn: &ConnectionJet) -> Tensor4 {
    let n = conn.dim();
    let g = conn.gamma();
    let dg = &conn.dgamma;
    let mut r = Tensor4::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in i + 1..n {
                for l in 0..n {
                    let mut quad = 0.0;
                    for p in 0..n {
                        quad += g[(k, i, p)] * g[(p, j, l)] - g[(k, j, p)] * g[(p, i, l)];
                    }
                    let v = (dg[(k, j, l, i)] - dg[(k, i, l, j)]) + quad;
                    r[(k, i, j, l)] = v;
                    r[(k, j, i, l)] = -v;
                }
            }
        }
    }
    r
}

pub fn riemann_mixed(spec: &MetricSpec, point: &[f64]) -> Result<Tensor4> {
    let (_, _, conn) = levi_civita(spec, point)?;
    Ok(riemann_from_connection(&conn))
}

/// `R_ijkl = g_kp R^p_ijl`.
pub fn lower_riemann(mixed: &Tensor4, g: &Matrix) -> Tensor4 {
    let n = g.dim();
    Tensor4::from_fn(n, |i, j, k, l| {
        (0..n).map(|p| g[(k, p)] * mixed[(p, i, j, l)]).sum()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RicciPack {
    /// `R_ik = g^{jl} R_ijkl`
    pub ricci: Matrix,
    /// `[(i, j)] = R_i^j = g^{jk} R_ik`
    pub ricci_mixed: Matrix,
    pub scalar: f64,
    pub det_mixed: f64,
    pub trace_mixed: f64,
}

pub fn ricci_and_scalar(low: &Tensor4, ginv: &Matrix) -> RicciPack {
    let n = ginv.dim();
    let ricci = Matrix::from_fn(n, |i, k| {
        let mut s = 0.0;
        for j in 0..n {
            for l in 0..n {
                s += ginv[(j, l)] * low[(i, j, k, l)];
            }
        }
        s
    });
    let ricci_mixed = Matrix::from_fn(n, |i, j| (0..n).map(|k| ginv[(j, k)] * ricci[(i, k)]).sum());
    let mut scalar = 0.0;
    for j in 0..n {
        for k in 0..n {
            scalar += ginv[(j, k)] * ricci[(j, k)];
        }
    }
    RicciPack {
        det_mixed: ricci_mixed.det(),
        trace_mixed: ricci_mixed.trace(),
        ricci,
        ricci_mixed,
        scalar,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvaturePack {
    pub point: Vec<f64>,
    pub riemann_mixed: Tensor4,
    pub riemann_low: Tensor4,
    #[serde(flatten)]
    pub ricci: RicciPack,
}

impl CurvaturePack {
    pub fn scalar(&self) -> f64 {
        self.ricci.scalar
    }
}

pub fn curvature(spec: &MetricSpec, point: &[f64]) -> Result<CurvaturePack> {
    let (jet, ginv, conn) = levi_civita(spec, point)?;
    Ok(curvature_from_parts(&jet.g, &ginv, &conn))
}

pub fn curvature_from_parts(g: &Matrix, ginv: &Matrix, conn: &ConnectionJet) -> CurvaturePack {
    let riemann_mixed = riemann_from_connection(conn);
    let riemann_low = lower_riemann(&riemann_mixed, g);
    let ricci = ricci_and_scalar(&riemann_low, ginv);
    CurvaturePack {
        point: conn.christoffel.point.clone(),
        riemann_mixed,
        riemann_low,
        ricci,
    }
}

/// Largest violation of `R_ijkl = −R_jikl = −R_ijlk = R_klij`.
pub fn riemann_symmetry_residual(low: &Tensor4) -> f64 {
    let n = low.dim();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let r = low[(i, j, k, l)];
                    worst = worst
                        .max((r + low[(j, i, k, l)]).abs())
                        .max((r + low[(i, j, l, k)]).abs())
                        .max((r - low[(k, l, i, j)]).abs());
                }
            }
        }
    }
    worst
}

/// `max |R^k_ijl + R^k_jli + R^k_lij|` (algebraic Bianchi identity).
pub fn first_bianchi_residual(pack: &CurvaturePack) -> f64 {
    let r = &pack.riemann_mixed;
    let n = r.dim();
    let mut worst = 0.0f64;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let s = r[(k, i, j, l)] + r[(k, j, l, i)] + r[(k, l, i, j)];
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    worst
}

/// Covariant derivative of the mixed Riemann tensor,
/// `out[((((h * n + i) * n + j) * n + k) * n + l)] = ∇_l R^h_ijk`,
/// with `∂_l R` by central differences of the analytic tensor.
pub fn riemann_covariant_derivative(spec: &MetricSpec, point: &[f64]) -> Result<Vec<f64>> {
    let n = spec.dim();
    let (_, _, conn) = levi_civita(spec, point)?;
    let r = riemann_from_connection(&conn);
    let gam = conn.gamma();

    let mut dr = Vec::with_capacity(n);
    for l in 0..n {
        let h = f64::EPSILON.cbrt() * point[l].abs().max(1.0);
        let mut plus = point.to_vec();
        let mut minus = point.to_vec();
        plus[l] += h;
        minus[l] -= h;
        for p in [&plus, &minus] {
            spec.check_point(p).map_err(|e| {
                Error::StencilOutOfDomain(format!("step {h:e} along x{}: {e}", l + 1))
            })?;
        }
        let rp = riemann_mixed(spec, &plus)?;
        let rm = riemann_mixed(spec, &minus)?;
        dr.push(rp.combine(0.5 / h, &rm, -0.5 / h));
    }

    let idx = |h: usize, i: usize, j: usize, k: usize, l: usize| (((h * n + i) * n + j) * n + k) * n + l;
    let mut out = vec![0.0; n.pow(5)];
    for h in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut s = dr[l][(h, i, j, k)];
                        for p in 0..n {
                            s += gam[(h, l, p)] * r[(p, i, j, k)];
                            s -= gam[(p, l, i)] * r[(h, p, j, k)];
                            s -= gam[(p, l, j)] * r[(h, i, p, k)];
                            s -= gam[(p, l, k)] * r[(h, i, j, p)];
                        }
                        out[idx(h, i, j, k, l)] = s;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Differential Bianchi identity: the cyclic sum of `∇_l R^h_ijk` over the
/// antisymmetric pair and the derivative index,
/// `max |∇_l R^h_ijk + ∇_i R^h_jlk + ∇_j R^h_lik|`.
pub fn second_bianchi_residual(spec: &MetricSpec, point: &[f64]) -> Result<f64> {
    let n = spec.dim();
    let d = riemann_covariant_derivative(spec, point)?;
    let idx = |h: usize, i: usize, j: usize, k: usize, l: usize| (((h * n + i) * n + j) * n + k) * n + l;
    let mut worst = 0.0f64;
    for h in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let s = d[idx(h, i, j, k, l)] + d[idx(h, j, l, k, i)] + d[idx(h, l, i, k, j)];
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// `max |(∇_i∇_j − ∇_j∇_i) v^l − R^l_ijk v^k|` with both sides assembled from exact jets.
pub fn commutator_curvature_residual(
    field: &VectorFieldSpec,
    spec: &MetricSpec,
    point: &[f64],
) -> Result<f64> {
    let n = spec.dim();
    if field.0.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: field.0.dim(),
        });
    }
    let (_, _, conn) = levi_civita(spec, point)?;
    let r = riemann_from_connection(&conn);
    let jets = field.0.jets(point)?;
    let lhs = second_covariant_commutator(&jets, &conn);
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let rhs: f64 = (0..n).map(|k| r[(l, i, j, k)] * jets[k].value).sum();
                worst = worst.max((lhs[(i, j, l)] - rhs).abs());
            }
        }
    }
    Ok(worst)
}

/// `out[(i, j, l)] = ∇_i∇_j v^l − ∇_j∇_i v^l`.
pub(crate) fn second_covariant_commutator(
    jets: &[crate::expr::Jet2],
    conn: &ConnectionJet,
) -> crate::linalg::Tensor3 {
    let n = conn.dim();
    let gam = conn.gamma();
    let dgam = &conn.dgamma;
    let v: Vec<f64> = jets.iter().map(|j| j.value).collect();

    // first[(j, l)] = ∇_j v^l
    let first = Matrix::from_fn(n, |j, l| {
        jets[l].grad[j] + (0..n).map(|k| gam[(l, j, k)] * v[k]).sum::<f64>()
    });
    // second[(i, j, l)] = ∇_i ∇_j v^l
    let second = crate::linalg::Tensor3::from_fn(n, |i, j, l| {
        let mut d = jets[l].hess_at(i, j);
        for k in 0..n {
            d += dgam[(l, j, k, i)] * v[k] + gam[(l, j, k)] * jets[k].grad[i];
        }
        for p in 0..n {
            d += gam[(l, i, p)] * first[(j, p)];
            d -= gam[(p, i, j)] * first[(p, l)];
        }
        d
    });
    crate::linalg::Tensor3::from_fn(n, |i, j, l| second[(i, j, l)] - second[(j, i, l)])
}

/// Scalar curvature only.
pub fn scalar_curvature(spec: &MetricSpec, point: &[f64]) -> Result<f64> {
    let jet = metric_jet(spec, point)?;
    let ginv = inverse_metric(&jet.g)?;
    let conn = crate::connection::levi_civita_jet(&jet, &ginv);
    Ok(curvature_from_parts(&jet.g, &ginv, &conn).scalar())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::christoffel;
    use crate::metric::{builtin, catalog, metric_at, parse_metric_arg, Params};
    use std::f64::consts::FRAC_PI_4;

    fn named(name: &str) -> MetricSpec {
        builtin(name, &Params::new()).unwrap()
    }

    /// Riemann oracle: defining formula with ∂Γ by central differences of Γ.
    fn fd_riemann(spec: &MetricSpec, p: &[f64]) -> Tensor4 {
        let n = p.len();
        let gam = christoffel(spec, p).unwrap().gamma;
        let dgam: Vec<_> = (0..n)
            .map(|m| {
                let h = 1e-5;
                let mut a = p.to_vec();
                let mut b = p.to_vec();
                a[m] += h;
                b[m] -= h;
                let ga = christoffel(spec, &a).unwrap().gamma;
                let gb = christoffel(spec, &b).unwrap().gamma;
                crate::linalg::Tensor3::from_fn(n, |k, i, j| (ga[(k, i, j)] - gb[(k, i, j)]) / (2.0 * h))
            })
            .collect();
        Tensor4::from_fn(n, |k, i, j, l| {
            let mut s = dgam[i][(k, j, l)] - dgam[j][(k, i, l)];
            for q in 0..n {
                s += gam[(k, i, q)] * gam[(q, j, l)] - gam[(k, j, q)] * gam[(q, i, l)];
            }
            s
        })
    }

    #[test]
    fn flat_charts_have_no_curvature() {
        for (name, p) in [("euclidean", vec![0.1, 0.2, 0.3]), ("polar2", vec![1.3, 0.4])] {
            let pack = curvature(&named(name), &p).unwrap();
            assert!(pack.riemann_mixed.max_abs() <= 1e-12, "{name}");
            assert!(pack.scalar().abs() <= 1e-12);
        }
    }

    #[test]
    fn unit_sphere_values() {
        let spec = named("sphere");
        let p = [FRAC_PI_4, 0.3];
        let pack = curvature(&spec, &p).unwrap();
        assert!((pack.riemann_low[(0, 1, 0, 1)] - 0.5).abs() < 1e-14);
        let oracle = lower_riemann(&fd_riemann(&spec, &p), &metric_at(&spec, &p).unwrap());
        assert!((oracle[(0, 1, 0, 1)] - 0.5).abs() < 1e-8);
        assert!((pack.scalar() - 2.0).abs() < 1e-14);

        // constant curvature +1: R_ijkl = g_ik g_jl − g_il g_jk
        let g = metric_at(&spec, &p).unwrap();
        let closed = Tensor4::from_fn(2, |i, j, k, l| g[(i, k)] * g[(j, l)] - g[(i, l)] * g[(j, k)]);
        assert!(pack.riemann_low.max_abs_diff(&closed) < 1e-14);
        assert!(pack.ricci.ricci.sub(&g).max_abs() <= 1e-9);
    }

    #[test]
    fn poincare_values() {
        let spec = named("poincare-half-plane");
        let p = [0.0, 1.0];
        let pack = curvature(&spec, &p).unwrap();
        assert!((pack.riemann_low[(0, 1, 0, 1)] + 1.0).abs() < 1e-13);
        let oracle = fd_riemann(&spec, &p);
        assert!(oracle.max_abs_diff(&pack.riemann_mixed) < 1e-8);
        assert!((pack.scalar() + 2.0).abs() < 1e-13);
    }

    #[test]
    fn analytic_riemann_matches_fd_oracle_on_catalog() {
        for spec in catalog() {
            let p: Vec<f64> = spec.sample_box.iter().map(|(a, b)| 0.55 * a + 0.45 * b).collect();
            let pack = curvature(&spec, &p).unwrap();
            let oracle = fd_riemann(&spec, &p);
            let scale = pack.riemann_mixed.max_abs().max(1.0);
            assert!(
                oracle.max_abs_diff(&pack.riemann_mixed) <= 1e-7 * scale,
                "{}",
                spec.name
            );
        }
    }

    #[test]
    fn symmetries_and_first_bianchi() {
        for spec in catalog() {
            let p: Vec<f64> = spec.sample_box.iter().map(|(a, b)| 0.3 * a + 0.7 * b).collect();
            let pack = curvature(&spec, &p).unwrap();
            assert!(riemann_symmetry_residual(&pack.riemann_low) <= 1e-10, "{}", spec.name);
            assert!(first_bianchi_residual(&pack) <= 1e-10, "{}", spec.name);
            let n = spec.dim();
            for i in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        assert_eq!(pack.riemann_low[(i, i, k, l)], 0.0);
                    }
                }
            }
            assert!(pack.ricci.ricci.sub(&pack.ricci.ricci.transpose()).max_abs() <= 1e-10);
            assert!((pack.ricci.trace_mixed - pack.scalar()).abs() <= 1e-10);
        }
    }

    #[test]
    fn torus_scalar_curvature() {
        // Gaussian curvature cosθ / (a (R + a cosθ)), scalar = twice that
        let spec = named("torus");
        let th = 0.8f64;
        let s = scalar_curvature(&spec, &[th, 1.0]).unwrap();
        let expected = 2.0 * th.cos() / (1.0 * (2.0 + th.cos()));
        assert!((s - expected).abs() < 1e-13);
    }

    #[test]
    fn schwarzschild_is_ricci_flat() {
        let spec = named("schwarzschild");
        let pack = curvature(&spec, &[0.0, 3.0, 1.1, 0.2]).unwrap();
        assert!(pack.ricci.ricci.max_abs() < 1e-12);
        assert!(first_bianchi_residual(&pack) <= 1e-9);
        // Kretschmann invariant 12 rs^2 / r^6
        let ginv = inverse_metric(&metric_at(&spec, &[0.0, 3.0, 1.1, 0.2]).unwrap()).unwrap();
        let low = &pack.riemann_low;
        let mut k = 0.0;
        let n = 4;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let up = ginv[(a, a)] * ginv[(b, b)] * ginv[(c, c)] * ginv[(d, d)];
                        k += low[(a, b, c, d)] * low[(a, b, c, d)] * up;
                    }
                }
            }
        }
        assert!((k - 12.0 / 3f64.powi(6)).abs() < 1e-12);
    }

    #[test]
    fn second_bianchi_holds_for_catalog() {
        for spec in catalog() {
            let p: Vec<f64> = spec.sample_box.iter().map(|(a, b)| 0.45 * a + 0.55 * b).collect();
            let r = second_bianchi_residual(&spec, &p).unwrap();
            assert!(r <= 1e-6, "{}: {r:e}", spec.name);
        }
        assert!(second_bianchi_residual(&named("euclidean"), &[0.1, 0.2, 0.3]).unwrap() <= 1e-12);
    }

    #[test]
    fn second_bianchi_needs_room_for_the_stencil() {
        let spec = named("poincare-half-plane");
        assert!(matches!(
            second_bianchi_residual(&spec, &[0.0, 1e-7]),
            Err(Error::StencilOutOfDomain(_))
        ));
    }

    #[test]
    fn commutator_matches_curvature() {
        let sphere = parse_metric_arg("sphere:r=1").unwrap();
        let v = VectorFieldSpec::parse(&["sin(phi)", "cos(theta)"], &sphere.var_table()).unwrap();
        let p = [std::f64::consts::FRAC_PI_3, std::f64::consts::PI / 5.0];
        assert!(commutator_curvature_residual(&v, &sphere, &p).unwrap() <= 1e-8);

        let flat = named("euclidean");
        let w = VectorFieldSpec::parse(&["x*y", "sin(z)", "exp(x)"], &flat.var_table()).unwrap();
        assert!(commutator_curvature_residual(&w, &flat, &[0.3, 0.2, 0.1]).unwrap() <= 1e-12);

        let polar = named("polar2");
        let c = VectorFieldSpec::parse(&["1", "2"], &polar.var_table()).unwrap();
        let jets = c.0.jets(&[1.7, 0.4]).unwrap();
        let (_, _, conn) = levi_civita(&polar, &[1.7, 0.4]).unwrap();
        assert!(second_covariant_commutator(&jets, &conn).max_abs() <= 1e-10);
    }
}
