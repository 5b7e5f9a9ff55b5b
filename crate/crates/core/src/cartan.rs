//! Cartan structure equations as differential-form identities on coordinate
//! basis vectors, and the dynamical residuals along geodesics.
//!
//! Conventions (see `docs/conventions.md`):
//!
//! * `(α∧β)(X, Y) = α(X)β(Y) − α(Y)β(X)`, no ½; a 2-form `β` with components
//!   `β_bc = β(e_b, e_c)` has `dβ(e_a, e_b, e_c) = ∂_a β_bc + ∂_b β_ca + ∂_c β_ab`.
//! * `ω^i = dx^i`, `ω_i^j(e_a) = Γ^j_ia`.
//! * Torsion form `Θ^i = dω^i − ω^j∧ω_j^i`, so `Θ^i(e_a, e_b) = −T^i_ab`; it is
//!   compared with `σ · ½T^i_kl ω^k∧ω^l` using `σ = TORSION_SIGN = −1`.
//! * Curvature form `Ω_i^j = dω_i^j − ω_i^k∧ω_k^j`, compared with
//!   `½R̃^j_ikl ω^k∧ω^l` where `R̃^j_ikl = R^j_kli` in the curvature module's
//!   ordering and the sign is `+1`.

use serde::Serialize;

use crate::connection::{levi_civita, torsion, ConnectionJet, CustomConnection};
use crate::curvature::riemann_from_connection;
use crate::error::{Error, Result};
use crate::flow::{geodesic_acceleration_gamma, GeodesicState, Trajectory};
use crate::geospin::geospin_from;
use crate::linalg::{Matrix, Tensor3, Tensor4};
use crate::metric::{MetricSource, MetricSpec};
use crate::report::{IdentityReport, Interpretation, StructuralReport, TraceRow};

pub const TORSION_SIGN: f64 = -1.0;
pub const CURVATURE_SIGN: f64 = 1.0;

/// Where connection coefficients come from.
#[derive(Debug, Clone, Copy)]
pub enum ConnectionSource<'a> {
    Metric(&'a MetricSpec),
    Custom(&'a CustomConnection),
}

impl<'a> From<&'a MetricSource> for ConnectionSource<'a> {
    fn from(s: &'a MetricSource) -> Self {
        match s {
            MetricSource::Metric(m) => ConnectionSource::Metric(m),
            MetricSource::Connection(c) => ConnectionSource::Custom(c),
        }
    }
}

impl ConnectionSource<'_> {
    pub fn dim(&self) -> usize {
        match self {
            ConnectionSource::Metric(m) => m.dim(),
            ConnectionSource::Custom(c) => c.dim(),
        }
    }

    pub fn check_point(&self, p: &[f64]) -> Result<()> {
        match self {
            ConnectionSource::Metric(m) => m.check_point(p),
            ConnectionSource::Custom(c) => c.check_point(p),
        }
    }

    pub fn jet(&self, p: &[f64]) -> Result<ConnectionJet> {
        match self {
            ConnectionSource::Metric(m) => Ok(levi_civita(m, p)?.2),
            ConnectionSource::Custom(c) => c.jet(p),
        }
    }

    pub fn is_metric(&self) -> bool {
        matches!(self, ConnectionSource::Metric(_))
    }
}

/// Coframe, connection, torsion and curvature data at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct FormFrame {
    pub point: Vec<f64>,
    pub gamma: Tensor3,
    pub dgamma: Tensor4,
    pub torsion: Tensor3,
    /// `R^k_ijl` assembled by the curvature module from the same coefficients.
    pub riemann: Tensor4,
    pub levi_civita: bool,
}

impl FormFrame {
    pub fn new(src: ConnectionSource<'_>, point: &[f64]) -> Result<Self> {
        let jet = src.jet(point)?;
        Ok(Self {
            point: point.to_vec(),
            torsion: torsion(&jet.christoffel),
            riemann: riemann_from_connection(&jet),
            gamma: jet.christoffel.gamma,
            dgamma: jet.dgamma,
            levi_civita: src.is_metric(),
        })
    }

    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }

    /// `ω^i(e_a)`
    pub fn coframe(&self, i: usize, a: usize) -> f64 {
        if i == a {
            1.0
        } else {
            0.0
        }
    }

    /// `ω_i^j(e_a) = Γ^j_ia`
    pub fn connection_form(&self, i: usize, j: usize, a: usize) -> f64 {
        self.gamma[(j, i, a)]
    }

    /// `Θ^i(e_a, e_b)`; `dω^i = 0` for the coordinate coframe.
    pub fn torsion_form(&self, i: usize, a: usize, b: usize) -> f64 {
        let n = self.dim();
        let wedge: f64 = (0..n)
            .map(|j| {
                self.coframe(j, a) * self.connection_form(j, i, b)
                    - self.coframe(j, b) * self.connection_form(j, i, a)
            })
            .sum();
        -wedge
    }

    /// `½T^i_kl (ω^k∧ω^l)(e_a, e_b)`
    pub fn torsion_rhs(&self, i: usize, a: usize, b: usize) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for k in 0..n {
            for l in 0..n {
                let w = self.coframe(k, a) * self.coframe(l, b) - self.coframe(k, b) * self.coframe(l, a);
                s += self.torsion[(i, k, l)] * w;
            }
        }
        0.5 * s
    }

    /// `Ω_i^j(e_a, e_b)`
    pub fn curvature_form(&self, i: usize, j: usize, a: usize, b: usize) -> f64 {
        let n = self.dim();
        let d = self.dgamma[(j, i, b, a)] - self.dgamma[(j, i, a, b)];
        let wedge: f64 = (0..n)
            .map(|k| {
                self.connection_form(i, k, a) * self.connection_form(k, j, b)
                    - self.connection_form(i, k, b) * self.connection_form(k, j, a)
            })
            .sum();
        d - wedge
    }

    /// `R̃^j_ikl = R^j_kli`
    pub fn curvature_t2(&self, j: usize, i: usize, k: usize, l: usize) -> f64 {
        self.riemann[(j, k, l, i)]
    }

    /// `½R̃^j_ikl (ω^k∧ω^l)(e_a, e_b)`
    pub fn curvature_rhs(&self, i: usize, j: usize, a: usize, b: usize) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for k in 0..n {
            for l in 0..n {
                let w = self.coframe(k, a) * self.coframe(l, b) - self.coframe(k, b) * self.coframe(l, a);
                if w != 0.0 {
                    s += self.curvature_t2(j, i, k, l) * w;
                }
            }
        }
        0.5 * s
    }
}

fn check_pair(n: usize, a: usize, b: usize) -> Result<()> {
    if a >= n || b >= n || a == b {
        return Err(Error::BadParam(format!(
            "basis pair ({a}, {b}) must be two distinct indices below {n}"
        )));
    }
    Ok(())
}

/// `max_i |Θ^i(e_a, e_b) − σ · ½T^i_kl (ω^k∧ω^l)(e_a, e_b)|`
pub fn torsion_form_check(frame: &FormFrame, a: usize, b: usize) -> Result<f64> {
    check_pair(frame.dim(), a, b)?;
    Ok((0..frame.dim())
        .map(|i| (frame.torsion_form(i, a, b) - TORSION_SIGN * frame.torsion_rhs(i, a, b)).abs())
        .fold(0.0, f64::max))
}

/// Residual per `(i, j)` of the curvature structure equation on `(e_a, e_b)`.
/// Only meaningful for Levi-Civita frames, where the two assemblies must agree.
pub fn curvature_form_check(frame: &FormFrame, a: usize, b: usize) -> Result<Matrix> {
    check_pair(frame.dim(), a, b)?;
    if !frame.levi_civita {
        return Err(Error::NeedsMetric);
    }
    Ok(Matrix::from_fn(frame.dim(), |i, j| {
        (frame.curvature_form(i, j, a, b) - CURVATURE_SIGN * frame.curvature_rhs(i, j, a, b)).abs()
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BianchiFormCheck {
    /// No 3-forms in dimension 2.
    Vacuous,
    Checked { torsion: f64, curvature: f64 },
}

/// `dΘ^i = ω^j∧Ω_j^i − Θ^j∧ω_j^i` and `dΩ_i^j = ω_i^k∧Ω_k^j − Ω_i^k∧ω_k^j`
/// on `(e_a, e_b, e_c)`, with `d` by central differences of the 2-form coefficients.
pub fn bianchi_form_check(
    src: ConnectionSource<'_>,
    point: &[f64],
    (a, b, c): (usize, usize, usize),
) -> Result<BianchiFormCheck> {
    let n = src.dim();
    if n < 3 {
        return Ok(BianchiFormCheck::Vacuous);
    }
    if a >= n || b >= n || c >= n || a == b || b == c || a == c {
        return Err(Error::BadParam(format!(
            "basis triple ({a}, {b}, {c}) must be distinct indices below {n}"
        )));
    }
    let centre = FormFrame::new(src, point)?;

    // frames shifted by ±h along each of a, b, c
    let mut shifted = Vec::with_capacity(3);
    for m in [a, b, c] {
        let h = f64::EPSILON.cbrt() * point[m].abs().max(1.0);
        let mut plus = point.to_vec();
        let mut minus = point.to_vec();
        plus[m] += h;
        minus[m] -= h;
        for p in [&plus, &minus] {
            src.check_point(p).map_err(|e| {
                Error::StencilOutOfDomain(format!("step {h:e} along x{}: {e}", m + 1))
            })?;
        }
        shifted.push((FormFrame::new(src, &plus)?, FormFrame::new(src, &minus)?, h));
    }
    let d_theta = |slot: usize, i: usize, p: usize, q: usize| {
        let (fp, fm, h) = &shifted[slot];
        (fp.torsion_form(i, p, q) - fm.torsion_form(i, p, q)) / (2.0 * h)
    };
    let d_omega = |slot: usize, i: usize, j: usize, p: usize, q: usize| {
        let (fp, fm, h) = &shifted[slot];
        (fp.curvature_form(i, j, p, q) - fm.curvature_form(i, j, p, q)) / (2.0 * h)
    };
    // cyclic orders of (a, b, c) with the slot of their first index
    let cyc = [(0, a, b, c), (1, b, c, a), (2, c, a, b)];
    let f = &centre;

    let mut worst_t = 0.0f64;
    for i in 0..n {
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for &(slot, x, y, z) in &cyc {
            lhs += d_theta(slot, i, y, z);
            rhs += f.curvature_form(x, i, y, z);
            for j in 0..n {
                rhs -= f.torsion_form(j, x, y) * f.connection_form(j, i, z);
            }
        }
        worst_t = worst_t.max((lhs - rhs).abs());
    }

    let mut worst_c = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut lhs = 0.0;
            let mut rhs = 0.0;
            for &(slot, x, y, z) in &cyc {
                lhs += d_omega(slot, i, j, y, z);
                for k in 0..n {
                    rhs += f.connection_form(i, k, x) * f.curvature_form(k, j, y, z);
                    rhs -= f.curvature_form(i, k, x, y) * f.connection_form(k, j, z);
                }
            }
            worst_c = worst_c.max((lhs - rhs).abs());
        }
    }
    Ok(BianchiFormCheck::Checked {
        torsion: worst_t,
        curvature: worst_c,
    })
}

/// Worst case over every increasing triple.
pub fn bianchi_form_check_all(src: ConnectionSource<'_>, point: &[f64]) -> Result<BianchiFormCheck> {
    let n = src.dim();
    if n < 3 {
        return Ok(BianchiFormCheck::Vacuous);
    }
    let (mut t, mut c) = (0.0f64, 0.0f64);
    for a in 0..n {
        for b in a + 1..n {
            for d in b + 1..n {
                if let BianchiFormCheck::Checked { torsion, curvature } =
                    bianchi_form_check(src, point, (a, b, d))?
                {
                    t = t.max(torsion);
                    c = c.max(curvature);
                }
            }
        }
    }
    Ok(BianchiFormCheck::Checked {
        torsion: t,
        curvature: c,
    })
}

/// Dynamical variables along a geodesic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynState {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    /// `a = dv/dt` from the geodesic right-hand side
    pub a: Vec<f64>,
    /// `[(i, j)] = W_i^j`
    pub w: Matrix,
    /// `[(i, j)] = α_i^j = dW_i^j/dt = ∂_l Γ^j_ik v^l v^k + Γ^j_ik a^k`
    pub alpha: Matrix,
    /// `R^k_ijl` at the point
    pub riemann: Tensor4,
    pub torsion: Tensor3,
}

pub fn dyn_state(spec: &MetricSpec, state: &GeodesicState) -> Result<DynState> {
    let n = spec.dim();
    let (jet, _, conn) = levi_civita(spec, &state.x)?;
    let v = &state.v;
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.len(),
        });
    }
    let a = geodesic_acceleration_gamma(spec, &state.x, v)?;
    let gm = geospin_from(&jet.g, &conn.christoffel, v, &jet.g.mul_vec(v));
    let gam = conn.gamma();
    let alpha = Matrix::from_fn(n, |i, j| {
        let mut s = 0.0;
        for k in 0..n {
            for l in 0..n {
                s += conn.dgamma[(j, i, k, l)] * v[l] * v[k];
            }
            s += gam[(j, i, k)] * a[k];
        }
        s
    });
    Ok(DynState {
        t: state.t,
        x: state.x.clone(),
        v: v.clone(),
        a,
        w: gm.w_mixed,
        alpha,
        riemann: riemann_from_connection(&conn),
        torsion: torsion(&conn.christoffel),
    })
}

/// Tolerances of the asserted dynamical identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynTolerances {
    pub geodesic: f64,
    pub antisymmetric_rhs: f64,
}

impl Default for DynTolerances {
    fn default() -> Self {
        Self {
            geodesic: 1e-9,
            antisymmetric_rhs: 1e-13,
        }
    }
}

fn flat(m: &Matrix) -> Vec<f64> {
    m.as_slice().to_vec()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Residual families of the dynamical structure equations along a trajectory,
/// read with wedges as contracted products (`dt` divided out). Only the
/// geodesic equation and the two antisymmetric right-hand sides are asserted.
pub fn geometrodynamics_residuals(spec: &MetricSpec, traj: &Trajectory) -> Result<StructuralReport> {
    geometrodynamics_residuals_with(spec, traj, DynTolerances::default())
}

pub fn geometrodynamics_residuals_with(
    spec: &MetricSpec,
    traj: &Trajectory,
    tol: DynTolerances,
) -> Result<StructuralReport> {
    let n = spec.dim();
    let states = (0..traj.samples.len())
        .map(|i| dyn_state(spec, &traj.state(i)))
        .collect::<Result<Vec<_>>>()?;

    let sd = Interpretation::ScalarDynamical;
    let mut geo = IdentityReport::asserted("R_geo", sd, tol.geodesic)
        .with_notes("a^k + W_j^k v^j; this contraction is the one matching the integrated acceleration");
    let mut geo_t = IdentityReport::measured("R_geo_transposed", sd)
        .with_notes("a^k + W_k^j v^j; the transposed contraction, not the geodesic equation");
    let mut tors = IdentityReport::measured("R_tors", sd)
        .with_notes("a^i - v^j W_j^i; equals -2 W_j^i v^j on geodesics");
    let mut curv = IdentityReport::measured("R_curv", sd).with_notes(
        "alpha_i^j - W_i^k W_k^j, row-major (i, j); nonzero even in flat charts",
    );
    let mut b1 = IdentityReport::measured("R_b1", sd).with_notes("v^j alpha_j^i - a^j W_j^i");
    let mut b2 = IdentityReport::measured("R_b2", sd).with_notes("(W alpha - alpha W)_i^j, row-major");
    let mut rhs_c = IdentityReport::asserted("rhs_curvature_scalar", sd, tol.antisymmetric_rhs)
        .with_notes("1/2 R~^j_ikl v^k v^l, zero by antisymmetry in (k, l)");
    let mut rhs_t = IdentityReport::asserted("rhs_torsion_scalar", sd, tol.antisymmetric_rhs)
        .with_notes("1/2 T^i_kl v^k v^l, zero by antisymmetry in (k, l)");
    let mut fd = IdentityReport::measured("alpha_fd_crosscheck", sd)
        .with_notes("analytic alpha vs three-point differences of W between recorded samples");

    for (idx, s) in states.iter().enumerate() {
        let wv: Vec<f64> = (0..n)
            .map(|k| (0..n).map(|j| s.w[(j, k)] * s.v[j]).sum())
            .collect();
        let wv_t = s.w.mul_vec(&s.v);
        let r_geo: Vec<f64> = (0..n).map(|k| s.a[k] + wv[k]).collect();
        let r_geo_t: Vec<f64> = (0..n).map(|k| s.a[k] + wv_t[k]).collect();
        let r_tors: Vec<f64> = (0..n).map(|k| s.a[k] - wv[k]).collect();
        let r_curv = s.alpha.sub(&s.w.matmul(&s.w));
        let r_b1: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| s.v[j] * s.alpha[(j, i)] - s.a[j] * s.w[(j, i)]).sum())
            .collect();
        let r_b2 = s.w.matmul(&s.alpha).sub(&s.alpha.matmul(&s.w));
        let rc = Matrix::from_fn(n, |i, j| {
            let mut acc = 0.0;
            for k in 0..n {
                for l in 0..n {
                    acc += s.riemann[(j, k, l, i)] * s.v[k] * s.v[l];
                }
            }
            0.5 * acc
        });
        let rt: Vec<f64> = (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for k in 0..n {
                    for l in 0..n {
                        acc += s.torsion[(i, k, l)] * s.v[k] * s.v[l];
                    }
                }
                0.5 * acc
            })
            .collect();

        for (rep, vals) in [
            (&mut geo, r_geo),
            (&mut geo_t, r_geo_t),
            (&mut tors, r_tors),
            (&mut curv, flat(&r_curv)),
            (&mut b1, r_b1),
            (&mut b2, flat(&r_b2)),
            (&mut rhs_c, flat(&rc)),
            (&mut rhs_t, rt),
        ] {
            rep.record(max_abs(&vals));
            rep.trace.push(TraceRow { t: s.t, values: vals });
        }

        if idx > 0 && idx + 1 < states.len() {
            let (p, q) = (&states[idx - 1], &states[idx + 1]);
            let (h1, h2) = (s.t - p.t, q.t - s.t);
            let cp = -h2 / (h1 * (h1 + h2));
            let c0 = (h2 - h1) / (h1 * h2);
            let cq = h1 / (h2 * (h1 + h2));
            let dw = Matrix::from_fn(n, |i, j| cp * p.w[(i, j)] + c0 * s.w[(i, j)] + cq * q.w[(i, j)]);
            fd.record(dw.sub(&s.alpha).max_abs());
        }
    }

    let mut report = StructuralReport::new(&spec.name);
    report.identities = vec![geo, geo_t, tors, curv, b1, b2, rhs_c, rhs_t, fd];
    if traj.exited_domain() {
        report
            .notices
            .push("trajectory ended at a domain exit; residuals cover the valid portion".into());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{integrate, IntegratorConfig};
    use crate::metric::{builtin, catalog, Params};
    use crate::sample::sample_points;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn named(name: &str) -> MetricSpec {
        builtin(name, &Params::new()).unwrap()
    }

    fn twist(scale: f64) -> CustomConnection {
        let s = format!("{scale:?}");
        CustomConnection::new("twist", &["x", "y"], &[((0, 0, 1), &s)], &[], vec![(-1.0, 1.0); 2]).unwrap()
    }

    #[test]
    fn levi_civita_torsion_form_vanishes() {
        for spec in catalog() {
            for p in sample_points(&spec, 50, 5).unwrap() {
                let f = FormFrame::new(ConnectionSource::Metric(&spec), &p).unwrap();
                for a in 0..spec.dim() {
                    for b in 0..spec.dim() {
                        if a != b {
                            assert!(torsion_form_check(&f, a, b).unwrap() <= 1e-12);
                            assert_eq!(f.torsion_form(0, a, b), 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn synthetic_torsion_is_reproduced() {
        for scale in [1.0, 3.5, -0.25] {
            let c = twist(scale);
            let f = FormFrame::new(ConnectionSource::Custom(&c), &[0.2, 0.1]).unwrap();
            assert!((f.torsion_form(0, 0, 1).abs() - scale.abs()).abs() <= 1e-14);
            assert!((f.torsion_rhs(0, 0, 1).abs() - scale.abs()).abs() <= 1e-14);
            assert!(torsion_form_check(&f, 0, 1).unwrap() <= 1e-14);
            assert!(torsion_form_check(&f, 1, 0).unwrap() <= 1e-14);
        }
    }

    #[test]
    fn curvature_form_needs_a_metric() {
        let c = twist(1.0);
        let f = FormFrame::new(ConnectionSource::Custom(&c), &[0.2, 0.1]).unwrap();
        assert_eq!(curvature_form_check(&f, 0, 1), Err(Error::NeedsMetric));
        assert!(torsion_form_check(&f, 0, 0).is_err());
    }

    #[test]
    fn frozen_permutation_is_the_only_match() {
        // a metric with no symmetries, so only genuine index identities survive
        let spec = MetricSpec::new(
            "generic",
            &["x", "y", "z"],
            &[
                ((0, 0), "2 + sin(x*y)"),
                ((1, 0), "0.3*cos(z)"),
                ((1, 1), "3 + x^2*z"),
                ((2, 0), "0.2*y"),
                ((2, 1), "0.1*x*z"),
                ((2, 2), "1.5 + exp(0.3*y)"),
            ],
            &[],
            crate::metric::Signature::Riemannian,
            vec![(-0.5, 0.5); 3],
        )
        .unwrap();
        let f = FormFrame::new(ConnectionSource::Metric(&spec), &[0.31, -0.22, 0.17]).unwrap();
        let n = 3;
        let mut matches = Vec::new();
        for perm in permutations4() {
            for sign in [1.0, -1.0] {
                let mut worst = 0.0f64;
                for i in 0..n {
                    for j in 0..n {
                        for a in 0..n {
                            for b in 0..n {
                                let idx = [j, i, a, b];
                                let r = f.riemann[(idx[perm[0]], idx[perm[1]], idx[perm[2]], idx[perm[3]])];
                                worst = worst.max((f.curvature_form(i, j, a, b) - sign * r).abs());
                            }
                        }
                    }
                }
                if worst <= 1e-9 {
                    matches.push((perm, sign));
                }
            }
        }
        // (j, i, a, b) -> R^j_abi with +1, and its (a, b) antisymmetric twin
        assert_eq!(matches, vec![([0, 2, 3, 1], 1.0), ([0, 3, 2, 1], -1.0)]);
        assert_eq!(CURVATURE_SIGN, 1.0);
    }

    fn permutations4() -> Vec<[usize; 4]> {
        let mut out = Vec::new();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let p = [a, b, c, d];
                        let mut seen = [false; 4];
                        p.iter().for_each(|&x| seen[x] = true);
                        if seen.iter().all(|&s| s) {
                            out.push(p);
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn curvature_form_on_sphere_and_poincare() {
        let sphere = named("sphere");
        let f = FormFrame::new(ConnectionSource::Metric(&sphere), &[FRAC_PI_4, 0.0]).unwrap();
        assert!(curvature_form_check(&f, 0, 1).unwrap().max_abs() <= 1e-9);
        // Ω_θ^φ(e_θ, e_φ) = R^φ_θφθ = -1 on the unit sphere
        assert!((f.curvature_form(0, 1, 0, 1) + 1.0).abs() < 1e-12);

        let poincare = named("poincare-half-plane");
        for p in sample_points(&poincare, 20, 9).unwrap() {
            let f = FormFrame::new(ConnectionSource::Metric(&poincare), &p).unwrap();
            assert!(curvature_form_check(&f, 0, 1).unwrap().max_abs() <= 1e-9);
        }
    }

    #[test]
    fn flat_curvature_forms_vanish() {
        let polar = named("polar2");
        let f = FormFrame::new(ConnectionSource::Metric(&polar), &[1.3, 0.2]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(f.curvature_form(i, j, 0, 1).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn bianchi_forms() {
        let e3 = named("euclidean");
        assert_eq!(
            bianchi_form_check_all(ConnectionSource::Metric(&e3), &[0.1, 0.2, 0.3]).unwrap(),
            BianchiFormCheck::Checked {
                torsion: 0.0,
                curvature: 0.0
            }
        );
        let scl = named("sphere-cross-line");
        for p in sample_points(&scl, 10, 2).unwrap() {
            let BianchiFormCheck::Checked { torsion, curvature } =
                bianchi_form_check_all(ConnectionSource::Metric(&scl), &p).unwrap()
            else {
                panic!("n = 3")
            };
            assert!(torsion <= 1e-5 && curvature <= 1e-5, "{torsion:e} {curvature:e}");
        }
        assert_eq!(
            bianchi_form_check(ConnectionSource::Metric(&named("sphere")), &[1.0, 0.0], (0, 1, 0)).unwrap(),
            BianchiFormCheck::Vacuous
        );
    }

    #[test]
    fn bianchi_forms_hold_with_torsion() {
        let c = CustomConnection::new(
            "torsionful",
            &["x", "y", "z"],
            &[
                ((0, 0, 1), "sin(z)"),
                ((1, 2, 0), "x*y"),
                ((2, 1, 2), "cos(x) + y"),
                ((0, 2, 2), "0.5*x*z"),
            ],
            &[],
            vec![(-1.0, 1.0); 3],
        )
        .unwrap();
        let BianchiFormCheck::Checked { torsion, curvature } =
            bianchi_form_check_all(ConnectionSource::Custom(&c), &[0.3, -0.4, 0.5]).unwrap()
        else {
            panic!("n = 3")
        };
        assert!(torsion <= 1e-8 && curvature <= 1e-8, "{torsion:e} {curvature:e}");
    }

    #[test]
    fn stencil_must_fit() {
        let poincare3 = MetricSpec::new(
            "h3",
            &["x", "y", "z"],
            &[((0, 0), "1/z^2"), ((1, 1), "1/z^2"), ((2, 2), "1/z^2")],
            &["z"],
            crate::metric::Signature::Riemannian,
            vec![(-1.0, 1.0), (-1.0, 1.0), (0.5, 2.0)],
        )
        .unwrap();
        assert!(matches!(
            bianchi_form_check(ConnectionSource::Metric(&poincare3), &[0.0, 0.0, 1e-7], (0, 1, 2)),
            Err(Error::StencilOutOfDomain(_))
        ));
    }

    #[test]
    fn dyn_state_values() {
        let flat = named("euclidean");
        let d = dyn_state(&flat, &GeodesicState::new(vec![1.0, 2.0, 3.0], vec![0.3, 0.1, 0.2])).unwrap();
        assert_eq!(d.a, vec![0.0; 3]);
        assert_eq!(d.alpha.max_abs(), 0.0);

        let polar = named("polar2");
        let d = dyn_state(&polar, &GeodesicState::new(vec![2.0, 0.3], vec![1.0, 0.0])).unwrap();
        assert!((d.alpha[(1, 1)] + 0.25).abs() < 1e-15);
        assert!((d.w[(1, 1)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn alpha_matches_differences_along_equator() {
        let sphere = named("sphere");
        let traj = integrate(
            &sphere,
            &GeodesicState::new(vec![FRAC_PI_2, 0.0], vec![0.0, 1.0]),
            &IntegratorConfig::rk4(1e-3, 1.0),
        )
        .unwrap();
        let rep = geometrodynamics_residuals(&sphere, &traj).unwrap();
        assert!(rep.get("alpha_fd_crosscheck").unwrap().max_residual <= 1e-8);
        assert!(rep.get("R_geo").unwrap().max_residual <= 1e-10);
        assert!(rep.all_asserted_pass());
        let d = dyn_state(&sphere, &traj.state(10)).unwrap();
        assert!(d.a.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn tilted_orbit_alpha_crosscheck() {
        let sphere = named("sphere");
        let traj = integrate(
            &sphere,
            &GeodesicState::new(vec![1.2, 0.0], vec![0.3, 0.8]),
            &IntegratorConfig::rk4(1e-3, 2.0),
        )
        .unwrap();
        let rep = geometrodynamics_residuals(&sphere, &traj).unwrap();
        assert!(rep.get("alpha_fd_crosscheck").unwrap().max_residual <= 1e-6);
        assert!(rep.get("R_b2").unwrap().max_residual > 0.0);
    }

    #[test]
    fn polar_radial_report() {
        let polar = named("polar2");
        let traj = integrate(
            &polar,
            &GeodesicState::new(vec![2.0, 0.4], vec![1.0, 0.0]),
            &IntegratorConfig::rk4(1e-2, 1.0),
        )
        .unwrap();
        let rep = geometrodynamics_residuals(&polar, &traj).unwrap();
        assert!(rep.get("R_geo").unwrap().max_residual <= 1e-10);
        let curv = rep.get("R_curv").unwrap();
        assert!(!curv.asserted);
        for (row, s) in curv.trace.iter().zip(&traj.samples) {
            let r = s.x[0];
            assert!((row.values[3] + 2.0 / (r * r)).abs() <= 1e-8);
        }
        assert!((curv.trace[0].values[3] + 0.5).abs() < 1e-14);
        assert!(rep.get("rhs_curvature_scalar").unwrap().max_residual <= 1e-13);
    }

    #[test]
    fn euclidean_report_is_zero() {
        let flat = named("euclidean");
        let traj = integrate(
            &flat,
            &GeodesicState::new(vec![0.0; 3], vec![1.0, -1.0, 0.5]),
            &IntegratorConfig::rk4(0.1, 1.0),
        )
        .unwrap();
        let rep = geometrodynamics_residuals(&flat, &traj).unwrap();
        for r in &rep.identities {
            assert_eq!(r.max_residual, 0.0, "{}", r.identity);
        }
    }
}
