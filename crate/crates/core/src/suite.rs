//! The full identity suite at seeded sample points.
//!
//! Points (and velocities, for metric sources) are drawn sequentially from one
//! seeded generator; per-point checks may run on the rayon pool and are merged
//! in point order, so a seed always reproduces the same report.

use serde::Serialize;

use crate::cartan::{
    bianchi_form_check_all, curvature_form_check, torsion_form_check, BianchiFormCheck,
    ConnectionSource, FormFrame,
};
use crate::connection::{
    christoffel_from_jet, compatibility_residual_for, covariant_derivative_02, levi_civita_jet,
    torsion, CustomConnection, VectorFieldSpec,
};
use crate::curvature::{
    commutator_curvature_residual, curvature_from_parts, first_bianchi_residual,
    riemann_symmetry_residual, second_bianchi_residual,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geospin::{covariant_rewrite_residual, covariant_rewrite_residual_oneform, geospin_residuals};
use crate::metric::{inverse_metric, metric_jet, MetricSpec};
use crate::report::{IdentityReport, Interpretation, StructuralReport};
use crate::sample::{rng, sample_point, sample_velocity};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub compatibility: f64,
    pub nabla_g: f64,
    pub torsion: f64,
    pub riemann_symmetry: f64,
    pub first_bianchi: f64,
    pub second_bianchi: f64,
    pub ricci: f64,
    pub commutator: f64,
    pub geospin_symmetry: f64,
    pub metric_derivative: f64,
    pub contraction: f64,
    pub diagonal: f64,
    pub q_invariant: f64,
    pub star_lower: f64,
    pub rewrite: f64,
    pub torsion_form: f64,
    pub curvature_form: f64,
    pub bianchi_form: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            compatibility: 1e-11,
            nabla_g: 1e-11,
            torsion: 0.0,
            riemann_symmetry: 1e-10,
            first_bianchi: 1e-10,
            second_bianchi: 1e-6,
            ricci: 1e-10,
            commutator: 1e-8,
            geospin_symmetry: 1e-12,
            metric_derivative: 1e-11,
            contraction: 1e-11,
            diagonal: 1e-11,
            q_invariant: 1e-11,
            star_lower: 1e-12,
            rewrite: 1e-12,
            torsion_form: 1e-12,
            curvature_form: 1e-9,
            bianchi_form: 1e-5,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 18] = [
        "compatibility",
        "nabla-g",
        "torsion",
        "riemann-symmetry",
        "first-bianchi",
        "second-bianchi",
        "ricci",
        "commutator",
        "geospin-symmetry",
        "metric-derivative",
        "contraction",
        "diagonal",
        "q-invariant",
        "star-lower",
        "rewrite",
        "torsion-form",
        "curvature-form",
        "bianchi-form",
    ];

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "compatibility" => &mut self.compatibility,
            "nabla-g" => &mut self.nabla_g,
            "torsion" => &mut self.torsion,
            "riemann-symmetry" => &mut self.riemann_symmetry,
            "first-bianchi" => &mut self.first_bianchi,
            "second-bianchi" => &mut self.second_bianchi,
            "ricci" => &mut self.ricci,
            "commutator" => &mut self.commutator,
            "geospin-symmetry" => &mut self.geospin_symmetry,
            "metric-derivative" => &mut self.metric_derivative,
            "contraction" => &mut self.contraction,
            "diagonal" => &mut self.diagonal,
            "q-invariant" => &mut self.q_invariant,
            "star-lower" => &mut self.star_lower,
            "rewrite" => &mut self.rewrite,
            "torsion-form" => &mut self.torsion_form,
            "curvature-form" => &mut self.curvature_form,
            "bianchi-form" => &mut self.bianchi_form,
            _ => return None,
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::BadParam(format!("tolerance {name} must be >= 0, got {value}")));
        }
        let slot = self
            .slot(name)
            .ok_or_else(|| Error::BadParam(format!("unknown tolerance `{name}`")))?;
        *slot = value;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub samples: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub execution: Execution,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            samples: 100,
            seed: crate::sample::DEFAULT_SEED,
            tolerances: Tolerances::default(),
            execution: Execution::default(),
        }
    }
}

/// The fixed field used by the commutator and rewrite checks: component `j`
/// (0-based) is `sin(x^{j+1 mod n})` for even `j` and `cos(x^{j-1})` for odd `j`.
/// In two dimensions this is `(sin x2, cos x1)`.
pub fn test_field_sources(n: usize) -> Vec<String> {
    (0..n)
        .map(|j| {
            if j % 2 == 0 {
                format!("sin(x{})", (j + 1) % n + 1)
            } else {
                format!("cos(x{})", j)
            }
        })
        .collect()
}

type PointResult = Vec<(&'static str, f64)>;

fn metric_point(
    spec: &MetricSpec,
    field: &VectorFieldSpec,
    p: &[f64],
    v: &[f64],
) -> Result<PointResult> {
    let n = spec.dim();
    let jet = metric_jet(spec, p)?;
    let ginv = inverse_metric(&jet.g)?;
    let chr = christoffel_from_jet(&jet, &ginv);
    let conn = levi_civita_jet(&jet, &ginv);
    let pack = curvature_from_parts(&jet.g, &ginv, &conn);
    let ricci = &pack.ricci;
    let geo = geospin_residuals(spec, p, v)?;
    let oneform = field.lowered(spec)?;

    let frame = FormFrame::new(ConnectionSource::Metric(spec), p)?;
    let mut tform = 0.0f64;
    let mut cform = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            if a != b {
                tform = tform.max(torsion_form_check(&frame, a, b)?);
                cform = cform.max(curvature_form_check(&frame, a, b)?.max_abs());
            }
        }
    }

    let mut out = vec![
        ("metric_compatibility", compatibility_residual_for(&jet, &chr).max_abs()),
        ("covariant_derivative_of_metric", covariant_derivative_02(&jet.g, &jet.dg, &chr).max_abs()),
        ("levi_civita_torsion", torsion(&chr).max_abs()),
        ("riemann_symmetries", riemann_symmetry_residual(&pack.riemann_low)),
        ("first_bianchi", first_bianchi_residual(&pack)),
        ("second_bianchi", second_bianchi_residual(spec, p)?),
        ("ricci_symmetry", ricci.ricci.sub(&ricci.ricci.transpose()).max_abs()),
        ("ricci_trace_scalar", (ricci.trace_mixed - ricci.scalar).abs()),
        ("commutator_curvature", commutator_curvature_residual(field, spec, p)?),
        ("geospin_lowered_symmetry", geo.lowered_symmetry),
        ("geospin_metric_derivative", geo.metric_derivative),
        ("geospin_contraction", geo.contraction),
        ("geospin_diagonal_routes", geo.diagonal_routes),
        ("geospin_q_routes", geo.q_routes),
        ("geospin_star_lower", geo.star_lower),
        (
            "covariant_rewrite",
            covariant_rewrite_residual(field, spec, p)?
                .max(covariant_rewrite_residual_oneform(&oneform, spec, p)?),
        ),
        ("torsion_form", tform),
        ("curvature_form", cform),
    ];
    if let BianchiFormCheck::Checked { torsion, curvature } =
        bianchi_form_check_all(ConnectionSource::Metric(spec), p)?
    {
        out.push(("bianchi_form_torsion", torsion));
        out.push(("bianchi_form_curvature", curvature));
    }
    Ok(out)
}

fn custom_point(conn: &CustomConnection, p: &[f64]) -> Result<PointResult> {
    let n = conn.dim();
    let chr = conn.coefficients(p)?;
    let t = torsion(&chr);
    let mut anti = 0.0f64;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                anti = anti.max((t[(k, i, j)] + t[(k, j, i)]).abs());
            }
        }
    }
    let frame = FormFrame::new(ConnectionSource::Custom(conn), p)?;
    let mut tform = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            if a != b {
                tform = tform.max(torsion_form_check(&frame, a, b)?);
            }
        }
    }
    let mut out = vec![("torsion_antisymmetry", anti), ("torsion_form", tform)];
    if let BianchiFormCheck::Checked { torsion, curvature } =
        bianchi_form_check_all(ConnectionSource::Custom(conn), p)?
    {
        out.push(("bianchi_form_torsion", torsion));
        out.push(("bianchi_form_curvature", curvature));
    }
    Ok(out)
}

fn entry(name: &str, tol: &Tolerances) -> IdentityReport {
    use Interpretation::{FormLevel, Pointwise};
    let (interp, t, notes) = match name {
        "metric_compatibility" => (Pointwise, tol.compatibility, "dg_ij/dx^k - g_lj G^l_ki - g_il G^l_kj"),
        "covariant_derivative_of_metric" => (Pointwise, tol.nabla_g, "(0,2) covariant derivative of g"),
        "levi_civita_torsion" => (Pointwise, tol.torsion, "G^k_ij - G^k_ji"),
        "torsion_antisymmetry" => (Pointwise, tol.torsion, "T^k_ij + T^k_ji"),
        "riemann_symmetries" => (Pointwise, tol.riemann_symmetry, "R_ijkl = -R_jikl = -R_ijlk = R_klij"),
        "first_bianchi" => (Pointwise, tol.first_bianchi, "cyclic sum R^k_ijl + R^k_jli + R^k_lij"),
        "second_bianchi" => (
            Pointwise,
            tol.second_bianchi,
            "cyclic sum of nabla_l R^h_ijk over (i, j, l); dR by central differences",
        ),
        "ricci_symmetry" => (Pointwise, tol.ricci, "R_ik - R_ki"),
        "ricci_trace_scalar" => (Pointwise, tol.ricci, "trace of R_i^j vs scalar curvature"),
        "commutator_curvature" => (
            Pointwise,
            tol.commutator,
            "(nabla_i nabla_j - nabla_j nabla_i) v^l - R^l_ijk v^k for the fixed test field",
        ),
        "geospin_lowered_symmetry" => (Pointwise, tol.geospin_symmetry, "W_kj - W_jk"),
        "geospin_metric_derivative" => (Pointwise, tol.metric_derivative, "dg_ij/dx^k v^k - (W*_ji + W*_ij)"),
        "geospin_contraction" => (Pointwise, tol.contraction, "2 W_i^k v_k - v^l v^j dg_jl/dx^i"),
        "geospin_diagonal_routes" => (
            Pointwise,
            tol.diagonal,
            "both closed forms equal the trace of W, not each diagonal entry",
        ),
        "geospin_q_routes" => (Pointwise, tol.q_invariant, "q^k v_k vs 1/2 v^l v^j v^i dg_jl/dx^i"),
        "geospin_star_lower" => (Pointwise, tol.star_lower, "W* and W_ik rebuilt from first-kind symbols"),
        "covariant_rewrite" => (Pointwise, tol.rewrite, "nabla_k v^j = d_k v^j + W_k^j and the 1-form variant"),
        "torsion_form" => (FormLevel, tol.torsion_form, "sign sigma = -1, all basis pairs"),
        "curvature_form" => (FormLevel, tol.curvature_form, "R~^j_ikl = R^j_kli, sign +1, all basis pairs"),
        "bianchi_form_torsion" => (FormLevel, tol.bianchi_form, "d Theta = omega ^ Omega - Theta ^ omega, all triples"),
        "bianchi_form_curvature" => (FormLevel, tol.bianchi_form, "d Omega = omega ^ Omega - Omega ^ omega, all triples"),
        _ => unreachable!("unlisted identity {name}"),
    };
    IdentityReport::asserted(name, interp, t).with_notes(notes)
}

fn vacuous_entries(report: &mut StructuralReport) {
    for name in ["bianchi_form_torsion", "bianchi_form_curvature"] {
        report.identities.push(
            IdentityReport::measured(name, Interpretation::FormLevel)
                .with_notes("vacuous (no 3-forms in dimension 2)"),
        );
    }
}

fn assemble(
    name: &str,
    per_point: Vec<Result<PointResult>>,
    tol: &Tolerances,
) -> Result<StructuralReport> {
    let mut report = StructuralReport::new(name);
    for (idx, res) in per_point.into_iter().enumerate() {
        let rows = res.map_err(|e| match e {
            Error::StencilOutOfDomain(m) => Error::StencilOutOfDomain(format!("sample {idx}: {m}")),
            other => other,
        })?;
        for (identity, residual) in rows {
            match report.identities.iter_mut().find(|r| r.identity == identity) {
                Some(r) => r.record(residual),
                None => {
                    let mut r = entry(identity, tol);
                    r.record(residual);
                    report.identities.push(r);
                }
            }
        }
    }
    Ok(report)
}

pub fn verify_metric(spec: &MetricSpec, cfg: &VerifyConfig) -> Result<StructuralReport> {
    if cfg.samples == 0 {
        return Err(Error::BadParam("at least one sample is required".into()));
    }
    let n = spec.dim();
    let field = VectorFieldSpec::parse(&test_field_sources(n), &spec.var_table())?;
    let mut r = rng(cfg.seed);
    let mut draws = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        let p = sample_point(spec, &mut r)?;
        let v = sample_velocity(n, &mut r);
        draws.push((p, v));
    }
    let per_point = cfg
        .execution
        .map(&draws, |_, (p, v)| metric_point(spec, &field, p, v));
    let mut report = assemble(&spec.name, per_point, &cfg.tolerances)?;
    if n < 3 {
        vacuous_entries(&mut report);
    }
    Ok(report)
}

pub fn verify_connection(conn: &CustomConnection, cfg: &VerifyConfig) -> Result<StructuralReport> {
    if cfg.samples == 0 {
        return Err(Error::BadParam("at least one sample is required".into()));
    }
    let mut r = rng(cfg.seed);
    let points = (0..cfg.samples)
        .map(|_| sample_point(conn, &mut r))
        .collect::<Result<Vec<_>>>()?;
    let per_point = cfg.execution.map(&points, |_, p| custom_point(conn, p));
    let mut report = assemble(&conn.name, per_point, &cfg.tolerances)?;
    if conn.dim() < 3 {
        vacuous_entries(&mut report);
    }
    report.notices.push(
        "custom connection: curvature-vs-metric, geospin and commutator checks skipped (no metric)".into(),
    );
    Ok(report)
}

pub fn verify(src: ConnectionSource<'_>, cfg: &VerifyConfig) -> Result<StructuralReport> {
    match src {
        ConnectionSource::Metric(m) => verify_metric(m, cfg),
        ConnectionSource::Custom(c) => verify_connection(c, cfg),
    }
}
