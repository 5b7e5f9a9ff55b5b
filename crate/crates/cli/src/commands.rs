use std::io::Write;

use geospin_core::cartan::{geometrodynamics_residuals, ConnectionSource};
use geospin_core::connection::christoffel;
use geospin_core::curvature::curvature;
use geospin_core::exec::Execution;
use geospin_core::expr::{eval_scalar, parse};
use geospin_core::flow::{
    conserved_speed_report, constant_w_position, constant_w_velocity, csv_header, csv_row, integrate, solve,
    GeodesicState, IntegratorConfig, Method, Termination, Trajectory,
};
use geospin_core::linalg::{max_abs_diff, Matrix};
use geospin_core::metric::{
    builtin, catalog, catalog_names, load_source_file, metric_at, parse_metric_arg, MetricSource, MetricSpec,
    Params,
};
use geospin_core::report::StructuralReport;
use geospin_core::suite::{verify, VerifyConfig};
use geospin_core::Error;
use serde_json::json;

use crate::args::{Format, GeodesicArgs, MetricArgs, TolOverrides};
use crate::fmt::{fmt_machine, fmt_num, fmt_pretty, fmt_vec, index_label, matrix_json, tensor3_json, tensor4_json};
use crate::Failure;

/// What a successful run reports back to `main`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    AssertedFailure,
    DomainExit,
}

type Run = Result<Outcome, Failure>;

/// Comma-separated list of constant expressions (`pi/2`, `-0.5`, `sqrt(2)`).
pub fn parse_vector(src: &str) -> Result<Vec<f64>, Error> {
    src.split(',')
        .map(|part| {
            let part = part.trim();
            if part.is_empty() {
                return Err(Error::BadParam(format!("empty entry in `{src}`")));
            }
            let e = parse(part, 0)?;
            let v = eval_scalar(&e, &[])?;
            if !v.is_finite() {
                return Err(Error::BadParam(format!("`{part}` is not finite")));
            }
            Ok(v)
        })
        .collect()
}

pub fn parse_matrix(src: &str) -> Result<Matrix, Error> {
    let rows = src.split(';').map(parse_vector).collect::<Result<Vec<_>, _>>()?;
    Matrix::from_rows(&rows)
}

fn load_source(args: &MetricArgs) -> Result<MetricSource, Error> {
    match (&args.metric, &args.metric_file) {
        (_, Some(path)) => load_source_file(path),
        (Some(m), None) => parse_metric_arg(m).map(MetricSource::Metric),
        (None, None) => Err(Error::BadParam("one of --metric or --metric-file is required".into())),
    }
}

fn load_metric(args: &MetricArgs) -> Result<MetricSpec, Error> {
    match load_source(args)? {
        MetricSource::Metric(m) => Ok(m),
        MetricSource::Connection(_) => Err(Error::NeedsMetric),
    }
}

pub fn metrics_list<W: Write>(out: &mut W, format: Format) -> Run {
    if format == Format::Csv {
        writeln!(out, "name,dim,signature,variables,guards")?;
    }
    for name in catalog_names() {
        let m = builtin(name, &Params::new())?;
        let guards: Vec<&str> = m.guards.iter().map(|g| g.source.as_str()).collect();
        match format {
            Format::Csv => writeln!(
                out,
                "{},{},{},{},{}",
                m.name,
                m.dim(),
                json!(m.signature).as_str().unwrap_or(""),
                m.variables.join(";"),
                guards.join(";")
            )?,
            Format::Jsonl => writeln!(
                out,
                "{}",
                json!({
                    "name": m.name,
                    "dim": m.dim(),
                    "signature": m.signature,
                    "variables": m.variables,
                    "guards": guards,
                    "sample_box": m.sample_box,
                })
            )?,
            Format::Pretty => {
                let sig = json!(m.signature);
                write!(
                    out,
                    "{:<22} dim {}  {:<10}  ({})",
                    m.name,
                    m.dim(),
                    sig.as_str().unwrap_or(""),
                    m.variables.join(", ")
                )?;
                if !guards.is_empty() {
                    write!(out, "  guards: {}", guards.join(", "))?;
                }
                writeln!(out)?;
            }
        }
    }
    Ok(Outcome::Ok)
}

pub fn cmd_curvature<W: Write>(out: &mut W, format: Format, args: &MetricArgs, at: &str) -> Run {
    let spec = load_metric(args)?;
    let point = parse_vector(at)?;
    let g = metric_at(&spec, &point)?;
    let chr = christoffel(&spec, &point)?;
    let pack = curvature(&spec, &point)?;
    let n = spec.dim();
    let r = &pack.ricci;

    match format {
        Format::Jsonl => {
            let v = json!({
                "metric": spec.name,
                "point": point,
                "g": matrix_json(&g),
                "christoffel": tensor3_json(&chr.gamma),
                "riemann_mixed": tensor4_json(&pack.riemann_mixed),
                "riemann_lower": tensor4_json(&pack.riemann_low),
                "ricci": matrix_json(&r.ricci),
                "ricci_mixed": matrix_json(&r.ricci_mixed),
                "R": r.scalar,
                "ricci_mixed_det": r.det_mixed,
                "ricci_mixed_trace": r.trace_mixed,
            });
            writeln!(out, "{v}")?;
        }
        Format::Csv => {
            writeln!(out, "quantity,index,value")?;
            let mut row = |q: &str, idx: &[usize], x: f64| writeln!(out, "{q},{},{}", index_label(idx), fmt_machine(x));
            for i in 0..n {
                for j in 0..n {
                    row("g", &[i, j], g[(i, j)])?;
                }
            }
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        row("christoffel", &[k, i, j], chr.gamma[(k, i, j)])?;
                    }
                }
            }
            for (q, t) in [("riemann_mixed", &pack.riemann_mixed), ("riemann_lower", &pack.riemann_low)] {
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            for d in 0..n {
                                row(q, &[a, b, c, d], t[(a, b, c, d)])?;
                            }
                        }
                    }
                }
            }
            for (q, m) in [("ricci", &r.ricci), ("ricci_mixed", &r.ricci_mixed)] {
                for i in 0..n {
                    for j in 0..n {
                        row(q, &[i, j], m[(i, j)])?;
                    }
                }
            }
            row("R", &[], r.scalar)?;
            row("ricci_mixed_det", &[], r.det_mixed)?;
            row("ricci_mixed_trace", &[], r.trace_mixed)?;
        }
        Format::Pretty => {
            let var = |i: usize| spec.variables[i].as_str();
            writeln!(out, "metric {} at ({})", spec.name, fmt_vec(&point, format))?;
            writeln!(out, "g_ij")?;
            for row in g.rows() {
                writeln!(out, "  [{}]", fmt_vec(&row, format))?;
            }
            writeln!(out, "Christoffel symbols (nonzero)")?;
            for k in 0..n {
                for i in 0..n {
                    for j in i..n {
                        let x = chr.gamma[(k, i, j)];
                        if x != 0.0 {
                            writeln!(out, "  Γ^{}_{{{} {}}} = {}", var(k), var(i), var(j), fmt_pretty(x))?;
                        }
                    }
                }
            }
            writeln!(out, "Riemann R^k_ijl (nonzero, i < j)")?;
            for k in 0..n {
                for i in 0..n {
                    for j in i + 1..n {
                        for l in 0..n {
                            let x = pack.riemann_mixed[(k, i, j, l)];
                            if x != 0.0 {
                                writeln!(out, "  R^{}_{{{} {} {}}} = {}", var(k), var(i), var(j), var(l), fmt_pretty(x))?;
                            }
                        }
                    }
                }
            }
            writeln!(out, "Riemann R_ijkl (nonzero, i < j, k < l)")?;
            for i in 0..n {
                for j in i + 1..n {
                    for k in 0..n {
                        for l in k + 1..n {
                            let x = pack.riemann_low[(i, j, k, l)];
                            if x != 0.0 {
                                writeln!(out, "  R_{{{} {} {} {}}} = {}", var(i), var(j), var(k), var(l), fmt_pretty(x))?;
                            }
                        }
                    }
                }
            }
            writeln!(out, "Ricci R_ik")?;
            for row in r.ricci.rows() {
                writeln!(out, "  [{}]", fmt_vec(&row, format))?;
            }
            writeln!(out, "mixed Ricci R_i^j")?;
            for row in r.ricci_mixed.rows() {
                writeln!(out, "  [{}]", fmt_vec(&row, format))?;
            }
            writeln!(out, "scalar R = {}", fmt_pretty(r.scalar))?;
            writeln!(
                out,
                "det R_i^j = {}, trace R_i^j = {}",
                fmt_pretty(r.det_mixed),
                fmt_pretty(r.trace_mixed)
            )?;
        }
    }
    Ok(Outcome::Ok)
}

fn integrator_config(args: &GeodesicArgs) -> IntegratorConfig {
    let mut cfg = match args.method {
        Method::Rk4 => IntegratorConfig::rk4(args.dt, args.t_end),
        Method::Rk45 => {
            let mut c = IntegratorConfig::rk45(args.t_end, args.abs_tol, args.rel_tol);
            c.dt = args.dt;
            c
        }
    };
    cfg.max_steps = args.max_steps;
    cfg.record_every = args.every;
    cfg
}

fn run_geodesic(args: &GeodesicArgs) -> Result<(MetricSpec, Trajectory), Error> {
    let spec = load_metric(&args.metric)?;
    let x0 = parse_vector(&args.x0)?;
    let v0 = parse_vector(&args.v0)?;
    let traj = integrate(&spec, &GeodesicState::new(x0, v0), &integrator_config(args))?;
    Ok((spec, traj))
}

fn termination_text(t: &Termination) -> String {
    match t {
        Termination::Completed => "completed".into(),
        Termination::DomainExit { t, reason } => format!("domain_exit at t={} ({reason})", fmt_machine(*t)),
    }
}

pub fn cmd_geodesic<W: Write>(out: &mut W, format: Format, args: &GeodesicArgs) -> Run {
    let (spec, traj) = run_geodesic(args)?;
    let n = spec.dim();
    match format {
        Format::Csv => {
            writeln!(out, "{}", csv_header(n))?;
            for s in &traj.samples {
                writeln!(out, "{}", csv_row(s))?;
            }
        }
        Format::Jsonl => {
            for s in &traj.samples {
                writeln!(out, "{}", serde_json::to_string(s)?)?;
            }
        }
        Format::Pretty => {
            writeln!(out, "{:>12}  {:<40}  {:<40}  {:>12}  {:>12}", "t", "x", "v", "speed2", "Q")?;
            for s in &traj.samples {
                writeln!(
                    out,
                    "{:>12}  {:<40}  {:<40}  {:>12}  {:>12}",
                    fmt_pretty(s.t),
                    fmt_vec(&s.x, format),
                    fmt_vec(&s.v, format),
                    fmt_pretty(s.speed2),
                    fmt_pretty(s.q_invariant)
                )?;
            }
        }
    }
    let speed = conserved_speed_report(&traj, &spec)?;
    match format {
        Format::Jsonl => writeln!(
            out,
            "{}",
            json!({"summary": {
                "samples": speed.samples,
                "speed2_drift": speed.max_drift,
                "initial_speed2": speed.initial_speed2,
                "termination": traj.termination,
                "stats": traj.stats,
            }})
        )?,
        _ => writeln!(
            out,
            "# summary samples={} speed2_drift={} termination={} accepted={} rejected={}",
            speed.samples,
            fmt_num(speed.max_drift, format),
            termination_text(&traj.termination),
            traj.stats.accepted,
            traj.stats.rejected
        )?,
    }
    Ok(if traj.exited_domain() {
        Outcome::DomainExit
    } else {
        Outcome::Ok
    })
}

fn write_report<W: Write>(out: &mut W, format: Format, report: &StructuralReport) -> std::io::Result<()> {
    match format {
        Format::Jsonl => writeln!(out, "{}", serde_json::to_string(report)?),
        Format::Csv => {
            for r in &report.identities {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    report.metric,
                    r.identity,
                    json!(r.interpretation).as_str().unwrap_or(""),
                    r.asserted,
                    r.passed,
                    fmt_machine(r.max_residual),
                    r.tolerance.map(fmt_machine).unwrap_or_default(),
                    r.samples
                )?;
            }
            Ok(())
        }
        Format::Pretty => {
            writeln!(out, "metric {}", report.metric)?;
            for r in &report.identities {
                let status = match (r.asserted, r.passed) {
                    (true, true) => "pass",
                    (true, false) => "FAIL",
                    (false, _) => "measured",
                };
                writeln!(
                    out,
                    "  {:<34} {:<17} max {:>12}  tol {:>8}  n={:<5} {}",
                    r.identity,
                    json!(r.interpretation).as_str().unwrap_or(""),
                    fmt_pretty(r.max_residual),
                    r.tolerance.map(fmt_pretty).unwrap_or_else(|| "-".into()),
                    r.samples,
                    status
                )?;
                if !r.notes.is_empty() {
                    writeln!(out, "      {}", r.notes)?;
                }
            }
            for n in &report.notices {
                writeln!(out, "  notice: {n}")?;
            }
            Ok(())
        }
    }
}

fn report_failures(report: &StructuralReport) {
    for r in report.asserted_failures() {
        eprintln!(
            "asserted identity failed: {} / {}: max residual {:e} > tolerance {:e}",
            report.metric,
            r.identity,
            r.max_residual,
            r.tolerance.unwrap_or(f64::NAN)
        );
    }
}

pub fn cmd_verify<W: Write>(
    out: &mut W,
    format: Format,
    args: &MetricArgs,
    samples: usize,
    seed: u64,
    execution: Execution,
    tol: &TolOverrides,
) -> Run {
    if samples == 0 {
        return Err(Error::BadParam("--samples must be at least 1".into()).into());
    }
    let mut cfg = VerifyConfig {
        samples,
        seed,
        execution,
        ..VerifyConfig::default()
    };
    tol.apply(&mut cfg.tolerances)?;

    let sources = if args.metric.as_deref() == Some("all") && args.metric_file.is_none() {
        catalog().into_iter().map(MetricSource::Metric).collect()
    } else {
        vec![load_source(args)?]
    };

    if format == Format::Csv {
        writeln!(out, "metric,identity,interpretation,asserted,passed,max_residual,tolerance,samples")?;
    }
    let mut ok = true;
    for src in &sources {
        let report = verify(ConnectionSource::from(src), &cfg)?;
        write_report(out, format, &report)?;
        if !report.all_asserted_pass() {
            ok = false;
            report_failures(&report);
        }
    }
    if format == Format::Pretty {
        writeln!(
            out,
            "# {} ({} sources, {} samples, seed {})",
            if ok { "all asserted identities pass" } else { "asserted identities FAILED" },
            sources.len(),
            samples,
            seed
        )?;
    }
    Ok(if ok { Outcome::Ok } else { Outcome::AssertedFailure })
}

pub fn cmd_residuals<W: Write>(out: &mut W, format: Format, args: &GeodesicArgs) -> Run {
    let (spec, traj) = run_geodesic(args)?;
    let mut report = geometrodynamics_residuals(&spec, &traj)?;
    if let Termination::DomainExit { .. } = traj.termination {
        report.notices.push(format!("trajectory {}", termination_text(&traj.termination)));
    }
    if format == Format::Csv {
        writeln!(out, "metric,identity,interpretation,asserted,passed,max_residual,tolerance,samples")?;
    }
    write_report(out, format, &report)?;
    if !report.all_asserted_pass() {
        report_failures(&report);
        return Ok(Outcome::AssertedFailure);
    }
    Ok(if traj.exited_domain() {
        Outcome::DomainExit
    } else {
        Outcome::Ok
    })
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_expm_demo<W: Write>(
    out: &mut W,
    format: Format,
    w: &str,
    v0: &str,
    u0: Option<&str>,
    t_end: f64,
    dt: f64,
    every: usize,
) -> Run {
    let w0 = parse_matrix(w)?;
    let v0 = parse_vector(v0)?;
    let n = w0.dim();
    let u0 = match u0 {
        Some(s) => parse_vector(s)?,
        None => vec![0.0; n],
    };
    if v0.len() != n || u0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if v0.len() != n { v0.len() } else { u0.len() },
        }
        .into());
    }

    // reference: RK4 on (u, v)' = (v, -W0 v)
    let mut cfg = IntegratorConfig::rk4(dt, t_end);
    cfg.record_every = every;
    let y0: Vec<f64> = u0.iter().chain(&v0).copied().collect();
    let rhs = |_t: f64, y: &[f64]| -> Result<Vec<f64>, Error> {
        let v = &y[n..];
        let a = w0.mul_vec(v);
        Ok(v.iter().copied().chain(a.into_iter().map(|x| -x)).collect())
    };
    let sol = solve(rhs, 0.0, &y0, &cfg)?;

    match format {
        Format::Csv => {
            let mut cols = vec!["t".to_string()];
            cols.extend((1..=n).map(|i| format!("u{i}")));
            cols.extend((1..=n).map(|i| format!("v{i}")));
            cols.push("err_u".into());
            cols.push("err_v".into());
            writeln!(out, "{}", cols.join(","))?;
        }
        Format::Pretty => writeln!(out, "{:>10}  {:<36}  {:<36}  {:>12}  {:>12}", "t", "u", "v", "|du|", "|dv|")?,
        Format::Jsonl => {}
    }
    let (mut worst_u, mut worst_v) = (0.0f64, 0.0f64);
    for (t, y) in sol.times.iter().zip(&sol.states) {
        let v = constant_w_velocity(&w0, &v0, *t)?;
        let u = constant_w_position(&w0, &v0, &u0, *t)?;
        let eu = max_abs_diff(&u, &y[..n]);
        let ev = max_abs_diff(&v, &y[n..]);
        worst_u = worst_u.max(eu);
        worst_v = worst_v.max(ev);
        match format {
            Format::Csv => {
                let vals: Vec<String> = std::iter::once(*t)
                    .chain(u.iter().copied())
                    .chain(v.iter().copied())
                    .chain([eu, ev])
                    .map(fmt_machine)
                    .collect();
                writeln!(out, "{}", vals.join(","))?;
            }
            Format::Jsonl => writeln!(out, "{}", json!({"t": t, "u": u, "v": v, "err_u": eu, "err_v": ev}))?,
            Format::Pretty => writeln!(
                out,
                "{:>10}  {:<36}  {:<36}  {:>12}  {:>12}",
                fmt_pretty(*t),
                fmt_vec(&u, format),
                fmt_vec(&v, format),
                fmt_pretty(eu),
                fmt_pretty(ev)
            )?,
        }
    }
    match format {
        Format::Jsonl => writeln!(
            out,
            "{}",
            json!({"summary": {"samples": sol.times.len(), "max_err_u": worst_u, "max_err_v": worst_v}})
        )?,
        _ => writeln!(
            out,
            "# summary samples={} max_err_u={} max_err_v={}",
            sol.times.len(),
            fmt_num(worst_u, format),
            fmt_num(worst_v, format)
        )?,
    }
    Ok(Outcome::Ok)
}
