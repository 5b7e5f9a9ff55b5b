//! Geodesic flow `dx/dt = v`, `dv^k/dt = −W_j^k v^j`, with conserved-speed
//! monitoring and trajectory export.

mod expm;
mod ode;

use std::io::Write;

use serde::Serialize;

pub use expm::{constant_w_position, constant_w_velocity, expm, position_correction, SERIES_MAX_TERMS};
pub use ode::{solve, IntegratorConfig, Method, OdeSolution, StepStats, Termination};

use crate::connection::{christoffel, christoffel_from_jet};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geospin::{geometric_acceleration, geospin_from};
use crate::linalg::dot;
use crate::metric::{inverse_metric, metric_at, metric_jet, MetricSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicState {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl GeodesicState {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Self {
        Self { t: 0.0, x, v }
    }

    fn pack(&self) -> Vec<f64> {
        self.x.iter().chain(&self.v).copied().collect()
    }

    fn unpack(t: f64, y: &[f64]) -> Self {
        let n = y.len() / 2;
        Self {
            t,
            x: y[..n].to_vec(),
            v: y[n..].to_vec(),
        }
    }
}

fn check_state(spec: &MetricSpec, x: &[f64], v: &[f64]) -> Result<()> {
    for len in [x.len(), v.len()] {
        if len != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                got: len,
            });
        }
    }
    Ok(())
}

/// `a^k = −W_j^k v^j` with `W_j^k = Γ^k_jl v^l`.
pub fn geodesic_acceleration(spec: &MetricSpec, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    check_state(spec, x, v)?;
    let chr = christoffel(spec, x)?;
    let n = spec.dim();
    let gam = &chr.gamma;
    Ok((0..n)
        .map(|k| {
            let mut s = 0.0;
            for j in 0..n {
                let w: f64 = (0..n).map(|l| gam[(k, j, l)] * v[l]).sum();
                s += w * v[j];
            }
            -s
        })
        .collect())
}

/// The same acceleration assembled as `−Γ^k_ij v^i v^j`.
pub fn geodesic_acceleration_gamma(spec: &MetricSpec, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    check_state(spec, x, v)?;
    let chr = christoffel(spec, x)?;
    let n = spec.dim();
    Ok((0..n)
        .map(|k| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += chr.get(k, i, j) * v[i] * v[j];
                }
            }
            -s
        })
        .collect())
}

/// `(dx/dt, dv/dt)`
pub fn geodesic_rhs(spec: &MetricSpec, state: &GeodesicState) -> Result<(Vec<f64>, Vec<f64>)> {
    let a = geodesic_acceleration(spec, &state.x, &state.v)?;
    Ok((state.v.clone(), a))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    /// `g_ij v^i v^j`
    pub speed2: f64,
    /// `Q = q^k v_k`
    #[serde(rename = "Q")]
    pub q_invariant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub metric: String,
    pub samples: Vec<Sample>,
    pub termination: Termination,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("a trajectory holds at least its initial sample")
    }

    pub fn state(&self, i: usize) -> GeodesicState {
        let s = &self.samples[i];
        GeodesicState {
            t: s.t,
            x: s.x.clone(),
            v: s.v.clone(),
        }
    }

    pub fn exited_domain(&self) -> bool {
        matches!(self.termination, Termination::DomainExit { .. })
    }
}

fn annotate(spec: &MetricSpec, t: f64, x: &[f64], v: &[f64]) -> Result<Sample> {
    let jet = metric_jet(spec, x)?;
    let ginv = inverse_metric(&jet.g)?;
    let chr = christoffel_from_jet(&jet, &ginv);
    let v_lower = jet.g.mul_vec(v);
    let gm = geospin_from(&jet.g, &chr, v, &v_lower);
    Ok(Sample {
        t,
        x: x.to_vec(),
        v: v.to_vec(),
        speed2: dot(v, &v_lower),
        q_invariant: geometric_acceleration(&gm, &jet).big_q,
    })
}

/// Integrates with a caller-supplied acceleration `a(x, v)`; samples are
/// annotated with the metric's speed and `Q` regardless.
pub fn integrate_with<F>(
    spec: &MetricSpec,
    mut accel: F,
    state0: &GeodesicState,
    config: &IntegratorConfig,
) -> Result<Trajectory>
where
    F: FnMut(&[f64], &[f64]) -> Result<Vec<f64>>,
{
    check_state(spec, &state0.x, &state0.v)?;
    spec.check_point(&state0.x)?;
    let n = spec.dim();
    let rhs = |_t: f64, y: &[f64]| -> Result<Vec<f64>> {
        let (x, v) = y.split_at(n);
        let a = accel(x, v)?;
        Ok(v.iter().copied().chain(a).collect())
    };
    let sol = solve(rhs, state0.t, &state0.pack(), config)?;
    let samples = sol
        .times
        .iter()
        .zip(&sol.states)
        .map(|(&t, y)| {
            let s = GeodesicState::unpack(t, y);
            annotate(spec, t, &s.x, &s.v)
        })
        .collect::<Result<_>>()?;
    Ok(Trajectory {
        metric: spec.name.clone(),
        samples,
        termination: sol.termination,
        stats: sol.stats,
    })
}

pub fn integrate(spec: &MetricSpec, state0: &GeodesicState, config: &IntegratorConfig) -> Result<Trajectory> {
    integrate_with(spec, |x, v| geodesic_acceleration(spec, x, v), state0, config)
}

/// Independent trajectories, optionally on the rayon pool; results keep input order.
pub fn integrate_batch(
    spec: &MetricSpec,
    states: &[GeodesicState],
    config: &IntegratorConfig,
    exec: Execution,
) -> Vec<Result<Trajectory>> {
    exec.map(states, |_, s| integrate(spec, s, config))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedReport {
    pub initial_speed2: f64,
    /// `max |g(v,v)(t) − g(v,v)(0)|`
    pub max_drift: f64,
    /// `max |Q + g_ij a^i v^j|` with `a` the geodesic acceleration at each sample
    pub max_link: f64,
    pub samples: usize,
}

pub fn conserved_speed_report(traj: &Trajectory, spec: &MetricSpec) -> Result<SpeedReport> {
    let first = traj.samples.first().ok_or_else(|| Error::Domain("empty trajectory".into()))?;
    let mut max_drift = 0.0f64;
    let mut max_link = 0.0f64;
    for s in &traj.samples {
        max_drift = max_drift.max((s.speed2 - first.speed2).abs());
        let g = metric_at(spec, &s.x)?;
        let a = geodesic_acceleration(spec, &s.x, &s.v)?;
        let link = s.q_invariant + dot(&g.mul_vec(&a), &s.v);
        max_link = max_link.max(link.abs());
    }
    Ok(SpeedReport {
        initial_speed2: first.speed2,
        max_drift,
        max_link,
        samples: traj.samples.len(),
    })
}

/// CSV header: `t,x1..xn,v1..vn,speed2,Q`.
pub fn csv_header(n: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=n).map(|i| format!("x{i}")));
    cols.extend((1..=n).map(|i| format!("v{i}")));
    cols.push("speed2".into());
    cols.push("Q".into());
    cols.join(",")
}

/// Round-trippable float text with 17 significant digits.
pub fn fmt_machine(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_row(s: &Sample) -> String {
    std::iter::once(s.t)
        .chain(s.x.iter().copied())
        .chain(s.v.iter().copied())
        .chain([s.speed2, s.q_invariant])
        .map(fmt_machine)
        .collect::<Vec<_>>()
        .join(",")
}

pub fn write_csv<W: Write>(traj: &Trajectory, header: bool, out: &mut W) -> std::io::Result<()> {
    if header {
        let n = traj.samples.first().map_or(0, |s| s.x.len());
        writeln!(out, "{}", csv_header(n))?;
    }
    for s in &traj.samples {
        writeln!(out, "{}", csv_row(s))?;
    }
    Ok(())
}

pub fn write_jsonl<W: Write>(traj: &Trajectory, out: &mut W) -> std::io::Result<()> {
    for s in &traj.samples {
        serde_json::to_writer(&mut *out, s)?;
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{builtin, Params};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn named(name: &str) -> MetricSpec {
        builtin(name, &Params::new()).unwrap()
    }

    #[test]
    fn rhs_examples() {
        let (dx, dv) = geodesic_rhs(
            &named("euclidean"),
            &GeodesicState::new(vec![1.0, 2.0, 3.0], vec![0.1, 0.2, 0.3]),
        )
        .unwrap();
        assert_eq!(dx, vec![0.1, 0.2, 0.3]);
        assert_eq!(dv, vec![0.0; 3]);

        let polar = named("polar2");
        let a = geodesic_acceleration(&polar, &[2.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((a[0] - 2.0).abs() < 1e-15 && a[1] == 0.0);

        let a = geodesic_acceleration(&named("sphere"), &[FRAC_PI_2, 0.4], &[0.0, 1.0]).unwrap();
        assert!(a.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn straight_line() {
        let flat = named("euclidean");
        let mut s0 = GeodesicState::new(vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 0.0]);
        s0.t = 0.0;
        let traj = integrate(&flat, &s0, &IntegratorConfig::rk4(0.01, 3.0)).unwrap();
        let last = traj.last();
        assert!((last.x[0] - 3.0).abs() < 1e-12 && (last.x[1] - 6.0).abs() < 1e-12);
        assert_eq!(last.v, vec![1.0, 2.0, 0.0]);
        let rep = conserved_speed_report(&traj, &flat).unwrap();
        assert_eq!(rep.max_drift, 0.0);
    }

    #[test]
    fn equator_half_turn() {
        let sphere = named("sphere");
        let s0 = GeodesicState::new(vec![FRAC_PI_2, 0.0], vec![0.0, 1.0]);
        let traj = integrate(&sphere, &s0, &IntegratorConfig::rk4(1e-3, PI)).unwrap();
        let last = traj.last();
        assert!((last.x[0] - FRAC_PI_2).abs() < 1e-10 && (last.x[1] - PI).abs() < 1e-10);
        assert!(conserved_speed_report(&traj, &sphere).unwrap().max_drift <= 1e-10);
    }

    #[test]
    fn radial_polar_line() {
        let polar = named("polar2");
        let s0 = GeodesicState::new(vec![1.0, 0.0], vec![1.0, 0.0]);
        for cfg in [IntegratorConfig::rk4(1e-2, 2.0), IntegratorConfig::rk45(2.0, 1e-12, 1e-12)] {
            let traj = integrate(&polar, &s0, &cfg).unwrap();
            let last = traj.last();
            assert!((last.x[0] - 3.0).abs() < 1e-10 && last.x[1].abs() < 1e-10);
        }
    }

    #[test]
    fn perturbed_flow_drifts_without_erroring() {
        let sphere = named("sphere");
        let s0 = GeodesicState::new(vec![1.0, 0.0], vec![0.2, 0.5]);
        let traj = integrate_with(
            &sphere,
            |x, v| {
                let mut a = geodesic_acceleration(&sphere, x, v)?;
                a[0] += 0.05;
                Ok(a)
            },
            &s0,
            &IntegratorConfig::rk4(1e-2, 2.0),
        )
        .unwrap();
        let rep = conserved_speed_report(&traj, &sphere).unwrap();
        assert!(rep.max_drift > 1e-3);
        assert!(rep.max_link < 1e-12);
    }

    #[test]
    fn two_acceleration_routes() {
        let spec = named("schwarzschild");
        let x = [0.0, 4.5, 1.2, 0.3];
        let v = [1.3, -0.2, 0.05, 0.1];
        let a = geodesic_acceleration(&spec, &x, &v).unwrap();
        let b = geodesic_acceleration_gamma(&spec, &x, &v).unwrap();
        assert!(crate::linalg::max_abs_diff(&a, &b) <= 1e-13);
    }

    #[test]
    fn plunge_exits_the_domain() {
        let spec = named("schwarzschild");
        let s0 = GeodesicState::new(vec![0.0, 3.0, FRAC_PI_2, 0.0], vec![1.0, -0.5, 0.0, 0.0]);
        let traj = integrate(&spec, &s0, &IntegratorConfig::rk4(1e-3, 50.0)).unwrap();
        assert!(traj.exited_domain());
        assert!(traj.last().x[1] > 1.0);
    }

    #[test]
    fn out_of_domain_start_is_an_error() {
        let polar = named("polar2");
        let s0 = GeodesicState::new(vec![0.0, 0.0], vec![1.0, 0.0]);
        assert!(matches!(
            integrate(&polar, &s0, &IntegratorConfig::rk4(0.1, 1.0)),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn batch_matches_sequential() {
        let sphere = named("sphere");
        let states: Vec<_> = (0..6)
            .map(|i| GeodesicState::new(vec![1.0 + 0.1 * i as f64, 0.0], vec![0.1, 0.4]))
            .collect();
        let cfg = IntegratorConfig::rk4(1e-2, 1.0);
        let a = integrate_batch(&sphere, &states, &cfg, Execution::Sequential);
        let b = integrate_batch(&sphere, &states, &cfg, Execution::Parallel);
        assert_eq!(a, b);
    }

    #[test]
    fn csv_layout() {
        let traj = integrate(
            &named("polar2"),
            &GeodesicState::new(vec![1.0, 0.0], vec![1.0, 0.0]),
            &IntegratorConfig::rk4(0.5, 1.0),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&traj, true, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,x1,x2,v1,v2,speed2,Q");
        assert_eq!(lines.len(), 4);
        let first: Vec<f64> = lines[1].split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(first, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);

        let mut buf = Vec::new();
        write_jsonl(&traj, &mut buf).unwrap();
        let row: serde_json::Value =
            serde_json::from_str(String::from_utf8(buf).unwrap().lines().last().unwrap()).unwrap();
        assert_eq!(row["t"], 1.0);
        assert!(row.get("Q").is_some());
    }
}
