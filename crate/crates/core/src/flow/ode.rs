//! Explicit Runge-Kutta solvers for first-order systems `y' = f(t, y)`.
//!
//! Errors from `f` that mean "the state left the chart" end the run as a
//! [`Termination::DomainExit`] event; every other error is propagated.

use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Classical fixed-step fourth order.
    Rk4,
    /// Dormand-Prince 5(4) with adaptive steps.
    Rk45,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rk4" => Ok(Method::Rk4),
            "rk45" | "dopri5" => Ok(Method::Rk45),
            _ => Err(Error::BadParam(format!("unknown method `{s}` (rk4|rk45)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for RK4; initial step for RK45.
    pub dt: f64,
    pub t_end: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Limit on attempted steps (accepted plus rejected).
    pub max_steps: usize,
    /// Keep every k-th accepted step; the final state is always kept.
    pub record_every: usize,
}

impl IntegratorConfig {
    pub fn rk4(dt: f64, t_end: f64) -> Self {
        Self {
            method: Method::Rk4,
            dt,
            t_end,
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_steps: 10_000_000,
            record_every: 1,
        }
    }

    pub fn rk45(t_end: f64, abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            method: Method::Rk45,
            dt: 1e-2,
            abs_tol,
            rel_tol,
            ..Self::rk4(1e-2, t_end)
        }
    }

    pub fn validate(&self, t0: f64) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::BadParam(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::BadParam("tolerances must be > 0".into()));
        }
        if !(self.t_end > t0) || !self.t_end.is_finite() {
            return Err(Error::BadParam(format!(
                "t_end must be finite and greater than the start time {t0}, got {}",
                self.t_end
            )));
        }
        if self.max_steps == 0 || self.record_every == 0 {
            return Err(Error::BadParam("max_steps and record_every must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    /// The next step would leave the chart; the last recorded state is the last valid one.
    DomainExit { t: f64, reason: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub termination: Termination,
    pub stats: StepStats,
}

pub(crate) fn leaves_domain(e: &Error) -> bool {
    matches!(
        e,
        Error::OutOfDomain { .. } | Error::DegenerateMetric { .. } | Error::Domain(_)
    )
}

fn axpy(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for &(c, k) in terms {
        if c != 0.0 {
            for (o, ki) in out.iter_mut().zip(k) {
                *o += h * c * ki;
            }
        }
    }
    out
}

struct Recorder {
    every: usize,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    last: (f64, Vec<f64>),
    since: usize,
}

impl Recorder {
    fn new(every: usize, t0: f64, y0: &[f64]) -> Self {
        Self {
            every,
            times: vec![t0],
            states: vec![y0.to_vec()],
            last: (t0, y0.to_vec()),
            since: 0,
        }
    }

    fn push(&mut self, t: f64, y: Vec<f64>) {
        self.since += 1;
        if self.since == self.every {
            self.since = 0;
            self.times.push(t);
            self.states.push(y.clone());
        }
        self.last = (t, y);
    }

    fn finish(mut self, termination: Termination, stats: StepStats) -> OdeSolution {
        if self.since != 0 {
            self.times.push(self.last.0);
            self.states.push(self.last.1);
        }
        OdeSolution {
            times: self.times,
            states: self.states,
            termination,
            stats,
        }
    }
}

/// Integrates from `(t0, y0)` to `cfg.t_end`.
pub fn solve<F>(mut f: F, t0: f64, y0: &[f64], cfg: &IntegratorConfig) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    cfg.validate(t0)?;
    let k1 = f(t0, y0)?;
    match cfg.method {
        Method::Rk4 => rk4(f, t0, y0, k1, cfg),
        Method::Rk45 => dopri5(f, t0, y0, k1, cfg),
    }
}

fn rk4<F>(mut f: F, t0: f64, y0: &[f64], first: Vec<f64>, cfg: &IntegratorConfig) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let span = cfg.t_end - t0;
    let steps = ((span / cfg.dt) * (1.0 - 1e-12)).ceil().max(1.0);
    if steps > cfg.max_steps as f64 {
        return Err(Error::MaxStepsExceeded(cfg.max_steps));
    }
    let steps = steps as usize;
    let mut stats = StepStats {
        rhs_evals: 1,
        ..Default::default()
    };
    let mut rec = Recorder::new(cfg.record_every, t0, y0);
    let mut y = y0.to_vec();
    let mut k1 = first;
    let mut t = t0;
    for s in 1..=steps {
        let t_next = if s == steps { cfg.t_end } else { t0 + s as f64 * cfg.dt };
        let h = t_next - t;
        let step = (|| -> Result<Vec<f64>> {
            let k2 = f(t + 0.5 * h, &axpy(&y, h, &[(0.5, &k1)]))?;
            let k3 = f(t + 0.5 * h, &axpy(&y, h, &[(0.5, &k2)]))?;
            let k4 = f(t + h, &axpy(&y, h, &[(1.0, &k3)]))?;
            Ok(axpy(
                &y,
                h,
                &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)],
            ))
        })();
        stats.rhs_evals += 3;
        let next = step.and_then(|yn| {
            if yn.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain("state became non-finite".into()));
            }
            stats.rhs_evals += 1;
            let k = f(t_next, &yn)?;
            Ok((yn, k))
        });
        match next {
            Ok((yn, k)) => {
                stats.accepted += 1;
                y = yn;
                k1 = k;
                t = t_next;
                rec.push(t, y.clone());
            }
            Err(e) if leaves_domain(&e) => {
                return Ok(rec.finish(
                    Termination::DomainExit {
                        t,
                        reason: e.to_string(),
                    },
                    stats,
                ))
            }
            Err(e) => return Err(e),
        }
    }
    Ok(rec.finish(Termination::Completed, stats))
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

fn dopri5<F>(mut f: F, t0: f64, y0: &[f64], first: Vec<f64>, cfg: &IntegratorConfig) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let mut stats = StepStats {
        rhs_evals: 1,
        ..Default::default()
    };
    let mut rec = Recorder::new(cfg.record_every, t0, y0);
    let mut y = y0.to_vec();
    let mut k1 = first;
    let mut t = t0;
    let mut h = cfg.dt.min(cfg.t_end - t0);
    let mut last_reason = String::new();

    while t < cfg.t_end {
        if stats.accepted + stats.rejected >= cfg.max_steps {
            return Err(Error::MaxStepsExceeded(cfg.max_steps));
        }
        let last = t + h >= cfg.t_end;
        if last {
            h = cfg.t_end - t;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Ok(rec.finish(
                Termination::DomainExit {
                    t,
                    reason: last_reason,
                },
                stats,
            ));
        }

        let mut ks: Vec<Vec<f64>> = vec![k1.clone()];
        let mut failed = None;
        for s in 1..7 {
            let terms: Vec<(f64, &[f64])> = (0..s).map(|j| (A[s][j], ks[j].as_slice())).collect();
            let ys = axpy(&y, h, &terms);
            stats.rhs_evals += 1;
            match f(t + C[s] * h, &ys) {
                Ok(k) if k.iter().all(|v| v.is_finite()) => ks.push(k),
                Ok(_) => {
                    failed = Some(Error::Domain("right-hand side became non-finite".into()));
                    break;
                }
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = failed {
            if !leaves_domain(&e) {
                return Err(e);
            }
            // shrink until the step stays inside, or conclude that the path exits
            last_reason = e.to_string();
            stats.rejected += 1;
            h *= 0.25;
            continue;
        }

        let terms: Vec<(f64, &[f64])> = (0..6).map(|j| (A[6][j], ks[j].as_slice())).collect();
        let y_new = axpy(&y, h, &terms);
        let mut acc = 0.0;
        for (i, (yo, yn)) in y.iter().zip(&y_new).enumerate() {
            let est: f64 = h * (0..7).map(|j| (B5[j] - B4[j]) * ks[j][i]).sum::<f64>();
            let scale = cfg.abs_tol + cfg.rel_tol * yo.abs().max(yn.abs());
            acc += (est / scale).powi(2);
        }
        let err = (acc / y.len() as f64).sqrt();
        let factor = if err == 0.0 {
            MAX_FACTOR
        } else {
            (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
        };
        if err <= 1.0 {
            stats.accepted += 1;
            t = if last { cfg.t_end } else { t + h };
            y = y_new;
            k1 = ks.pop().expect("seven stages");
            rec.push(t, y.clone());
            h *= factor;
        } else {
            stats.rejected += 1;
            h *= factor.min(1.0);
        }
    }
    Ok(rec.finish(Termination::Completed, stats))
}
