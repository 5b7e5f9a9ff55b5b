//! Built-in metrics. Parameters are substituted into the component expressions
//! as literals, so built-ins go through the same parser as user files.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use super::{MetricSpec, Signature};
use crate::error::{Error, Result};

pub type Params = BTreeMap<String, f64>;

const NAMES: [&str; 9] = [
    "euclidean",
    "polar2",
    "sphere",
    "sphere-stereographic",
    "poincare-half-plane",
    "torus",
    "minkowski",
    "schwarzschild",
    "sphere-cross-line",
];

pub fn catalog_names() -> &'static [&'static str] {
    &NAMES
}

/// Every built-in with default parameters.
pub fn catalog() -> Vec<MetricSpec> {
    NAMES
        .iter()
        .map(|name| builtin(name, &Params::new()).expect("defaults are valid"))
        .collect()
}

/// Parses `name` or `name:key=value,key=value`.
pub fn parse_metric_arg(arg: &str) -> Result<MetricSpec> {
    let (name, rest) = match arg.split_once(':') {
        Some((n, r)) => (n, r),
        None => (arg, ""),
    };
    let mut params = Params::new();
    for kv in rest.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::BadParam(format!("expected key=value, got `{kv}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::BadParam(format!("`{k}` is not a number: `{v}`")))?;
        params.insert(k.trim().to_string(), v);
    }
    builtin(name.trim(), &params)
}

struct ParamReader<'a> {
    metric: &'a str,
    params: &'a Params,
    allowed: &'a [&'a str],
}

impl ParamReader<'_> {
    fn check(&self) -> Result<()> {
        for key in self.params.keys() {
            if !self.allowed.contains(&key.as_str()) {
                return Err(Error::BadParam(format!(
                    "`{}` takes no parameter `{key}` (allowed: {:?})",
                    self.metric, self.allowed
                )));
            }
        }
        Ok(())
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.params.get(key).copied().unwrap_or(default);
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::BadParam(format!("{key} must be > 0, got {v}")));
        }
        Ok(v)
    }

    fn count(&self, key: &str, default: usize, min: usize) -> Result<usize> {
        let v = self.params.get(key).copied().unwrap_or(default as f64);
        if v.fract() != 0.0 || v < min as f64 || v > 16.0 {
            return Err(Error::BadParam(format!(
                "{key} must be an integer in [{min}, 16], got {v}"
            )));
        }
        Ok(v as usize)
    }
}

/// Literal for embedding a parameter into an expression.
fn lit(x: f64) -> String {
    format!("{x:?}")
}

fn cartesian_names(n: usize) -> Vec<String> {
    match n {
        1 => vec!["x".into()],
        2 => vec!["x".into(), "y".into()],
        3 => vec!["x".into(), "y".into(), "z".into()],
        _ => (1..=n).map(|i| format!("x{i}")).collect(),
    }
}

pub fn builtin(name: &str, params: &Params) -> Result<MetricSpec> {
    let allowed: &[&str] = match name {
        "euclidean" | "minkowski" => &["n"],
        "sphere" | "sphere-stereographic" => &["r"],
        "torus" => &["R", "a"],
        "schwarzschild" => &["rs"],
        "polar2" | "poincare-half-plane" | "sphere-cross-line" => &[],
        _ => return Err(Error::UnknownMetric(name.to_string())),
    };
    let p = ParamReader {
        metric: name,
        params,
        allowed,
    };
    p.check()?;

    match name {
        "euclidean" => {
            let n = p.count("n", 3, 1)?;
            let names = cartesian_names(n);
            let vars: Vec<&str> = names.iter().map(String::as_str).collect();
            let comps: Vec<_> = (0..n).map(|i| ((i, i), "1")).collect();
            MetricSpec::new(
                name,
                &vars,
                &comps,
                &[],
                Signature::Riemannian,
                vec![(-2.0, 2.0); n],
            )
        }
        "minkowski" => {
            let n = p.count("n", 4, 2)?;
            let names: Vec<String> = if n == 4 {
                ["t", "x", "y", "z"].map(String::from).to_vec()
            } else {
                (1..=n).map(|i| format!("x{i}")).collect()
            };
            let vars: Vec<&str> = names.iter().map(String::as_str).collect();
            let comps: Vec<_> = (0..n)
                .map(|i| ((i, i), if i == 0 { "-1" } else { "1" }))
                .collect();
            MetricSpec::new(
                name,
                &vars,
                &comps,
                &[],
                Signature::Pseudo,
                vec![(-2.0, 2.0); n],
            )
        }
        "polar2" => MetricSpec::new(
            name,
            &["r", "theta"],
            &[((0, 0), "1"), ((1, 1), "r^2")],
            &["r"],
            Signature::Riemannian,
            vec![(0.5, 3.0), (0.0, TAU)],
        ),
        "sphere" => {
            let r = p.positive("r", 1.0)?;
            let r2 = lit(r * r);
            let g11 = r2.clone();
            let g22 = format!("{r2}*sin(theta)^2");
            MetricSpec::new(
                name,
                &["theta", "phi"],
                &[((0, 0), &g11), ((1, 1), &g22)],
                &["sin(theta)"],
                Signature::Riemannian,
                vec![(0.3, 2.8), (0.0, TAU)],
            )
        }
        "sphere-stereographic" => {
            let r = p.positive("r", 1.0)?;
            let conformal = format!("{}/({} + x^2 + y^2)^2", lit(4.0 * r.powi(4)), lit(r * r));
            MetricSpec::new(
                name,
                &["x", "y"],
                &[((0, 0), &conformal), ((1, 1), &conformal)],
                &[],
                Signature::Riemannian,
                vec![(-2.0 * r, 2.0 * r); 2],
            )
        }
        "poincare-half-plane" => MetricSpec::new(
            name,
            &["x", "y"],
            &[((0, 0), "1/y^2"), ((1, 1), "1/y^2")],
            &["y"],
            Signature::Riemannian,
            vec![(-2.0, 2.0), (0.5, 2.5)],
        ),
        "torus" => {
            let big = p.positive("R", 2.0)?;
            let a = p.positive("a", 1.0)?;
            if a >= big {
                return Err(Error::BadParam(format!(
                    "torus needs R > a, got R = {big}, a = {a}"
                )));
            }
            let g11 = lit(a * a);
            let g22 = format!("({} + {}*cos(theta))^2", lit(big), lit(a));
            let guard = format!("{} + {}*cos(theta)", lit(big), lit(a));
            MetricSpec::new(
                name,
                &["theta", "phi"],
                &[((0, 0), &g11), ((1, 1), &g22)],
                &[&guard],
                Signature::Riemannian,
                vec![(0.0, TAU), (0.0, TAU)],
            )
        }
        "schwarzschild" => {
            let rs = p.positive("rs", 1.0)?;
            let f = format!("(1 - {}/r)", lit(rs));
            let g00 = format!("-{f}");
            let g11 = format!("1/{f}");
            let guard = format!("r - {}", lit(rs));
            MetricSpec::new(
                name,
                &["t", "r", "theta", "phi"],
                &[
                    ((0, 0), &g00),
                    ((1, 1), &g11),
                    ((2, 2), "r^2"),
                    ((3, 3), "r^2*sin(theta)^2"),
                ],
                &[&guard, "sin(theta)"],
                Signature::Pseudo,
                vec![
                    (0.0, 10.0),
                    (3.0 * rs, 10.0 * rs),
                    (0.3, 2.8),
                    (0.0, TAU),
                ],
            )
        }
        "sphere-cross-line" => MetricSpec::new(
            name,
            &["theta", "phi", "z"],
            &[((0, 0), "1"), ((1, 1), "sin(theta)^2"), ((2, 2), "1")],
            &["sin(theta)"],
            Signature::Riemannian,
            vec![(0.3, 2.8), (0.0, TAU), (-2.0, 2.0)],
        ),
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::metric_at;

    #[test]
    fn every_name_builds_with_defaults() {
        let all = catalog();
        assert_eq!(all.len(), NAMES.len());
        for spec in &all {
            assert_eq!(spec.sample_box.len(), spec.dim());
        }
    }

    #[test]
    fn unknown_metric_and_bad_params() {
        assert_eq!(
            builtin("klein-bottle", &Params::new()),
            Err(Error::UnknownMetric("klein-bottle".into()))
        );
        assert!(matches!(
            parse_metric_arg("sphere:r=0"),
            Err(Error::BadParam(_))
        ));
        assert!(matches!(
            parse_metric_arg("sphere:r=-2"),
            Err(Error::BadParam(_))
        ));
        assert!(matches!(
            parse_metric_arg("torus:R=1,a=2"),
            Err(Error::BadParam(_))
        ));
        assert!(matches!(
            parse_metric_arg("polar2:r=2"),
            Err(Error::BadParam(_))
        ));
        assert!(matches!(
            parse_metric_arg("euclidean:n=2.5"),
            Err(Error::BadParam(_))
        ));
    }

    #[test]
    fn parameters_reach_the_components() {
        let s = parse_metric_arg("sphere:r=2").unwrap();
        let g = metric_at(&s, &[std::f64::consts::FRAC_PI_2, 0.0]).unwrap();
        assert_eq!(g[(0, 0)], 4.0);
        assert!((g[(1, 1)] - 4.0).abs() < 1e-15);

        let e = parse_metric_arg("euclidean:n=5").unwrap();
        assert_eq!(e.dim(), 5);

        let schw = parse_metric_arg("schwarzschild:rs=2").unwrap();
        let g = metric_at(&schw, &[0.0, 4.0, 1.0, 0.0]).unwrap();
        assert_eq!(g[(0, 0)], -0.5);
        assert_eq!(g[(1, 1)], 2.0);
        assert!(metric_at(&schw, &[0.0, 1.5, 1.0, 0.0]).is_err());
    }
}
