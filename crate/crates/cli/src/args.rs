use std::path::PathBuf;

use clap::{value_parser, Arg, ArgMatches, Args, Command, FromArgMatches, Parser, Subcommand, ValueEnum};
use geospin_core::exec::Execution;
use geospin_core::flow::Method;
use geospin_core::suite::Tolerances;

#[derive(Debug, Parser)]
#[command(name = "geospin", version, about = "Curvature, geospin matrices and geodesics on coordinate charts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Pretty)]
    pub format: Format,

    /// Suppress the timestamped header line.
    #[arg(long, global = true)]
    pub no_header: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
    Pretty,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Built-in metric catalog.
    Metrics {
        #[command(subcommand)]
        action: MetricsAction,
    },
    /// Christoffel symbols, Riemann, Ricci and scalar curvature at a point.
    Curvature {
        #[command(flatten)]
        metric: MetricArgs,
        /// Comma-separated coordinates; constant expressions such as `pi/4` are accepted.
        #[arg(long, allow_hyphen_values = true)]
        at: String,
    },
    /// Integrates a geodesic and streams the samples.
    Geodesic(GeodesicArgs),
    /// Runs the identity suite at seeded sample points.
    Verify {
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// sequential | parallel
        #[arg(long, default_value = "parallel")]
        exec: Execution,
        #[command(flatten)]
        tol: TolOverrides,
    },
    /// Integrates a geodesic and reports the dynamical structure residuals.
    Residuals(GeodesicArgs),
    /// Frozen-W closed form against RK4 on dv/dt = -W v.
    ExpmDemo {
        /// Rows separated by `;`, entries by `,`.
        #[arg(long, default_value = "0,-1;1,0", allow_hyphen_values = true)]
        w: String,
        #[arg(long, default_value = "1,0", allow_hyphen_values = true)]
        v0: String,
        /// Defaults to zeros.
        #[arg(long, allow_hyphen_values = true)]
        u0: Option<String>,
        #[arg(long, default_value = "5", value_parser = const_expr)]
        t_end: f64,
        #[arg(long, default_value = "1e-3", value_parser = const_expr)]
        dt: f64,
        /// Print every k-th RK4 step.
        #[arg(long, default_value_t = 100)]
        every: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum MetricsAction {
    List,
}

#[derive(Debug, Clone, Args)]
pub struct MetricArgs {
    /// Built-in metric, `name` or `name:key=value,...`; `verify` also accepts `all`.
    #[arg(long, conflicts_with = "metric_file", required_unless_present = "metric_file")]
    pub metric: Option<String>,
    /// TOML file defining a metric or a connection.
    #[arg(long)]
    pub metric_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GeodesicArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: String,
    #[arg(long, allow_hyphen_values = true)]
    pub v0: String,
    #[arg(long, value_parser = const_expr, allow_hyphen_values = true)]
    pub t_end: f64,
    #[arg(long, default_value = "1e-3", value_parser = const_expr)]
    pub dt: f64,
    /// rk4 | rk45
    #[arg(long, default_value = "rk4")]
    pub method: Method,
    #[arg(long, default_value_t = 1e-10)]
    pub abs_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_steps: usize,
    /// Keep every k-th accepted step (the last one is always kept).
    #[arg(long, default_value_t = 1)]
    pub every: usize,
}

/// A single constant expression such as `pi` or `2*pi/3`.
fn const_expr(s: &str) -> Result<f64, String> {
    match crate::commands::parse_vector(s) {
        Ok(v) if v.len() == 1 => Ok(v[0]),
        Ok(_) => Err("expected a single number".into()),
        Err(e) => Err(e.to_string()),
    }
}

/// `--tol-<name> <value>` for every tolerance of the verification suite.
#[derive(Debug, Clone, Default)]
pub struct TolOverrides(pub Vec<(&'static str, f64)>);

impl TolOverrides {
    pub fn apply(&self, tol: &mut Tolerances) -> geospin_core::Result<()> {
        for (name, value) in &self.0 {
            tol.set(name, *value)?;
        }
        Ok(())
    }
}

impl FromArgMatches for TolOverrides {
    fn from_arg_matches(m: &ArgMatches) -> Result<Self, clap::Error> {
        let found = Tolerances::NAMES
            .iter()
            .filter_map(|name| m.get_one::<f64>(&format!("tol-{name}")).map(|v| (*name, *v)))
            .collect();
        Ok(Self(found))
    }

    fn update_from_arg_matches(&mut self, m: &ArgMatches) -> Result<(), clap::Error> {
        *self = Self::from_arg_matches(m)?;
        Ok(())
    }
}

impl Args for TolOverrides {
    fn augment_args(cmd: Command) -> Command {
        Tolerances::NAMES.iter().fold(cmd, |cmd, name| {
            cmd.arg(
                Arg::new(format!("tol-{name}"))
                    .long(format!("tol-{name}"))
                    .value_name("TOL")
                    .value_parser(value_parser!(f64))
                    .help_heading("Tolerances"),
            )
        })
    }

    fn augment_args_for_update(cmd: Command) -> Command {
        Self::augment_args(cmd)
    }
}
