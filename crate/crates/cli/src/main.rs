//! `geospin` command-line front end.
//!
//! Exit codes: 0 success, 1 asserted identity failure, 2 invalid input
//! (bad arguments, out-of-chart point, degenerate metric, schema error),
//! 3 geodesic left the chart (partial output kept), 4 step limit exceeded.

mod args;
mod commands;
mod fmt;

use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;
use geospin_core::Error;

use args::{Cli, Cmd, MetricsAction};
use commands::Outcome;

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.into())
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::MaxStepsExceeded(_) => 4,
        _ => 2,
    }
}

fn command_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Metrics { .. } => "metrics",
        Cmd::Curvature { .. } => "curvature",
        Cmd::Geodesic(_) => "geodesic",
        Cmd::Verify { .. } => "verify",
        Cmd::Residuals(_) => "residuals",
        Cmd::ExpmDemo { .. } => "expm-demo",
    }
}

fn run<W: Write>(cli: &Cli, out: &mut W) -> Result<Outcome, Failure> {
    if !cli.no_header {
        fmt::write_header(out, cli.format, command_name(&cli.command))?;
    }
    let f = cli.format;
    match &cli.command {
        Cmd::Metrics {
            action: MetricsAction::List,
        } => commands::metrics_list(out, f),
        Cmd::Curvature { metric, at } => commands::cmd_curvature(out, f, metric, at),
        Cmd::Geodesic(g) => commands::cmd_geodesic(out, f, g),
        Cmd::Verify {
            metric,
            samples,
            seed,
            exec,
            tol,
        } => commands::cmd_verify(out, f, metric, *samples, *seed, *exec, tol),
        Cmd::Residuals(g) => commands::cmd_residuals(out, f, g),
        Cmd::ExpmDemo {
            w,
            v0,
            u0,
            t_end,
            dt,
            every,
        } => commands::cmd_expm_demo(out, f, w, v0, u0.as_deref(), *t_end, *dt, *every),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = run(&cli, &mut out);
    let flushed = out.flush();

    match (result, flushed) {
        (Err(Failure::Io(e)), _) | (Ok(_), Err(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        (Err(Failure::Io(e)), _) | (Ok(_), Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        (Err(Failure::Core(e)), _) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        (Ok(Outcome::Ok), Ok(())) => ExitCode::SUCCESS,
        (Ok(Outcome::AssertedFailure), Ok(())) => ExitCode::from(1),
        (Ok(Outcome::DomainExit), Ok(())) => {
            eprintln!("warning: geodesic left the chart; output stops at the last valid state");
            ExitCode::from(3)
        }
    }
}
