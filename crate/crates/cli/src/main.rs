//! `stablelp`: densities, extensions, Littlewood-Paley functionals, kernel
//! certification, Monte Carlo checks and the acceptance suite.
//!
//! Exit status: 0 when no check fails, 1 when a check fails or a run stops
//! early, 2 on a configuration error.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser};

use commands::Session;
use config::{ConfigError, Origin, RunConfig, Settings, Subcommand};

#[derive(Parser)]
#[command(name = "stablelp", version, about = "Numerics for symmetric stable processes on the line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Settings every subcommand takes. Flags override the config file.
#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    /// Grid half-width L.
    #[arg(long)]
    half_extent: Option<String>,
    #[arg(long)]
    dx: Option<String>,
    #[arg(long)]
    t_min: Option<String>,
    #[arg(long)]
    t_max: Option<String>,
    #[arg(long)]
    n_t: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    /// Defaults to $STABLELP_OUTPUT_DIR, then `stablelp-out`.
    #[arg(long)]
    output_dir: Option<String>,
    /// Any config key, as `key=value`; may repeat.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Tabulate p(s, .) and write density.csv.
    Density {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        s: Option<String>,
    },
    /// Q_t f for each fixture and time.
    Extend {
        #[command(flatten)]
        common: Common,
        /// Comma-separated fixture names.
        #[arg(long)]
        fixtures: Option<String>,
        /// Comma-separated times t.
        #[arg(long)]
        times: Option<String>,
    },
    /// Littlewood-Paley and maximal functionals.
    Lp {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        fixtures: Option<String>,
        #[arg(long)]
        functionals: Option<String>,
        #[arg(long)]
        lambda: Option<String>,
        /// Comma-separated exponents p.
        #[arg(long)]
        p: Option<String>,
    },
    /// Certify convolution kernels.
    Multiplier {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kernels: Option<String>,
        /// Two-column CSV `x,kappa` of a tabulated kernel.
        #[arg(long)]
        kernel_file: Option<String>,
        #[arg(long)]
        kernel_symmetry: Option<String>,
        #[arg(long)]
        fixtures: Option<String>,
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        lambda: Option<String>,
    },
    /// Monte Carlo checks of the product process.
    Mc {
        #[command(flatten)]
        common: Common,
        /// Starting height.
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        n_paths: Option<String>,
        #[arg(long)]
        dt: Option<String>,
        #[arg(long)]
        checks: Option<String>,
        /// Also write mc_paths.csv with t0 and y_at_t0.
        #[arg(long)]
        raw: bool,
    },
    /// Every acceptance criterion.
    Suite {
        #[command(flatten)]
        common: Common,
        /// 2e4 instead of 1e5 Monte Carlo paths.
        #[arg(long)]
        quick: bool,
    },
}

fn flag(key: &'static str, v: Option<String>) -> (&'static str, Option<String>) {
    (key, v)
}

fn switch(key: &'static str, on: bool) -> (&'static str, Option<String>) {
    (key, on.then(|| "true".to_string()))
}

impl Command {
    fn split(self) -> (Subcommand, Common, Vec<(&'static str, Option<String>)>) {
        match self {
            Command::Density { common, s } => (Subcommand::Density, common, vec![flag("s", s)]),
            Command::Extend { common, fixtures, times } => {
                (Subcommand::Extend, common, vec![flag("fixtures", fixtures), flag("times", times)])
            }
            Command::Lp { common, fixtures, functionals, lambda, p } => (
                Subcommand::Lp,
                common,
                vec![
                    flag("fixtures", fixtures),
                    flag("functionals", functionals),
                    flag("lambda", lambda),
                    flag("p", p),
                ],
            ),
            Command::Multiplier { common, kernels, kernel_file, kernel_symmetry, fixtures, p, lambda } => (
                Subcommand::Multiplier,
                common,
                vec![
                    flag("kernels", kernels),
                    flag("kernel_file", kernel_file),
                    flag("kernel_symmetry", kernel_symmetry),
                    flag("fixtures", fixtures),
                    flag("p", p),
                    flag("lambda", lambda),
                ],
            ),
            Command::Mc { common, a, n_paths, dt, checks, raw } => (
                Subcommand::Mc,
                common,
                vec![
                    flag("a", a),
                    flag("n_paths", n_paths),
                    flag("dt", dt),
                    flag("checks", checks),
                    switch("raw", raw),
                ],
            ),
            Command::Suite { common, quick } => (Subcommand::Suite, common, vec![switch("quick", quick)]),
        }
    }
}

fn load(sub: Subcommand, common: Common, extra: Vec<(&'static str, Option<String>)>) -> Result<RunConfig, ConfigError> {
    let mut settings = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
                origin: Origin::Flag,
                key: Some("config".into()),
                message: format!("cannot read {}: {e}", path.display()),
            })?;
            Settings::parse(&text, Path::new(path))?
        }
        None => Settings::default(),
    };
    let flags = [
        flag("alpha", common.alpha),
        flag("dim", common.dim),
        flag("half_extent", common.half_extent),
        flag("dx", common.dx),
        flag("t_min", common.t_min),
        flag("t_max", common.t_max),
        flag("n_t", common.n_t),
        flag("seed", common.seed),
        flag("workers", common.workers),
        flag("output_dir", common.output_dir),
    ];
    for pair in &common.set {
        settings.set_pair(pair)?;
    }
    for (key, value) in flags.into_iter().chain(extra) {
        if let Some(v) = value {
            settings.set(key, v, Origin::Flag);
        }
    }
    RunConfig::resolve(sub, &settings)
}

fn main() -> ExitCode {
    let (sub, common, extra) = Cli::parse().command.split();
    let config = match load(sub, common, extra) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let mut session = Session::new(config);
    let outcome = commands::run(&mut session);
    if let Err(e) = &outcome {
        eprintln!("error: {e:#}");
        session.abort(e);
    }
    match session.finish() {
        Ok(report) => {
            let dir = session.config.output_dir.display();
            println!("report: {dir}/{}.json (config {})", sub.as_str(), report.metadata.config_hash);
            if outcome.is_ok() && report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
