//! Command-line front end. Every subcommand builds an [`ExperimentConfig`]
//! and hands it to [`execute`], so flags and `run --config` share one path.

mod config;
mod run;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

pub use config::*;
pub use run::{execute, merge_reports, Check, MergedEntry, MergedReport, PlotSpec, RunReport};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "SHSVERIFY_OUT";
const DEFAULT_OUT: &str = "shsverify-out";

#[derive(Debug, Parser)]
#[command(
    name = "shsverify",
    version,
    about = "Blowup, solid-torus, surgery-slope and SFT algebra checks"
)]
#[command(allow_negative_numbers = true)]
pub struct Cli {
    /// Output directory [default: $SHSVERIFY_OUT, else ./shsverify-out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// File stem for the report and data files [default: the experiment name].
    #[arg(long, global = true)]
    pub name: Option<String>,
    /// Seed for randomized suites.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Planar blowup dynamics.
    #[command(subcommand)]
    Blowup(BlowupCmd),
    /// Solid-torus stable Hamiltonian structures.
    #[command(subcommand)]
    Torus(TorusCmd),
    /// Surgery slopes.
    #[command(subcommand)]
    Slopes(SlopesCmd),
    /// Rational SFT gluing algebra.
    #[command(subcommand)]
    Sft(SftCmd),
    /// Combine reports.
    #[command(subcommand)]
    Report(ReportCmd),
    /// Run an experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct BlowupArgs {
    #[arg(long = "A", visible_alias = "amplitude", default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
}

#[derive(Debug, Subcommand)]
pub enum BlowupCmd {
    /// Cone-contraction certificate of the first-return map.
    Certify {
        #[command(flatten)]
        base: BlowupArgs,
        #[arg(long = "R", visible_alias = "radius", default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Also extend the cone field inward at this widening rate (needs --seed).
        #[arg(long)]
        widening_rate: Option<f64>,
    },
    /// Census of zeros of the Hamiltonian field.
    FixedPoints {
        #[command(flatten)]
        base: BlowupArgs,
        #[arg(long, default_value_t = 61)]
        density: usize,
    },
    /// Separatrix boundary of the eye.
    Eye {
        #[command(flatten)]
        base: BlowupArgs,
    },
}

#[derive(Debug, Args)]
pub struct TorusArgs {
    #[arg(long)]
    pub p: i64,
    #[arg(long)]
    pub q: i64,
    /// Slope profile: `zero`, `one`, or polynomial coefficients `c0,c1,...`.
    #[arg(long, default_value = "0.1,0,1", value_parser = parse_profile)]
    pub s: crate::torus_shs::RadialFn,
}

#[derive(Debug, Subcommand)]
pub enum TorusCmd {
    /// Build the radial profiles and write them.
    Build {
        #[command(flatten)]
        base: TorusArgs,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Check the stable Hamiltonian axioms on a grid.
    Verify {
        #[command(flatten)]
        base: TorusArgs,
        #[arg(long, default_value_t = 100)]
        radial: usize,
        #[arg(long, default_value_t = 10)]
        angular: usize,
    },
    /// Glue against a copy with omega scaled by a constant.
    Glue {
        #[command(flatten)]
        base: TorusArgs,
        #[arg(long, default_value_t = 1.0)]
        exterior_scale: f64,
        #[arg(long, default_value_t = 51)]
        samples: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum SlopesCmd {
    /// Exhaustive prong-count scan.
    Scan {
        #[arg(long)]
        pmax: i64,
        #[arg(long)]
        qmax: i64,
        #[arg(long)]
        rmax: i64,
        #[arg(long)]
        rows_csv: bool,
    },
    /// One slope against 1/0 and the given r/1.
    Check {
        #[arg(long)]
        p: i64,
        #[arg(long)]
        q: i64,
        #[arg(long, value_delimiter = ',')]
        r: Vec<i64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SftCmd {
    /// Seeded randomized suite: oracle, koszul or parity.
    Check {
        #[arg(long)]
        suite: crate::sftq::Suite,
        #[arg(long, default_value_t = 500)]
        cases: usize,
    },
    /// Differentials of the monomials in a problem file.
    Product {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum ReportCmd {
    /// Conjunction of several run reports.
    Merge { files: Vec<PathBuf> },
}

/// Exit status: 0 pass, 1 a check failed or the run itself errored, 2 bad
/// usage (flags, config keys, missing seed).
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

fn experiment_of(cmd: Command) -> Result<Option<ExperimentConfig>, String> {
    let experiment = match cmd {
        Command::Blowup(BlowupCmd::Certify {
            base,
            radius,
            samples,
            widening_rate,
        }) => Experiment::BlowupCertify(CertifyParams {
            amplitude: base.amplitude,
            eps: base.eps,
            radius,
            samples,
            max_time: None,
            widening_rate,
            spec: None,
        }),
        Command::Blowup(BlowupCmd::FixedPoints { base, density }) => {
            Experiment::BlowupFixedPoints(FixedPointParams {
                amplitude: base.amplitude,
                eps: base.eps,
                half_width: None,
                density,
                spec: None,
            })
        }
        Command::Blowup(BlowupCmd::Eye { base }) => Experiment::BlowupEye(EyeParams {
            amplitude: base.amplitude,
            eps: base.eps,
            spec: None,
        }),
        Command::Torus(TorusCmd::Build { base, points }) => Experiment::TorusBuild(TorusParams {
            profile_points: points,
            ..torus_params(base)
        }),
        Command::Torus(TorusCmd::Verify {
            base,
            radial,
            angular,
        }) => Experiment::TorusVerify(TorusParams {
            radial,
            angular,
            ..torus_params(base)
        }),
        Command::Torus(TorusCmd::Glue {
            base,
            exterior_scale,
            samples,
        }) => Experiment::TorusGlue(GlueParams {
            p: base.p,
            q: base.q,
            s: base.s,
            exterior_scale,
            samples,
        }),
        Command::Slopes(SlopesCmd::Scan {
            pmax,
            qmax,
            rmax,
            rows_csv,
        }) => Experiment::SlopesScan(ScanParams {
            pmax,
            qmax,
            rmax,
            rows_csv,
        }),
        Command::Slopes(SlopesCmd::Check { p, q, r }) => {
            Experiment::SlopesCheck(SlopeCheckParams { p, q, r })
        }
        Command::Sft(SftCmd::Check { suite, cases }) => {
            Experiment::SftCheck(SftCheckParams { suite, cases })
        }
        Command::Sft(SftCmd::Product { input }) => {
            let text = std::fs::read_to_string(&input)
                .map_err(|e| format!("reading {}: {e}", input.display()))?;
            let problem: SftProblem = serde_json::from_str(&text)
                .map_err(|e| format!("invalid problem {}: {e}", input.display()))?;
            Experiment::SftProduct(problem)
        }
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| format!("reading {}: {e}", config.display()))?;
            let cfg: ExperimentConfig = serde_json::from_str(&text)
                .map_err(|e| format!("invalid config {}: {e}", config.display()))?;
            return Ok(Some(cfg));
        }
        Command::Report(_) => return Ok(None),
    };
    Ok(Some(ExperimentConfig {
        experiment,
        output_dir: None,
        seed: None,
        tolerances: ToleranceOverrides::default(),
    }))
}

fn torus_params(base: TorusArgs) -> TorusParams {
    TorusParams {
        p: base.p,
        q: base.q,
        s: base.s,
        r1: 0.25,
        r2: 0.5,
        radial: 100,
        angular: 10,
        profile_points: 201,
    }
}

fn unix_seconds() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Parse arguments, run, and return the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let env_out = std::env::var_os(OUT_ENV).map(PathBuf::from);

    if let Command::Report(ReportCmd::Merge { files }) = &cli.command {
        let dir = cli
            .out
            .clone()
            .or(env_out)
            .unwrap_or_else(|| DEFAULT_OUT.into());
        let stem = cli.name.clone().unwrap_or_else(|| "merged".into());
        return match merge_reports(files).and_then(|m| {
            std::fs::create_dir_all(&dir)?;
            let text = serde_json::to_string_pretty(&m)? + "\n";
            std::fs::write(dir.join(format!("{stem}.json")), text)?;
            Ok(m)
        }) {
            Ok(m) => {
                for r in &m.reports {
                    println!(
                        "{} {} {}",
                        if r.pass { "PASS" } else { "FAIL" },
                        r.experiment,
                        r.file
                    );
                }
                if m.pass {
                    0
                } else {
                    EXIT_FAIL
                }
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                EXIT_USAGE
            }
        };
    }

    let mut cfg = match experiment_of(cli.command) {
        Ok(Some(c)) => c,
        Ok(None) => unreachable!("merge handled above"),
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cfg.experiment.needs_seed() && cfg.seed.is_none() {
        eprintln!(
            "error: `{}` is randomized; pass --seed or set `seed` in the config",
            cfg.experiment.name()
        );
        return EXIT_USAGE;
    }
    let dir = cli
        .out
        .or_else(|| cfg.output_dir.clone())
        .or(env_out)
        .unwrap_or_else(|| DEFAULT_OUT.into());
    let stem = cli
        .name
        .unwrap_or_else(|| cfg.experiment.name().to_string());

    let started = unix_seconds();
    let clock = Instant::now();
    let report = match execute(&cfg, &dir, &stem) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_FAIL;
        }
    };
    let sidecar = json!({
        "report": format!("{stem}.json"),
        "started_unix": started,
        "wall_time_seconds": clock.elapsed().as_secs_f64(),
    });
    if let Err(e) = std::fs::write(
        dir.join(format!("{stem}.meta.json")),
        serde_json::to_string_pretty(&sidecar).unwrap_or_default() + "\n",
    ) {
        eprintln!("warning: could not write the timing sidecar: {e}");
    }
    for c in &report.checks {
        let value = c.value.map(|v| format!(" = {v:e}")).unwrap_or_default();
        println!("{} {}{value}", if c.pass { "PASS" } else { "FAIL" }, c.name);
    }
    println!(
        "{} {} -> {}",
        if report.pass { "PASS" } else { "FAIL" },
        report.experiment,
        dir.join(format!("{stem}.json")).display()
    );
    if report.pass {
        0
    } else {
        EXIT_FAIL
    }
}
