//! Argument handling and command dispatch for the `polya` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use polya_core::analytic::{kolmogorov_prob, mean_vector, scheme_mgf, scheme_moments};
use polya_core::model::{row_mean_matrix, ScenarioConfig, Scheme};
use polya_core::numerics::ode_solve_kolmogorov;
use polya_core::simulate::run_ensemble;
use polya_core::verify::{
    canonical_battery, run_full_suite, Conserved, SuiteItem, VerificationReport,
    CANONICAL_ENSEMBLE_SIZE,
};

use crate::config::{parse_config, ConfigError};
use crate::output::{self, AnalyticRow, KolmogorovTable, Real};
use crate::parallel::RayonExecutor;

/// Exit code for a successful command or a passing verification.
pub const EXIT_OK: i32 = 0;
/// Exit code when at least one verification check failed.
pub const EXIT_FAILED: i32 = 1;
/// Exit code for usage and configuration errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Simulate and analyze continuous-time Pólya-like random walks.
#[derive(Debug, Parser)]
#[command(name = "polya", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Master seed; overrides `seed` in the config. Default for `verify canonical` is 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for ensemble runs. Output does not depend on this.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Trajectories per ensemble; overrides `ensemble_size` in the config.
    #[arg(long, global = true)]
    pub ensemble_size: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an ensemble and write per-checkpoint means, variances and covariances.
    Simulate { config: PathBuf },
    /// Evaluate closed-form moments and MGF values for a config's scheme.
    Analyze {
        config: PathBuf,
        /// Comma-separated times (default: the config checkpoints).
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
        /// MGF arguments: coordinates separated by commas, points by semicolons,
        /// e.g. "0.1,0.05;0.2,0".
        #[arg(long)]
        u: Option<String>,
    },
    /// Run `canonical` (the acceptance battery) or a config's moment checks.
    Verify { suite: String },
    /// Transition probabilities of the one-dimensional walk with constant increment.
    Kolmogorov {
        /// Initial value.
        #[arg(long = "i")]
        i: f64,
        /// Increment per event.
        #[arg(long)]
        delta: f64,
        /// Largest number of events tabulated.
        #[arg(long, default_value_t = 60)]
        ell_max: usize,
        #[arg(long = "t")]
        t: f64,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Config { path: PathBuf, source: ConfigError },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] polya_core::Error),
    #[error("{0}")]
    Usage(String),
}

fn read_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text).map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })
}

impl Cli {
    fn executor(&self) -> Result<RayonExecutor, CliError> {
        let workers = match self.workers {
            Some(0) => return Err(CliError::Usage("--workers must be at least 1".into())),
            Some(n) => n,
            None => std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
        };
        RayonExecutor::new(workers)
            .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))
    }

    /// Reads a config and applies `--seed` and `--ensemble-size`.
    fn scenario(&self, path: &Path) -> Result<ScenarioConfig, CliError> {
        let mut cfg = read_config(path)?;
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(n) = self.ensemble_size {
            cfg.ensemble_size = n;
            let problems = cfg.problems();
            if !problems.is_empty() {
                return Err(CliError::Config {
                    path: path.to_path_buf(),
                    source: ConfigError::Validation(problems),
                });
            }
        }
        Ok(cfg)
    }

    fn emit(&self, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
        match &self.output {
            Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            }),
            None => out
                .write_all(text.as_bytes())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                }),
        }
    }
}

fn parse_u_grid(text: &str, dim: usize) -> Result<Vec<Vec<f64>>, CliError> {
    text.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let u = p
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| CliError::Usage(format!("malformed --u point `{p}`")))?;
            if u.len() == dim {
                Ok(u)
            } else {
                Err(CliError::Usage(format!(
                    "--u point `{p}` needs {dim} coordinates"
                )))
            }
        })
        .collect()
}

fn analyze_rows(
    cfg: &ScenarioConfig,
    times: &[f64],
    grid: &[Vec<f64>],
) -> Result<Vec<AnalyticRow>, CliError> {
    let scheme = cfg.scheme();
    let d = cfg.dim();
    let mut rows = Vec::new();
    let row = |t: f64, quantity: &'static str, i: Option<usize>, j: Option<usize>, value: f64| {
        AnalyticRow {
            time: Real(t),
            quantity,
            i,
            j,
            u: None,
            value: Real(value),
        }
    };
    for &t in times {
        match scheme_moments(&scheme, &cfg.init, t) {
            Ok(m) => {
                for i in 0..d {
                    rows.push(row(t, "mean", Some(i + 1), None, m.means[i]));
                }
                for i in 0..d {
                    rows.push(row(t, "variance", Some(i + 1), None, m.variance(i)));
                }
                for i in 0..d {
                    for j in i + 1..d {
                        rows.push(row(
                            t,
                            "covariance",
                            Some(i + 1),
                            Some(j + 1),
                            m.covariance(i, j),
                        ));
                    }
                }
            }
            Err(polya_core::Error::Unsupported(_)) => {
                // no closed form beyond the first moments
                let means = mean_vector(&row_mean_matrix(&cfg.matrix), cfg.init.coords(), t);
                for (i, &m) in means.iter().enumerate() {
                    rows.push(row(t, "mean", Some(i + 1), None, m));
                }
            }
            Err(e) => return Err(e.into()),
        }
        for u in grid {
            rows.push(AnalyticRow {
                u: Some(u.iter().map(|&x| Real(x)).collect()),
                ..row(t, "mgf", None, None, scheme_mgf(&scheme, &cfg.init, t, u)?)
            });
        }
    }
    Ok(rows)
}

/// Moment checks at every checkpoint, plus the path-wise conservation law of
/// the scheme when it has one.
pub fn config_suite(cfg: &ScenarioConfig) -> Result<Vec<SuiteItem>, CliError> {
    let scheme = cfg.scheme();
    let expected = cfg
        .checkpoints
        .iter()
        .map(|&t| scheme_moments(&scheme, &cfg.init, t).map(|m| (t, m)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| match e {
            polya_core::Error::Unsupported(_) => CliError::Usage(format!(
                "no closed-form moments to verify against for scheme {scheme}"
            )),
            other => other.into(),
        })?;
    let name = format!("config/{}", scheme.name());
    let mut items = vec![SuiteItem::Moments {
        name: name.clone(),
        config: cfg.clone(),
        expected,
    }];
    let quantity = match scheme {
        Scheme::Ehrenfest { .. } => Some(Conserved::Sum),
        Scheme::Hill { .. } => Some(Conserved::Difference),
        Scheme::BalancedTriangular { delta, .. } => Some(Conserved::BalancedGrowth { delta }),
        _ => None,
    };
    if let Some(quantity) = quantity {
        items.push(SuiteItem::Conservation {
            name: format!("{name}-conservation"),
            config: cfg.clone(),
            quantity,
        });
    }
    Ok(items)
}

fn render_report(report: &VerificationReport, format: Format) -> String {
    match format {
        Format::Csv => output::report_csv(report),
        Format::Json => output::report_json(report),
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    match &cli.command {
        Command::Simulate { config } => {
            let cfg = cli.scenario(config)?;
            let stats = run_ensemble(&cfg, &cli.executor()?)?;
            let text = match cli.format {
                Format::Csv => output::stats_csv(&stats),
                Format::Json => output::stats_json(&stats),
            };
            cli.emit(&text, out)?;
            Ok(EXIT_OK)
        }
        Command::Analyze { config, times, u } => {
            let cfg = cli.scenario(config)?;
            let times = times.clone().unwrap_or_else(|| cfg.checkpoints.clone());
            if let Some(t) = times.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
                return Err(CliError::Usage(format!(
                    "time {t} must be finite and nonnegative"
                )));
            }
            let grid = match u {
                Some(text) => parse_u_grid(text, cfg.dim())?,
                None => Vec::new(),
            };
            let rows = analyze_rows(&cfg, &times, &grid)?;
            let text = match cli.format {
                Format::Csv => output::analytic_csv(&rows),
                Format::Json => output::analytic_json(&rows),
            };
            cli.emit(&text, out)?;
            Ok(EXIT_OK)
        }
        Command::Verify { suite } => {
            let (items, seed) = if suite == "canonical" {
                let seed = cli.seed.unwrap_or(0);
                (
                    canonical_battery(seed, cli.ensemble_size.unwrap_or(CANONICAL_ENSEMBLE_SIZE)),
                    seed,
                )
            } else {
                let cfg = cli.scenario(Path::new(suite))?;
                (config_suite(&cfg)?, cfg.master_seed)
            };
            if items.iter().any(
                |it| matches!(it, SuiteItem::Moments { config, .. } if config.ensemble_size == 0),
            ) {
                return Err(CliError::Usage("--ensemble-size must be positive".into()));
            }
            let report = run_full_suite(&items, seed, &cli.executor()?);
            cli.emit(&render_report(&report, cli.format), out)?;
            let failed = report.failures().count();
            let _ = writeln!(
                err,
                "{} checks, {failed} failed, {} item errors",
                report.checks.len(),
                report.errors.len()
            );
            for (item, e) in &report.errors {
                let _ = writeln!(err, "error in {item}: {e}");
            }
            Ok(if report.overall_pass() {
                EXIT_OK
            } else {
                EXIT_FAILED
            })
        }
        Command::Kolmogorov {
            i,
            delta,
            ell_max,
            t,
        } => {
            let sol = ode_solve_kolmogorov(*i, *delta, *ell_max, *t)?;
            if let Some(w) = &sol.warning {
                let _ = writeln!(err, "warning: truncation mass deficit {:e}", w.mass_deficit);
            }
            let table = KolmogorovTable {
                i: Real(*i),
                delta: Real(*delta),
                t: Real(*t),
                closed_form: (0..=*ell_max)
                    .map(|l| Real(kolmogorov_prob(*i, *delta, l as u32, *t)))
                    .collect(),
                ode: sol.final_probabilities().iter().map(|&p| Real(p)).collect(),
                overflow: Real(sol.overflow.last().copied().unwrap_or(0.0)),
            };
            let text = match cli.format {
                Format::Csv => output::kolmogorov_csv(&table),
                Format::Json => output::kolmogorov_json(&table),
            };
            cli.emit(&text, out)?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}
