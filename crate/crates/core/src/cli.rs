//! The `levy-action` command line.
//!
//! Exit codes: 0 on success, 1 on validation errors, 2 on numerical
//! failures. Output goes to `--out` (written atomically) or stdout.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path as FsPath, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::document::parse_model;
use crate::error::{Error, Result};
use crate::legendre::{legendre_transform, LegendreStatus, DEFAULT_TOL};
use crate::minimize::{evaluate_action, minimize_action, BoundaryProblem, Functional, MinimizeOptions};
use crate::model::ModelSpec;
use crate::montecarlo::{equivalence_gap_levy, equivalence_gap_sde, rate_table, EventSpec, McOptions};
use crate::path::Path;
use crate::simulate::{euler_maruyama, RngStream, SchemeOptions};

#[derive(Debug, Parser)]
#[command(name = "levy-action", version, about = "Action functionals and rare-event diagnostics for Lévy-driven SDEs")]
struct Cli {
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate ψ(ξ) and Ψ(ξ) of the driving triplet.
    Symbol {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
        xi_min: f64,
        #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
        xi_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Tabulate Ψ*(p).
    Legendre {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
        p_min: f64,
        #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
        p_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Evaluate an action functional on a path file.
    Action {
        #[arg(long)]
        functional: String,
        #[arg(long)]
        path: PathBuf,
        /// Required for every functional except `brownian`.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Minimize the action between two endpoints.
    Minimize {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x0: f64,
        #[arg(long, allow_hyphen_values = true)]
        x1: f64,
        /// Grid size; the model's `n` when omitted.
        #[arg(long)]
        n: Option<usize>,
        /// Functional name; chosen from the model when omitted.
        #[arg(long)]
        functional: Option<String>,
        #[arg(long, default_value_t = 1e-8)]
        gtol: f64,
    },
    /// Emit Euler–Maruyama sample paths.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        start: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Monte Carlo ε log P table against −inf S.
    RateTable {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        event: String,
        /// Comma-separated, strictly decreasing.
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Tail frequencies of the sup-distance between approximations.
    Equivalence {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Variant::Sde)]
        variant: Variant,
        /// Coarse grids for the SDE variant.
        #[arg(long, value_delimiter = ',')]
        m: Vec<usize>,
        /// Noise scales for the Lévy variant; the model's ε otherwise.
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        /// Fine grid of the SDE variant, or cells per unit time of the Lévy variant.
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Variant {
    Sde,
    Levy,
}

/// Round-trip formatting for CSV cells.
fn num(x: f64) -> String {
    format!("{:.16e}", x + 0.0)
}

fn status_name(s: LegendreStatus) -> &'static str {
    match s {
        LegendreStatus::Interior => "interior",
        LegendreStatus::Boundary => "boundary",
        LegendreStatus::Unbounded => "unbounded",
    }
}

fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(lo < hi) {
        return Err(Error::InvalidInput("need points >= 2 and min < max".into()));
    }
    Ok((0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect())
}

fn read_path(p: &FsPath) -> Result<Path> {
    Ok(serde_json::from_str(&std::fs::read_to_string(p)?)?)
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

/// Writes through a temporary file in the target directory, then renames.
fn emit(out: Option<&FsPath>, content: &str) -> Result<()> {
    match out {
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
            Ok(())
        }
        Some(target) => {
            let dir = target.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(FsPath::new("."));
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(content.as_bytes())?;
            tmp.persist(target).map_err(|e| Error::Io(e.error))?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct ActionReport<'a> {
    functional: &'a str,
    value: f64,
}

fn execute(cli: Cli) -> Result<()> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Symbol { model, xi_min, xi_max, points } => {
            let m = parse_model(&model)?;
            let mut s = String::from("xi,re_psi,im_psi,log_mgf\n");
            for xi in grid(xi_min, xi_max, points)? {
                let psi = m.triplet.psi(xi)?;
                let lm = match m.triplet.log_mgf(xi, 0) {
                    Ok(v) => v.value,
                    Err(Error::InfiniteMoment { .. }) => f64::INFINITY,
                    Err(e) => return Err(e),
                };
                writeln!(s, "{},{},{},{}", num(xi), num(psi.re), num(psi.im), num(lm)).unwrap();
            }
            emit(out, &s)
        }
        Command::Legendre { model, p_min, p_max, points } => {
            let m = parse_model(&model)?;
            let mut s = String::from("p,value,argmax,status\n");
            for p in grid(p_min, p_max, points)? {
                let r = legendre_transform(&m.triplet, p, DEFAULT_TOL)?;
                writeln!(s, "{},{},{},{}", num(p), num(r.value), num(r.argmax), status_name(r.status)).unwrap();
            }
            emit(out, &s)
        }
        Command::Action { functional, path, model } => {
            let f = Functional::parse(&functional)?;
            let phi = read_path(&path)?;
            let m = match (model, f) {
                (Some(p), _) => parse_model(&p)?,
                (None, Functional::Brownian) => ModelSpec::brownian("0", "1", 1.0)?,
                (None, _) => return Err(Error::InvalidInput(format!("functional '{functional}' needs --model"))),
            };
            let value = evaluate_action(f, &phi, &m)?;
            match out {
                None => {
                    println!("{value:?}");
                    Ok(())
                }
                Some(_) => emit(out, &json(&ActionReport { functional: f.name(), value })?),
            }
        }
        Command::Minimize { model, x0, x1, n, functional, gtol } => {
            let m = parse_model(&model)?;
            let functional = match functional {
                Some(f) => Functional::parse(&f)?,
                None => Functional::auto(&m, x0),
            };
            let n = n.unwrap_or(m.n);
            let problem = BoundaryProblem { functional, model: m, x0, x1, n };
            let r = minimize_action(&problem, &MinimizeOptions { gtol, ..MinimizeOptions::default() })?;
            emit(out, &json(&r)?)
        }
        Command::Simulate { model, n, samples, seed, start, format } => {
            let m = parse_model(&model)?;
            let n = n.unwrap_or(m.n);
            if samples == 0 {
                return Err(Error::InvalidInput("need at least one sample".into()));
            }
            let opts = SchemeOptions { start, ..SchemeOptions::default() };
            let paths = (0..samples).map(|i| euler_maruyama(&m, n, RngStream::new(seed, i), &opts).map(|p| p.path)).collect::<Result<Vec<_>>>()?;
            let text = match format {
                Format::Json if samples == 1 => json(&paths[0])?,
                Format::Json => json(&paths)?,
                Format::Csv => {
                    let mut s = String::from("sample,t,value\n");
                    for (i, p) in paths.iter().enumerate() {
                        for (k, v) in p.values().iter().enumerate() {
                            writeln!(s, "{i},{},{}", num(k as f64 / n as f64), num(*v)).unwrap();
                        }
                    }
                    s
                }
            };
            emit(out, &text)
        }
        Command::RateTable { model, event, eps, samples, n, seed, threads } => {
            let m = parse_model(&model)?;
            let e = EventSpec::parse(&event)?;
            let n = n.unwrap_or(m.n);
            let t = rate_table(&m, &e, &eps, samples, n, &McOptions { threads, ..McOptions::seeded(seed) })?;
            let mut s = String::from("epsilon,p_hat,ci_lo,ci_hi,rate_value,neg_inf_S\n");
            for r in &t.rows {
                let e = &r.estimate;
                writeln!(s, "{},{},{},{},{},{}", num(e.epsilon), num(e.p_hat), num(e.ci95.0), num(e.ci95.1), num(e.rate_value), num(r.neg_inf_s)).unwrap();
            }
            for r in t.rows.iter().filter(|r| r.estimate.no_hits) {
                eprintln!("no hits at epsilon = {}; rate_value is the rule-of-three bound", r.estimate.epsilon);
            }
            if let Some(f) = t.fit {
                eprintln!("extrapolated limit c0 = {:?} (c1 = {:?})", f.c0, f.c1);
            }
            emit(out, &s)
        }
        Command::Equivalence { model, variant, m, eps, n, samples, delta, seed, threads } => {
            let model = parse_model(&model)?;
            let opts = McOptions { threads, ..McOptions::seeded(seed) };
            let mut s = String::new();
            match variant {
                Variant::Sde => {
                    if m.is_empty() {
                        return Err(Error::InvalidInput("the sde variant needs --m".into()));
                    }
                    s.push_str("m,n,delta,frequency,hits,n_samples,mean_distance\n");
                    for mm in m {
                        let g = equivalence_gap_sde(&model, n, mm, samples, delta, &opts)?;
                        writeln!(s, "{mm},{n},{},{},{},{},{}", num(delta), num(g.frequency), g.hits, g.n_samples, num(g.mean_distance)).unwrap();
                    }
                }
                Variant::Levy => {
                    let eps = if eps.is_empty() { vec![model.epsilon] } else { eps };
                    s.push_str("epsilon,delta,frequency,hits,n_samples,mean_distance\n");
                    for e in eps {
                        let g = equivalence_gap_levy(&model.triplet, e, n, samples, delta, &opts)?;
                        writeln!(s, "{},{},{},{},{},{}", num(e), num(delta), num(g.frequency), g.hits, g.n_samples, num(g.mean_distance)).unwrap();
                    }
                }
            }
            emit(out, &s)
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}
