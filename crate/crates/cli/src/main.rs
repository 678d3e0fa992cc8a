use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use voroscape::experiment::{self, default_margin, ExperimentResult, ExperimentSpec, Z_THRESHOLD};
use voroscape::moments::{distortion_constant, exact_distortion};
use voroscape::pointproc::{self, points_from_csv, points_to_csv, ProcessSpec};
use voroscape::{build_mosaic, Point, Window};

#[derive(Parser)]
#[command(name = "voroscape", version, about = "Voronoi paths, scapes and mixed volumes of Delaunay mosaics")]
struct Cli {
    #[command(flatten)]
    out: OutputArgs,

    /// Worker threads (0 = rayon default).
    #[arg(long, global = true, env = "VOROSCAPE_THREADS", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Emit JSON.
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,

    /// Emit CSV.
    #[arg(long, global = true)]
    csv: bool,

    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq)]
enum Format {
    Json,
    Csv,
}

impl OutputArgs {
    fn format(&self, default: Format) -> Format {
        if self.json {
            Format::Json
        } else if self.csv {
            Format::Csv
        } else {
            default
        }
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
            None => {
                std::io::stdout().lock().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

#[derive(Args, Clone)]
struct TrialArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Replay a single trial by index and print its value.
    #[arg(long)]
    only_trial: Option<usize>,

    /// Acceptance threshold on |z|.
    #[arg(long, default_value_t = Z_THRESHOLD)]
    z_max: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Table of distortion constants D(p, d) for 1 <= p <= d <= dmax.
    Constants {
        #[arg(long, default_value_t = 10)]
        dmax: usize,
    },
    /// Monte Carlo projection moments against the closed form.
    Moments {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1)]
        j: u32,
        /// Samples per trial.
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[command(flatten)]
        trial: TrialArgs,
    },
    /// Distortion of random segments.
    Path {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 1000.0)]
        rho: f64,
        #[arg(long, default_value_t = 0.3)]
        length: f64,
        #[command(flatten)]
        window: WindowArgs,
        #[command(flatten)]
        trial: TrialArgs,
        /// Write the scape of trial 0 as CSV here.
        #[arg(long)]
        scape_out: Option<PathBuf>,
    },
    /// Distortion of square patches of random p-flats.
    Scape {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 2)]
        p: usize,
        #[arg(long, default_value_t = 2000.0)]
        rho: f64,
        #[arg(long, default_value_t = 0.3)]
        side: f64,
        #[command(flatten)]
        window: WindowArgs,
        #[command(flatten)]
        trial: TrialArgs,
        #[arg(long)]
        scape_out: Option<PathBuf>,
    },
    /// Mixed-volume sums over a ball of radius R.
    Mixedvol {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long, default_value_t = 2000.0)]
        rho: f64,
        #[arg(long = "radius", default_value_t = 1.0)]
        radius: f64,
        /// Pass if the mean ratio is within this relative distance of 1.
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
        #[command(flatten)]
        trial: TrialArgs,
    },
    /// Build a mosaic and write it as JSON.
    ExportMosaic {
        /// Point CSV with a `# d=<d>` header; sampled when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 100.0)]
        rho: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the sites as point CSV.
        #[arg(long)]
        points_out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct WindowArgs {
    /// Half-extent of the cubic sampling window (default: unit cube).
    #[arg(long)]
    window_half: Option<f64>,
    /// Window center coordinate, repeated on every axis.
    #[arg(long, default_value_t = 0.5)]
    window_center: f64,
}

impl WindowArgs {
    fn apply(&self, spec: ExperimentSpec) -> ExperimentSpec {
        match self.window_half {
            Some(h) => {
                let c = Point::new(vec![self.window_center; spec.d]);
                spec.with_window(Window::cube(c, h))
            }
            None => spec,
        }
    }
}

enum Outcome {
    Pass,
    StatFail,
}

fn constants(dmax: usize, format: Format) -> Result<String> {
    if dmax == 0 || dmax > 200 {
        bail!("--dmax must lie in 1..=200");
    }
    if format == Format::Json {
        let rows: Vec<serde_json::Value> = (1..=dmax)
            .flat_map(|p| (p..=dmax).map(move |d| (p, d)))
            .map(|(p, d)| {
                serde_json::json!({
                    "p": p, "d": d,
                    "exact": exact_distortion(p, d).to_string(),
                    "value": distortion_constant(p, d),
                })
            })
            .collect();
        return Ok(serde_json::to_string_pretty(&rows)? + "\n");
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["p", "d", "exact", "value"])?;
    for p in 1..=dmax {
        for d in p..=dmax {
            let v = distortion_constant(p, d);
            w.write_record([p.to_string(), d.to_string(), exact_distortion(p, d).to_string(), format!("{v:.14e}")])?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn replay(spec: &ExperimentSpec, index: usize) -> Result<String> {
    spec.validate()?;
    let o = experiment::run_trial(spec, index)?;
    let seed = pointproc::trial_seed(spec.seed, index as u64);
    Ok(format!("trial {index} seed {seed} value {:.15e}\n", o.value))
}

fn report(result: &ExperimentResult, format: Format, pass: bool) -> Result<String> {
    match format {
        Format::Json => {
            let mut v = serde_json::to_value(result)?;
            v["pass"] = pass.into();
            Ok(serde_json::to_string_pretty(&v)? + "\n")
        }
        Format::Csv => Ok(result.trials_csv()),
    }
}

fn summary_line(r: &ExperimentResult, pass: bool) -> String {
    let z = r.z.map_or("n/a".to_string(), |z| format!("{z:+.2}"));
    format!(
        "{} mean={:.6} predicted={:.6} rel_err={:.4} z={} trials={} {:.1}s",
        if pass { "PASS" } else { "FAIL" },
        r.mean,
        r.predicted,
        r.relative_error(),
        z,
        r.values.len(),
        r.elapsed_secs
    )
}

fn run_stat(spec: ExperimentSpec, trial: &TrialArgs, out: &OutputArgs, tol: Option<f64>) -> Result<Outcome> {
    if let Some(i) = trial.only_trial {
        out.emit(&replay(&spec, i)?)?;
        return Ok(Outcome::Pass);
    }
    let r = experiment::run_experiment(&spec)?;
    let pass = match tol {
        Some(t) => r.relative_error() <= t,
        None => r.passes(trial.z_max),
    };
    out.emit(&report(&r, out.format(Format::Json), pass)?)?;
    eprintln!("{}", summary_line(&r, pass));
    Ok(if pass { Outcome::Pass } else { Outcome::StatFail })
}

fn write_scape(spec: &ExperimentSpec, path: &PathBuf) -> Result<()> {
    spec.validate()?;
    let (scape, _) = experiment::trial_scape(spec, 0)?;
    fs::write(path, scape.to_csv()).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<Outcome> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global()?;
    }
    let out = &cli.out;
    match cli.command {
        Command::Constants { dmax } => {
            out.emit(&constants(dmax, out.format(Format::Csv))?)?;
            Ok(Outcome::Pass)
        }
        Command::Moments { p, dim, j, samples, trial } => {
            let spec = ExperimentSpec::moments(p, dim, j, samples, trial.trials, trial.seed);
            if trial.only_trial.is_some() {
                bail!("--only-trial applies to mosaic experiments");
            }
            run_stat(spec, &trial, out, None)
        }
        Command::Path { dim, rho, length, window, trial, scape_out } => {
            let spec = window.apply(ExperimentSpec::path(dim, rho, length, trial.trials, trial.seed));
            if let Some(path) = &scape_out {
                write_scape(&spec, path)?;
            }
            run_stat(spec, &trial, out, None)
        }
        Command::Scape { dim, p, rho, side, window, trial, scape_out } => {
            let spec = window.apply(ExperimentSpec::scape(dim, p, rho, side, trial.trials, trial.seed));
            if let Some(path) = &scape_out {
                write_scape(&spec, path)?;
            }
            run_stat(spec, &trial, out, None)
        }
        Command::Mixedvol { dim, p, rho, radius, tol, trial } => {
            let spec = ExperimentSpec::mixedvol(dim, p, rho, radius, trial.trials, trial.seed);
            if out.format(Format::Json) == Format::Csv && trial.only_trial.is_none() {
                let r = experiment::run_experiment(&spec)?;
                let pass = r.relative_error() <= tol;
                let mut w = csv::Writer::from_writer(Vec::new());
                for rep in &r.reports {
                    w.serialize(rep)?;
                }
                out.emit(&String::from_utf8(w.into_inner()?)?)?;
                eprintln!("{}", summary_line(&r, pass));
                return Ok(if pass { Outcome::Pass } else { Outcome::StatFail });
            }
            run_stat(spec, &trial, out, Some(tol))
        }
        Command::ExportMosaic { input, dim, rho, seed, points_out } => {
            let (d, sites) = match input {
                Some(path) => {
                    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    points_from_csv(&text)?
                }
                None => {
                    // a unit cube plus the experiment margin
                    let m = default_margin(rho, dim);
                    let w = Window::cube(Point::new(vec![0.5; dim]), 0.5 + m);
                    (dim, pointproc::sample(&ProcessSpec::poisson(rho), &w, seed)?)
                }
            };
            if let Some(path) = &points_out {
                fs::write(path, points_to_csv(&sites, d)).with_context(|| format!("writing {}", path.display()))?;
            }
            let mosaic = build_mosaic(&sites, d)?;
            if out.csv {
                bail!("mosaics are exported as JSON only");
            }
            out.emit(&(serde_json::to_string(&mosaic.to_json())? + "\n"))?;
            Ok(Outcome::Pass)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::StatFail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
