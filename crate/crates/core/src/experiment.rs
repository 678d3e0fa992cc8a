//! Seeded Monte Carlo experiments.
//!
//! Trial `i` draws everything (sites, probe rotation, probe position) from a
//! ChaCha8 stream seeded with `trial_seed(seed, i)`, so any trial can be
//! replayed alone and results do not depend on the number of workers.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::delaunay::{build_mosaic, Mosaic};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mixedvol::{mixed_volume_sum, MixedSumReport};
use crate::moments::{distortion_constant, moment_closed_form, moment_monte_carlo, sample_stiefel, MomentEstimate, MomentQuery};
use crate::pointproc::{sample_with, trial_seed, unit_ball_volume, ProcessSpec, Window, DEFAULT_CAP};
use crate::scape::{distortion, voronoi_path, voronoi_scape_flat, Flat, Probe, Region, Scape};
use crate::stats::{summarize, z_score};

/// Default acceptance threshold on |z|.
pub const Z_THRESHOLD: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Path,
    ScapeFlat,
    Mixedvol,
    Moments,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub d: usize,
    pub p: usize,
    pub process: ProcessSpec,
    /// Sampling window.
    pub window: Window,
    /// Distance kept between the probe and the window boundary.
    pub margin: f64,
    /// Segment length, patch side, or mixed-volume ball radius R.
    pub probe_size: f64,
    pub trials: usize,
    pub seed: u64,
    /// Moment order (moments only).
    pub j: u32,
    /// Samples per trial (moments only).
    pub samples: u64,
}

/// `4 (1 / (rho nu_d))^{1/d}`, four nearest-neighbour scales.
pub fn default_margin(intensity: f64, d: usize) -> f64 {
    4.0 * (1.0 / (intensity * unit_ball_volume(d))).powf(1.0 / d as f64)
}

impl ExperimentSpec {
    fn base(kind: ExperimentKind, d: usize, p: usize, intensity: f64, probe_size: f64, trials: usize, seed: u64) -> Self {
        ExperimentSpec {
            kind,
            d,
            p,
            process: ProcessSpec::poisson(intensity),
            window: Window::unit_cube(d),
            margin: default_margin(intensity, d),
            probe_size,
            trials,
            seed,
            j: 0,
            samples: 0,
        }
    }

    /// Segments of length `length` in a Poisson process of intensity
    /// `intensity` on the unit cube.
    pub fn path(d: usize, intensity: f64, length: f64, trials: usize, seed: u64) -> Self {
        Self::base(ExperimentKind::Path, d, 1, intensity, length, trials, seed)
    }

    /// Cube patches of side `side` of random p-flats.
    pub fn scape(d: usize, p: usize, intensity: f64, side: f64, trials: usize, seed: u64) -> Self {
        Self::base(ExperimentKind::ScapeFlat, d, p, intensity, side, trials, seed)
    }

    /// Mixed-volume sums over a ball of radius `r`, with sites sampled in
    /// the ball of radius `r + margin` around the origin.
    pub fn mixedvol(d: usize, p: usize, intensity: f64, r: f64, trials: usize, seed: u64) -> Self {
        let mut s = Self::base(ExperimentKind::Mixedvol, d, p, intensity, r, trials, seed);
        s.window = Window::ball(Point::origin(d), r + s.margin);
        s
    }

    /// Replaces the sampling window; the margin is kept.
    pub fn with_window(mut self, window: Window) -> Self {
        self.window = window;
        self
    }

    pub fn moments(p: usize, d: usize, j: u32, samples: u64, trials: usize, seed: u64) -> Self {
        ExperimentSpec {
            kind: ExperimentKind::Moments,
            d,
            p,
            process: ProcessSpec::Explicit { points: Vec::new() },
            window: Window::unit_cube(d.max(1)),
            margin: 1.0,
            probe_size: 0.0,
            trials,
            seed,
            j,
            samples,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.margin > 0.0) {
            return Err(Error::InvalidArgument("margin must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.kind == ExperimentKind::Moments {
            return MomentQuery::new(self.p, self.d, self.j).map(|_| ());
        }
        self.process.validate()?;
        self.window.validate()?;
        crate::error::check_dim(self.d, self.window.dim())?;
        let reach = match self.kind {
            ExperimentKind::Path => {
                if self.p != 1 {
                    return Err(Error::InvalidArgument("path experiments have p = 1".into()));
                }
                0.5 * self.probe_size
            }
            ExperimentKind::ScapeFlat => {
                if self.p == 0 || self.p >= self.d {
                    return Err(Error::InvalidArgument(format!("p must lie in 1..{}", self.d)));
                }
                0.5 * self.probe_size * (self.p as f64).sqrt()
            }
            ExperimentKind::Mixedvol => {
                if self.p > self.d {
                    return Err(Error::InvalidArgument("p exceeds d".into()));
                }
                self.probe_size
            }
            ExperimentKind::Moments => unreachable!(),
        };
        // the core window must hold the probe; for mixed volumes the ball
        // may touch the core boundary
        let fits = match self.window.shrink(self.margin) {
            Some(core) if self.kind == ExperimentKind::Mixedvol => core.size() >= reach * (1.0 - 1e-12),
            Some(core) => core.size() > reach,
            None => false,
        };
        if !(self.probe_size > 0.0) || !fits {
            return Err(Error::InvalidArgument("probe does not fit in the core window".into()));
        }
        Ok(())
    }

    /// Value the trial mean should approach.
    pub fn predicted(&self) -> Result<f64> {
        match self.kind {
            ExperimentKind::Path | ExperimentKind::ScapeFlat => Ok(distortion_constant(self.p, self.d)),
            ExperimentKind::Mixedvol => Ok(1.0),
            ExperimentKind::Moments => moment_closed_form(MomentQuery::new(self.p, self.d, self.j)?),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub predicted: f64,
    pub values: Vec<f64>,
    /// Second per-trial column: boundary share for mixed volumes, the
    /// per-trial standard error for moments, empty otherwise.
    pub secondary: Vec<f64>,
    pub trial_seeds: Vec<u64>,
    pub mean: f64,
    pub stderr: Option<f64>,
    pub z: Option<f64>,
    /// Per-trial reports of mixed-volume experiments.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reports: Vec<MixedSumReport>,
    pub elapsed_secs: f64,
    pub version: String,
}

impl ExperimentResult {
    /// `|z| <= threshold`; a single trial passes vacuously.
    pub fn passes(&self, threshold: f64) -> bool {
        self.z.is_none_or(|z| z.abs() <= threshold)
    }

    pub fn relative_error(&self) -> f64 {
        (self.mean - self.predicted).abs() / self.predicted.abs()
    }

    /// CSV with one row per trial.
    pub fn trials_csv(&self) -> String {
        let mut out = String::from("trial,seed,value,secondary\n");
        for (i, (v, s)) in self.values.iter().zip(&self.trial_seeds).enumerate() {
            let extra = self.secondary.get(i).map_or(String::new(), |x| format!("{x:.15e}"));
            out.push_str(&format!("{i},{s},{v:.15e},{extra}\n"));
        }
        out
    }
}

/// One trial's mosaic and probe, drawn from the trial's stream.
pub struct TrialSetup {
    pub seed: u64,
    pub mosaic: Mosaic,
    pub probe: Option<Probe>,
}

/// Samples the sites and (for path and scape experiments) places the probe
/// at a Haar-random orientation and a uniform position in the core.
pub fn trial_setup(spec: &ExperimentSpec, index: usize) -> Result<TrialSetup> {
    if spec.kind == ExperimentKind::Moments {
        return Err(Error::InvalidArgument("moments trials have no mosaic".into()));
    }
    let seed = trial_seed(spec.seed, index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = spec.d;
    let sites = sample_with(&spec.process, &spec.window, &mut rng, DEFAULT_CAP)?;
    let mosaic = build_mosaic(&sites, d)?;
    let probe = match spec.kind {
        ExperimentKind::Path => {
            let half = 0.5 * spec.probe_size;
            let u = sample_stiefel(1, d, &mut rng).rows()[0].clone();
            let core = spec.window.shrink(spec.margin + half).ok_or(Error::ProbeOutsideCoverage)?;
            let c = core.sample_uniform(&mut rng);
            let a: Vec<f64> = c.iter().zip(&u).map(|(x, v)| x - half * v).collect();
            let b: Vec<f64> = c.iter().zip(&u).map(|(x, v)| x + half * v).collect();
            Some(Probe::segment(Point::new(a), Point::new(b)))
        }
        ExperimentKind::ScapeFlat => {
            let region = Region::square(spec.p, spec.probe_size);
            let frame = sample_stiefel(spec.p, d, &mut rng);
            let core = spec.window.shrink(spec.margin + region.circumradius()).ok_or(Error::ProbeOutsideCoverage)?;
            let base = Point::new(core.sample_uniform(&mut rng));
            Some(Probe::FlatPatch { flat: Flat::new(base, frame)?, region })
        }
        _ => None,
    };
    Ok(TrialSetup { seed, mosaic, probe })
}

/// The scape of one path or flat-patch trial.
pub fn trial_scape(spec: &ExperimentSpec, index: usize) -> Result<(Scape, Probe)> {
    let setup = trial_setup(spec, index)?;
    let probe = setup.probe.ok_or_else(|| Error::InvalidArgument("experiment has no probe".into()))?;
    let scape = match &probe {
        Probe::Polyline { .. } => voronoi_path(&setup.mosaic, &probe)?,
        Probe::FlatPatch { .. } => voronoi_scape_flat(&setup.mosaic, &probe)?,
    };
    Ok((scape, probe))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub value: f64,
    pub secondary: Option<f64>,
    pub report: Option<MixedSumReport>,
}

pub fn run_trial(spec: &ExperimentSpec, index: usize) -> Result<TrialOutcome> {
    match spec.kind {
        ExperimentKind::Path => {
            let (scape, _) = trial_scape(spec, index)?;
            // divide by the nominal length so that a line patch with the same
            // draws gives bitwise the same value
            Ok(TrialOutcome { value: scape.total_volume() / spec.probe_size, secondary: None, report: None })
        }
        ExperimentKind::ScapeFlat => {
            let (scape, probe) = trial_scape(spec, index)?;
            Ok(TrialOutcome { value: distortion(&scape, &probe)?, secondary: None, report: None })
        }
        ExperimentKind::Mixedvol => {
            let setup = trial_setup(spec, index)?;
            let ball = Window::ball(spec.window.center().clone(), spec.probe_size);
            let mut report = mixed_volume_sum(&setup.mosaic, spec.p, &ball, &spec.window)?;
            report.seed = Some(setup.seed);
            Ok(TrialOutcome {
                value: report.ratio,
                secondary: Some(report.sum_boundary / report.predicted),
                report: Some(report),
            })
        }
        ExperimentKind::Moments => Err(Error::InvalidArgument("moments trials have no mosaic".into())),
    }
}

fn finish(spec: &ExperimentSpec, values: Vec<f64>, secondary: Vec<f64>, start: Instant) -> Result<ExperimentResult> {
    let predicted = spec.predicted()?;
    let s = summarize(&values);
    Ok(ExperimentResult {
        spec: spec.clone(),
        predicted,
        trial_seeds: (0..spec.trials as u64).map(|i| trial_seed(spec.seed, i)).collect(),
        mean: s.mean,
        stderr: s.stderr,
        z: z_score(s.mean, predicted, s.stderr),
        values,
        secondary,
        reports: Vec::new(),
        elapsed_secs: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

/// Runs every trial on the rayon pool. Values come back in trial order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let start = Instant::now();
    if spec.kind == ExperimentKind::Moments {
        return run_moments(spec, start);
    }
    let outcomes: Vec<Result<TrialOutcome>> = (0..spec.trials).into_par_iter().map(|i| run_trial(spec, i)).collect();
    let mut values = Vec::with_capacity(spec.trials);
    let mut secondary = Vec::new();
    let mut reports = Vec::new();
    for (index, o) in outcomes.into_iter().enumerate() {
        let o = o.map_err(|e| Error::Trial { index, seed: trial_seed(spec.seed, index as u64), source: Box::new(e) })?;
        values.push(o.value);
        secondary.extend(o.secondary);
        reports.extend(o.report);
    }
    let mut r = finish(spec, values, secondary, start)?;
    r.reports = reports;
    Ok(r)
}

pub fn run_path_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    expect_kind(spec, ExperimentKind::Path)?;
    run_experiment(spec)
}

pub fn run_scape_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    expect_kind(spec, ExperimentKind::ScapeFlat)?;
    run_experiment(spec)
}

pub fn run_mixedvol_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    expect_kind(spec, ExperimentKind::Mixedvol)?;
    run_experiment(spec)
}

pub fn run_moments_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    expect_kind(spec, ExperimentKind::Moments)?;
    run_experiment(spec)
}

fn expect_kind(spec: &ExperimentSpec, kind: ExperimentKind) -> Result<()> {
    if spec.kind == kind {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("expected a {kind:?} experiment, got {:?}", spec.kind)))
    }
}

/// Moments: each trial is an independent batch of `samples` frames. The
/// batches are pooled exactly, so the reported stderr is that of the
/// pooled mean even for a single batch.
fn run_moments(spec: &ExperimentSpec, start: Instant) -> Result<ExperimentResult> {
    let q = MomentQuery::new(spec.p, spec.d, spec.j)?;
    let batches: Vec<MomentEstimate> = (0..spec.trials)
        .into_par_iter()
        .map(|i| moment_monte_carlo(q, spec.samples, trial_seed(spec.seed, i as u64)))
        .collect::<Result<_>>()?;
    let pooled = MomentEstimate::merge(&batches).ok_or_else(|| Error::Inconsistent("no moment batches".into()))?;
    let mut r = finish(spec, batches.iter().map(|b| b.mean).collect(), batches.iter().map(|b| b.stderr).collect(), start)?;
    r.mean = pooled.mean;
    r.stderr = Some(pooled.stderr);
    r.z = if pooled.stderr > 0.0 { Some((pooled.mean - r.predicted) / pooled.stderr) } else { None };
    Ok(r)
}
