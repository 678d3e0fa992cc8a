//! Site generators: stationary Poisson processes, jittered lattices and
//! explicit point sets, restricted to a box or ball window.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::Point;
use crate::linalg;
use crate::moments::ln_gamma;

/// Default cap on the expected number of generated points.
pub const DEFAULT_CAP: f64 = 1e7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Window {
    /// Axis-parallel cube `center +- half_extent`.
    Box { center: Point, half_extent: f64 },
    Ball { center: Point, radius: f64 },
}

impl Window {
    pub fn cube(center: Point, half_extent: f64) -> Self {
        Window::Box { center, half_extent }
    }

    pub fn ball(center: Point, radius: f64) -> Self {
        Window::Ball { center, radius }
    }

    /// `[0, 1]^d`.
    pub fn unit_cube(d: usize) -> Self {
        Window::Box { center: Point::new(vec![0.5; d]), half_extent: 0.5 }
    }

    pub fn center(&self) -> &Point {
        match self {
            Window::Box { center, .. } | Window::Ball { center, .. } => center,
        }
    }

    /// Half-extent of a box or radius of a ball.
    pub fn size(&self) -> f64 {
        match self {
            Window::Box { half_extent, .. } => *half_extent,
            Window::Ball { radius, .. } => *radius,
        }
    }

    pub fn dim(&self) -> usize {
        self.center().dim()
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.size();
        if !(s > 0.0 && s.is_finite()) || !self.center().is_finite() || self.dim() == 0 {
            return Err(Error::InvalidArgument("window must have positive finite extent".into()));
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Window::Box { center, half_extent } => {
                x.iter().zip(center.coords()).all(|(a, c)| (a - c).abs() <= *half_extent)
            }
            Window::Ball { center, radius } => linalg::dist2(x, center) <= radius * radius,
        }
    }

    /// Same shape, extent reduced by `margin`; `None` if nothing is left.
    pub fn shrink(&self, margin: f64) -> Option<Window> {
        let s = self.size() - margin;
        if s <= 0.0 {
            return None;
        }
        Some(match self {
            Window::Box { center, .. } => Window::Box { center: center.clone(), half_extent: s },
            Window::Ball { center, .. } => Window::Ball { center: center.clone(), radius: s },
        })
    }

    /// Axis-parallel bounding box `(lo, hi)`.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let s = self.size();
        let c = self.center();
        (c.iter().map(|x| x - s).collect(), c.iter().map(|x| x + s).collect())
    }

    /// A point drawn uniformly from the window.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Window::Box { center, half_extent } => {
                center.iter().map(|c| c + half_extent * (2.0 * rng.random::<f64>() - 1.0)).collect()
            }
            Window::Ball { center, radius } => {
                let d = center.dim();
                let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let n = linalg::norm(&g);
                let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
                center.iter().zip(&g).map(|(c, x)| c + r * x / n).collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessSpec {
    Poisson { intensity: f64 },
    /// Grid of the given spacing, each point displaced uniformly in
    /// `[-jitter, jitter]^d`.
    Lattice { spacing: f64, jitter: f64 },
    Explicit { points: Vec<Point> },
}

impl ProcessSpec {
    pub fn poisson(intensity: f64) -> Self {
        ProcessSpec::Poisson { intensity }
    }

    /// Lattice with the default jitter of `1e-3 * spacing`.
    pub fn lattice(spacing: f64) -> Self {
        ProcessSpec::Lattice { spacing, jitter: 1e-3 * spacing }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProcessSpec::Poisson { intensity } if !(*intensity > 0.0 && intensity.is_finite()) => {
                Err(Error::InvalidArgument("intensity must be positive".into()))
            }
            ProcessSpec::Lattice { spacing, jitter }
                if !(*spacing > 0.0) || !(*jitter >= 0.0) || *jitter >= spacing / 2.0 =>
            {
                Err(Error::InvalidArgument("lattice needs spacing > 0 and 0 <= jitter < spacing/2".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Volume of the unit ball in R^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    (h * std::f64::consts::PI.ln() - ln_gamma(h + 1.0)).exp()
}

pub fn window_volume(w: &Window) -> f64 {
    match w {
        Window::Box { half_extent, center } => (2.0 * half_extent).powi(center.dim() as i32),
        Window::Ball { radius, center } => unit_ball_volume(center.dim()) * radius.powi(center.dim() as i32),
    }
}

/// Samples `spec` in `w` with a ChaCha8 stream seeded by `seed`.
pub fn sample(spec: &ProcessSpec, w: &Window, seed: u64) -> Result<Vec<Point>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(spec, w, &mut rng, DEFAULT_CAP)
}

pub fn sample_with<R: Rng + ?Sized>(spec: &ProcessSpec, w: &Window, rng: &mut R, cap: f64) -> Result<Vec<Point>> {
    spec.validate()?;
    w.validate()?;
    let d = w.dim();
    match spec {
        ProcessSpec::Poisson { intensity } => {
            let mean = intensity * window_volume(w);
            if mean > cap {
                return Err(Error::InstanceTooLarge { expected: mean, cap });
            }
            let count = Poisson::new(mean).map_err(|e| Error::InvalidArgument(e.to_string()))?.sample(rng) as usize;
            Ok((0..count).map(|_| Point::new(w.sample_uniform(rng))).collect())
        }
        ProcessSpec::Lattice { spacing, jitter } => {
            let expected = window_volume(w) / spacing.powi(d as i32);
            if expected > cap {
                return Err(Error::InstanceTooLarge { expected, cap });
            }
            let (lo, hi) = w.bounds();
            let counts: Vec<usize> = lo.iter().zip(&hi).map(|(a, b)| ((b - a) / spacing).ceil() as usize).collect();
            let mut out = Vec::new();
            let mut idx = vec![0usize; d];
            'grid: loop {
                let x: Vec<f64> = (0..d).map(|k| lo[k] + idx[k] as f64 * spacing).collect();
                let inside = x.iter().zip(&hi).all(|(a, b)| a < b) && w.contains(&x);
                if inside {
                    let y = x.iter().map(|a| a + jitter * (2.0 * rng.random::<f64>() - 1.0)).collect();
                    out.push(Point::new(y));
                }
                for k in 0..d {
                    idx[k] += 1;
                    if idx[k] < counts[k] {
                        continue 'grid;
                    }
                    idx[k] = 0;
                }
                break;
            }
            Ok(out)
        }
        ProcessSpec::Explicit { points } => {
            for p in points {
                check_dim(d, p.dim())?;
            }
            Ok(points.clone())
        }
    }
}

/// SplitMix64 finalizer used to derive independent per-trial seeds from a
/// base seed and a trial index.
pub fn trial_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One point per line, comma-separated, after a `# d=<d>` header.
pub fn points_to_csv(points: &[Point], d: usize) -> String {
    let mut s = format!("# d={d}\n");
    for p in points {
        let row: Vec<String> = p.iter().map(|x| format!("{x:?}")).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn points_from_csv(text: &str) -> Result<(usize, Vec<Point>)> {
    let mut dim = None;
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("d=") {
                dim = Some(v.trim().parse::<usize>().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?);
            }
            continue;
        }
        let coords = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        let d = *dim.get_or_insert(coords.len());
        if coords.len() != d {
            return Err(Error::Parse(format!("line {}: expected {d} coordinates", lineno + 1)));
        }
        points.push(Point::new(coords));
    }
    let d = dim.ok_or_else(|| Error::Parse("missing `# d=` header".into()))?;
    Ok((d, points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn window_volumes() {
        assert!((window_volume(&Window::ball(Point::origin(2), 1.0)) - PI).abs() < 1e-14);
        assert!((window_volume(&Window::ball(Point::origin(3), 1.0)) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert_eq!(window_volume(&Window::cube(Point::origin(3), 2.0)), 64.0);
    }

    #[test]
    fn lattice_without_jitter() {
        let w = Window::cube(Point::new(vec![1.5, 1.5]), 1.5);
        let pts = sample(&ProcessSpec::Lattice { spacing: 1.0, jitter: 0.0 }, &w, 0).unwrap();
        assert_eq!(pts.len(), 9);
        assert!(pts.contains(&Point::new(vec![2.0, 0.0])));
    }

    #[test]
    fn same_seed_same_points() {
        let w = Window::unit_cube(3);
        let a = sample(&ProcessSpec::poisson(200.0), &w, 5).unwrap();
        let b = sample(&ProcessSpec::poisson(200.0), &w, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| w.contains(p)));
    }

    #[test]
    fn ball_samples_stay_inside() {
        let w = Window::ball(Point::new(vec![1.0, -1.0]), 0.5);
        let pts = sample(&ProcessSpec::poisson(500.0), &w, 1).unwrap();
        assert!(!pts.is_empty());
        assert!(pts.iter().all(|p| w.contains(p)));
    }

    #[test]
    fn cap_and_validation() {
        let w = Window::cube(Point::origin(2), 100.0);
        assert!(matches!(
            sample(&ProcessSpec::poisson(1e4), &w, 0),
            Err(Error::InstanceTooLarge { .. })
        ));
        assert!(sample(&ProcessSpec::poisson(-1.0), &w, 0).is_err());
        assert!(sample(&ProcessSpec::Lattice { spacing: 1.0, jitter: 0.6 }, &w, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let pts = vec![Point::new(vec![0.1, 2.0]), Point::new(vec![-3.5, 1e-17])];
        let text = points_to_csv(&pts, 2);
        assert!(text.starts_with("# d=2\n"));
        let (d, back) = points_from_csv(&text).unwrap();
        assert_eq!(d, 2);
        assert_eq!(back, pts);
    }

    #[test]
    fn trial_seeds_differ() {
        let s: Vec<u64> = (0..100).map(|i| trial_seed(42, i)).collect();
        let mut t = s.clone();
        t.sort_unstable();
        t.dedup();
        assert_eq!(t.len(), 100);
    }
}
