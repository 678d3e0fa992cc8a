//! Projection moments of random p-planes and the distortion constant
//! `D(p, d) = binom(d/2, p/2)`.
//!
//! The j-th projection moment is the mean j-th power of the p-volume of the
//! projection of a unit p-cube onto a uniformly random p-plane. Closed forms
//! exist for j = 0, 1, 2; any order can be estimated by sampling uniform
//! frames.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{frame_projection_volume, Frame};
use crate::linalg;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentQuery {
    pub p: usize,
    pub d: usize,
    pub j: u32,
}

impl MomentQuery {
    pub fn new(p: usize, d: usize, j: u32) -> Result<Self> {
        if p > d {
            return Err(Error::InvalidArgument(format!("p = {p} exceeds d = {d}")));
        }
        Ok(MomentQuery { p, d, j })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

impl MomentEstimate {
    /// Inverse-variance weighted combination of independent estimates.
    /// Estimates with zero standard error are exact and dominate.
    pub fn merge(estimates: &[MomentEstimate]) -> Option<MomentEstimate> {
        let first = estimates.first()?;
        let samples = estimates.iter().map(|e| e.samples).sum();
        if let Some(exact) = estimates.iter().find(|e| e.stderr == 0.0) {
            return Some(MomentEstimate { mean: exact.mean, stderr: 0.0, samples, seed: first.seed });
        }
        let (mut wsum, mut acc) = (0.0, 0.0);
        for e in estimates {
            let w = 1.0 / (e.stderr * e.stderr);
            wsum += w;
            acc += w * e.mean;
        }
        Some(MomentEstimate { mean: acc / wsum, stderr: wsum.recip().sqrt(), samples, seed: first.seed })
    }
}

pub(crate) fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Binomial coefficient for real arguments through log-Gamma.
pub fn binomial(n: f64, k: f64) -> f64 {
    (ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)).exp()
}

/// Closed-form projection moments for j in {0, 1, 2}.
pub fn moment_closed_form(q: MomentQuery) -> Result<f64> {
    if q.p > q.d {
        return Err(Error::InvalidArgument(format!("p = {} exceeds d = {}", q.p, q.d)));
    }
    let (p, d) = (q.p as f64, q.d as f64);
    match q.j {
        0 => Ok(1.0),
        1 => Ok((ln_gamma((p + 1.0) / 2.0) + ln_gamma((d - p + 1.0) / 2.0)
            - ln_gamma(0.5)
            - ln_gamma((d + 1.0) / 2.0))
        .exp()),
        2 => Ok(1.0 / binomial(d, p)),
        j => Err(Error::NoClosedForm(j)),
    }
}

/// `D(p, d) = Gamma(d/2 + 1) / (Gamma(p/2 + 1) Gamma((d - p)/2 + 1))`.
///
/// # Panics
/// If `p > d`.
pub fn distortion_constant(p: usize, d: usize) -> f64 {
    assert!(p <= d, "distortion_constant: p = {p} exceeds d = {d}");
    binomial(d as f64 / 2.0, p as f64 / 2.0)
}

fn double_factorial_f64(n: usize) -> f64 {
    (1..=n).rev().step_by(2).map(|i| i as f64).product()
}

/// The double-factorial form of `D(p, d)`, evaluated in floating point.
pub fn distortion_double_factorial(p: usize, d: usize) -> f64 {
    assert!(p <= d);
    let base = double_factorial_f64(d) / (double_factorial_f64(p) * double_factorial_f64(d - p));
    if d % 2 == 0 && p % 2 == 1 {
        base * 2.0 / std::f64::consts::PI
    } else {
        base
    }
}

/// `D(p, d)` as an exact rational, possibly divided by pi.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactConstant {
    pub numerator: BigUint,
    pub denominator: BigUint,
    pub over_pi: bool,
}

impl ExactConstant {
    pub fn to_f64(&self) -> f64 {
        // ratio of huge integers: scale through logs when they overflow f64
        let num = self.numerator.to_f64().unwrap_or(f64::INFINITY);
        let den = self.denominator.to_f64().unwrap_or(f64::INFINITY);
        let v = if num.is_finite() && den.is_finite() {
            num / den
        } else {
            let bits = self.numerator.bits().max(self.denominator.bits()).saturating_sub(1000);
            let n = (&self.numerator >> bits).to_f64().unwrap_or(0.0);
            let d = (&self.denominator >> bits).to_f64().unwrap_or(1.0);
            n / d
        };
        if self.over_pi {
            v / std::f64::consts::PI
        } else {
            v
        }
    }
}

impl fmt::Display for ExactConstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one = BigUint::one();
        match (self.denominator == one, self.over_pi) {
            (true, false) => write!(f, "{}", self.numerator),
            (true, true) => write!(f, "{}/pi", self.numerator),
            (false, false) => write!(f, "{}/{}", self.numerator, self.denominator),
            (false, true) => write!(f, "{}/({}pi)", self.numerator, self.denominator),
        }
    }
}

fn double_factorial_big(n: usize) -> BigUint {
    let mut acc = BigUint::one();
    let mut i = n;
    while i > 1 {
        acc *= i;
        i -= 2;
    }
    acc
}

/// `d!! / (p!! (d-p)!!)`, times `2/pi` when d is even and p odd, reduced.
pub fn exact_distortion(p: usize, d: usize) -> ExactConstant {
    assert!(p <= d);
    let mut num = double_factorial_big(d);
    let mut den = double_factorial_big(p) * double_factorial_big(d - p);
    let over_pi = d % 2 == 0 && p % 2 == 1;
    if over_pi {
        num *= 2u32;
    }
    let g = num.gcd(&den);
    num /= &g;
    den /= &g;
    ExactConstant { numerator: num, denominator: den, over_pi }
}

/// `D(p, d)` for `1 <= p <= d <= d_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistortionTable {
    d_max: usize,
    values: Vec<f64>,
}

impl DistortionTable {
    pub fn d_max(&self) -> usize {
        self.d_max
    }

    pub fn get(&self, p: usize, d: usize) -> Option<f64> {
        if p == 0 || p > d || d > self.d_max {
            return None;
        }
        Some(self.values[(p - 1) * self.d_max + (d - 1)])
    }

    /// Entries in row-major order (p outer, d inner).
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (1..=self.d_max).flat_map(move |p| (p..=self.d_max).map(move |d| (p, d, self.get(p, d).unwrap())))
    }
}

pub fn distortion_table(d_max: usize) -> DistortionTable {
    let mut values = vec![f64::NAN; d_max * d_max];
    for p in 1..=d_max {
        for d in p..=d_max {
            values[(p - 1) * d_max + (d - 1)] = distortion_constant(p, d);
        }
    }
    DistortionTable { d_max, values }
}

/// Uniformly distributed orthonormal p-frame in R^d, by orthonormalizing a
/// matrix of independent standard Gaussians.
pub fn sample_stiefel<R: Rng + ?Sized>(p: usize, d: usize, rng: &mut R) -> Frame {
    assert!(p <= d, "sample_stiefel: p = {p} exceeds d = {d}");
    if p == 0 {
        return Frame::empty(d);
    }
    loop {
        let rows: Vec<Vec<f64>> = (0..p).map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect()).collect();
        if let Some(basis) = linalg::gram_schmidt(&rows, 1e-8) {
            return Frame::new_unchecked(basis, d);
        }
    }
}

/// Monte Carlo estimate of the j-th projection moment against the first
/// p coordinate axes. Deterministic per seed.
pub fn moment_monte_carlo(q: MomentQuery, samples: u64, seed: u64) -> Result<MomentEstimate> {
    if q.p > q.d {
        return Err(Error::InvalidArgument(format!("p = {} exceeds d = {}", q.p, q.d)));
    }
    if samples < 100 {
        return Err(Error::InvalidArgument("need at least 100 samples".into()));
    }
    if q.p == 0 || q.p == q.d || q.j == 0 {
        return Ok(MomentEstimate { mean: 1.0, stderr: 0.0, samples, seed });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = Frame::coordinate(q.p, q.d);
    // Welford
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for i in 0..samples {
        let f = sample_stiefel(q.p, q.d, &mut rng);
        let v = frame_projection_volume(&f, &target)?.powi(q.j as i32);
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = m2 / (samples - 1) as f64;
    Ok(MomentEstimate { mean, stderr: (var / samples as f64).sqrt(), samples, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn closed_form_examples() {
        let m = |p, d, j| moment_closed_form(MomentQuery::new(p, d, j).unwrap()).unwrap();
        assert!(rel(m(1, 2, 2), 0.5) < 1e-14);
        assert!(rel(m(1, 2, 1), 2.0 / PI) < 1e-14);
        assert!(rel(m(0, 5, 1), 1.0) < 1e-14);
        assert!(rel(m(3, 3, 2), 1.0) < 1e-14);
        assert_eq!(moment_closed_form(MomentQuery { p: 1, d: 2, j: 3 }), Err(Error::NoClosedForm(3)));
    }

    #[test]
    fn distortion_examples() {
        assert!(rel(distortion_constant(1, 2), 4.0 / PI) < 1e-14);
        assert!(rel(distortion_constant(2, 3), 1.5) < 1e-14);
        assert!(rel(distortion_constant(3, 10), 512.0 / (21.0 * PI)) < 1e-13);
        for d in 0..20 {
            assert!(rel(distortion_constant(0, d), 1.0) < 1e-14);
            assert!(rel(distortion_constant(d, d), 1.0) < 1e-14);
        }
    }

    #[test]
    fn table_examples() {
        let t = distortion_table(2);
        assert!(rel(t.get(1, 1).unwrap(), 1.0) < 1e-14);
        assert!(rel(t.get(1, 2).unwrap(), 4.0 / PI) < 1e-14);
        assert!(rel(t.get(2, 2).unwrap(), 1.0) < 1e-14);
        assert_eq!(t.get(2, 1), None);
        let t = distortion_table(10);
        assert!(rel(t.get(2, 10).unwrap(), 5.0) < 1e-12);
        assert!(rel(t.get(4, 8).unwrap(), 6.0) < 1e-12);
        assert_eq!(t.entries().count(), 55);
    }

    #[test]
    fn exact_forms_render_like_the_table() {
        assert_eq!(exact_distortion(1, 2).to_string(), "4/pi");
        assert_eq!(exact_distortion(3, 10).to_string(), "512/(21pi)");
        assert_eq!(exact_distortion(1, 5).to_string(), "15/8");
        assert_eq!(exact_distortion(4, 10).to_string(), "10");
        assert!(rel(exact_distortion(7, 200).to_f64(), distortion_constant(7, 200)) < 1e-12);
    }

    #[test]
    fn stiefel_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(sample_stiefel(0, 4, &mut rng).p(), 0);
        let f = sample_stiefel(4, 4, &mut rng);
        assert!(f.orthonormality_error() < 1e-12);
        let v = frame_projection_volume(&f, &Frame::coordinate(4, 4)).unwrap();
        assert!(v <= 1.0);
    }

    #[test]
    fn uniform_direction_on_circle() {
        // E[cos^2] of a uniform angle is 1/2
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let vals: Vec<f64> = (0..n)
            .map(|_| {
                let f = sample_stiefel(1, 2, &mut rng);
                f.rows()[0][0].powi(2)
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - 0.5).abs() <= 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn monte_carlo_examples() {
        let e = moment_monte_carlo(MomentQuery::new(1, 3, 2).unwrap(), 100_000, 1).unwrap();
        assert!((e.mean - 1.0 / 3.0).abs() <= 3.0 * e.stderr, "{e:?}");
        let q = MomentQuery::new(2, 4, 1).unwrap();
        let e = moment_monte_carlo(q, 100_000, 2).unwrap();
        assert!((e.mean - moment_closed_form(q).unwrap()).abs() <= 3.0 * e.stderr, "{e:?}");
        let e = moment_monte_carlo(MomentQuery::new(3, 3, 2).unwrap(), 1000, 3).unwrap();
        assert_eq!((e.mean, e.stderr), (1.0, 0.0));
    }

    #[test]
    fn monte_carlo_is_deterministic_per_seed() {
        let q = MomentQuery::new(2, 5, 1).unwrap();
        assert_eq!(moment_monte_carlo(q, 500, 9).unwrap(), moment_monte_carlo(q, 500, 9).unwrap());
        assert_ne!(moment_monte_carlo(q, 500, 9).unwrap(), moment_monte_carlo(q, 500, 10).unwrap());
    }

    #[test]
    fn merge_weights_by_inverse_variance() {
        let a = MomentEstimate { mean: 1.0, stderr: 1.0, samples: 100, seed: 0 };
        let b = MomentEstimate { mean: 2.0, stderr: 1.0, samples: 100, seed: 1 };
        let m = MomentEstimate::merge(&[a, b]).unwrap();
        assert!((m.mean - 1.5).abs() < 1e-15);
        assert!((m.stderr - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.samples, 200);
    }
}
