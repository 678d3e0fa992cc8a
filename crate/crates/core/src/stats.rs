//! Sample statistics for Monte Carlo experiments.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation, `None` for fewer than two values.
    pub std_dev: Option<f64>,
    pub stderr: Option<f64>,
}

/// Two-pass mean and sample variance, summed in slice order.
pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    let mean = if n == 0 { f64::NAN } else { values.iter().sum::<f64>() / n as f64 };
    let std_dev = (n >= 2).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    Summary { n, mean, std_dev, stderr: std_dev.map(|s| s / (n as f64).sqrt()) }
}

/// `(mean - predicted) / stderr`; `None` without a positive finite stderr.
pub fn z_score(mean: f64, predicted: f64, stderr: Option<f64>) -> Option<f64> {
    stderr.filter(|s| *s > 0.0 && s.is_finite()).map(|s| (mean - predicted) / s)
}
