//! Single-level empirical mode decomposition.
//!
//! Only the first intrinsic mode function is extracted. Envelopes are natural
//! cubic splines through the local extrema, with the two extrema nearest each
//! end mirrored about the endpoint to tame end swing. Sifting stops when
//! `SD = sum((h_prev - h)^2) / sum(h_prev^2)` drops below the threshold or the
//! iteration cap is reached.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::NaturalCubicSpline;

/// Shortest signal accepted by [`Signal::new`].
pub const MIN_SIGNAL_LEN: usize = 4;

/// Ordered finite samples; the index is the abscissa.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal(Vec<f64>);

impl Signal {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.len() < MIN_SIGNAL_LEN {
            return Err(Error::InvalidConfig(format!(
                "signal needs at least {MIN_SIGNAL_LEN} samples, got {}",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "signal sample {i} is not finite"
            )));
        }
        Ok(Signal(samples))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Mirror the two extrema nearest each endpoint about that endpoint.
    #[default]
    Mirror,
    /// Fit through interior extrema only and extend the end spline pieces.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiftConfig {
    pub sd_threshold: f64,
    pub max_sift_iterations: usize,
    pub boundary: Boundary,
    /// Minimum count of maxima and of minima for a signal to be sifted.
    pub min_extrema: usize,
}

impl Default for SiftConfig {
    fn default() -> Self {
        Self {
            sd_threshold: 0.3,
            max_sift_iterations: 50,
            boundary: Boundary::Mirror,
            min_extrema: 2,
        }
    }
}

impl SiftConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sd_threshold > 0.0) || !self.sd_threshold.is_finite() {
            return Err(Error::InvalidConfig("sd_threshold must be positive".into()));
        }
        if self.max_sift_iterations == 0 {
            return Err(Error::InvalidConfig(
                "max_sift_iterations must be at least 1".into(),
            ));
        }
        if self.min_extrema == 0 {
            return Err(Error::InvalidConfig(
                "min_extrema must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiftResult {
    pub imf: Vec<f64>,
    pub residue: Vec<f64>,
    pub iterations: usize,
    /// Input had too few extrema; `imf` is the input and `residue` is zero.
    pub degenerate: bool,
    /// The SD criterion was met before the iteration cap.
    pub converged: bool,
}

/// Strict interior local extrema. A plateau of equal values bounded on both
/// sides by lower (or higher) neighbours contributes its midpoint, rounded down.
pub fn find_extrema(signal: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let n = signal.len();
    let (mut maxima, mut minima) = (Vec::new(), Vec::new());
    if n < 3 {
        return (maxima, minima);
    }
    let mut i = 1;
    while i < n - 1 {
        let start = i;
        let mut end = i;
        while end + 1 < n && signal[end + 1] == signal[start] {
            end += 1;
        }
        if end == n - 1 {
            break;
        }
        let (left, v, right) = (signal[start - 1], signal[start], signal[end + 1]);
        if v > left && v > right {
            maxima.push((start + end) / 2);
        } else if v < left && v < right {
            minima.push((start + end) / 2);
        }
        i = end + 1;
    }
    (maxima, minima)
}

fn knots(signal: &[f64], idx: &[usize], boundary: Boundary) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(idx.len() + 4);
    let mut ys = Vec::with_capacity(idx.len() + 4);
    let last = (signal.len() - 1) as f64;
    if boundary == Boundary::Mirror {
        for &i in idx.iter().take(2).rev() {
            xs.push(-(i as f64));
            ys.push(signal[i]);
        }
    }
    for &i in idx {
        xs.push(i as f64);
        ys.push(signal[i]);
    }
    if boundary == Boundary::Mirror {
        for &i in idx.iter().rev().take(2) {
            xs.push(2.0 * last - i as f64);
            ys.push(signal[i]);
        }
    }
    (xs, ys)
}

/// Upper and lower cubic-spline envelopes evaluated at every sample index.
pub fn cubic_envelopes(
    signal: &[f64],
    maxima: &[usize],
    minima: &[usize],
    boundary: Boundary,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (ux, uy) = knots(signal, maxima, boundary);
    let (lx, ly) = knots(signal, minima, boundary);
    let insufficient = || Error::InsufficientExtrema {
        maxima: maxima.len(),
        minima: minima.len(),
    };
    if ux.len() < 2 || lx.len() < 2 {
        return Err(insufficient());
    }
    let upper = NaturalCubicSpline::new(&ux, &uy).ok_or_else(insufficient)?;
    let lower = NaturalCubicSpline::new(&lx, &ly).ok_or_else(insufficient)?;
    let evaluate = |s: &NaturalCubicSpline| (0..signal.len()).map(|i| s.eval(i as f64)).collect();
    Ok((evaluate(&upper), evaluate(&lower)))
}

fn enough_extrema(maxima: &[usize], minima: &[usize], min: usize) -> bool {
    maxima.len() >= min && minima.len() >= min
}

/// Extracts the first intrinsic mode function.
pub fn sift_imf1(signal: &Signal, config: &SiftConfig) -> SiftResult {
    let input = signal.as_slice();
    let (maxima, minima) = find_extrema(input);
    if !enough_extrema(&maxima, &minima, config.min_extrema) {
        return SiftResult {
            imf: input.to_vec(),
            residue: vec![0.0; input.len()],
            iterations: 0,
            degenerate: true,
            converged: false,
        };
    }

    let mut h = input.to_vec();
    let mut extrema = (maxima, minima);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_sift_iterations {
        let Ok((upper, lower)) = cubic_envelopes(&h, &extrema.0, &extrema.1, config.boundary)
        else {
            break;
        };
        let next: Vec<f64> = h
            .iter()
            .zip(upper.iter().zip(&lower))
            .map(|(v, (u, l))| v - 0.5 * (u + l))
            .collect();
        let energy: f64 = h.iter().map(|v| v * v).sum();
        let change: f64 = h.iter().zip(&next).map(|(a, b)| (a - b) * (a - b)).sum();
        let sd = if energy > 0.0 { change / energy } else { 0.0 };
        h = next;
        iterations += 1;
        if sd < config.sd_threshold {
            converged = true;
            break;
        }
        extrema = find_extrema(&h);
        if !enough_extrema(&extrema.0, &extrema.1, config.min_extrema) {
            break;
        }
    }

    let residue = input.iter().zip(&h).map(|(x, m)| x - m).collect();
    SiftResult {
        imf: h,
        residue,
        iterations,
        degenerate: false,
        converged,
    }
}

/// Direction along which a feature matrix is read as signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmdAxis {
    /// Each feature column across all rows is one signal.
    #[default]
    Column,
    /// Each row of ranked features is one signal.
    Row,
}

impl FromStr for EmdAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "column" => Ok(EmdAxis::Column),
            "row" => Ok(EmdAxis::Row),
            other => Err(format!("unknown EMD axis `{other}` (expected column|row)")),
        }
    }
}

impl fmt::Display for EmdAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmdAxis::Column => "column",
            EmdAxis::Row => "row",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTransform {
    /// Same shape as the input; IMF1 values.
    pub values: Vec<Vec<f64>>,
    /// One flag per sifted signal (column or row, depending on the axis).
    pub degenerate: Vec<bool>,
}

/// Replaces every column (or row) of a row-major matrix by its IMF1.
/// Signals too short to sift, or containing non-finite values, pass through flagged degenerate.
pub fn transform_matrix(
    matrix: &[Vec<f64>],
    axis: EmdAxis,
    config: &SiftConfig,
) -> Result<MatrixTransform> {
    config.validate()?;
    let width = matrix.first().map_or(0, Vec::len);
    if let Some(bad) = matrix.iter().find(|r| r.len() != width) {
        return Err(Error::DimensionMismatch {
            expected: width,
            actual: bad.len(),
        });
    }
    let run = |samples: Vec<f64>| match Signal::new(samples.clone()) {
        Ok(signal) => {
            let r = sift_imf1(&signal, config);
            (r.imf, r.degenerate)
        }
        Err(_) => (samples, true),
    };

    match axis {
        EmdAxis::Row => {
            let (values, degenerate) = matrix.par_iter().map(|r| run(r.clone())).unzip();
            Ok(MatrixTransform { values, degenerate })
        }
        EmdAxis::Column => {
            let columns: Vec<(Vec<f64>, bool)> = (0..width)
                .into_par_iter()
                .map(|j| run(matrix.iter().map(|r| r[j]).collect()))
                .collect();
            let values = (0..matrix.len())
                .map(|i| columns.iter().map(|(c, _)| c[i]).collect())
                .collect();
            let degenerate = columns.iter().map(|(_, d)| *d).collect();
            Ok(MatrixTransform { values, degenerate })
        }
    }
}
