//! Log-log slope fits for error orders and decay exponents.

use crate::error::{Error, Result};
use crate::numeric::least_squares;

/// Fit of `log|y| = a + b log x`, optionally with a `log log` correction.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub residual_rms: f64,
    /// Abscissae used in the fit (before taking logs).
    pub x: Vec<f64>,
    /// Magnitudes used in the fit (before taking logs).
    pub y: Vec<f64>,
    /// Abscissae whose magnitude was numerically indistinguishable from zero.
    pub dropped: Vec<f64>,
    /// Fit of `log|y| - log log k = a + b log x`, when requested.
    pub log_corrected: Option<LogCorrectedFit>,
    /// Reference exponent the slope is compared with, if any.
    pub expected: Option<f64>,
    /// Whether the magnitudes decrease strictly along the abscissae.
    pub monotone: bool,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogCorrectedFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
}

/// Magnitudes below this are treated as rounding noise and dropped.
pub const NOISE_FLOOR: f64 = 1e-13;

/// Fits `log|y|` against `log x`, dropping entries with `|y| < floor`.
pub fn fit_power_law(x: &[f64], y: &[f64], floor: f64) -> Result<FitReport> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut dropped = Vec::new();
    let mut flags = Vec::new();
    for (&a, &b) in x.iter().zip(y) {
        if !(b.abs() >= floor) || !b.is_finite() {
            dropped.push(a);
        } else {
            xs.push(a);
            ys.push(b.abs());
        }
    }
    if !dropped.is_empty() {
        flags.push(format!("{} point(s) below {floor:e} dropped", dropped.len()));
    }
    if xs.len() < 2 {
        return Err(Error::Fit {
            needed: 2,
            got: xs.len(),
        });
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let (beta, resid) = least_squares(&[lx], &ly)?;
    let mean = ly.iter().sum::<f64>() / ly.len() as f64;
    let ss_tot: f64 = ly.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = resid.iter().map(|e| e * e).sum();
    let monotone = ys.windows(2).all(|w| w[1] < w[0]);
    if !monotone {
        flags.push("magnitudes not strictly decreasing".into());
    }
    Ok(FitReport {
        slope: beta[1],
        intercept: beta[0],
        r_squared: if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 },
        residual_rms: (ss_res / resid.len() as f64).sqrt(),
        x: xs,
        y: ys,
        dropped,
        log_corrected: None,
        expected: None,
        monotone,
        flags,
    })
}

impl FitReport {
    /// Adds the fit with `log|y|` replaced by `log|y| - log(log k)`, where
    /// `k_of_x` maps each retained abscissa to its `k`.
    pub fn with_log_correction(mut self, k_of_x: impl Fn(f64) -> f64) -> Result<Self> {
        let lx: Vec<f64> = self.x.iter().map(|v| v.ln()).collect();
        let ly: Vec<f64> = self
            .x
            .iter()
            .zip(&self.y)
            .map(|(&x, &y)| y.ln() - k_of_x(x).ln().ln())
            .collect();
        let (beta, resid) = least_squares(&[lx], &ly)?;
        let ss: f64 = resid.iter().map(|e| e * e).sum();
        self.log_corrected = Some(LogCorrectedFit {
            slope: beta[1],
            intercept: beta[0],
            residual_rms: (ss / resid.len() as f64).sqrt(),
        });
        Ok(self)
    }

    pub fn with_expected(mut self, expected: f64) -> Self {
        self.expected = Some(expected);
        self
    }

    /// `|slope / expected - 1|`, if an expectation is attached.
    pub fn relative_deviation(&self) -> Option<f64> {
        self.expected.map(|e| (self.slope / e - 1.0).abs())
    }
}
