//! Post-processing of trajectories: exponential tail fits, extrapolation of
//! the decay rate to infinite memory, and location of the point where the
//! extrapolated rate vanishes.

use ndarray::{Array1, Array2};
use ndarray_linalg::LeastSquaresSvd;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TempoError};

/// Minimum number of samples an exponential fit accepts.
pub const MIN_FIT_POINTS: usize = 8;

/// Minimum number of distinct memory lengths for the cubic extrapolation.
pub const MIN_EXTRAPOLATION_POINTS: usize = 5;

/// Floor on the threshold below which an extrapolated rate counts as zero.
pub const GAMMA_ZERO_FLOOR: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `y ≈ amplitude · exp(−gamma · t)`.
    pub gamma: f64,
    pub amplitude: f64,
    pub window: (f64, f64),
    /// RMS residual of `ln|y|` about the fitted line.
    pub residual_rms: f64,
    pub points: usize,
}

/// Picks the default fit window: the last third of the series, moved later if
/// needed so that `|y|` is non-increasing throughout.
pub fn default_window(times: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    let n = times.len().min(values.len());
    if n < MIN_FIT_POINTS {
        return Err(TempoError::FitWindow(format!("{n} samples, need at least {MIN_FIT_POINTS}")));
    }
    let mut start = n - n / 3;
    let mut i = n - 1;
    while i > 0 && values[i - 1].abs() >= values[i].abs() && values[i - 1].signum() == values[i].signum() {
        i -= 1;
    }
    start = start.max(i);
    if n - start < MIN_FIT_POINTS {
        start = n.saturating_sub(MIN_FIT_POINTS);
    }
    Ok((times[start], times[n - 1]))
}

/// Fits `ln|y| = ln A − γ t` by least squares over `window` (inclusive), or
/// over [`default_window`] when `None`.
pub fn fit_exponential(times: &[f64], values: &[f64], window: Option<(f64, f64)>) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(TempoError::FitWindow(format!("{} times but {} values", times.len(), values.len())));
    }
    let (lo, hi) = match window {
        Some(w) => w,
        None => default_window(times, values)?,
    };
    if !(lo <= hi) {
        return Err(TempoError::FitWindow(format!("empty window [{lo}, {hi}]")));
    }
    let picked: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .map(|(&t, &y)| (t, y))
        .collect();
    if picked.len() < MIN_FIT_POINTS {
        return Err(TempoError::FitWindow(format!(
            "{} samples in [{lo}, {hi}], need at least {MIN_FIT_POINTS}",
            picked.len()
        )));
    }
    let sign = picked[0].1.signum();
    if let Some(&(t, _)) = picked.iter().find(|(_, y)| *y == 0.0 || y.signum() != sign) {
        return Err(TempoError::FitWindow(format!(
            "series changes sign or vanishes at t = {t}; start the window later"
        )));
    }

    // Centred closed-form line fit; with centring the slope is exact for
    // exact exponentials up to rounding.
    let n = picked.len() as f64;
    let t_mean = picked.iter().map(|p| p.0).sum::<f64>() / n;
    let l_mean = picked.iter().map(|p| p.1.abs().ln()).sum::<f64>() / n;
    let (mut stt, mut stl) = (0.0, 0.0);
    for &(t, y) in &picked {
        let dt = t - t_mean;
        stt += dt * dt;
        stl += dt * (y.abs().ln() - l_mean);
    }
    if stt == 0.0 {
        return Err(TempoError::FitWindow("all samples share one time".into()));
    }
    let slope = stl / stt;
    let intercept = l_mean - slope * t_mean;
    let residual_rms = (picked
        .iter()
        .map(|&(t, y)| (y.abs().ln() - intercept - slope * t).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();

    let mut gamma = -slope;
    // A constant series gives ±0 up to rounding; anything clearly growing is
    // not a decay.
    if gamma < 0.0 {
        let scale = (picked.last().unwrap().0 - picked[0].0).max(1.0);
        if gamma < -1e-10 / scale {
            return Err(TempoError::FitWindow(format!("series grows in the window (rate {:.3e})", -gamma)));
        }
        gamma = 0.0;
    }
    Ok(DecayFit {
        gamma,
        amplitude: sign * intercept.exp(),
        window: (picked[0].0, picked.last().unwrap().0),
        residual_rms,
        points: picked.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationResult {
    /// Constant term of the cubic, clamped at zero.
    pub gamma_inf: f64,
    /// `c₀..c₃` of `γ(K) = Σ c_i K^{−i}`; `c₀` is unclamped.
    pub coefficients: [f64; 4],
    /// Inputs sorted by memory length.
    pub points: Vec<(usize, f64)>,
    /// `|Δγ_inf|` between two truncation precisions, when supplied.
    pub sensitivity: Option<f64>,
}

/// Least-squares cubic in `1/K` through `(K, γ_K)` points.
pub fn extrapolate_gamma(points: &[(usize, f64)]) -> Result<ExtrapolationResult> {
    let mut sorted = points.to_vec();
    // Fixed order makes the result independent of how the caller listed them.
    sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    if let Some(&(k, g)) = sorted.iter().find(|(k, g)| *k == 0 || !g.is_finite()) {
        return Err(TempoError::InvalidParameter { name: "points", reason: format!("bad point (K={k}, γ={g})") });
    }
    let mut distinct = sorted.iter().map(|p| p.0).collect::<Vec<_>>();
    distinct.dedup();
    if distinct.len() < MIN_EXTRAPOLATION_POINTS {
        return Err(TempoError::RankDeficient(format!(
            "{} distinct memory lengths, need at least {MIN_EXTRAPOLATION_POINTS}",
            distinct.len()
        )));
    }

    // Scale x = 1/K into [0, 1] for conditioning, then undo it.
    let x_max = 1.0 / distinct[0] as f64;
    let design = Array2::from_shape_fn((sorted.len(), 4), |(r, c)| (1.0 / sorted[r].0 as f64 / x_max).powi(c as i32));
    let rhs = Array1::from_iter(sorted.iter().map(|p| p.1));
    let sol = design
        .least_squares(&rhs)
        .map_err(|e| TempoError::RankDeficient(e.to_string()))?;
    if sol.rank < 4 {
        return Err(TempoError::RankDeficient(format!("design rank {}", sol.rank)));
    }
    let mut coefficients = [0.0; 4];
    for (i, c) in coefficients.iter_mut().enumerate() {
        *c = sol.solution[i] / x_max.powi(i as i32);
    }
    Ok(ExtrapolationResult { gamma_inf: coefficients[0].max(0.0), coefficients, points: sorted, sensitivity: None })
}

/// Extrapolates two point sets taken at different truncation precisions and
/// returns the first result with `sensitivity = |γ_inf(a) − γ_inf(b)|`.
pub fn extrapolate_with_sensitivity(
    points: &[(usize, f64)],
    refined: &[(usize, f64)],
) -> Result<ExtrapolationResult> {
    let mut a = extrapolate_gamma(points)?;
    let b = extrapolate_gamma(refined)?;
    a.sensitivity = Some((a.gamma_inf - b.gamma_inf).abs());
    Ok(a)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalEstimate {
    /// Largest grid coupling with a clearly non-zero rate.
    pub lower: f64,
    /// Smallest grid coupling whose rate is consistent with zero.
    pub upper: f64,
    pub threshold: f64,
}

impl CriticalEstimate {
    pub fn contains(&self, alpha: f64) -> bool {
        self.lower <= alpha && alpha <= self.upper
    }
}

/// Brackets the coupling at which the extrapolated rate first becomes
/// consistent with zero, i.e. drops to `max(sensitivity, 1e-4)` or below.
pub fn estimate_alpha_c(curve: &[(f64, f64)], sensitivity: f64) -> Result<CriticalEstimate> {
    if curve.len() < 4 {
        return Err(TempoError::FitWindow(format!("{} curve points, need at least 4", curve.len())));
    }
    let mut sorted = curve.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let threshold = sensitivity.max(GAMMA_ZERO_FLOOR);
    match sorted.iter().position(|p| p.1 <= threshold) {
        Some(i) if i > 0 => Ok(CriticalEstimate { lower: sorted[i - 1].0, upper: sorted[i].0, threshold }),
        _ => Err(TempoError::NoZeroCrossing),
    }
}
