//! Harmonic bath: spectral densities, the autocorrelation function `C(t)` and
//! the memory-kernel coefficients `η_k`.
//!
//! Both time integrals in `η_k` act only on `cos ω(t'-t'')` and
//! `sin ω(t'-t'')`, so they are carried out in closed form inside the frequency
//! integrand. Every coefficient is then a single adaptive quadrature over
//! `[0, ω_max]`.

pub mod quadrature;
mod spectral;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TempoError};
use quadrature::{integrate, QuadOptions};
pub use spectral::{
    angular_average, bessel_j0, effective_spectral_density, power_exp_density, sinc, PowerExp,
    SpectralDensity,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathConfig {
    /// In frequency units; zero is the exact ground-state bath.
    pub temperature: f64,
    /// Upper limit of frequency integrals; `None` uses the spectral density's
    /// default (`50 ω_c` for exponential cutoffs).
    pub omega_max: Option<f64>,
    pub quad_tol: f64,
}

impl Default for BathConfig {
    fn default() -> Self {
        Self { temperature: 0.0, omega_max: None, quad_tol: 1e-11 }
    }
}

impl BathConfig {
    pub fn at_temperature(temperature: f64) -> Self {
        Self { temperature, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature >= 0.0) || !self.temperature.is_finite() {
            return Err(TempoError::InvalidParameter {
                name: "temperature",
                reason: format!("must be finite and ≥ 0, got {}", self.temperature),
            });
        }
        if let Some(w) = self.omega_max {
            if !(w > 0.0) {
                return Err(TempoError::InvalidParameter { name: "omega_max", reason: format!("must be > 0, got {w}") });
            }
        }
        if !(self.quad_tol > 0.0) {
            return Err(TempoError::InvalidParameter { name: "quad_tol", reason: format!("must be > 0, got {}", self.quad_tol) });
        }
        Ok(())
    }

    fn upper_limit(&self, j: &SpectralDensity) -> f64 {
        self.omega_max.unwrap_or_else(|| j.default_upper_limit())
    }

    fn quad_options(&self) -> QuadOptions {
        QuadOptions { rel_tol: self.quad_tol, abs_tol: 1e-16, max_intervals: 200_000 }
    }

    /// `coth(ω / 2T)`, exactly one at `T = 0`.
    fn thermal_factor(&self, omega: f64) -> f64 {
        if self.temperature == 0.0 {
            1.0
        } else {
            1.0 / (omega / (2.0 * self.temperature)).tanh()
        }
    }
}

/// Integrates `J(ω)·[coth(ω/2T)·re_kernel(ω) − i·im_kernel(ω)]` over
/// `[0, ω_max]`, with initial panels resolving oscillations up to time `span`.
fn spectral_integral<R, I>(j: &SpectralDensity, cfg: &BathConfig, span: f64, re_kernel: R, im_kernel: I) -> Result<Complex64>
where
    R: Fn(f64) -> f64,
    I: Fn(f64) -> f64,
{
    cfg.validate()?;
    if j.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let upper = cfg.upper_limit(j);
    let time = span.abs() + j.oscillation_time();
    let panels = ((upper * time / (2.0 * PI)).ceil() as usize).clamp(1, 20_000);
    let integrand = |w: f64| {
        let jw = j.eval(w);
        if jw == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(jw * cfg.thermal_factor(w) * re_kernel(w), -jw * im_kernel(w))
    };
    integrate(integrand, 0.0, upper, panels, &cfg.quad_options()).map(|r| r.value)
}

/// Bath autocorrelation `C(t) = ∫ J(ω)[coth(ω/2T) cos ωt − i sin ωt] dω`.
pub fn correlation(j: &SpectralDensity, cfg: &BathConfig, t: f64) -> Result<Complex64> {
    spectral_integral(j, cfg, t, |w| (w * t).cos(), |w| (w * t).sin())
}

/// `2 sin²(x/2) / ω²` with `x = ωΔ`, i.e. `(1 − cos ωΔ)/ω²`.
fn one_minus_cos_over_w2(w: f64, delta: f64) -> f64 {
    let s = (0.5 * w * delta).sin() / w;
    2.0 * s * s
}

/// `(ωΔ − sin ωΔ)/ω²`, with a series for small `ωΔ`.
fn x_minus_sin_over_w2(w: f64, delta: f64) -> f64 {
    let x = w * delta;
    if x < 1e-2 {
        let x2 = x * x;
        delta * delta * delta * w * (1.0 / 6.0 - x2 / 120.0 + x2 * x2 / 5040.0)
    } else {
        (x - x.sin()) / (w * w)
    }
}

/// Memory-kernel coefficient for lag `k` at timestep `Δ`.
///
/// `k = 0` integrates `C(t'−t'')` over the triangle `t_{n-1} ≤ t'' ≤ t' ≤ t_n`;
/// `k ≥ 1` over the square of two steps `k` apart.
pub fn eta(j: &SpectralDensity, cfg: &BathConfig, delta: f64, k: usize) -> Result<Complex64> {
    check_delta(delta)?;
    if k == 0 {
        return spectral_integral(
            j,
            cfg,
            delta,
            |w| one_minus_cos_over_w2(w, delta),
            |w| x_minus_sin_over_w2(w, delta),
        );
    }
    let lag = k as f64 * delta;
    spectral_integral(
        j,
        cfg,
        lag + delta,
        |w| 2.0 * one_minus_cos_over_w2(w, delta) * (w * lag).cos(),
        |w| 2.0 * one_minus_cos_over_w2(w, delta) * (w * lag).sin(),
    )
}

/// The same double integral written in absolute window positions: `t'` in
/// step `n`, `t''` in step `m`, with `m ≤ n`. Only used to check that the
/// coefficients depend on `n − m` alone.
pub fn eta_window(j: &SpectralDensity, cfg: &BathConfig, delta: f64, n: usize, m: usize) -> Result<Complex64> {
    check_delta(delta)?;
    if m > n || m == 0 {
        return Err(TempoError::InvalidParameter { name: "window", reason: format!("need 1 ≤ m ≤ n, got n={n}, m={m}") });
    }
    let (tn, tn1) = (n as f64 * delta, (n - 1) as f64 * delta);
    let (tm, tm1) = (m as f64 * delta, (m - 1) as f64 * delta);
    if n == m {
        // ∫_{tn1}^{tn} dt' ∫_{tn1}^{t'} dt'' e^{iω(t'−t'')}
        let kernel = move |w: f64| -> Complex64 {
            let i = Complex64::new(0.0, 1.0);
            let outer = ((i * w * tn).exp() * (-i * w * tn1).exp() - 1.0) / (i * w);
            (outer - (tn - tn1)) / (i * w)
        };
        return spectral_integral(j, cfg, tn - tn1, move |w| kernel(w).re, move |w| kernel(w).im);
    }
    let kernel = move |w: f64| -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        let f = ((i * w * tn).exp() - (i * w * tn1).exp()) / (i * w);
        let g = ((i * w * tm).exp() - (i * w * tm1).exp()) / (i * w);
        f * g.conj()
    };
    spectral_integral(j, cfg, tn, move |w| kernel(w).re, move |w| kernel(w).im)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(TempoError::InvalidParameter { name: "delta", reason: format!("timestep must be > 0, got {delta}") });
    }
    Ok(())
}

/// `η_0 … η_K` for one timestep, computed once per run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaTable {
    delta: f64,
    values: Vec<Complex64>,
}

impl EtaTable {
    pub fn from_values(delta: f64, values: Vec<Complex64>) -> Result<Self> {
        check_delta(delta)?;
        if values.is_empty() {
            return Err(TempoError::InvalidParameter { name: "eta", reason: "table needs η_0".into() });
        }
        Ok(Self { delta, values })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Largest lag `K` covered.
    pub fn memory_len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, k: usize) -> Option<Complex64> {
        self.values.get(k).copied()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

pub fn eta_table(j: &SpectralDensity, cfg: &BathConfig, delta: f64, memory_len: usize) -> Result<EtaTable> {
    let values = (0..=memory_len)
        .into_par_iter()
        .map(|k| eta(j, cfg, delta, k))
        .collect::<Result<Vec<_>>>()?;
    EtaTable::from_values(delta, values)
}
