use std::f64::consts::{FRAC_PI_4, PI};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TempoError};

/// Power law with exponential cutoff:
/// `J(ω) = prefactor · ω^exponent / ω_c^(exponent-1) · exp(-ω/ω_c)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerExp {
    pub prefactor: f64,
    pub exponent: f64,
    pub omega_c: f64,
}

impl PowerExp {
    pub fn eval(&self, omega: f64) -> f64 {
        if omega <= 0.0 || self.prefactor == 0.0 {
            return 0.0;
        }
        self.prefactor
            * omega.powf(self.exponent)
            * self.omega_c.powf(1.0 - self.exponent)
            * (-omega / self.omega_c).exp()
    }
}

/// Bath spectral density `J(ω)`, defined for `ω ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SpectralDensity {
    PowerExp(PowerExp),
    /// `2·J_p(ω)·(1 - F_D(ωR))` seen by the relative coordinate of two spins
    /// a distance `R` apart in a shared `D`-dimensional environment.
    TwoSpinEffective { base: PowerExp, separation: f64, dimension: u32 },
    /// Piecewise-linear interpolation of sampled values; zero beyond the last
    /// grid point and linear from `(0, 0)` up to the first.
    Tabulated { omega: Vec<f64>, values: Vec<f64> },
}

impl SpectralDensity {
    /// `2α ω^s / ω_c^(s-1) · e^{-ω/ω_c}`; `s = 1` is the Ohmic form.
    pub fn power_exp(alpha: f64, omega_c: f64, s: f64) -> Self {
        Self::PowerExp(PowerExp { prefactor: 2.0 * alpha, exponent: s, omega_c })
    }

    pub fn ohmic(alpha: f64, omega_c: f64) -> Self {
        Self::power_exp(alpha, omega_c, 1.0)
    }

    pub fn zero() -> Self {
        Self::ohmic(0.0, 1.0)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::PowerExp(p) => p.prefactor == 0.0,
            Self::TwoSpinEffective { base, separation, .. } => base.prefactor == 0.0 || *separation == 0.0,
            Self::Tabulated { values, .. } => values.iter().all(|&v| v == 0.0),
        }
    }

    pub fn eval(&self, omega: f64) -> f64 {
        if omega < 0.0 {
            return 0.0;
        }
        match self {
            Self::PowerExp(p) => p.eval(omega),
            Self::TwoSpinEffective { base, separation, dimension } => {
                // F_D(ωR) → 0 as R → ∞ for D > 1; D = 1 is rejected at construction.
                let f = if separation.is_infinite() {
                    0.0
                } else {
                    angular_average(*dimension, omega * separation).unwrap_or(1.0)
                };
                2.0 * base.eval(omega) * (1.0 - f)
            }
            Self::Tabulated { omega: grid, values } => interpolate(grid, values, omega),
        }
    }

    /// Default upper limit of frequency integrals.
    pub fn default_upper_limit(&self) -> f64 {
        match self {
            Self::PowerExp(p) | Self::TwoSpinEffective { base: p, .. } => 50.0 * p.omega_c,
            Self::Tabulated { omega, .. } => *omega.last().expect("validated non-empty grid"),
        }
    }

    /// Largest time scale over which `J` itself oscillates in `ω`.
    pub fn oscillation_time(&self) -> f64 {
        match self {
            Self::TwoSpinEffective { separation, .. } if separation.is_finite() => *separation,
            _ => 0.0,
        }
    }

    /// Reads a two-column `ω J(ω)` table.
    ///
    /// Blank lines and lines starting with `#` are skipped; columns may be
    /// separated by whitespace or a comma. The grid must be strictly
    /// increasing, start at `ω ≥ 0` and carry non-negative values.
    pub fn from_table_str(text: &str) -> Result<Self> {
        let mut omega = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 2 {
                return Err(TempoError::SpectralTable(format!(
                    "line {}: expected 2 columns, found {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| TempoError::SpectralTable(format!("line {}: {e}", lineno + 1)))
            };
            omega.push(parse(cols[0])?);
            values.push(parse(cols[1])?);
        }
        Self::tabulated(omega, values)
    }

    pub fn from_table_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TempoError::SpectralTable(format!("{}: {e}", path.display())))?;
        Self::from_table_str(&text)
    }

    pub fn tabulated(omega: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if omega.len() < 2 || omega.len() != values.len() {
            return Err(TempoError::SpectralTable("need at least two (ω, J) rows".into()));
        }
        if omega[0] < 0.0 || omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(TempoError::SpectralTable("ω grid must be non-negative and strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(TempoError::SpectralTable("J(ω) must be finite and non-negative".into()));
        }
        Ok(Self::Tabulated { omega, values })
    }
}

fn interpolate(grid: &[f64], values: &[f64], omega: f64) -> f64 {
    let last = grid.len() - 1;
    if omega > grid[last] {
        return 0.0;
    }
    if omega <= grid[0] {
        return if grid[0] == 0.0 { values[0] } else { values[0] * omega / grid[0] };
    }
    let hi = grid.partition_point(|&w| w < omega).min(last);
    let lo = hi - 1;
    let t = (omega - grid[lo]) / (grid[hi] - grid[lo]);
    values[lo] + t * (values[hi] - values[lo])
}

/// `J_p(ω) = (α/2) ω^D / ω_c^(D-1) · e^{-ω/ω_c}` for a `D`-dimensional
/// phonon-like environment.
pub fn power_exp_density(alpha: f64, omega_c: f64, dimension: u32) -> PowerExp {
    PowerExp { prefactor: 0.5 * alpha, exponent: dimension as f64, omega_c }
}

pub fn effective_spectral_density(base: PowerExp, separation: f64, dimension: u32) -> Result<SpectralDensity> {
    if !(1..=3).contains(&dimension) {
        return Err(TempoError::UnsupportedDimension(dimension));
    }
    if !(separation >= 0.0) {
        return Err(TempoError::InvalidParameter { name: "R", reason: format!("must be ≥ 0, got {separation}") });
    }
    if separation.is_infinite() && dimension == 1 {
        return Err(TempoError::InvalidParameter { name: "R", reason: "cos(ωR) has no limit as R → ∞ in one dimension".into() });
    }
    Ok(SpectralDensity::TwoSpinEffective { base, separation, dimension })
}

/// Angular average `F_D(x)` of a plane-wave phase in `D` dimensions.
pub fn angular_average(dimension: u32, x: f64) -> Result<f64> {
    match dimension {
        1 => Ok(x.cos()),
        2 => Ok(bessel_j0(x)),
        3 => Ok(sinc(x)),
        d => Err(TempoError::UnsupportedDimension(d)),
    }
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Bessel function of the first kind, order zero.
///
/// Miller's backward recurrence for `|x| ≤ 25`, Hankel's asymptotic
/// expansion beyond.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x == 0.0 {
        return 1.0;
    }
    if x <= 25.0 {
        j0_miller(x)
    } else {
        j0_asymptotic(x)
    }
}

fn j0_miller(x: f64) -> f64 {
    let mut start = (x + 15.0 + (40.0 * x).sqrt()) as usize + 10;
    start += start % 2;
    let mut next = 0.0;
    let mut current = 1e-30;
    let mut norm = 0.0;
    let mut j0 = 0.0;
    for n in (1..=start).rev() {
        let prev = 2.0 * n as f64 / x * current - next;
        next = current;
        current = prev;
        // `current` now holds J_{n-1}.
        if n - 1 == 0 {
            j0 = current;
            norm += current;
        } else if (n - 1) % 2 == 0 {
            norm += 2.0 * current;
        }
        if current.abs() > 1e250 {
            current *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
        }
    }
    j0 / norm
}

fn j0_asymptotic(x: f64) -> f64 {
    // P ~ Σ (-1)^k a_{2k} / x^{2k}, Q ~ Σ (-1)^k a_{2k+1} / x^{2k+1},
    // a_m = Π_{i=1..m} (2i-1)^2 / (m! 8^m).
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for m in 1..60 {
        let odd = (2 * m - 1) as f64;
        term *= odd * odd / (m as f64 * 8.0 * x);
        if term > last {
            break;
        }
        last = term;
        let sign = if (m / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if m % 2 == 1 {
            q += sign * term;
        } else {
            p += sign * term;
        }
        if term < 1e-17 {
            break;
        }
    }
    let phase = x - FRAC_PI_4;
    // With ν = 0 the odd coefficients carry the opposite sign to the series
    // above, so Q enters with a plus.
    (2.0 / (PI * x)).sqrt() * (p * phase.cos() + q * phase.sin())
}
