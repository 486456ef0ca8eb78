//! Concrete models: the unbiased spin-boson model for spin ½ and spin 1, and
//! two exchange-coupled spins sharing one environment.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{effective_spectral_density, power_exp_density, BathConfig, SpectralDensity};
use crate::engine::{Observable, SimulationConfig};
use crate::error::{Result, TempoError};
use crate::influence::{spin_matrices, SystemSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Spin {
    Half,
    One,
}

impl Spin {
    pub fn twice(self) -> u32 {
        match self {
            Spin::Half => 1,
            Spin::One => 2,
        }
    }

    pub fn dim(self) -> usize {
        self.twice() as usize + 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    /// Largest `S_z` eigenstate.
    SzMax,
    /// Largest `S_x` eigenstate.
    SxMax,
    Custom(Array2<Complex64>),
}

/// `H = Ω S_x + S_z Σ g_i (a_i + a_i†) + Σ ω_i a_i† a_i` with an Ohmic bath.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinBosonSpec {
    pub spin: Spin,
    pub omega: f64,
    pub alpha: f64,
    pub omega_c: f64,
    pub temperature: f64,
    pub initial: InitialState,
}

impl SpinBosonSpec {
    pub fn new(spin: Spin, alpha: f64, omega_c: f64) -> Self {
        Self { spin, omega: 1.0, alpha, omega_c, temperature: 0.0, initial: InitialState::SzMax }
    }
}

/// System, bath and default observables of a model, ready for a
/// [`SimulationConfig`].
#[derive(Clone, Debug)]
pub struct ModelParts {
    pub system: SystemSpec,
    pub spectral_density: SpectralDensity,
    pub bath: BathConfig,
    pub observables: Vec<Observable>,
}

impl ModelParts {
    pub fn into_config(self, delta: f64, steps: usize) -> SimulationConfig {
        let mut cfg = SimulationConfig::new(self.system, self.spectral_density, delta, steps);
        cfg.bath = self.bath;
        cfg.observables = self.observables;
        cfg
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(TempoError::InvalidParameter { name, reason: format!("must be > 0, got {value}") });
    }
    Ok(())
}

fn check_non_negative(name: &'static str, value: f64) -> Result<()> {
    if !(value >= 0.0) || !value.is_finite() {
        return Err(TempoError::InvalidParameter { name, reason: format!("must be ≥ 0, got {value}") });
    }
    Ok(())
}

/// `|ψ⟩⟨ψ|` for the eigenvector of `op` with the largest eigenvalue.
fn top_eigenstate(op: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    use ndarray::ShapeBuilder;
    use ndarray_linalg::{Eigh, UPLO};
    let mut f = Array2::zeros(op.raw_dim().f());
    f.assign(op);
    let (_, vecs) = f.eigh(UPLO::Lower).map_err(|e| TempoError::EigenFailure(e.to_string()))?;
    let v = vecs.column(vecs.ncols() - 1).to_owned();
    let d = v.len();
    Ok(Array2::from_shape_fn((d, d), |(r, c)| v[r] * v[c].conj()))
}

pub fn build_spin_boson(spec: &SpinBosonSpec) -> Result<ModelParts> {
    check_non_negative("alpha", spec.alpha)?;
    check_positive("omega_c", spec.omega_c)?;
    check_non_negative("T", spec.temperature)?;
    if !spec.omega.is_finite() {
        return Err(TempoError::InvalidParameter { name: "omega", reason: "must be finite".into() });
    }
    let (sx, sy, sz) = spin_matrices(spec.spin.twice());
    let d = spec.spin.dim();
    let rho0 = match &spec.initial {
        InitialState::SzMax => {
            let mut rho = Array2::zeros((d, d));
            rho[(0, 0)] = Complex64::new(1.0, 0.0);
            rho
        }
        InitialState::SxMax => top_eigenstate(&sx)?,
        InitialState::Custom(rho) => rho.clone(),
    };
    let system = SystemSpec::new(sx.mapv(|z| z * spec.omega), sz.clone(), rho0)?;
    Ok(ModelParts {
        system,
        spectral_density: SpectralDensity::ohmic(spec.alpha, spec.omega_c),
        bath: BathConfig::at_temperature(spec.temperature),
        observables: vec![Observable::new("sz", sz), Observable::new("sx", sx), Observable::new("sy", sy)],
    })
}

/// Two spins coupled by `Ω S_a·S_b`, each linearly coupled to a shared
/// `D`-dimensional environment, a distance `R` apart (sound speed 1).
#[derive(Clone, Debug, PartialEq)]
pub struct TwoSpinSpec {
    pub omega: f64,
    pub alpha: f64,
    pub omega_c: f64,
    pub temperature: f64,
    pub separation: f64,
    pub dimension: u32,
}

/// Reduces the two-spin problem to a spin-½ model on the anti-aligned
/// subspace `{|↑↓⟩, |↓↑⟩}`.
///
/// There `S_a·S_b = −¼ + ½ σ_x`, so up to a dropped constant `H₀ = Ω S_x`, and
/// the bath couples to `½(S_{z,a} − S_{z,b}) = S_z`. The observable `p` is the
/// population of `|↑↓⟩`, the initial state.
pub fn build_two_spin(spec: &TwoSpinSpec) -> Result<ModelParts> {
    check_non_negative("alpha", spec.alpha)?;
    check_positive("omega_c", spec.omega_c)?;
    check_non_negative("T", spec.temperature)?;
    let base = power_exp_density(spec.alpha, spec.omega_c, spec.dimension);
    let spectral_density = effective_spectral_density(base, spec.separation, spec.dimension)?;
    let (sx, _, sz) = spin_matrices(1);
    let mut rho0 = Array2::zeros((2, 2));
    rho0[(0, 0)] = Complex64::new(1.0, 0.0);
    let system = SystemSpec::new(sx.mapv(|z| z * spec.omega), sz.clone(), rho0.clone())?;
    Ok(ModelParts {
        system,
        spectral_density,
        bath: BathConfig::at_temperature(spec.temperature),
        observables: vec![Observable::new("p", rho0), Observable::new("sz", sz)],
    })
}
