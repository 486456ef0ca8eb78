//! Time stepping: grows the ADT to the memory length, then advances it with
//! a fixed MPO, reading out the reduced density matrix after every step.

use std::time::Instant;

use ndarray::{Array1, Array2, Array3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{eta_table, BathConfig, SpectralDensity};
use crate::error::{Result, TempoError};
use crate::influence::{
    free_propagator, influence_table, liouville_basis, reduce_classes, InfluenceTable, LiouvilleBasis,
    SystemPropagator, SystemSpec, TrotterMode,
};
use crate::network::{build_grow_mpo, build_step_mpo};
use crate::tensor::{Contracted, MatrixProductState, SiteWeight, TruncationPolicy};

pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e12;
pub const DEFAULT_DENSE_LIMIT: usize = 1 << 16;

/// A named Hermitian operator in the computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    pub name: String,
    pub matrix: Array2<Complex64>,
}

impl Observable {
    pub fn new(name: impl Into<String>, matrix: Array2<Complex64>) -> Self {
        Self { name: name.into(), matrix }
    }

    pub fn expectation(&self, rho: &Array2<Complex64>) -> f64 {
        // Tr(Oρ) = Σ_{ab} O_ab ρ_ba
        let mut acc = Complex64::new(0.0, 0.0);
        for ((a, b), o) in self.matrix.indexed_iter() {
            acc += o * rho[(b, a)];
        }
        acc.re
    }
}

#[derive(Clone, Debug)]
pub struct SimulationConfig {
    pub system: SystemSpec,
    pub spectral_density: SpectralDensity,
    pub bath: BathConfig,
    pub delta: f64,
    pub steps: usize,
    /// Memory length `K`; `K ≥ steps` keeps the whole history.
    pub memory_len: usize,
    pub policy: TruncationPolicy,
    pub mode: TrotterMode,
    pub observables: Vec<Observable>,
    /// Index the internal MPO bonds by `O⁻` class.
    pub reduce: bool,
    pub blowup_threshold: f64,
    /// Largest ADT (in elements) the dense solver will hold.
    pub dense_limit: usize,
}

impl SimulationConfig {
    /// Defaults: no memory cutoff, `λ_c = 1e-7`, symmetrised splitting, no
    /// class reduction.
    pub fn new(system: SystemSpec, spectral_density: SpectralDensity, delta: f64, steps: usize) -> Self {
        Self {
            system,
            spectral_density,
            bath: BathConfig::default(),
            delta,
            steps,
            memory_len: steps,
            policy: TruncationPolicy::new(1e-7),
            mode: TrotterMode::Symmetrized,
            observables: Vec::new(),
            reduce: false,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            dense_limit: DEFAULT_DENSE_LIMIT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Err(TempoError::InvalidParameter { name, reason });
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return bad("delta", format!("timestep must be > 0, got {}", self.delta));
        }
        if self.steps < 1 {
            return bad("steps", "need at least one step".into());
        }
        if self.memory_len < 1 {
            return bad("memory_len", "memory length must be ≥ 1".into());
        }
        let lc = self.policy.relative_cutoff;
        if !(0.0..1.0).contains(&lc) {
            return bad("lambda_c", format!("relative cutoff must lie in [0, 1), got {lc}"));
        }
        if self.policy.max_bond == Some(0) {
            return bad("max_bond", "must be ≥ 1".into());
        }
        if !(self.blowup_threshold > 0.0) {
            return bad("blowup_threshold", format!("must be > 0, got {}", self.blowup_threshold));
        }
        let d = self.system.dim();
        for o in &self.observables {
            if o.matrix.dim() != (d, d) {
                return Err(TempoError::InvalidShape(format!("observable {} is {:?}, system is {d}×{d}", o.name, o.matrix.dim())));
            }
        }
        self.bath.validate()
    }

    /// Memory length actually used: never more than the number of steps.
    pub fn effective_memory(&self) -> usize {
        self.memory_len.min(self.steps)
    }
}

/// Per-step cost figures. Index 0 is the initial state, before any ADT exists.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    /// Total number of stored ADT elements.
    pub n_tot: Vec<usize>,
    /// Largest MPS bond dimension.
    pub bond_max: Vec<usize>,
    /// Cumulative discarded singular-value weight.
    pub discarded_weight: Vec<f64>,
    pub step_seconds: Vec<f64>,
}

impl RunStats {
    fn push(&mut self, n_tot: usize, bond_max: usize, discarded: f64, seconds: f64) {
        self.n_tot.push(n_tot);
        self.bond_max.push(bond_max);
        self.discarded_weight.push(discarded);
        self.step_seconds.push(seconds);
    }

    pub fn peak_n_tot(&self) -> usize {
        self.n_tot.iter().copied().max().unwrap_or(0)
    }

    pub fn peak_bond(&self) -> usize {
        self.bond_max.iter().copied().max().unwrap_or(0)
    }
}

/// Readout at `t_n = nΔ` for `n = 0…N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Reduced density matrices in the computational basis.
    pub rho: Vec<Array2<Complex64>>,
    pub observables: Vec<(String, Vec<f64>)>,
    /// `|Tr ρ − 1|` per step.
    pub trace_error: Vec<f64>,
    pub stats: RunStats,
}

impl Trajectory {
    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observables.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Everything derived from the configuration before stepping.
struct Prepared {
    basis: LiouvilleBasis,
    prop: SystemPropagator,
    table: InfluenceTable,
    /// `ρ` entering the path sum, in the Liouville indexing.
    rho_first: Array1<Complex64>,
}

fn prepare(cfg: &SimulationConfig) -> Result<Prepared> {
    cfg.validate()?;
    let basis = liouville_basis(cfg.system.coupling())?;
    let prop = free_propagator(&cfg.system, &basis, cfg.delta)?;
    let memory = cfg.effective_memory();
    let eta = eta_table(&cfg.spectral_density, &cfg.bath, cfg.delta, memory)?;
    let table = influence_table(&basis, &eta, &prop, cfg.mode)?;
    let rho0 = basis.vectorize(&basis.to_eigenbasis(cfg.system.initial_state()));
    let rho_first = match cfg.mode {
        TrotterMode::FirstOrder => prop.full.dot(&rho0),
        TrotterMode::Symmetrized => prop.half.dot(&rho0),
    };
    Ok(Prepared { basis, prop, table, rho_first })
}

/// Collects readouts and applies the closing half step where needed.
struct Recorder<'a> {
    cfg: &'a SimulationConfig,
    prep: &'a Prepared,
    traj: Trajectory,
}

impl<'a> Recorder<'a> {
    fn new(cfg: &'a SimulationConfig, prep: &'a Prepared) -> Self {
        let traj = Trajectory {
            times: Vec::with_capacity(cfg.steps + 1),
            rho: Vec::with_capacity(cfg.steps + 1),
            observables: cfg.observables.iter().map(|o| (o.name.clone(), Vec::with_capacity(cfg.steps + 1))).collect(),
            trace_error: Vec::with_capacity(cfg.steps + 1),
            stats: RunStats::default(),
        };
        let mut rec = Self { cfg, prep, traj };
        rec.record_matrix(0, cfg.system.initial_state().clone());
        rec.traj.stats.push(0, 0, 0.0, 0.0);
        rec
    }

    fn record_matrix(&mut self, step: usize, rho: Array2<Complex64>) {
        let trace: Complex64 = rho.diag().sum();
        self.traj.times.push(step as f64 * self.cfg.delta);
        self.traj.trace_error.push((trace - 1.0).norm());
        for (o, (_, series)) in self.cfg.observables.iter().zip(self.traj.observables.iter_mut()) {
            series.push(o.expectation(&rho));
        }
        self.traj.rho.push(rho);
    }

    /// `marginal` is the summed ADT over all but the newest leg.
    fn record(&mut self, step: usize, marginal: Array1<Complex64>) -> Result<()> {
        let vec = match self.cfg.mode {
            TrotterMode::FirstOrder => marginal,
            TrotterMode::Symmetrized => self.prep.prop.half.dot(&marginal),
        };
        let magnitude = vec.iter().fold(0.0_f64, |m, z| if z.is_finite() { m.max(z.norm()) } else { f64::INFINITY });
        if magnitude > self.cfg.blowup_threshold {
            return Err(self.blowup(step, magnitude));
        }
        let rho = self.prep.basis.to_computational(&self.prep.basis.unvectorize(vec.as_slice().expect("contiguous")));
        self.record_matrix(step, rho);
        Ok(())
    }

    fn blowup(&self, step: usize, magnitude: f64) -> TempoError {
        TempoError::Blowup { step, lambda_c: self.cfg.policy.relative_cutoff, magnitude }
    }
}

/// `ρ^{j_n} = Σ_{j_{n−1}…} A^{j_n, j_{n−1}, …}`: the newest leg (site 0) left open.
pub fn extract_density(adt: &MatrixProductState) -> Result<Array1<Complex64>> {
    let mut weights = vec![SiteWeight::Ones; adt.len()];
    weights[0] = SiteWeight::Open;
    match adt.contract_weighted(&weights)? {
        Contracted::Vector(v) => Ok(v),
        Contracted::Scalar(_) => unreachable!("one leg is open"),
    }
}

/// Runs the compressed-ADT propagation.
pub fn run_tempo(cfg: &SimulationConfig) -> Result<Trajectory> {
    run_tempo_observed(cfg, |_| {})
}

/// As [`run_tempo`], calling `observer` with the partial trajectory after
/// every step.
pub fn run_tempo_observed<F: FnMut(&Trajectory)>(cfg: &SimulationConfig, mut observer: F) -> Result<Trajectory> {
    let prep = prepare(cfg)?;
    let memory = cfg.effective_memory();
    let n_liouville = prep.basis.liouville_dim();
    let classes = cfg.reduce.then(|| reduce_classes(&prep.basis, None));
    let classes = classes.as_ref();
    let mut rec = Recorder::new(cfg, &prep);

    let start = Instant::now();
    let first = Array3::from_shape_fn((1, n_liouville, 1), |(_, j, _)| prep.table.value(0, j, j) * prep.rho_first[j]);
    let mut adt = MatrixProductState::from_sites(vec![first])?;
    let mut discarded = 0.0;
    rec.record(1, extract_density(&adt)?)?;
    rec.traj.stats.push(adt.n_tot(), adt.max_bond(), discarded, start.elapsed().as_secs_f64());
    observer(&rec.traj);

    let step_mpo = if cfg.steps > memory { Some(build_step_mpo(memory, &prep.table, classes)?) } else { None };
    for n in 2..=cfg.steps {
        let start = Instant::now();
        adt.push_front_unit();
        let (next, lost) = if n <= memory {
            build_grow_mpo(n, &prep.table, classes)?.apply_tracked(&adt, &cfg.policy)?
        } else {
            step_mpo.as_ref().expect("built when steps exceed memory").apply_tracked(&adt, &cfg.policy)?
        };
        adt = next;
        if n > memory {
            adt.absorb_unit_back()?;
        }
        discarded += lost;
        let peak = adt.max_abs_element();
        if !(peak <= cfg.blowup_threshold) {
            return Err(rec.blowup(n, peak));
        }
        rec.record(n, extract_density(&adt)?)?;
        rec.traj.stats.push(adt.n_tot(), adt.max_bond(), discarded, start.elapsed().as_secs_f64());
        observer(&rec.traj);
    }
    Ok(rec.traj)
}

/// Same path sum with the ADT held as a dense array and nothing truncated.
pub fn run_brute_force(cfg: &SimulationConfig) -> Result<Trajectory> {
    let memory = cfg.effective_memory();
    let prep = prepare(cfg)?;
    let n = prep.basis.liouville_dim();
    let required = u32::try_from(memory).ok().and_then(|m| n.checked_pow(m)).unwrap_or(usize::MAX);
    if required > cfg.dense_limit {
        return Err(TempoError::DenseLimit { required, limit: cfg.dense_limit });
    }
    let table = &prep.table;
    let mut rec = Recorder::new(cfg, &prep);

    // Legs newest first, so the newest index runs slowest.
    let start = Instant::now();
    let mut adt: Vec<Complex64> = (0..n).map(|j| table.value(0, j, j) * prep.rho_first[j]).collect();
    let mut legs = 1;
    rec.record(1, dense_marginal(&adt, n))?;
    rec.traj.stats.push(adt.len(), 0, 0.0, start.elapsed().as_secs_f64());

    for step in 2..=cfg.steps {
        let start = Instant::now();
        let grow = step <= memory;
        // Old legs j_{n−1} … j_{n−legs}; the new tensor keeps `kept` of them.
        let kept = if grow { legs } else { legs - 1 };
        let old_len = adt.len();
        let tail = n.pow((legs - kept) as u32);
        let mut next = vec![Complex64::new(0.0, 0.0); n * n.pow(kept as u32)];
        for j_new in 0..n {
            let base = table.value(0, j_new, j_new);
            for (flat, &a) in adt.iter().enumerate() {
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let mut weight = base;
                let mut rest = flat;
                let mut stride = old_len;
                for k in 1..=legs {
                    stride /= n;
                    let j = rest / stride;
                    rest %= stride;
                    weight *= table.value(k, j_new, j);
                }
                next[j_new * (old_len / tail) + flat / tail] += weight * a;
            }
        }
        adt = next;
        legs = kept + 1;
        let peak = adt.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        if !(peak <= cfg.blowup_threshold) {
            return Err(rec.blowup(step, peak));
        }
        rec.record(step, dense_marginal(&adt, n))?;
        rec.traj.stats.push(adt.len(), 0, 0.0, start.elapsed().as_secs_f64());
    }
    Ok(rec.traj)
}

fn dense_marginal(adt: &[Complex64], n: usize) -> Array1<Complex64> {
    let block = adt.len() / n;
    Array1::from_shape_fn(n, |j| adt[j * block..(j + 1) * block].iter().sum())
}
