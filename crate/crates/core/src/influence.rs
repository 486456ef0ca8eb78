//! System-side quantities in Liouville space: the index convention, the
//! eigenvalue difference and sum vectors of the coupling operator, the free
//! propagator and the influence functions `I_k`.
//!
//! Density matrices are vectorised row-major: `j = s·d + s'` for `ρ_{s s'}`,
//! with `s` running over the eigenstates of the coupling operator sorted by
//! descending eigenvalue.

use ndarray::{Array1, Array2, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::EtaTable;
use crate::error::{Result, TempoError};

const HERMITIAN_TOL: f64 = 1e-12;

/// Free Hamiltonian, bath-coupling operator and initial state, all `d × d`.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    h0: Array2<Complex64>,
    coupling: Array2<Complex64>,
    initial_state: Array2<Complex64>,
}

impl SystemSpec {
    pub fn new(h0: Array2<Complex64>, coupling: Array2<Complex64>, initial_state: Array2<Complex64>) -> Result<Self> {
        let d = h0.nrows();
        for (name, m) in [("H0", &h0), ("O", &coupling), ("initial_state", &initial_state)] {
            if m.nrows() != m.ncols() || m.nrows() != d || d == 0 {
                return Err(TempoError::InvalidShape(format!("{name} is {:?}, expected {d}×{d}", m.dim())));
            }
            let dev = hermitian_deviation(m);
            if dev > HERMITIAN_TOL {
                return Err(TempoError::NotHermitian(dev));
            }
        }
        let trace: Complex64 = initial_state.diag().sum();
        if (trace - 1.0).norm() > 1e-12 {
            return Err(TempoError::InvalidParameter {
                name: "initial_state",
                reason: format!("trace must be 1, got {trace}"),
            });
        }
        let (vals, _) = eigh(&initial_state)?;
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-12 {
            return Err(TempoError::InvalidParameter {
                name: "initial_state",
                reason: format!("not positive semidefinite (eigenvalue {min:e})"),
            });
        }
        Ok(Self { h0, coupling, initial_state })
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    pub fn h0(&self) -> &Array2<Complex64> {
        &self.h0
    }

    pub fn coupling(&self) -> &Array2<Complex64> {
        &self.coupling
    }

    pub fn initial_state(&self) -> &Array2<Complex64> {
        &self.initial_state
    }
}

/// Largest entry of `|A − A†|`.
pub fn hermitian_deviation(m: &Array2<Complex64>) -> f64 {
    let mut dev: f64 = 0.0;
    for ((r, c), v) in m.indexed_iter() {
        dev = dev.max((v - m[(c, r)].conj()).norm());
    }
    dev
}

fn eigh(m: &Array2<Complex64>) -> Result<(Vec<f64>, Array2<Complex64>)> {
    // A row-major buffer reads as the transpose, i.e. conj(A), to LAPACK; hand
    // it column-major data so the eigenvectors are not conjugated.
    let mut f = Array2::zeros(m.raw_dim().f());
    f.assign(m);
    let (vals, vecs) = f.eigh(UPLO::Lower).map_err(|e| TempoError::EigenFailure(e.to_string()))?;
    Ok((vals.to_vec(), vecs.as_standard_layout().into_owned()))
}

fn is_diagonal(m: &Array2<Complex64>) -> bool {
    m.indexed_iter().all(|((r, c), v)| r == c || *v == Complex64::new(0.0, 0.0))
}

/// `a ⊗ b` with the first factor's index running slowest.
pub(crate) fn kron(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(r, c)| a[(r / br, c / bc)] * b[(r % br, c % bc)])
}

/// The Liouville index convention for one coupling operator.
#[derive(Clone, Debug, PartialEq)]
pub struct LiouvilleBasis {
    eigenvalues: Vec<f64>,
    eigvecs: Array2<Complex64>,
    ominus: Vec<f64>,
    oplus: Vec<f64>,
}

/// Diagonalises `O` and fixes the Liouville index convention.
///
/// Eigenvalues are sorted descending. A diagonal `O` keeps its own basis
/// (stable under ties); otherwise each eigenvector is rotated so that its
/// largest-magnitude component (first one on ties) is real and positive.
pub fn liouville_basis(coupling: &Array2<Complex64>) -> Result<LiouvilleBasis> {
    let d = coupling.nrows();
    if d == 0 || coupling.ncols() != d {
        return Err(TempoError::InvalidShape(format!("coupling operator is {:?}", coupling.dim())));
    }
    let dev = hermitian_deviation(coupling);
    if dev > HERMITIAN_TOL {
        return Err(TempoError::NotHermitian(dev));
    }
    let (eigenvalues, eigvecs) = if is_diagonal(coupling) {
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| coupling[(b, b)].re.total_cmp(&coupling[(a, a)].re));
        let vals = order.iter().map(|&i| coupling[(i, i)].re).collect();
        let vecs = Array2::from_shape_fn((d, d), |(r, c)| {
            if r == order[c] {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        (vals, vecs)
    } else {
        let (vals, vecs) = eigh(coupling)?;
        // LAPACK returns ascending order.
        let vals: Vec<f64> = vals.into_iter().rev().collect();
        let mut out = Array2::zeros((d, d));
        for c in 0..d {
            let mut col = vecs.column(d - 1 - c).to_owned();
            let mut best = 0;
            for r in 1..d {
                if col[r].norm() > col[best].norm() * (1.0 + 1e-12) {
                    best = r;
                }
            }
            let phase = col[best].conj() / col[best].norm();
            col.mapv_inplace(|z| z * phase);
            out.column_mut(c).assign(&col);
        }
        (vals, out)
    };
    let mut ominus = Vec::with_capacity(d * d);
    let mut oplus = Vec::with_capacity(d * d);
    for s in 0..d {
        for sp in 0..d {
            ominus.push(eigenvalues[s] - eigenvalues[sp]);
            oplus.push(eigenvalues[s] + eigenvalues[sp]);
        }
    }
    Ok(LiouvilleBasis { eigenvalues, eigvecs, ominus, oplus })
}

impl LiouvilleBasis {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn liouville_dim(&self) -> usize {
        self.ominus.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are the eigenvectors of `O` in index order.
    pub fn eigvecs(&self) -> &Array2<Complex64> {
        &self.eigvecs
    }

    pub fn ominus(&self) -> &[f64] {
        &self.ominus
    }

    pub fn oplus(&self) -> &[f64] {
        &self.oplus
    }

    /// `V† A V`: an operator expressed in the eigenbasis of `O`.
    pub fn to_eigenbasis(&self, op: &Array2<Complex64>) -> Array2<Complex64> {
        let vdag = self.eigvecs.t().mapv(|z| z.conj());
        vdag.dot(op).dot(&self.eigvecs)
    }

    /// `V A V†`: back to the computational basis.
    pub fn to_computational(&self, op: &Array2<Complex64>) -> Array2<Complex64> {
        let vdag = self.eigvecs.t().mapv(|z| z.conj());
        self.eigvecs.dot(op).dot(&vdag)
    }

    pub fn vectorize(&self, m: &Array2<Complex64>) -> Array1<Complex64> {
        m.iter().copied().collect()
    }

    pub fn unvectorize(&self, v: &[Complex64]) -> Array2<Complex64> {
        let d = self.dim();
        Array2::from_shape_fn((d, d), |(r, c)| v[r * d + c])
    }
}

/// `e^{ΔL₀}` and `e^{ΔL₀/2}` as `d² × d²` matrices in the basis's Liouville
/// indexing, with `L₀ρ = −i[H₀, ρ]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemPropagator {
    pub full: Array2<Complex64>,
    pub half: Array2<Complex64>,
}

pub fn free_propagator(spec: &SystemSpec, basis: &LiouvilleBasis, delta: f64) -> Result<SystemPropagator> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(TempoError::InvalidParameter { name: "delta", reason: format!("timestep must be > 0, got {delta}") });
    }
    if spec.dim() != basis.dim() {
        return Err(TempoError::InvalidShape(format!("system dimension {} vs basis {}", spec.dim(), basis.dim())));
    }
    let h = basis.to_eigenbasis(spec.h0());
    let (energies, w) = eigh(&h)?;
    let wdag = w.t().mapv(|z| z.conj());
    let superop = |t: f64| {
        let phases = Array2::from_diag(&Array1::from_iter(energies.iter().map(|e| Complex64::new(0.0, -e * t).exp())));
        let u = w.dot(&phases).dot(&wdag);
        kron(&u, &u.mapv(|z| z.conj()))
    };
    Ok(SystemPropagator { full: superop(delta), half: superop(0.5 * delta) })
}

/// Placement of the free propagation relative to the bath step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrotterMode {
    /// `e^{ΔL_E} e^{ΔL₀}` per step; error `O(Δ²)` per step.
    FirstOrder,
    /// Half free steps at both ends; error `O(Δ³)` per step.
    #[default]
    Symmetrized,
}

/// Influence functions `I_0 … I_K`; lags beyond `K` are identically one.
#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceTable {
    mode: TrotterMode,
    matrices: Vec<Array2<Complex64>>,
}

impl InfluenceTable {
    pub fn mode(&self) -> TrotterMode {
        self.mode
    }

    pub fn memory_len(&self) -> usize {
        self.matrices.len() - 1
    }

    pub fn liouville_dim(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn get(&self, k: usize) -> Option<&Array2<Complex64>> {
        self.matrices.get(k)
    }

    /// `I_k(j, j')`; one for `k > K`.
    pub fn value(&self, k: usize, j: usize, jp: usize) -> Complex64 {
        match self.matrices.get(k) {
            Some(m) => m[(j, jp)],
            None => Complex64::new(1.0, 0.0),
        }
    }
}

/// `exp φ_k(j, j')` with `φ_k = −O⁻_j (O⁻_{j'} Re η_k + i O⁺_{j'} Im η_k)`.
pub fn influence_exponential(basis: &LiouvilleBasis, eta: Complex64) -> Array2<Complex64> {
    let n = basis.liouville_dim();
    let (om, op) = (basis.ominus(), basis.oplus());
    Array2::from_shape_fn((n, n), |(j, jp)| {
        let phi = -om[j] * Complex64::new(om[jp] * eta.re, op[jp] * eta.im);
        phi.exp()
    })
}

/// Builds `I_k` for every lag in the η table. `I_1` carries the full free
/// propagator in either mode; the engine adds the half steps at the ends.
pub fn influence_table(
    basis: &LiouvilleBasis,
    eta: &EtaTable,
    prop: &SystemPropagator,
    mode: TrotterMode,
) -> Result<InfluenceTable> {
    let n = basis.liouville_dim();
    if prop.full.dim() != (n, n) || prop.half.dim() != (n, n) {
        return Err(TempoError::InvalidShape(format!("propagator is {:?}, Liouville dimension {n}", prop.full.dim())));
    }
    let mut matrices: Vec<Array2<Complex64>> = eta.values().iter().map(|&e| influence_exponential(basis, e)).collect();
    if matrices.len() < 2 {
        // Without a lag-1 coefficient the free propagation still enters.
        matrices.push(Array2::from_elem((n, n), Complex64::new(1.0, 0.0)));
    }
    matrices[1] = &matrices[1] * &prop.full;
    Ok(InfluenceTable { mode, matrices })
}

/// Partition of Liouville indices by the value of `O⁻_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassPartition {
    class_of: Vec<usize>,
    representatives: Vec<usize>,
}

impl ClassPartition {
    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    /// Number of Liouville indices partitioned.
    pub fn liouville_dim(&self) -> usize {
        self.class_of.len()
    }

    pub fn class_of(&self, j: usize) -> usize {
        self.class_of[j]
    }

    /// First Liouville index of each class.
    pub fn representatives(&self) -> &[usize] {
        &self.representatives
    }

    pub fn members(&self, class: usize) -> Vec<usize> {
        (0..self.class_of.len()).filter(|&j| self.class_of[j] == class).collect()
    }
}

/// Groups indices with equal `O⁻_j` (within `tol`), in order of first
/// appearance. `None` uses `1e-10 · max|O⁻|`.
pub fn reduce_classes(basis: &LiouvilleBasis, tol: Option<f64>) -> ClassPartition {
    let om = basis.ominus();
    let scale = om.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = tol.unwrap_or(1e-10 * scale);
    let mut representatives: Vec<usize> = Vec::new();
    let mut class_of = Vec::with_capacity(om.len());
    for (j, &v) in om.iter().enumerate() {
        match representatives.iter().position(|&r| (om[r] - v).abs() <= tol) {
            Some(c) => class_of.push(c),
            None => {
                class_of.push(representatives.len());
                representatives.push(j);
            }
        }
    }
    ClassPartition { class_of, representatives }
}

/// Standard spin matrices `(S_x, S_y, S_z)` for spin `s` (twice-spin given).
pub fn spin_matrices(twice_spin: u32) -> (Array2<Complex64>, Array2<Complex64>, Array2<Complex64>) {
    let s = twice_spin as f64 / 2.0;
    let d = twice_spin as usize + 1;
    let m = |i: usize| s - i as f64;
    let mut sp = Array2::<Complex64>::zeros((d, d));
    for i in 1..d {
        // ⟨m+1| S+ |m⟩ with rows ordered from m = s downwards.
        let mi = m(i);
        sp[(i - 1, i)] = Complex64::new((s * (s + 1.0) - mi * (mi + 1.0)).sqrt(), 0.0);
    }
    let sm = sp.t().mapv(|z| z.conj());
    let sx = (&sp + &sm).mapv(|z| z * 0.5);
    let sy = (&sp - &sm).mapv(|z| z * Complex64::new(0.0, -0.5));
    let sz = Array2::from_shape_fn((d, d), |(r, c)| if r == c { Complex64::new(m(r), 0.0) } else { Complex64::new(0.0, 0.0) });
    (sx, sy, sz)
}
