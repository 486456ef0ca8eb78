use ndarray::{Array2, Array3, Array4};
use num_complex::Complex64;

use super::mps::{sweep_right_to_left, MatrixProductState};
use super::svd::{svd_truncate, TruncationPolicy};
use crate::error::{Result, TempoError};

/// Open-boundary MPO with sites stored as `[left_bond, out, in, right_bond]`.
///
/// A site whose `in` leg has dimension one creates a new physical leg, and one
/// whose `out` leg has dimension one removes a leg after contraction.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixProductOperator {
    sites: Vec<Array4<Complex64>>,
}

impl MatrixProductOperator {
    pub fn from_sites(sites: Vec<Array4<Complex64>>) -> Result<Self> {
        if sites.is_empty() {
            return Err(TempoError::InvalidShape("MPO needs at least one site".into()));
        }
        if sites[0].dim().0 != 1 || sites[sites.len() - 1].dim().3 != 1 {
            return Err(TempoError::InvalidShape("boundary bonds must have dimension 1".into()));
        }
        for (k, pair) in sites.windows(2).enumerate() {
            if pair[0].dim().3 != pair[1].dim().0 {
                return Err(TempoError::ContractShape {
                    site: k + 1,
                    detail: format!(
                        "MPO left bond {} does not match previous right bond {}",
                        pair[1].dim().0,
                        pair[0].dim().3
                    ),
                });
            }
        }
        Ok(Self { sites })
    }

    /// Bond-1 MPO of local matrices, `matrices[k][(out, in)]`.
    pub fn local(matrices: &[Array2<Complex64>]) -> Result<Self> {
        let sites = matrices
            .iter()
            .map(|m| {
                let (o, i) = m.dim();
                m.clone().into_shape_with_order((1, o, i, 1)).expect("local site")
            })
            .collect();
        Self::from_sites(sites)
    }

    pub fn identity(dims: &[usize]) -> Result<Self> {
        let eye: Vec<Array2<Complex64>> = dims
            .iter()
            .map(|&d| Array2::from_diag_elem(d, Complex64::new(1.0, 0.0)))
            .collect();
        Self::local(&eye)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Array4<Complex64>] {
        &self.sites
    }

    pub fn input_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.dim().2).collect()
    }

    pub fn output_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.dim().1).collect()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1].iter().map(|s| s.dim().3).collect()
    }

    pub fn apply(&self, mps: &MatrixProductState, policy: &TruncationPolicy) -> Result<MatrixProductState> {
        self.apply_tracked(mps, policy).map(|(out, _)| out)
    }

    /// Applies the operator and compresses the result.
    ///
    /// Sites are contracted left to right with a truncating SVD after each one
    /// (zip-up), which already leaves the result left-orthonormal; a
    /// right-to-left truncating sweep then completes the compression. Returns
    /// the summed discarded weight of both passes alongside the new state.
    pub fn apply_tracked(
        &self,
        mps: &MatrixProductState,
        policy: &TruncationPolicy,
    ) -> Result<(MatrixProductState, f64)> {
        if mps.len() != self.len() {
            return Err(TempoError::ContractShape {
                site: mps.len().min(self.len()),
                detail: format!("MPS has {} sites, MPO has {}", mps.len(), self.len()),
            });
        }
        for (k, (a, w)) in mps.sites().iter().zip(&self.sites).enumerate() {
            if a.dim().1 != w.dim().2 {
                return Err(TempoError::ContractShape {
                    site: k,
                    detail: format!("MPS leg {} vs MPO input leg {}", a.dim().1, w.dim().2),
                });
            }
        }

        let n = self.len();
        let mut discarded = 0.0;
        let mut out_sites: Vec<Array3<Complex64>> = Vec::with_capacity(n);
        // carry[new_left, mps_right, mpo_right]
        let mut carry: Array3<Complex64> = Array3::from_elem((1, 1, 1), Complex64::new(1.0, 0.0));

        for (k, (a, w)) in mps.sites().iter().zip(&self.sites).enumerate() {
            let merged = zip_site(&carry, a, w);
            let (nl, out, ra, rw) = merged.dim();
            if k + 1 == n {
                out_sites.push(merged.into_shape_with_order((nl, out, ra * rw)).expect("last site"));
                break;
            }
            let m = merged.into_shape_with_order((nl * out, ra * rw)).expect("zip matrix");
            let svd = svd_truncate(m.view(), policy)?;
            discarded += svd.discarded_weight;
            let (u, sv) = svd.into_left_isometry();
            let chi = u.ncols();
            out_sites.push(u.into_shape_with_order((nl, out, chi)).expect("zip site"));
            carry = sv.into_shape_with_order((chi, ra, rw)).expect("carry");
        }

        discarded += sweep_right_to_left(&mut out_sites, policy)?;
        Ok((MatrixProductState::from_sites(out_sites)?, discarded))
    }
}

/// `T[nl, out, ra, rw] = Σ carry[nl, al, wl] · A[al, in, ra] · W[wl, out, in, rw]`.
fn zip_site(
    carry: &Array3<Complex64>,
    a: &Array3<Complex64>,
    w: &Array4<Complex64>,
) -> Array4<Complex64> {
    let (nl, al, wl) = carry.dim();
    let (_, din, ra) = a.dim();
    let (_, dout, _, rw) = w.dim();

    // X[nl, wl, in, ra]
    let c = carry
        .view()
        .permuted_axes([0, 2, 1])
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((nl * wl, al))
        .expect("carry matrix");
    let am = a.view().into_shape_with_order((al, din * ra)).expect("mps matrix");
    let x = c.dot(&am).into_shape_with_order((nl, wl, din, ra)).expect("x");

    // X[nl, ra, (wl, in)] · W[(wl, in), (out, rw)]
    let xm = x
        .permuted_axes([0, 3, 1, 2])
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((nl * ra, wl * din))
        .expect("x matrix");
    let wm = w
        .view()
        .permuted_axes([0, 2, 1, 3])
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((wl * din, dout * rw))
        .expect("w matrix");
    xm.dot(&wm)
        .into_shape_with_order((nl, ra, dout, rw))
        .expect("t")
        .permuted_axes([0, 2, 1, 3])
        .as_standard_layout()
        .into_owned()
}
