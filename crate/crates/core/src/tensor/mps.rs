//! Open-boundary matrix product states.
//!
//! Every site is stored as a rank-3 array `[left_bond, physical, right_bond]`;
//! the two boundary bonds have dimension one, which is how the rank-2 end
//! tensors of the usual diagrammatic notation are represented here.

use ndarray::{Array1, Array2, Array3, Axis};
use num_complex::Complex64;

use super::dense::Tensor;
use super::svd::{svd_truncate, TruncationPolicy};
use crate::error::{Result, TempoError};

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixProductState {
    sites: Vec<Array3<Complex64>>,
}

/// Per-site weight used by [`MatrixProductState::contract_weighted`].
#[derive(Clone, Copy, Debug)]
pub enum SiteWeight<'a> {
    Open,
    Vector(&'a [Complex64]),
    Ones,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Contracted {
    Scalar(Complex64),
    Vector(Array1<Complex64>),
}

impl MatrixProductState {
    pub fn from_sites(sites: Vec<Array3<Complex64>>) -> Result<Self> {
        if sites.is_empty() {
            return Err(TempoError::InvalidShape("MPS needs at least one site".into()));
        }
        if sites[0].dim().0 != 1 || sites[sites.len() - 1].dim().2 != 1 {
            return Err(TempoError::InvalidShape("boundary bonds must have dimension 1".into()));
        }
        for (k, pair) in sites.windows(2).enumerate() {
            if pair[0].dim().2 != pair[1].dim().0 {
                return Err(TempoError::ContractShape {
                    site: k + 1,
                    detail: format!(
                        "left bond {} does not match previous right bond {}",
                        pair[1].dim().0,
                        pair[0].dim().2
                    ),
                });
            }
        }
        Ok(Self { sites })
    }

    /// Product state from one vector per site.
    pub fn product(vectors: &[Array1<Complex64>]) -> Result<Self> {
        let sites = vectors
            .iter()
            .map(|v| v.clone().into_shape_with_order((1, v.len(), 1)).expect("vector reshape"))
            .collect();
        Self::from_sites(sites)
    }

    /// Sequential left-to-right SVD factorisation of a dense tensor.
    pub fn from_tensor(tensor: &Tensor, policy: &TruncationPolicy) -> Result<Self> {
        let dims = tensor.shape().to_vec();
        if dims.is_empty() {
            return Err(TempoError::InvalidShape("rank-0 tensor has no legs".into()));
        }
        let mut sites = Vec::with_capacity(dims.len());
        let mut rest = tensor.matricize(0).into_shape_with_order((1, tensor.len())).expect("row");
        let mut left = 1;
        for (k, &d) in dims.iter().enumerate() {
            let cols = rest.len() / (left * d);
            let matrix = rest.into_shape_with_order((left * d, cols)).expect("regroup");
            if k + 1 == dims.len() {
                sites.push(matrix.into_shape_with_order((left, d, 1)).expect("last site"));
                break;
            }
            let (u, sv) = svd_truncate(matrix.view(), policy)?.into_left_isometry();
            let chi = u.ncols();
            sites.push(u.into_shape_with_order((left, d, chi)).expect("site"));
            rest = sv;
            left = chi;
        }
        Self::from_sites(sites)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Array3<Complex64>] {
        &self.sites
    }

    pub fn into_sites(self) -> Vec<Array3<Complex64>> {
        self.sites
    }

    pub fn physical_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.dim().1).collect()
    }

    /// Internal bonds only; a single-site state has none.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1].iter().map(|s| s.dim().2).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Total number of stored complex elements.
    pub fn n_tot(&self) -> usize {
        self.sites.iter().map(|s| s.len()).sum()
    }

    pub fn max_abs_element(&self) -> f64 {
        self.sites
            .iter()
            .flat_map(|s| s.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Contracts every bond, returning the dense tensor over the physical legs.
    pub fn to_tensor(&self) -> Tensor {
        let mut acc: Array2<Complex64> = Array2::from_elem((1, 1), Complex64::new(1.0, 0.0));
        for site in &self.sites {
            let (l, d, r) = site.dim();
            let m = site.view().into_shape_with_order((l, d * r)).expect("site matrix");
            let next = acc.dot(&m);
            let rows = next.nrows() * d;
            acc = next.into_shape_with_order((rows, r)).expect("absorb");
        }
        let values: Vec<Complex64> = acc.iter().copied().collect();
        Tensor::from_vec(&self.physical_dims(), values).expect("dims consistent")
    }

    /// Brings the state into left-canonical form without truncation, then
    /// truncates in a right-to-left sweep, where each SVD sees the true
    /// Schmidt spectrum of its bond.
    ///
    /// Truncating one bond perturbs the spectra of the bonds already passed,
    /// so the pass is repeated until the bond dimensions stop shrinking. A pass
    /// that keeps every dimension discards nothing, so compressing the result
    /// again leaves its bond dimensions unchanged.
    pub fn compress(&self, policy: &TruncationPolicy) -> Result<Self> {
        let mut sites = self.sites.clone();
        loop {
            let before: Vec<usize> = sites.iter().map(|s| s.dim().2).collect();
            sweep_left_to_right(&mut sites, &TruncationPolicy::exact())?;
            sweep_right_to_left(&mut sites, policy)?;
            if sites.iter().map(|s| s.dim().2).eq(before) {
                break;
            }
        }
        Self::from_sites(sites)
    }

    /// Contracts physical legs with the given weights.
    ///
    /// At most one site may be left [`SiteWeight::Open`]; the result is then a
    /// vector over that leg, otherwise a scalar.
    pub fn contract_weighted(&self, weights: &[SiteWeight<'_>]) -> Result<Contracted> {
        if weights.len() != self.sites.len() {
            return Err(TempoError::InvalidShape(format!(
                "{} weights supplied for {} sites",
                weights.len(),
                self.sites.len()
            )));
        }
        let open: Vec<usize> = weights
            .iter()
            .enumerate()
            .filter(|(_, w)| matches!(w, SiteWeight::Open))
            .map(|(k, _)| k)
            .collect();
        if open.len() > 1 {
            return Err(TempoError::InvalidShape("at most one open leg is supported".into()));
        }

        let reduced = |k: usize| -> Result<Array2<Complex64>> {
            let site = &self.sites[k];
            let (l, d, r) = site.dim();
            match weights[k] {
                SiteWeight::Ones => Ok(site.sum_axis(Axis(1))),
                SiteWeight::Vector(w) => {
                    if w.len() != d {
                        return Err(TempoError::WeightLength { site: k, expected: d, got: w.len() });
                    }
                    let mut m = Array2::zeros((l, r));
                    for (i, &wi) in w.iter().enumerate() {
                        m.scaled_add(wi, &site.index_axis(Axis(1), i));
                    }
                    Ok(m)
                }
                SiteWeight::Open => unreachable!("open site handled separately"),
            }
        };

        match open.first() {
            None => {
                let mut left = Array1::from_elem(1, Complex64::new(1.0, 0.0));
                for k in 0..self.sites.len() {
                    left = left.dot(&reduced(k)?);
                }
                Ok(Contracted::Scalar(left[0]))
            }
            Some(&p) => {
                let mut left = Array1::from_elem(1, Complex64::new(1.0, 0.0));
                for k in 0..p {
                    left = left.dot(&reduced(k)?);
                }
                let mut right = Array1::from_elem(1, Complex64::new(1.0, 0.0));
                for k in (p + 1..self.sites.len()).rev() {
                    right = reduced(k)?.dot(&right);
                }
                let site = &self.sites[p];
                let d = site.dim().1;
                let out = Array1::from_shape_fn(d, |i| {
                    left.dot(&site.index_axis(Axis(1), i).dot(&right))
                });
                Ok(Contracted::Vector(out))
            }
        }
    }

    /// Prepends a site with a single-valued physical leg, ready to be
    /// expanded by an MPO site whose input leg has dimension one.
    pub fn push_front_unit(&mut self) {
        self.sites.insert(0, Array3::from_elem((1, 1, 1), Complex64::new(1.0, 0.0)));
    }

    /// Folds a trailing site whose physical leg has dimension one into its
    /// neighbour.
    pub fn absorb_unit_back(&mut self) -> Result<()> {
        let n = self.sites.len();
        if n < 2 || self.sites[n - 1].dim().1 != 1 {
            return Err(TempoError::InvalidShape("last site is not a unit leg".into()));
        }
        let last = self.sites.pop().expect("non-empty");
        let (l, _, _) = last.dim();
        let tail = last.into_shape_with_order((l, 1)).expect("unit site");
        let prev = self.sites.pop().expect("two sites");
        let (lp, dp, _) = prev.dim();
        let m = prev.into_shape_with_order((lp * dp, l)).expect("prev matrix");
        self.sites.push(m.dot(&tail).into_shape_with_order((lp, dp, 1)).expect("merged"));
        Ok(())
    }
}

/// Truncating SVD sweep that leaves every site but the last left-orthonormal.
pub(crate) fn sweep_left_to_right(sites: &mut [Array3<Complex64>], policy: &TruncationPolicy) -> Result<f64> {
    let mut discarded = 0.0;
    for k in 0..sites.len().saturating_sub(1) {
        let (l, d, r) = sites[k].dim();
        let m = sites[k].view().into_shape_with_order((l * d, r)).expect("site matrix");
        let svd = svd_truncate(m, policy)?;
        discarded += svd.discarded_weight;
        let (u, sv) = svd.into_left_isometry();
        let chi = u.ncols();
        sites[k] = u.into_shape_with_order((l, d, chi)).expect("left isometry");
        let (_, dn, rn) = sites[k + 1].dim();
        let next = sites[k + 1].view().into_shape_with_order((r, dn * rn)).expect("next matrix");
        sites[k + 1] = sv.dot(&next).into_shape_with_order((chi, dn, rn)).expect("absorb right");
    }
    Ok(discarded)
}

/// Truncating SVD sweep that leaves every site but the first right-orthonormal.
pub(crate) fn sweep_right_to_left(sites: &mut [Array3<Complex64>], policy: &TruncationPolicy) -> Result<f64> {
    let mut discarded = 0.0;
    for k in (1..sites.len()).rev() {
        let (l, d, r) = sites[k].dim();
        let m = sites[k].view().into_shape_with_order((l, d * r)).expect("site matrix");
        let svd = svd_truncate(m, policy)?;
        discarded += svd.discarded_weight;
        let (us, vdag) = svd.into_right_isometry();
        let chi = vdag.nrows();
        sites[k] = vdag.into_shape_with_order((chi, d, r)).expect("right isometry");
        let (lp, dp, _) = sites[k - 1].dim();
        let prev = sites[k - 1].view().into_shape_with_order((lp * dp, l)).expect("prev matrix");
        sites[k - 1] = prev.dot(&us).into_shape_with_order((lp, dp, chi)).expect("absorb left");
    }
    Ok(discarded)
}
