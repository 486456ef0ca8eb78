use ndarray::{s, Array1, Array2, ArrayView2};
use ndarray_linalg::{JobSvd, SVDDC, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TempoError};

/// Singular-value truncation rule applied to every decomposition.
///
/// `relative_cutoff` is measured against the largest singular value of the
/// matrix being decomposed, so the rule is insensitive to the overall scale of
/// the tensor. At least one singular value is always kept.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub relative_cutoff: f64,
    pub max_bond: Option<usize>,
}

impl TruncationPolicy {
    pub fn new(relative_cutoff: f64) -> Self {
        Self { relative_cutoff, max_bond: None }
    }

    /// Keeps every non-zero singular value.
    pub fn exact() -> Self {
        Self::new(0.0)
    }

    pub fn with_max_bond(mut self, max_bond: usize) -> Self {
        self.max_bond = Some(max_bond.max(1));
        self
    }

    fn retained(&self, singular_values: &[f64]) -> usize {
        let largest = singular_values.first().copied().unwrap_or(0.0);
        let threshold = self.relative_cutoff * largest;
        let mut keep = singular_values
            .iter()
            .take_while(|&&s| s > 0.0 && s >= threshold)
            .count();
        if let Some(cap) = self.max_bond {
            keep = keep.min(cap);
        }
        keep.max(1)
    }
}

#[derive(Clone, Debug)]
pub struct SvdResult {
    /// Columns are orthonormal left singular vectors.
    pub u: Array2<Complex64>,
    /// Non-increasing.
    pub singular_values: Array1<f64>,
    /// Rows are orthonormal right singular vectors.
    pub vdag: Array2<Complex64>,
    /// Root of the summed squares of the dropped singular values.
    pub discarded_weight: f64,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn reconstruct(&self) -> Array2<Complex64> {
        let mut us = self.u.clone();
        for (mut col, &s) in us.columns_mut().into_iter().zip(self.singular_values.iter()) {
            col.mapv_inplace(|z| z * s);
        }
        us.dot(&self.vdag)
    }

    /// `U` and `diag(λ)·V†`, the split used when sweeping left to right.
    pub fn into_left_isometry(self) -> (Array2<Complex64>, Array2<Complex64>) {
        let mut sv = self.vdag;
        for (mut row, &s) in sv.rows_mut().into_iter().zip(self.singular_values.iter()) {
            row.mapv_inplace(|z| z * s);
        }
        (self.u, sv)
    }

    /// `U·diag(λ)` and `V†`, the split used when sweeping right to left.
    pub fn into_right_isometry(self) -> (Array2<Complex64>, Array2<Complex64>) {
        let mut us = self.u;
        for (mut col, &s) in us.columns_mut().into_iter().zip(self.singular_values.iter()) {
            col.mapv_inplace(|z| z * s);
        }
        (us, self.vdag)
    }
}

pub fn svd_truncate(matrix: ArrayView2<'_, Complex64>, policy: &TruncationPolicy) -> Result<SvdResult> {
    let (rows, cols) = matrix.dim();
    if rows == 0 || cols == 0 {
        return Err(TempoError::InvalidShape(format!("empty {rows}x{cols} matrix")));
    }
    if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(TempoError::SvdFailure { rows, cols });
    }

    let (u, s, vt) = decompose(matrix)?;
    let values = s.to_vec();
    let keep = policy.retained(&values);
    let discarded_weight = values[keep..].iter().map(|x| x * x).sum::<f64>().sqrt();

    Ok(SvdResult {
        u: u.slice(s![.., ..keep]).as_standard_layout().into_owned(),
        singular_values: Array1::from(values[..keep].to_vec()),
        vdag: vt.slice(s![..keep, ..]).as_standard_layout().into_owned(),
        discarded_weight,
    })
}

type Factors = (Array2<Complex64>, Array1<f64>, Array2<Complex64>);

fn decompose(matrix: ArrayView2<'_, Complex64>) -> Result<Factors> {
    let (rows, cols) = matrix.dim();
    let owned = matrix.as_standard_layout().into_owned();
    // Divide-and-conquer is several times faster than QR iteration, but the
    // zgesdd we link against occasionally returns correct singular values with
    // wrong vectors and no error code. A reconstruction check costs one GEMM.
    if let Ok((Some(u), s, Some(vt))) = owned.svddc(JobSvd::Some) {
        if reconstruction_error(&owned, &u, &s, &vt) <= RECONSTRUCTION_TOL * frobenius(&owned) {
            return Ok((u, s, vt));
        }
    }
    match owned.svd(true, true) {
        Ok((Some(u), s, Some(vt))) => {
            let k = rows.min(cols);
            Ok((u.slice(s![.., ..k]).to_owned(), s, vt.slice(s![..k, ..]).to_owned()))
        }
        _ => Err(TempoError::SvdFailure { rows, cols }),
    }
}

const RECONSTRUCTION_TOL: f64 = 1e-11;

fn frobenius(m: &Array2<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn reconstruction_error(a: &Array2<Complex64>, u: &Array2<Complex64>, s: &Array1<f64>, vt: &Array2<Complex64>) -> f64 {
    let mut us = u.clone();
    for (mut col, &x) in us.columns_mut().into_iter().zip(s.iter()) {
        col.mapv_inplace(|z| z * x);
    }
    let mut diff = us.dot(vt);
    diff -= a;
    frobenius(&diff)
}
