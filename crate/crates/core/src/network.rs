//! The propagator network: `b_k` site tensors and the MPOs that grow the ADT
//! by one leg or advance a fixed-length ADT by one step.
//!
//! Sites are ordered newest time first. MPO site `k` couples the new index
//! `j_n` (carried along the bond) to the index `j_{n−k}` on its physical legs
//! through `I_k(j_n, j_{n−k})`. MPO site tensors are `[left, out, in, right]`.

use ndarray::Array4;
use num_complex::Complex64;

use crate::error::{Result, TempoError};
use crate::influence::{ClassPartition, InfluenceTable};
use crate::tensor::MatrixProductOperator;

const CLASS_TOL: f64 = 1e-12;

/// How a bond carries the newest index `j_n`.
#[derive(Clone, Copy, Debug)]
enum Bond<'a> {
    Full(usize),
    Classes(&'a ClassPartition),
}

impl Bond<'_> {
    fn dim(&self) -> usize {
        match self {
            Bond::Full(n) => *n,
            Bond::Classes(p) => p.len(),
        }
    }

    fn index_of(&self, j: usize) -> usize {
        match self {
            Bond::Full(_) => j,
            Bond::Classes(p) => p.class_of(j),
        }
    }

    fn representative(&self, a: usize) -> usize {
        match self {
            Bond::Full(_) => a,
            Bond::Classes(p) => p.representatives()[a],
        }
    }
}

/// Bond to the right of MPO site `k`. The bond into site 1 always carries the
/// full index because `I_1` contains the free propagator, which is not a
/// function of `O⁻` alone.
fn bond_after<'a>(k: usize, n: usize, classes: Option<&'a ClassPartition>) -> Bond<'a> {
    match classes {
        Some(p) if k >= 1 => Bond::Classes(p),
        _ => Bond::Full(n),
    }
}

/// Checks that `I_k` rows agree across each class, so evaluating on a
/// representative is exact.
fn check_classes(k: usize, table: &InfluenceTable, p: &ClassPartition) -> Result<()> {
    let Some(m) = table.get(k) else { return Ok(()) };
    let n = m.nrows();
    if p.liouville_dim() != n {
        return Err(TempoError::InvalidShape(format!("class partition over {} indices, table over {n}", p.liouville_dim())));
    }
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let r = p.representatives()[p.class_of(j)];
        for jp in 0..n {
            worst = worst.max((m[(j, jp)] - m[(r, jp)]).norm());
        }
    }
    if worst > CLASS_TOL {
        return Err(TempoError::ClassInconsistency(worst, k));
    }
    Ok(())
}

fn interior_site(k: usize, table: &InfluenceTable, left: Bond<'_>, right: Bond<'_>) -> Array4<Complex64> {
    let n = table.liouville_dim();
    let mut w = Array4::zeros((left.dim(), n, n, right.dim()));
    let mut seen = vec![false; left.dim()];
    for j_new in 0..n {
        let a = left.index_of(j_new);
        if std::mem::replace(&mut seen[a], true) {
            continue;
        }
        let row = left.representative(a);
        let b = right.index_of(row);
        for j in 0..n {
            w[[a, j, j, b]] = table.value(k, row, j);
        }
    }
    w
}

/// Interior `b_k`: `δ(α, α')·δ(j, i)·I_k(α, j)`. With classes the bonds are
/// indexed by `O⁻` class (the left bond of `b_1` stays full). Lags beyond the
/// table give the identity.
pub fn build_bsite(k: usize, table: &InfluenceTable, classes: Option<&ClassPartition>) -> Result<Array4<Complex64>> {
    let n = table.liouville_dim();
    if k == 0 {
        return Ok(first_site(table, classes));
    }
    if k >= 2 {
        if let Some(p) = classes {
            check_classes(k, table, p)?;
        }
    }
    Ok(interior_site(k, table, bond_after(k - 1, n, classes), bond_after(k, n, classes)))
}

/// `b_0`: creates the new leg, `I_0(j, j)` on the diagonal.
fn first_site(table: &InfluenceTable, classes: Option<&ClassPartition>) -> Array4<Complex64> {
    let n = table.liouville_dim();
    let right = bond_after(0, n, classes);
    let mut w = Array4::zeros((1, n, 1, right.dim()));
    for j in 0..n {
        w[[0, j, 0, right.index_of(j)]] = table.value(0, j, j);
    }
    w
}

/// Last site of either MPO: no right bond. `sum_output` folds the oldest output
/// leg into a unit leg, dropping that time point from the history.
fn last_site(k: usize, table: &InfluenceTable, classes: Option<&ClassPartition>, sum_output: bool) -> Result<Array4<Complex64>> {
    let n = table.liouville_dim();
    if k >= 2 {
        if let Some(p) = classes {
            check_classes(k, table, p)?;
        }
    }
    let left = bond_after(k - 1, n, classes);
    let out = if sum_output { 1 } else { n };
    let mut w = Array4::zeros((left.dim(), out, n, 1));
    for a in 0..left.dim() {
        let row = left.representative(a);
        for j in 0..n {
            let o = if sum_output { 0 } else { j };
            w[[a, o, j, 0]] = table.value(k, row, j);
        }
    }
    Ok(w)
}

/// MPO taking an `(n−1)`-leg ADT (with a unit leg pushed at the front) to the
/// `n`-leg ADT.
pub fn build_grow_mpo(n: usize, table: &InfluenceTable, classes: Option<&ClassPartition>) -> Result<MatrixProductOperator> {
    if n < 2 {
        return Err(TempoError::InvalidParameter { name: "n", reason: format!("grow MPO needs n ≥ 2, got {n}") });
    }
    if n > table.memory_len() + 1 {
        return Err(TempoError::LagOutOfRange { requested: n - 1, available: table.memory_len() });
    }
    let mut sites = Vec::with_capacity(n);
    sites.push(first_site(table, classes));
    for k in 1..n - 1 {
        sites.push(build_bsite(k, table, classes)?);
    }
    sites.push(last_site(n - 1, table, classes, false)?);
    MatrixProductOperator::from_sites(sites)
}

/// MPO advancing a `K`-leg ADT by one step: the grow MPO for `K + 1` legs with
/// the oldest output summed. The result has a trailing unit leg to absorb.
pub fn build_step_mpo(memory_len: usize, table: &InfluenceTable, classes: Option<&ClassPartition>) -> Result<MatrixProductOperator> {
    if memory_len < 1 {
        return Err(TempoError::InvalidParameter { name: "K", reason: "memory length must be ≥ 1".into() });
    }
    if memory_len > table.memory_len() {
        return Err(TempoError::LagOutOfRange { requested: memory_len, available: table.memory_len() });
    }
    let mut sites = Vec::with_capacity(memory_len + 1);
    sites.push(first_site(table, classes));
    for k in 1..memory_len {
        sites.push(build_bsite(k, table, classes)?);
    }
    sites.push(last_site(memory_len, table, classes, true)?);
    MatrixProductOperator::from_sites(sites)
}
