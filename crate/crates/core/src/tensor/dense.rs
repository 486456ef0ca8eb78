use ndarray::{Array2, ArrayD, Dimension, IxDyn};
use num_complex::Complex64;

use crate::error::{Result, TempoError};

/// Dense complex tensor stored row-major: the last index runs fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    data: ArrayD<Complex64>,
}

impl Tensor {
    pub fn from_vec(shape: &[usize], values: Vec<Complex64>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(TempoError::InvalidShape(format!("zero-sized leg in {shape:?}")));
        }
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(TempoError::InvalidShape(format!(
                "shape {shape:?} needs {expected} values, got {}",
                values.len()
            )));
        }
        let data = ArrayD::from_shape_vec(IxDyn(shape), values)
            .map_err(|e| TempoError::InvalidShape(e.to_string()))?;
        Ok(Self { data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self { data: ArrayD::zeros(IxDyn(shape)) }
    }

    pub fn from_fn<F>(shape: &[usize], mut f: F) -> Self
    where
        F: FnMut(&[usize]) -> Complex64,
    {
        let data = ArrayD::from_shape_fn(IxDyn(shape), |idx| f(idx.slice()));
        Self { data }
    }

    pub fn from_array(data: ArrayD<Complex64>) -> Self {
        Self { data: data.as_standard_layout().into_owned() }
    }

    pub fn shape(&self) -> &[usize] {
        self.data.shape()
    }

    pub fn rank(&self) -> usize {
        self.data.ndim()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, index: &[usize]) -> Complex64 {
        self.data[IxDyn(index)]
    }

    pub fn array(&self) -> &ArrayD<Complex64> {
        &self.data
    }

    pub fn into_array(self) -> ArrayD<Complex64> {
        self.data
    }

    /// Values in linearisation order.
    pub fn values(&self) -> impl Iterator<Item = &Complex64> {
        self.data.iter()
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        let values: Vec<Complex64> = self.data.iter().copied().collect();
        Self::from_vec(shape, values)
    }

    /// Reorders legs so that new leg `i` is old leg `axes[i]`.
    pub fn transpose(&self, axes: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.rank()];
        if axes.len() != self.rank() {
            return Err(TempoError::InvalidShape(format!(
                "permutation {axes:?} for rank-{} tensor",
                self.rank()
            )));
        }
        for &a in axes {
            if a >= self.rank() || std::mem::replace(&mut seen[a], true) {
                return Err(TempoError::InvalidShape(format!("invalid permutation {axes:?}")));
            }
        }
        let data = self.data.clone().permuted_axes(IxDyn(axes));
        Ok(Self::from_array(data))
    }

    /// Groups the first `split` legs into rows and the rest into columns.
    pub fn matricize(&self, split: usize) -> Array2<Complex64> {
        let rows: usize = self.shape()[..split].iter().product();
        let cols: usize = self.shape()[split..].iter().product();
        let values: Vec<Complex64> = self.data.iter().copied().collect();
        Array2::from_shape_vec((rows, cols), values).expect("row-major matricisation")
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        assert_eq!(self.shape(), other.shape(), "comparing tensors of different shapes");
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}
