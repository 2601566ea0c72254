//! Dense M-way tensors, mode-m matrixizing and mode-m products.
//!
//! Modes are numbered from 1, as in the usual multilinear notation.
//!
//! Storage is a single flat buffer in which the **first mode varies fastest**:
//! the element at multi-index `(i_1, ..., i_M)` (0-based) lives at
//! `i_1 + I_1 * (i_2 + I_2 * (i_3 + ...))`.
//!
//! Matrixizing along mode `m` produces an `I_m x (prod_{n != m} I_n)` matrix
//! whose columns sweep the remaining modes in ascending order, the lowest
//! remaining mode varying fastest. Concretely, column
//! `k = sum_{n != m} i_n * prod_{l < n, l != m} I_l`. Every other module relies
//! on this convention, in particular the reshape in multilinear projection.

use crate::error::{Error, Result};
use crate::matrix::{norm, Matrix};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

/// Splits the shape around mode index `m0` (0-based) into
/// (product of extents before, extent, product of extents after).
fn split_extents(shape: &[usize], m0: usize) -> (usize, usize, usize) {
    let before = shape[..m0].iter().product();
    let after = shape[m0 + 1..].iter().product();
    (before, shape[m0], after)
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::shape("a tensor needs at least one mode"));
    }
    if let Some(pos) = shape.iter().position(|&e| e == 0) {
        return Err(Error::shape(format!("extent of mode {} is zero", pos + 1)));
    }
    Ok(shape.iter().product())
}

impl DenseTensor {
    /// Wraps `data`, laid out first-mode-fastest, as a tensor of the given shape.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = check_shape(&shape)?;
        if data.len() != len {
            return Err(Error::shape(format!(
                "shape {shape:?} needs {len} elements, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len = check_shape(&shape)?;
        Ok(Self {
            shape,
            data: vec![0.0; len],
        })
    }

    /// Builds a tensor by evaluating `f` at every 0-based multi-index.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = check_shape(&shape)?;
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&idx));
            for (i, &e) in idx.iter_mut().zip(&shape) {
                *i += 1;
                if *i < e {
                    break;
                }
                *i = 0;
            }
        }
        Ok(Self { shape, data })
    }

    /// A matrix viewed as a 2-mode tensor: mode 1 indexes rows, mode 2 columns.
    pub fn from_matrix(m: &Matrix) -> Self {
        Self {
            shape: vec![m.rows(), m.cols()],
            data: m.transpose().into_vec(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Number of modes `M`.
    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.shape.len(), "index order mismatch");
        let mut off = 0;
        for (&i, &e) in index.iter().zip(&self.shape).rev() {
            assert!(i < e, "index {index:?} out of bounds for shape {:?}", self.shape);
            off = off * e + i;
        }
        off
    }

    /// Element at a 0-based multi-index.
    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let off = self.offset(index);
        self.data[off] = value;
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| v * alpha).collect(),
        }
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::shape(format!(
                "shape mismatch: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn add(&self, other: &DenseTensor) -> Result<Self> {
        self.sub(&other.scale(-1.0))
    }

    fn mode_index(&self, mode: usize) -> Result<usize> {
        if mode == 0 || mode > self.order() {
            return Err(Error::InvalidMode {
                mode,
                order: self.order(),
            });
        }
        Ok(mode - 1)
    }

    /// Mode-`mode` matrixizing (unfolding); see the module docs for the column order.
    pub fn matrixize(&self, mode: usize) -> Result<Matrix> {
        let m0 = self.mode_index(mode)?;
        let (before, extent, after) = split_extents(&self.shape, m0);
        let cols = before * after;
        let mut out = Matrix::zeros(extent, cols);
        let dst = out.as_mut_slice();
        for r in 0..after {
            for i in 0..extent {
                let src = &self.data[before * (i + extent * r)..][..before];
                dst[i * cols + before * r..][..before].copy_from_slice(src);
            }
        }
        Ok(out)
    }

    /// Inverse of [`matrixize`](Self::matrixize) for the given shape and mode.
    pub fn tensorize(m: &Matrix, shape: &[usize], mode: usize) -> Result<Self> {
        check_shape(shape)?;
        if mode == 0 || mode > shape.len() {
            return Err(Error::InvalidMode {
                mode,
                order: shape.len(),
            });
        }
        let m0 = mode - 1;
        let (before, extent, after) = split_extents(shape, m0);
        if m.rows() != extent || m.cols() != before * after {
            return Err(Error::shape(format!(
                "a {}x{} matrix cannot be tensorized along mode {mode} into shape {shape:?} \
                 (expected {extent}x{})",
                m.rows(),
                m.cols(),
                before * after
            )));
        }
        let cols = m.cols();
        let src = m.as_slice();
        let mut data = vec![0.0; extent * before * after];
        for r in 0..after {
            for i in 0..extent {
                data[before * (i + extent * r)..][..before]
                    .copy_from_slice(&src[i * cols + before * r..][..before]);
            }
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Mode-`mode` product `self x_mode a`, where `a` is `J x I_mode`.
    ///
    /// The result has extent `J` along `mode`; all other extents are unchanged.
    pub fn mode_product(&self, a: &Matrix, mode: usize) -> Result<Self> {
        let m0 = self.mode_index(mode)?;
        let (before, extent, after) = split_extents(&self.shape, m0);
        if a.cols() != extent {
            return Err(Error::shape(format!(
                "mode-{mode} product needs a matrix with {extent} columns, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let j_ext = a.rows();
        let mut shape = self.shape.clone();
        shape[m0] = j_ext;
        check_shape(&shape)?;
        let mut data = vec![0.0; before * j_ext * after];
        for r in 0..after {
            for j in 0..j_ext {
                let dst = &mut data[before * (j + j_ext * r)..][..before];
                for (i, &coef) in a.row(j).iter().enumerate() {
                    if coef == 0.0 {
                        continue;
                    }
                    let src = &self.data[before * (i + extent * r)..][..before];
                    for (d, &s) in dst.iter_mut().zip(src) {
                        *d += coef * s;
                    }
                }
            }
        }
        Ok(Self { shape, data })
    }

    /// Mode product with the transpose of `a` (`a` is `I_mode x J`).
    pub fn mode_product_t(&self, a: &Matrix, mode: usize) -> Result<Self> {
        self.mode_product(&a.transpose(), mode)
    }

    /// The sub-tensor at `index` along `mode`, with that mode removed.
    ///
    /// Slicing a 3-mode tensor along mode 3 yields a 2-mode tensor; use
    /// [`to_matrix`](Self::to_matrix) to view it as a matrix.
    pub fn slice(&self, mode: usize, index: usize) -> Result<Self> {
        let m0 = self.mode_index(mode)?;
        if self.order() == 1 {
            return Err(Error::shape("cannot slice a 1-mode tensor"));
        }
        let (before, extent, after) = split_extents(&self.shape, m0);
        if index >= extent {
            return Err(Error::shape(format!(
                "slice index {index} out of range for extent {extent}"
            )));
        }
        let mut data = Vec::with_capacity(before * after);
        for r in 0..after {
            data.extend_from_slice(&self.data[before * (index + extent * r)..][..before]);
        }
        let mut shape = self.shape.clone();
        shape.remove(m0);
        Ok(Self { shape, data })
    }

    /// A 2-mode tensor as a matrix (mode 1 = rows). Equal to `matrixize(1)`.
    pub fn to_matrix(&self) -> Result<Matrix> {
        if self.order() != 2 {
            return Err(Error::shape(format!(
                "to_matrix needs a 2-mode tensor, shape is {:?}",
                self.shape
            )));
        }
        self.matrixize(1)
    }
}
