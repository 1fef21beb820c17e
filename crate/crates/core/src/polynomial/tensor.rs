//! Row-major dense arrays with per-axis linear maps.

use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Tensor<T> {
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

impl<T: Clone> Tensor<T> {
    pub fn filled(shape: Vec<usize>, value: T) -> Self {
        let n = shape.iter().product();
        Self {
            data: alloc::vec![value; n],
            shape,
        }
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = alloc::vec![1; self.shape.len()];
        for a in (0..self.shape.len().saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.shape[a + 1];
        }
        s
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        let strides = self.strides();
        idx.iter().zip(&strides).map(|(i, s)| i * s).sum()
    }

    pub fn get(&self, idx: &[usize]) -> &T {
        &self.data[self.offset(idx)]
    }

    /// Applies `f` to every fiber along `axis`; each call must return
    /// `new_len` values.
    pub fn map_axis<U: Clone>(
        &self,
        axis: usize,
        new_len: usize,
        mut f: impl FnMut(&[T]) -> Vec<U>,
    ) -> Tensor<U> {
        let len = self.shape[axis];
        let inner: usize = self.shape[axis + 1..].iter().product();
        let outer: usize = self.shape[..axis].iter().product();
        let mut shape = self.shape.clone();
        shape[axis] = new_len;
        let mut data: Vec<Option<U>> = (0..outer * new_len * inner).map(|_| None).collect();
        let mut fiber = Vec::with_capacity(len);
        for o in 0..outer {
            for i in 0..inner {
                fiber.clear();
                for k in 0..len {
                    fiber.push(self.data[(o * len + k) * inner + i].clone());
                }
                let out = f(&fiber);
                debug_assert_eq!(out.len(), new_len);
                for (k, v) in out.into_iter().enumerate() {
                    data[(o * new_len + k) * inner + i] = Some(v);
                }
            }
        }
        Tensor {
            shape,
            data: data.into_iter().map(|v| v.expect("filled")).collect(),
        }
    }
}

/// Iterates over all multi-indices of `shape` in row-major order.
pub(crate) fn indices(shape: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = shape.iter().product();
    (0..total).map(move |mut flat| {
        let mut idx = alloc::vec![0; shape.len()];
        for a in (0..shape.len()).rev() {
            idx[a] = flat % shape[a];
            flat /= shape[a];
        }
        idx
    })
}
