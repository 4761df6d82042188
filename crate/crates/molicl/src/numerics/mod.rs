//! Dense linear algebra, parameter storage, reverse-mode gradients, the Adam
//! optimizer, and a finite-difference gradient checker.
//!
//! Training runs in 64-bit floats throughout; stored embeddings and index
//! files use 32-bit floats.

mod adam;
mod checkpoint;
mod gradcheck;
mod tape;

pub use adam::{adam_step, AdamConfig};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use gradcheck::{compare_gradients, finite_diff_check, GradCheckEntry, GradCheckReport};
pub use tape::{forward_backward, Tape, Var};

use std::collections::BTreeMap;

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("loss is not finite: {0}")]
    NonFiniteLoss(f64),
    #[error("tensor '{0}' contains non-finite values")]
    NonFiniteTensor(String),
    #[error("bad magic or version in checkpoint file")]
    BadMagic,
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for NumericsError {
    fn from(e: std::io::Error) -> Self {
        NumericsError::Io(e.to_string())
    }
}

/// A dense row-major matrix of 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2 {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor2 {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Tensor2 {
        assert_eq!(data.len(), rows * cols, "data length must equal rows*cols");
        Tensor2 { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Tensor2 {
        Tensor2 {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn scalar(v: f64) -> Tensor2 {
        Tensor2::new(1, 1, vec![v])
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Tensor2 {
        assert!(!rows.is_empty(), "from_rows needs at least one row");
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged rows");
            data.extend_from_slice(row);
        }
        Tensor2::new(rows.len(), cols, data)
    }

    /// Row vector `1 x n`.
    pub fn row_vector(values: &[f64]) -> Tensor2 {
        Tensor2::new(1, values.len(), values.to_vec())
    }

    /// Xavier-uniform initialization over `(-b, b)` with `b = sqrt(6/(fan_in+fan_out))`.
    pub fn xavier_uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor2 {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        Tensor2::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }
}

/// One named parameter with its gradient slot and Adam moments.
#[derive(Debug, Clone)]
pub struct Param {
    pub value: Tensor2,
    pub grad: Tensor2,
    pub(crate) m: Tensor2,
    pub(crate) v: Tensor2,
}

/// Named parameter tensors with matching gradient slots.
///
/// A store is confined to a single training thread; cloned snapshots may be
/// shared freely for inference.
#[derive(Debug, Clone)]
pub struct ParamStore {
    params: BTreeMap<String, Param>,
    pub rng_seed: u64,
    pub(crate) step: u64,
}

impl ParamStore {
    pub fn new(rng_seed: u64) -> ParamStore {
        ParamStore {
            params: BTreeMap::new(),
            rng_seed,
            step: 0,
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor2) {
        let name = name.into();
        let grad = Tensor2::zeros(value.rows, value.cols);
        let prev = self.params.insert(
            name.clone(),
            Param {
                m: grad.clone(),
                v: grad.clone(),
                grad,
                value,
            },
        );
        assert!(prev.is_none(), "duplicate parameter name '{name}'");
    }

    pub fn get(&self, name: &str) -> &Tensor2 {
        &self
            .params
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter '{name}'"))
            .value
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Tensor2 {
        &mut self
            .params
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown parameter '{name}'"))
            .value
    }

    pub fn grad(&self, name: &str) -> &Tensor2 {
        &self
            .params
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter '{name}'"))
            .grad
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn zero_grads(&mut self) {
        for p in self.params.values_mut() {
            p.grad.fill(0.0);
        }
    }

    pub fn accumulate_grad(&mut self, name: &str, grad: &Tensor2) {
        let p = self
            .params
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown parameter '{name}'"));
        assert_eq!(p.grad.shape(), grad.shape(), "gradient shape for '{name}'");
        for (dst, src) in p.grad.data.iter_mut().zip(&grad.data) {
            *dst += src;
        }
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = (&String, &mut Param)> {
        self.params.iter_mut()
    }

    pub(crate) fn params_iter(&self) -> impl Iterator<Item = (&String, &Param)> {
        self.params.iter()
    }
}

pub(crate) fn matmul_raw(a: &Tensor2, b: &Tensor2) -> Tensor2 {
    assert_eq!(a.cols, b.rows, "matmul inner dimensions");
    let mut out = Tensor2::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for p in 0..a.cols {
            let av = a.data[i * a.cols + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b.data[p * b.cols..(p + 1) * b.cols];
            let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

pub(crate) fn transpose_raw(a: &Tensor2) -> Tensor2 {
    let mut out = Tensor2::zeros(a.cols, a.rows);
    for i in 0..a.rows {
        for j in 0..a.cols {
            out.data[j * a.rows + i] = a.data[i * a.cols + j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn tensor_shape_and_access() {
        let mut t = Tensor2::zeros(2, 3);
        t.set(1, 2, 5.0);
        assert_eq!(t.get(1, 2), 5.0);
        assert_eq!(t.shape(), (2, 3));
        assert_eq!(t.row(1), &[0.0, 0.0, 5.0]);
    }

    #[test]
    fn matmul_known_product() {
        let a = Tensor2::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let b = Tensor2::new(2, 2, vec![5.0, 6.0, 7.0, 8.0]);
        let c = matmul_raw(&a, &b);
        assert_eq!(c.data(), &[19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn xavier_is_seeded_and_bounded() {
        let mut r1 = ChaCha8Rng::seed_from_u64(7);
        let mut r2 = ChaCha8Rng::seed_from_u64(7);
        let a = Tensor2::xavier_uniform(4, 6, &mut r1);
        let b = Tensor2::xavier_uniform(4, 6, &mut r2);
        assert_eq!(a, b);
        let bound = (6.0f64 / 10.0).sqrt();
        assert!(a.data().iter().all(|v| v.abs() < bound));
    }

    #[test]
    fn store_tracks_grads_by_name() {
        let mut store = ParamStore::new(1);
        store.insert("w", Tensor2::zeros(2, 2));
        store.accumulate_grad("w", &Tensor2::new(2, 2, vec![1.0; 4]));
        store.accumulate_grad("w", &Tensor2::new(2, 2, vec![1.0; 4]));
        assert_eq!(store.grad("w").data(), &[2.0; 4]);
        store.zero_grads();
        assert_eq!(store.grad("w").data(), &[0.0; 4]);
    }

    #[test]
    #[should_panic(expected = "duplicate parameter")]
    fn duplicate_names_panic() {
        let mut store = ParamStore::new(1);
        store.insert("w", Tensor2::zeros(1, 1));
        store.insert("w", Tensor2::zeros(1, 1));
    }
}
