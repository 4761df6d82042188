//! Reverse-mode automatic differentiation over a linear tape.
//!
//! Operations append nodes that reference earlier nodes only, so the tape is
//! already topologically ordered and the backward pass is a single reverse
//! sweep. The op set covers everything the encoder and trainer build:
//! matmul, add (same-shape and row-broadcast), elementwise mul, scale,
//! leaky-relu, relu, exp, log, sigmoid, row softmax (plain and masked), mean
//! pooling over rows, column concatenation, row L2 normalization, dot
//! product, transpose, reshape, and sum.

use super::{matmul_raw, transpose_raw, NumericsError, ParamStore, Tensor2};

/// Handle to a tape node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Leaf,
    MatMul(usize, usize),
    Add(usize, usize),
    AddRow(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    LeakyRelu(usize, f64),
    Relu(usize),
    Exp(usize),
    Log(usize),
    Sigmoid(usize),
    SoftmaxRow(usize),
    MaskedSoftmaxRow(usize),
    MeanPoolRows(usize),
    ConcatCols(Vec<usize>),
    L2NormalizeRows(usize),
    Dot(usize, usize),
    Transpose(usize),
    Reshape(usize),
    Sum(usize),
}

struct Node {
    value: Tensor2,
    grad: Tensor2,
    op: Op,
}

/// A single forward computation with recorded operations.
pub struct Tape {
    nodes: Vec<Node>,
    params: Vec<(String, usize)>,
}

impl Default for Tape {
    fn default() -> Self {
        Tape::new()
    }
}

impl Tape {
    pub fn new() -> Tape {
        Tape {
            nodes: Vec::new(),
            params: Vec::new(),
        }
    }

    fn push(&mut self, value: Tensor2, op: Op) -> Var {
        let grad = Tensor2::zeros(value.rows(), value.cols());
        self.nodes.push(Node { value, grad, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor2 {
        &self.nodes[v.0].value
    }

    pub fn grad(&self, v: Var) -> &Tensor2 {
        &self.nodes[v.0].grad
    }

    /// A constant input; no gradient flows out of it.
    pub fn constant(&mut self, value: Tensor2) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Bind a named parameter from the store. Its gradient is written back
    /// by [`Tape::accumulate_grads`].
    pub fn param(&mut self, name: &str, store: &ParamStore) -> Var {
        let var = self.push(store.get(name).clone(), Op::Leaf);
        self.params.push((name.to_string(), var.0));
        var
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = matmul_raw(&self.nodes[a.0].value, &self.nodes[b.0].value);
        self.push(value, Op::MatMul(a.0, b.0))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(ta.shape(), tb.shape(), "add shapes");
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(x, y)| x + y)
            .collect();
        let value = Tensor2::new(ta.rows(), ta.cols(), data);
        self.push(value, Op::Add(a.0, b.0))
    }

    /// Add a `1 x n` row vector to every row of an `m x n` matrix.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let (ta, tr) = (&self.nodes[a.0].value, &self.nodes[row.0].value);
        assert_eq!(tr.rows(), 1, "add_row expects a row vector");
        assert_eq!(ta.cols(), tr.cols(), "add_row widths");
        let mut value = ta.clone();
        for i in 0..value.rows() {
            for j in 0..value.cols() {
                let v = value.get(i, j) + tr.get(0, j);
                value.set(i, j, v);
            }
        }
        self.push(value, Op::AddRow(a.0, row.0))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(ta.shape(), tb.shape(), "mul shapes");
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(x, y)| x * y)
            .collect();
        let value = Tensor2::new(ta.rows(), ta.cols(), data);
        self.push(value, Op::Mul(a.0, b.0))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let ta = &self.nodes[a.0].value;
        let data = ta.data().iter().map(|x| x * factor).collect();
        let value = Tensor2::new(ta.rows(), ta.cols(), data);
        self.push(value, Op::Scale(a.0, factor))
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let ta = &self.nodes[a.0].value;
        let data = ta
            .data()
            .iter()
            .map(|&x| if x > 0.0 { x } else { slope * x })
            .collect();
        let value = Tensor2::new(ta.rows(), ta.cols(), data);
        self.push(value, Op::LeakyRelu(a.0, slope))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let ta = &self.nodes[a.0].value;
        let data = ta.data().iter().map(|&x| x.max(0.0)).collect();
        let value = Tensor2::new(ta.rows(), ta.cols(), data);
        self.push(value, Op::Relu(a.0))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let ta = &self.nodes[a.0].value;
        let data = ta.data().iter().map(|x| x.exp()).collect();
        let value = Tensor2::new(ta.rows(), ta.cols(), data);
        self.push(value, Op::Exp(a.0))
    }

    pub fn log(&mut self, a: Var) -> Var {
        let ta = &self.nodes[a.0].value;
        let data = ta.data().iter().map(|x| x.ln()).collect();
        let value = Tensor2::new(ta.rows(), ta.cols(), data);
        self.push(value, Op::Log(a.0))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let ta = &self.nodes[a.0].value;
        let data = ta.data().iter().map(|x| 1.0 / (1.0 + (-x).exp())).collect();
        let value = Tensor2::new(ta.rows(), ta.cols(), data);
        self.push(value, Op::Sigmoid(a.0))
    }

    /// Row-wise softmax.
    pub fn softmax_row(&mut self, a: Var) -> Var {
        let ta = &self.nodes[a.0].value;
        let mut value = ta.clone();
        for i in 0..value.rows() {
            softmax_in_place(value.data_mut(), i, ta.cols(), None);
        }
        self.push(value, Op::SoftmaxRow(a.0))
    }

    /// Row-wise softmax restricted to positions where `mask` is nonzero;
    /// masked positions get probability zero. Every row must have at least
    /// one unmasked position.
    pub fn masked_softmax_row(&mut self, a: Var, mask: Tensor2) -> Var {
        let ta = &self.nodes[a.0].value;
        assert_eq!(ta.shape(), mask.shape(), "mask shape");
        let mut value = ta.clone();
        for i in 0..value.rows() {
            assert!(
                mask.row(i).iter().any(|&m| m != 0.0),
                "masked softmax row {i} has no unmasked entries"
            );
            softmax_in_place(value.data_mut(), i, ta.cols(), Some(mask.row(i)));
        }
        self.push(value, Op::MaskedSoftmaxRow(a.0))
    }

    /// Mean over rows: `m x n` to `1 x n`.
    pub fn mean_pool_rows(&mut self, a: Var) -> Var {
        let ta = &self.nodes[a.0].value;
        assert!(ta.rows() > 0, "mean pool of empty matrix");
        let mut out = vec![0.0; ta.cols()];
        for i in 0..ta.rows() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += ta.get(i, j);
            }
        }
        let m = ta.rows() as f64;
        out.iter_mut().for_each(|v| *v /= m);
        let value = Tensor2::new(1, ta.cols(), out);
        self.push(value, Op::MeanPoolRows(a.0))
    }

    /// Concatenate matrices with equal row counts along columns.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat of nothing");
        let rows = self.nodes[parts[0].0].value.rows();
        let total: usize = parts.iter().map(|p| self.nodes[p.0].value.cols()).sum();
        let mut value = Tensor2::zeros(rows, total);
        let mut offset = 0;
        for p in parts {
            let t = &self.nodes[p.0].value;
            assert_eq!(t.rows(), rows, "concat row counts");
            for i in 0..rows {
                for j in 0..t.cols() {
                    value.set(i, offset + j, t.get(i, j));
                }
            }
            offset += t.cols();
        }
        self.push(value, Op::ConcatCols(parts.iter().map(|p| p.0).collect()))
    }

    /// Normalize each row to unit L2 norm (norms below 1e-12 are clamped).
    pub fn l2_normalize_rows(&mut self, a: Var) -> Var {
        let ta = &self.nodes[a.0].value;
        let mut value = ta.clone();
        for i in 0..value.rows() {
            let norm = row_norm(ta.row(i)).max(1e-12);
            for j in 0..value.cols() {
                let v = value.get(i, j) / norm;
                value.set(i, j, v);
            }
        }
        self.push(value, Op::L2NormalizeRows(a.0))
    }

    /// Dot product of two `1 x n` vectors, producing a `1 x 1` scalar.
    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(ta.rows(), 1, "dot expects row vectors");
        assert_eq!(ta.shape(), tb.shape(), "dot shapes");
        let v: f64 = ta.data().iter().zip(tb.data()).map(|(x, y)| x * y).sum();
        self.push(Tensor2::scalar(v), Op::Dot(a.0, b.0))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = transpose_raw(&self.nodes[a.0].value);
        self.push(value, Op::Transpose(a.0))
    }

    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Var {
        let ta = &self.nodes[a.0].value;
        assert_eq!(ta.rows() * ta.cols(), rows * cols, "reshape sizes");
        let value = Tensor2::new(rows, cols, ta.data().to_vec());
        self.push(value, Op::Reshape(a.0))
    }

    /// Sum of all elements, producing a `1 x 1` scalar.
    pub fn sum(&mut self, a: Var) -> Var {
        let v: f64 = self.nodes[a.0].value.data().iter().sum();
        self.push(Tensor2::scalar(v), Op::Sum(a.0))
    }

    /// Run the reverse sweep from a `1 x 1` loss node and return its value.
    pub fn backward(&mut self, loss: Var) -> Result<f64, NumericsError> {
        let loss_value = {
            let t = &self.nodes[loss.0].value;
            assert_eq!(t.shape(), (1, 1), "loss must be a 1x1 scalar");
            t.get(0, 0)
        };
        if !loss_value.is_finite() {
            return Err(NumericsError::NonFiniteLoss(loss_value));
        }
        self.nodes[loss.0].grad.set(0, 0, 1.0);

        for idx in (0..=loss.0).rev() {
            // Split off the node so its inputs can be mutated.
            let (before, rest) = self.nodes.split_at_mut(idx);
            let node = &rest[0];
            let grad = node.grad.clone();
            if grad.data().iter().all(|&g| g == 0.0) {
                continue;
            }
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let da = matmul_raw(&grad, &transpose_raw(&before[*b].value));
                    let db = matmul_raw(&transpose_raw(&before[*a].value), &grad);
                    add_into(&mut before[*a].grad, &da);
                    add_into(&mut before[*b].grad, &db);
                }
                Op::Add(a, b) => {
                    add_into(&mut before[*a].grad, &grad);
                    add_into(&mut before[*b].grad, &grad);
                }
                Op::AddRow(a, r) => {
                    add_into(&mut before[*a].grad, &grad);
                    let cols = grad.cols();
                    for j in 0..cols {
                        let s: f64 = (0..grad.rows()).map(|i| grad.get(i, j)).sum();
                        let cur = before[*r].grad.get(0, j);
                        before[*r].grad.set(0, j, cur + s);
                    }
                }
                Op::Mul(a, b) => {
                    let (ga, gb) = {
                        let ta = &before[*a].value;
                        let tb = &before[*b].value;
                        let ga: Vec<f64> = grad
                            .data()
                            .iter()
                            .zip(tb.data())
                            .map(|(g, y)| g * y)
                            .collect();
                        let gb: Vec<f64> = grad
                            .data()
                            .iter()
                            .zip(ta.data())
                            .map(|(g, x)| g * x)
                            .collect();
                        (
                            Tensor2::new(grad.rows(), grad.cols(), ga),
                            Tensor2::new(grad.rows(), grad.cols(), gb),
                        )
                    };
                    add_into(&mut before[*a].grad, &ga);
                    add_into(&mut before[*b].grad, &gb);
                }
                Op::Scale(a, factor) => {
                    let ga: Vec<f64> = grad.data().iter().map(|g| g * factor).collect();
                    add_into(
                        &mut before[*a].grad,
                        &Tensor2::new(grad.rows(), grad.cols(), ga),
                    );
                }
                Op::LeakyRelu(a, slope) => {
                    let ga: Vec<f64> = grad
                        .data()
                        .iter()
                        .zip(before[*a].value.data())
                        .map(|(g, &x)| if x > 0.0 { *g } else { g * slope })
                        .collect();
                    add_into(
                        &mut before[*a].grad,
                        &Tensor2::new(grad.rows(), grad.cols(), ga),
                    );
                }
                Op::Relu(a) => {
                    let ga: Vec<f64> = grad
                        .data()
                        .iter()
                        .zip(before[*a].value.data())
                        .map(|(g, &x)| if x > 0.0 { *g } else { 0.0 })
                        .collect();
                    add_into(
                        &mut before[*a].grad,
                        &Tensor2::new(grad.rows(), grad.cols(), ga),
                    );
                }
                Op::Exp(a) => {
                    let ga: Vec<f64> = grad
                        .data()
                        .iter()
                        .zip(node.value.data())
                        .map(|(g, y)| g * y)
                        .collect();
                    add_into(
                        &mut before[*a].grad,
                        &Tensor2::new(grad.rows(), grad.cols(), ga),
                    );
                }
                Op::Log(a) => {
                    let ga: Vec<f64> = grad
                        .data()
                        .iter()
                        .zip(before[*a].value.data())
                        .map(|(g, x)| g / x)
                        .collect();
                    add_into(
                        &mut before[*a].grad,
                        &Tensor2::new(grad.rows(), grad.cols(), ga),
                    );
                }
                Op::Sigmoid(a) => {
                    let ga: Vec<f64> = grad
                        .data()
                        .iter()
                        .zip(node.value.data())
                        .map(|(g, y)| g * y * (1.0 - y))
                        .collect();
                    add_into(
                        &mut before[*a].grad,
                        &Tensor2::new(grad.rows(), grad.cols(), ga),
                    );
                }
                Op::SoftmaxRow(a) | Op::MaskedSoftmaxRow(a) => {
                    let y = &node.value;
                    let mut ga = Tensor2::zeros(y.rows(), y.cols());
                    for i in 0..y.rows() {
                        let gy: f64 = (0..y.cols()).map(|j| grad.get(i, j) * y.get(i, j)).sum();
                        for j in 0..y.cols() {
                            ga.set(i, j, y.get(i, j) * (grad.get(i, j) - gy));
                        }
                    }
                    add_into(&mut before[*a].grad, &ga);
                }
                Op::MeanPoolRows(a) => {
                    let rows = before[*a].value.rows();
                    let m = rows as f64;
                    let mut ga = Tensor2::zeros(rows, grad.cols());
                    for i in 0..rows {
                        for j in 0..grad.cols() {
                            ga.set(i, j, grad.get(0, j) / m);
                        }
                    }
                    add_into(&mut before[*a].grad, &ga);
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let cols = before[p].value.cols();
                        let mut gp = Tensor2::zeros(grad.rows(), cols);
                        for i in 0..grad.rows() {
                            for j in 0..cols {
                                gp.set(i, j, grad.get(i, offset + j));
                            }
                        }
                        add_into(&mut before[p].grad, &gp);
                        offset += cols;
                    }
                }
                Op::L2NormalizeRows(a) => {
                    let x = &before[*a].value;
                    let y = &node.value;
                    let mut ga = Tensor2::zeros(x.rows(), x.cols());
                    for i in 0..x.rows() {
                        let norm = row_norm(x.row(i)).max(1e-12);
                        let gy: f64 = (0..x.cols()).map(|j| grad.get(i, j) * y.get(i, j)).sum();
                        for j in 0..x.cols() {
                            ga.set(i, j, (grad.get(i, j) - y.get(i, j) * gy) / norm);
                        }
                    }
                    add_into(&mut before[*a].grad, &ga);
                }
                Op::Dot(a, b) => {
                    let g = grad.get(0, 0);
                    let (ga, gb) = {
                        let ta = &before[*a].value;
                        let tb = &before[*b].value;
                        let ga: Vec<f64> = tb.data().iter().map(|y| g * y).collect();
                        let gb: Vec<f64> = ta.data().iter().map(|x| g * x).collect();
                        (
                            Tensor2::new(1, ta.cols(), ga),
                            Tensor2::new(1, tb.cols(), gb),
                        )
                    };
                    add_into(&mut before[*a].grad, &ga);
                    add_into(&mut before[*b].grad, &gb);
                }
                Op::Transpose(a) => {
                    let ga = transpose_raw(&grad);
                    add_into(&mut before[*a].grad, &ga);
                }
                Op::Reshape(a) => {
                    let shape = before[*a].value.shape();
                    let ga = Tensor2::new(shape.0, shape.1, grad.data().to_vec());
                    add_into(&mut before[*a].grad, &ga);
                }
                Op::Sum(a) => {
                    let g = grad.get(0, 0);
                    let shape = before[*a].value.shape();
                    let ga = Tensor2::new(shape.0, shape.1, vec![g; shape.0 * shape.1]);
                    add_into(&mut before[*a].grad, &ga);
                }
            }
        }
        Ok(loss_value)
    }

    /// Add the gradients of all bound parameters into the store.
    pub fn accumulate_grads(&self, store: &mut ParamStore) {
        for (name, idx) in &self.params {
            store.accumulate_grad(name, &self.nodes[*idx].grad);
        }
    }
}

fn add_into(dst: &mut Tensor2, src: &Tensor2) {
    assert_eq!(dst.shape(), src.shape());
    for (d, s) in dst.data_mut().iter_mut().zip(src.data()) {
        *d += s;
    }
}

fn row_norm(row: &[f64]) -> f64 {
    row.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn softmax_in_place(data: &mut [f64], row: usize, cols: usize, mask: Option<&[f64]>) {
    let slice = &mut data[row * cols..(row + 1) * cols];
    let active = |j: usize| mask.is_none_or(|m| m[j] != 0.0);
    let max = slice
        .iter()
        .enumerate()
        .filter(|&(j, _)| active(j))
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (j, v) in slice.iter_mut().enumerate() {
        if active(j) {
            *v = (*v - max).exp();
            total += *v;
        } else {
            *v = 0.0;
        }
    }
    for v in slice.iter_mut() {
        *v /= total;
    }
}

/// Zero the store's gradients, run `build` to produce a scalar loss, run the
/// backward sweep, and populate the store's gradient slots.
pub fn forward_backward(
    store: &mut ParamStore,
    build: impl FnOnce(&mut Tape, &ParamStore) -> Var,
) -> Result<f64, NumericsError> {
    store.zero_grads();
    let mut tape = Tape::new();
    let loss = build(&mut tape, store);
    let value = tape.backward(loss)?;
    tape.accumulate_grads(store);
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_gradient_is_all_ones() {
        let mut store = ParamStore::new(0);
        store.insert(
            "w",
            Tensor2::new(2, 3, vec![0.5, -1.0, 2.0, 3.0, 4.0, -0.2]),
        );
        let loss = forward_backward(&mut store, |tape, s| {
            let w = tape.param("w", s);
            tape.sum(w)
        })
        .unwrap();
        assert!((loss - 8.3).abs() < 1e-12);
        assert_eq!(store.grad("w").data(), &[1.0; 6]);
    }

    #[test]
    fn half_squared_norm_gradient_is_the_tensor() {
        let mut store = ParamStore::new(0);
        let w = vec![0.5, -1.0, 2.0, 3.0];
        store.insert("w", Tensor2::new(2, 2, w.clone()));
        forward_backward(&mut store, |tape, s| {
            let wv = tape.param("w", s);
            let sq = tape.mul(wv, wv);
            let total = tape.sum(sq);
            tape.scale(total, 0.5)
        })
        .unwrap();
        for (g, x) in store.grad("w").data().iter().zip(&w) {
            assert!((g - x).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let mut store = ParamStore::new(0);
        store.insert("w", Tensor2::scalar(-1.0));
        let result = forward_backward(&mut store, |tape, s| {
            let w = tape.param("w", s);
            tape.log(w)
        });
        assert!(matches!(result, Err(NumericsError::NonFiniteLoss(_))));
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor2::new(2, 3, vec![1.0, 2.0, 3.0, -1.0, 0.0, 1.0]));
        let y = tape.softmax_row(x);
        for i in 0..2 {
            let s: f64 = tape.value(y).row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn masked_softmax_zeroes_masked_entries() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor2::new(1, 3, vec![5.0, 1.0, 1.0]));
        let mask = Tensor2::new(1, 3, vec![0.0, 1.0, 1.0]);
        let y = tape.masked_softmax_row(x, mask);
        let row = tape.value(y).row(0);
        assert_eq!(row[0], 0.0);
        assert!((row[1] - 0.5).abs() < 1e-12);
        assert!((row[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn l2_normalize_produces_unit_rows() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor2::new(1, 2, vec![3.0, 4.0]));
        let y = tape.l2_normalize_rows(x);
        assert!((tape.value(y).get(0, 0) - 0.6).abs() < 1e-12);
        assert!((tape.value(y).get(0, 1) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn matmul_chain_gradients_match_hand_derivation() {
        // loss = sum(A @ B) with A constant: dB[p, j] = sum_i A[i, p]
        let mut store = ParamStore::new(0);
        store.insert("b", Tensor2::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]));
        forward_backward(&mut store, |tape, s| {
            let a = tape.constant(Tensor2::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]));
            let b = tape.param("b", s);
            let c = tape.matmul(a, b);
            tape.sum(c)
        })
        .unwrap();
        assert_eq!(store.grad("b").data(), &[4.0, 4.0, 6.0, 6.0]);
    }

    #[test]
    fn reused_variable_accumulates_gradient() {
        // loss = sum(w) + sum(w) => dw = 2
        let mut store = ParamStore::new(0);
        store.insert("w", Tensor2::new(1, 2, vec![1.0, 1.0]));
        forward_backward(&mut store, |tape, s| {
            let w = tape.param("w", s);
            let a = tape.sum(w);
            let b = tape.sum(w);
            tape.add(a, b)
        })
        .unwrap();
        assert_eq!(store.grad("w").data(), &[2.0, 2.0]);
    }

    #[test]
    fn mean_pool_of_identical_rows_is_that_row() {
        let mut tape = Tape::new();
        let row = [0.25, -1.5, 3.0];
        let x = tape.constant(Tensor2::from_rows(&[
            row.to_vec(),
            row.to_vec(),
            row.to_vec(),
        ]));
        let pooled = tape.mean_pool_rows(x);
        assert_eq!(tape.value(pooled).data(), &row);
    }
}
