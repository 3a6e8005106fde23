//! Reverse-mode automatic differentiation over a recorded tape.
//!
//! A [`Graph`] records every operation in creation order, so node ids are
//! already a topological order and the backward pass is a single reverse
//! sweep. Graphs are built per minibatch and thrown away afterwards.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::params::{ParamId, ParamStore};
use crate::tensor::{self, Tensor};

/// Lower clamp applied to the picked probability in [`Graph::cross_entropy`].
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    MulConst(Var, Tensor),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceRows(Var, usize),
    SliceCols(Var, usize),
    Transpose(Var),
    Tanh(Var),
    Sigmoid(Var),
    Exp(Var),
    MaxRows(Var, Vec<usize>),
    Softmax(Var),
    Sum(Var),
    Mean(Var),
    GatherRows(Var, Vec<usize>),
    CrossEntropy(Var, usize),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
}

fn expect_matrix(t: &Tensor, what: &str) -> Result<()> {
    if t.shape().len() != 2 {
        return Err(Error::Shape(format!("{what}: expected a matrix, got {:?}", t.shape())));
    }
    Ok(())
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node { value, op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Leaf that receives no gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Leaf that receives a gradient (for inputs under test).
    pub fn input(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Leaf bound to a stored parameter. Each parameter enters the graph once.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(&v) = self.params.get(&id) {
            return v;
        }
        let v = self.push(store.get(id).clone(), Op::Leaf, true);
        self.params.insert(id, v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = tensor::matmul(self.value(a), self.value(b))?;
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::MatMul(a, b), ng))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y)?;
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::Add(a, b), ng))
    }

    /// Adds the `1 x k` row `r` to every row of `a [n x k]`.
    pub fn add_row(&mut self, a: Var, r: Var) -> Result<Var> {
        let (av, rv) = (self.value(a), self.value(r));
        expect_matrix(av, "add_row")?;
        if rv.shape() != [1, av.cols()] {
            return Err(Error::Shape(format!(
                "add_row: row {:?} does not fit {:?}",
                rv.shape(),
                av.shape()
            )));
        }
        let k = av.cols();
        let mut value = av.clone();
        for (i, x) in value.data_mut().iter_mut().enumerate() {
            *x += rv.data()[i % k];
        }
        let ng = self.needs(a) || self.needs(r);
        Ok(self.push(value, Op::AddRow(a, r), ng))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y)?;
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::Mul(a, b), ng))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let value = self.value(a).map(|x| x * s);
        let ng = self.needs(a);
        self.push(value, Op::Scale(a, s), ng)
    }

    /// Elementwise product with a fixed tensor (dropout masks).
    pub fn mul_const(&mut self, a: Var, mask: Tensor) -> Result<Var> {
        let value = self.value(a).zip_map(&mask, |x, m| x * m)?;
        let ng = self.needs(a);
        Ok(self.push(value, Op::MulConst(a, mask), ng))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Shape("concat_cols: no inputs".into()))?;
        let rows = self.value(*first).rows();
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let v = self.value(p);
            expect_matrix(v, "concat_cols")?;
            if v.rows() != rows {
                return Err(Error::Shape(format!(
                    "concat_cols: row counts differ ({} vs {})",
                    rows,
                    v.rows()
                )));
            }
            widths.push(v.cols());
        }
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row_slice(r));
            }
        }
        let value = Tensor::matrix(rows, total, data)?;
        let ng = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(value, Op::ConcatCols(parts.to_vec()), ng))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Shape("concat_rows: no inputs".into()))?;
        let cols = self.value(*first).cols();
        let mut rows = 0;
        let mut data = Vec::new();
        for &p in parts {
            let v = self.value(p);
            expect_matrix(v, "concat_rows")?;
            if v.cols() != cols {
                return Err(Error::Shape(format!(
                    "concat_rows: column counts differ ({} vs {})",
                    cols,
                    v.cols()
                )));
            }
            rows += v.rows();
            data.extend_from_slice(v.data());
        }
        let value = Tensor::matrix(rows, cols, data)?;
        let ng = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(value, Op::ConcatRows(parts.to_vec()), ng))
    }

    /// Rows `[start, end)` of `a`.
    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let av = self.value(a);
        expect_matrix(av, "slice_rows")?;
        if start >= end || end > av.rows() {
            return Err(Error::Shape(format!(
                "slice_rows: range {start}..{end} out of bounds for {:?}",
                av.shape()
            )));
        }
        let c = av.cols();
        let value = Tensor::matrix(end - start, c, av.data()[start * c..end * c].to_vec())?;
        let ng = self.needs(a);
        Ok(self.push(value, Op::SliceRows(a, start), ng))
    }

    /// Columns `[start, end)` of `a`.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let av = self.value(a);
        expect_matrix(av, "slice_cols")?;
        if start >= end || end > av.cols() {
            return Err(Error::Shape(format!(
                "slice_cols: range {start}..{end} out of bounds for {:?}",
                av.shape()
            )));
        }
        let mut data = Vec::with_capacity(av.rows() * (end - start));
        for r in 0..av.rows() {
            data.extend_from_slice(&av.row_slice(r)[start..end]);
        }
        let value = Tensor::matrix(av.rows(), end - start, data)?;
        let ng = self.needs(a);
        Ok(self.push(value, Op::SliceCols(a, start), ng))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).transpose()?;
        let ng = self.needs(a);
        Ok(self.push(value, Op::Transpose(a), ng))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::tanh);
        let ng = self.needs(a);
        self.push(value, Op::Tanh(a), ng)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(tensor::sigmoid);
        let ng = self.needs(a);
        self.push(value, Op::Sigmoid(a), ng)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::exp);
        let ng = self.needs(a);
        self.push(value, Op::Exp(a), ng)
    }

    /// Column-wise maximum over all rows: `[n x k] -> [1 x k]`.
    pub fn max_rows(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        expect_matrix(av, "max_rows")?;
        let (n, k) = (av.rows(), av.cols());
        let mut arg = vec![0usize; k];
        let mut best: Vec<f64> = av.row_slice(0).to_vec();
        for r in 1..n {
            for (c, &v) in av.row_slice(r).iter().enumerate() {
                if v > best[c] {
                    best[c] = v;
                    arg[c] = r;
                }
            }
        }
        let value = Tensor::row(best);
        let ng = self.needs(a);
        Ok(self.push(value, Op::MaxRows(a, arg), ng))
    }

    /// Softmax over every element of `a`.
    pub fn softmax(&mut self, a: Var) -> Var {
        let value = tensor::softmax(self.value(a));
        let ng = self.needs(a);
        self.push(value, Op::Softmax(a), ng)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let value = Tensor::scalar(self.value(a).sum());
        let ng = self.needs(a);
        self.push(value, Op::Sum(a), ng)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let av = self.value(a);
        let value = Tensor::scalar(av.sum() / av.numel() as f64);
        let ng = self.needs(a);
        self.push(value, Op::Mean(a), ng)
    }

    /// Stacks rows `table[indices[i]]` into an `[indices.len() x k]` matrix.
    pub fn gather_rows(&mut self, table: Var, indices: &[usize]) -> Result<Var> {
        let tv = self.value(table);
        expect_matrix(tv, "gather_rows")?;
        if indices.is_empty() {
            return Err(Error::Shape("gather_rows: no indices".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= tv.rows()) {
            return Err(Error::Shape(format!(
                "gather_rows: index {bad} out of bounds for {:?}",
                tv.shape()
            )));
        }
        let k = tv.cols();
        let mut data = Vec::with_capacity(indices.len() * k);
        for &i in indices {
            data.extend_from_slice(tv.row_slice(i));
        }
        let value = Tensor::matrix(indices.len(), k, data)?;
        let ng = self.needs(table);
        Ok(self.push(value, Op::GatherRows(table, indices.to_vec()), ng))
    }

    /// `-ln max(p[class], PROB_FLOOR)` for a probability vector `p`.
    pub fn cross_entropy(&mut self, probs: Var, class: usize) -> Result<Var> {
        let pv = self.value(probs);
        if class >= pv.numel() {
            return Err(Error::InvalidArgument(format!(
                "class id {class} out of range for {} classes",
                pv.numel()
            )));
        }
        let value = Tensor::scalar(-pv.data()[class].max(PROB_FLOOR).ln());
        let ng = self.needs(probs);
        Ok(self.push(value, Op::CrossEntropy(probs, class), ng))
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.numel() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                lv.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::full(lv.shape(), 1.0));

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            self.propagate(node, &g, &mut grads)?;
            grads[i] = Some(g);
        }

        let params = self.params.iter().map(|(&id, &v)| (id, v)).collect();
        Ok(Gradients { grads, params })
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) -> Result<()> {
        let mut acc = |v: Var, delta: Tensor| -> Result<()> {
            if !self.nodes[v.0].needs_grad {
                return Ok(());
            }
            match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&delta),
                slot => {
                    *slot = Some(delta);
                    Ok(())
                }
            }
        };
        let y = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.needs(*a) {
                    acc(*a, tensor::matmul_nt(g, self.value(*b)))?;
                }
                if self.needs(*b) {
                    acc(*b, tensor::matmul_tn(self.value(*a), g))?;
                }
            }
            Op::Add(a, b) => {
                acc(*a, g.clone())?;
                acc(*b, g.clone())?;
            }
            Op::AddRow(a, r) => {
                acc(*a, g.clone())?;
                if self.needs(*r) {
                    let k = g.cols();
                    let mut sums = vec![0.0; k];
                    for (i, &v) in g.data().iter().enumerate() {
                        sums[i % k] += v;
                    }
                    acc(*r, Tensor::row(sums))?;
                }
            }
            Op::Mul(a, b) => {
                if self.needs(*a) {
                    acc(*a, g.zip_map(self.value(*b), |x, y| x * y)?)?;
                }
                if self.needs(*b) {
                    acc(*b, g.zip_map(self.value(*a), |x, y| x * y)?)?;
                }
            }
            Op::Scale(a, s) => acc(*a, g.map(|x| x * s))?,
            Op::MulConst(a, m) => acc(*a, g.zip_map(m, |x, y| x * y)?)?,
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let w = self.value(p).cols();
                    if self.needs(p) {
                        let mut data = Vec::with_capacity(g.rows() * w);
                        for r in 0..g.rows() {
                            data.extend_from_slice(&g.row_slice(r)[offset..offset + w]);
                        }
                        acc(p, Tensor::matrix(g.rows(), w, data)?)?;
                    }
                    offset += w;
                }
            }
            Op::ConcatRows(parts) => {
                let c = g.cols();
                let mut offset = 0;
                for &p in parts {
                    let h = self.value(p).rows();
                    if self.needs(p) {
                        let data = g.data()[offset * c..(offset + h) * c].to_vec();
                        acc(p, Tensor::matrix(h, c, data)?)?;
                    }
                    offset += h;
                }
            }
            Op::SliceRows(a, start) => {
                let av = self.value(*a);
                let c = av.cols();
                let mut d = Tensor::zeros(av.shape());
                d.data_mut()[start * c..start * c + g.numel()].copy_from_slice(g.data());
                acc(*a, d)?;
            }
            Op::SliceCols(a, start) => {
                let av = self.value(*a);
                let mut d = Tensor::zeros(av.shape());
                for r in 0..g.rows() {
                    for c in 0..g.cols() {
                        d.set(r, start + c, g.get(r, c));
                    }
                }
                acc(*a, d)?;
            }
            Op::Transpose(a) => acc(*a, g.transpose()?)?,
            Op::Tanh(a) => acc(*a, g.zip_map(y, |d, t| d * (1.0 - t * t))?)?,
            Op::Sigmoid(a) => acc(*a, g.zip_map(y, |d, s| d * s * (1.0 - s))?)?,
            Op::Exp(a) => acc(*a, g.zip_map(y, |d, e| d * e)?)?,
            Op::MaxRows(a, arg) => {
                let mut d = Tensor::zeros(self.value(*a).shape());
                for (c, &r) in arg.iter().enumerate() {
                    d.set(r, c, g.data()[c]);
                }
                acc(*a, d)?;
            }
            Op::Softmax(a) => {
                let dot: f64 = g.data().iter().zip(y.data()).map(|(d, p)| d * p).sum();
                acc(*a, g.zip_map(y, |d, p| p * (d - dot))?)?;
            }
            Op::Sum(a) => acc(*a, Tensor::full(self.value(*a).shape(), g.data()[0]))?,
            Op::Mean(a) => {
                let av = self.value(*a);
                acc(*a, Tensor::full(av.shape(), g.data()[0] / av.numel() as f64))?;
            }
            Op::GatherRows(table, indices) => {
                let tv = self.value(*table);
                let k = tv.cols();
                let mut d = Tensor::zeros(tv.shape());
                for (r, &i) in indices.iter().enumerate() {
                    let dst = &mut d.data_mut()[i * k..(i + 1) * k];
                    for (x, &v) in dst.iter_mut().zip(g.row_slice(r)) {
                        *x += v;
                    }
                }
                acc(*table, d)?;
            }
            Op::CrossEntropy(p, class) => {
                let pv = self.value(*p);
                let mut d = Tensor::zeros(pv.shape());
                let py = pv.data()[*class];
                if py > PROB_FLOOR {
                    d.data_mut()[*class] = -g.data()[0] / py;
                }
                acc(*p, d)?;
            }
        }
        Ok(())
    }
}

/// Result of [`Graph::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    params: Vec<(ParamId, Var)>,
}

impl Gradients {
    /// Gradient with respect to `v`, if `v` lies on a path to the loss.
    pub fn wrt(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient for a stored parameter; zero-filled when the parameter was
    /// bound but unused by the loss, `None` if never bound.
    pub fn param(&self, store: &ParamStore, id: ParamId) -> Option<Tensor> {
        let (_, v) = self.params.iter().find(|(p, _)| *p == id)?;
        Some(
            self.wrt(*v)
                .cloned()
                .unwrap_or_else(|| Tensor::zeros(store.get(id).shape())),
        )
    }

    /// Gradients for every parameter in `store`, zero for unbound ones.
    pub fn for_store(&self, store: &ParamStore) -> Vec<Tensor> {
        store
            .ids()
            .map(|id| self.param(store, id).unwrap_or_else(|| Tensor::zeros(store.get(id).shape())))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_tensor(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Tensor {
        Tensor::matrix(r, c, (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    /// Central-difference check of every input coordinate of a scalar function
    /// built by `f` from fresh leaves.
    fn check(inputs: Vec<Tensor>, f: impl Fn(&mut Graph, &[Var]) -> Var) {
        let mut g = Graph::new();
        let vars: Vec<Var> = inputs.iter().map(|t| g.input(t.clone())).collect();
        let loss = f(&mut g, &vars);
        let grads = g.backward(loss).unwrap();
        let eval = |ins: &[Tensor]| {
            let mut g = Graph::new();
            let vars: Vec<Var> = ins.iter().map(|t| g.constant(t.clone())).collect();
            let l = f(&mut g, &vars);
            g.value(l).item().unwrap()
        };
        let h = 1e-4;
        for (k, t) in inputs.iter().enumerate() {
            let analytic = grads.wrt(vars[k]).cloned().unwrap_or_else(|| Tensor::zeros(t.shape()));
            for i in 0..t.numel() {
                let mut plus = inputs.clone();
                plus[k].data_mut()[i] += h;
                let mut minus = inputs.clone();
                minus[k].data_mut()[i] -= h;
                let numeric = (eval(&plus) - eval(&minus)) / (2.0 * h);
                let a = analytic.data()[i];
                let denom = a.abs().max(numeric.abs()).max(1e-3);
                assert!(
                    (a - numeric).abs() / denom < 1e-6,
                    "input {k} coord {i}: analytic {a} numeric {numeric}"
                );
            }
        }
    }

    #[test]
    fn linear_loss_gradient_is_input() {
        let mut g = Graph::new();
        let w = g.input(Tensor::matrix(2, 3, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap());
        let x = g.constant(Tensor::column(vec![1.0, -2.0, 3.0]));
        let y = g.matmul(w, x).unwrap();
        let loss = g.sum(y);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.wrt(w).unwrap().data(), &[1.0, -2.0, 3.0, 1.0, -2.0, 3.0]);
    }

    #[test]
    fn constant_loss_has_zero_gradients() {
        let mut store = ParamStore::new();
        let id = store.insert("w", Tensor::row(vec![1.0, 2.0])).unwrap();
        let mut g = Graph::new();
        let _w = g.param(&store, id);
        let c = g.constant(Tensor::scalar(4.0));
        let grads = g.backward(c).unwrap();
        assert_eq!(grads.param(&store, id).unwrap().data(), &[0.0, 0.0]);
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let mut g = Graph::new();
        let v = g.input(Tensor::row(vec![1.0, 2.0]));
        assert!(matches!(g.backward(v), Err(Error::Contract(_))));
    }

    #[test]
    fn tanh_gradient_matches_finite_difference() {
        let mut g = Graph::new();
        let x = g.input(Tensor::scalar(0.5));
        let y = g.tanh(x);
        let grads = g.backward(y).unwrap();
        let h = 1e-6;
        let numeric = ((0.5f64 + h).tanh() - (0.5f64 - h).tanh()) / (2.0 * h);
        let a = grads.wrt(x).unwrap().data()[0];
        assert!((a - numeric).abs() / numeric.abs() < 1e-6);

        let mut g = Graph::new();
        let x = g.input(Tensor::scalar(30.0));
        let y = g.tanh(x);
        assert!((g.value(y).item().unwrap() - 1.0).abs() < 1e-12);
        assert!(g.backward(y).unwrap().wrt(x).unwrap().data()[0] < 1e-12);
    }

    #[test]
    fn elementwise_and_structural_ops() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = rand_tensor(&mut rng, 3, 4);
        let b = rand_tensor(&mut rng, 4, 2);
        let r = rand_tensor(&mut rng, 1, 2);
        let w = rand_tensor(&mut rng, 3, 2);
        check(vec![a, b, r, w], |g, v| {
            let m = g.matmul(v[0], v[1]).unwrap();
            let m = g.add_row(m, v[2]).unwrap();
            let t = g.tanh(m);
            let s = g.sigmoid(v[3]);
            let p = g.mul(t, s).unwrap();
            let e = g.exp(p);
            let tt = g.transpose(e).unwrap();
            let sl = g.slice_cols(tt, 1, 3).unwrap();
            let sr = g.slice_rows(sl, 0, 1).unwrap();
            let cat = g.concat_rows(&[sl, sr]).unwrap();
            let cat = g.concat_cols(&[cat, cat]).unwrap();
            let mx = g.max_rows(cat).unwrap();
            let sc = g.scale(mx, 0.7);
            let m2 = g.mean(sc);
            let s2 = g.sum(p);
            g.add(m2, s2).unwrap()
        });
    }

    #[test]
    fn softmax_cross_entropy_gather() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let table = rand_tensor(&mut rng, 4, 3);
        let w = rand_tensor(&mut rng, 3, 3);
        check(vec![table, w], |g, v| {
            let rows = g.gather_rows(v[0], &[2, 0, 2]).unwrap();
            let z = g.matmul(rows, v[1]).unwrap();
            let first = g.slice_rows(z, 0, 1).unwrap();
            let p = g.softmax(first);
            let masked = g.mul_const(z, Tensor::full(&[3, 3], 0.5)).unwrap();
            let ce = g.cross_entropy(p, 1).unwrap();
            let s = g.sum(masked);
            g.add(ce, s).unwrap()
        });
    }

    #[test]
    fn cross_entropy_rejects_bad_class() {
        let mut g = Graph::new();
        let p = g.constant(Tensor::row(vec![0.5, 0.5]));
        assert!(g.cross_entropy(p, 2).is_err());
    }

    #[test]
    fn max_rows_routes_gradient_to_argmax_only() {
        let mut g = Graph::new();
        let c = g.input(Tensor::column(vec![1.0, 5.0, 2.0]));
        let m = g.max_rows(c).unwrap();
        assert_eq!(g.value(m).data(), &[5.0]);
        let grads = g.backward(m).unwrap();
        assert_eq!(grads.wrt(c).unwrap().data(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn shared_param_gradients_accumulate() {
        let mut store = ParamStore::new();
        let id = store.insert("w", Tensor::scalar(3.0)).unwrap();
        let mut g = Graph::new();
        let a = g.param(&store, id);
        let b = g.param(&store, id);
        assert_eq!(a, b);
        let p = g.mul(a, b).unwrap();
        let grads = g.backward(p).unwrap();
        assert_eq!(grads.param(&store, id).unwrap().data(), &[6.0]);
    }
}
