//! Reverse-mode gradient tape over dense matrices.
//!
//! Nodes are appended in evaluation order, so the node list is already a
//! topological order and `backward` is a single reverse sweep.

use alloc::borrow::Cow;
use alloc::vec::Vec;

use super::matrix::{matmul, matmul_a_bt_acc, matmul_at_b_acc, row_softmax, row_xent, sigmoid, Matrix};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Param,
    Input,
    MatMul(Var, Var),
    AddRow(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Gather(Var, Vec<u32>),
    SoftmaxXent(Var, Vec<Option<u32>>),
}

#[derive(Debug)]
struct Node<'a> {
    value: Cow<'a, Matrix>,
    op: Op,
    needs_grad: bool,
}

/// A recording of matrix operations. Parameters are borrowed, not copied.
#[derive(Debug, Default)]
pub struct Tape<'a> {
    nodes: Vec<Node<'a>>,
}

impl<'a> Tape<'a> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Matrix, op: Op, inputs: &[Var]) -> Var {
        let needs_grad = inputs.iter().any(|v| self.nodes[v.0].needs_grad);
        self.nodes.push(Node { value: Cow::Owned(value), op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    /// A trainable leaf; `backward` reports its gradient.
    pub fn param(&mut self, m: &'a Matrix) -> Var {
        self.nodes.push(Node { value: Cow::Borrowed(m), op: Op::Param, needs_grad: true });
        Var(self.nodes.len() - 1)
    }

    /// A constant leaf.
    pub fn input(&mut self, m: Matrix) -> Var {
        self.nodes.push(Node { value: Cow::Owned(m), op: Op::Input, needs_grad: false });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let out = matmul(self.value(a), self.value(b));
        self.push(out, Op::MatMul(a, b), &[a, b])
    }

    /// `a` plus the single-row `bias` broadcast over every row.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(bias));
        assert!(bv.rows() == 1 && bv.cols() == av.cols(), "bias shape mismatch");
        let mut out = av.clone();
        let cols = av.cols();
        for (i, x) in out.data_mut().iter_mut().enumerate() {
            *x += bv.data()[i % cols];
        }
        self.push(out, Op::AddRow(a, bias), &[a, bias])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a).zip(self.value(b), |x, y| x + y);
        self.push(out, Op::Add(a, b), &[a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a).zip(self.value(b), |x, y| x - y);
        self.push(out, Op::Sub(a, b), &[a, b])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a).zip(self.value(b), |x, y| x * y);
        self.push(out, Op::Mul(a, b), &[a, b])
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(sigmoid);
        self.push(out, Op::Sigmoid(a), &[a])
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).map(libm::tanh);
        self.push(out, Op::Tanh(a), &[a])
    }

    /// Rows of `table` picked by `ids`.
    pub fn gather(&mut self, table: Var, ids: Vec<u32>) -> Var {
        let t = self.value(table);
        let mut data = Vec::with_capacity(ids.len() * t.cols());
        for &id in &ids {
            data.extend_from_slice(t.row(id as usize));
        }
        let out = Matrix::from_vec(ids.len(), t.cols(), data);
        self.push(out, Op::Gather(table, ids), &[table])
    }

    /// Per-row cross-entropy of `logits` against `targets`, as a column.
    /// Rows whose target is `None` contribute exactly 0.
    pub fn softmax_xent(&mut self, logits: Var, targets: Vec<Option<u32>>) -> Var {
        let l = self.value(logits);
        assert_eq!(l.rows(), targets.len(), "one target per row");
        let data = targets
            .iter()
            .enumerate()
            .map(|(i, t)| t.map_or(0.0, |t| row_xent(l.row(i), t as usize)))
            .collect();
        let out = Matrix::from_vec(targets.len(), 1, data);
        self.push(out, Op::SoftmaxXent(logits, targets), &[logits])
    }

    /// Propagate the given output cotangents back through the tape. The
    /// result is indexed by node; entries are `None` for nodes that do not
    /// depend on a parameter or received no gradient.
    pub fn backward(&self, seeds: &[(Var, Matrix)]) -> Vec<Option<Matrix>> {
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        for (v, g) in seeds {
            assert!(self.value(*v).same_shape(g), "seed shape mismatch");
            accumulate(&mut grads[v.0], g.clone());
        }
        for i in (0..self.nodes.len()).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(&node.op, &node.value, &g, &mut grads);
            grads[i] = Some(g);
        }
        grads
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn propagate(&self, op: &Op, y: &Matrix, g: &Matrix, grads: &mut [Option<Matrix>]) {
        match *op {
            Op::Param | Op::Input => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(a), self.value(b));
                if self.wants(a) {
                    let slot = grads[a.0].get_or_insert_with(|| Matrix::zeros(av.rows(), av.cols()));
                    matmul_a_bt_acc(g, bv, slot);
                }
                if self.wants(b) {
                    let slot = grads[b.0].get_or_insert_with(|| Matrix::zeros(bv.rows(), bv.cols()));
                    matmul_at_b_acc(av, g, slot);
                }
            }
            Op::AddRow(a, bias) => {
                if self.wants(a) {
                    accumulate(&mut grads[a.0], g.clone());
                }
                if self.wants(bias) {
                    let mut col = Matrix::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        for (c, &x) in col.data_mut().iter_mut().zip(g.row(r)) {
                            *c += x;
                        }
                    }
                    accumulate(&mut grads[bias.0], col);
                }
            }
            Op::Add(a, b) => {
                if self.wants(a) {
                    accumulate(&mut grads[a.0], g.clone());
                }
                if self.wants(b) {
                    accumulate(&mut grads[b.0], g.clone());
                }
            }
            Op::Sub(a, b) => {
                if self.wants(a) {
                    accumulate(&mut grads[a.0], g.clone());
                }
                if self.wants(b) {
                    accumulate(&mut grads[b.0], g.map(|x| -x));
                }
            }
            Op::Mul(a, b) => {
                if self.wants(a) {
                    accumulate(&mut grads[a.0], g.zip(self.value(b), |x, y| x * y));
                }
                if self.wants(b) {
                    accumulate(&mut grads[b.0], g.zip(self.value(a), |x, y| x * y));
                }
            }
            Op::Sigmoid(a) => accumulate(&mut grads[a.0], g.zip(y, |d, s| d * s * (1.0 - s))),
            Op::Tanh(a) => accumulate(&mut grads[a.0], g.zip(y, |d, t| d * (1.0 - t * t))),
            Op::Gather(table, ref ids) => {
                let t = self.value(table);
                let slot = grads[table.0].get_or_insert_with(|| Matrix::zeros(t.rows(), t.cols()));
                let cols = t.cols();
                for (r, &id) in ids.iter().enumerate() {
                    let dst = &mut slot.data_mut()[id as usize * cols..(id as usize + 1) * cols];
                    for (d, &x) in dst.iter_mut().zip(g.row(r)) {
                        *d += x;
                    }
                }
            }
            Op::SoftmaxXent(logits, ref targets) => {
                let l = self.value(logits);
                let mut d = Matrix::zeros(l.rows(), l.cols());
                let cols = l.cols();
                for (r, t) in targets.iter().enumerate() {
                    let (Some(t), seed) = (*t, g.get(r, 0)) else { continue };
                    if seed == 0.0 {
                        continue;
                    }
                    let p = row_softmax(l.row(r));
                    let dst = &mut d.data_mut()[r * cols..(r + 1) * cols];
                    for (k, (o, &pk)) in dst.iter_mut().zip(&p).enumerate() {
                        let onehot = if k == t as usize { 1.0 } else { 0.0 };
                        *o = seed * (pk - onehot);
                    }
                }
                accumulate(&mut grads[logits.0], d);
            }
        }
    }
}

fn accumulate(slot: &mut Option<Matrix>, g: Matrix) {
    match slot {
        Some(acc) => acc.add_assign(&g),
        None => *slot = Some(g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ones(r: usize, c: usize) -> Matrix {
        Matrix::from_vec(r, c, vec![1.0; r * c])
    }

    #[test]
    fn product_rule() {
        let a = Matrix::from_vec(1, 2, vec![3.0, -2.0]);
        let b = Matrix::from_vec(1, 2, vec![0.5, 4.0]);
        let mut t = Tape::new();
        let (va, vb) = (t.param(&a), t.param(&b));
        let p = t.mul(va, vb);
        let s = t.sub(p, va);
        let g = t.backward(&[(s, ones(1, 2))]);
        assert_eq!(g[va.0].as_ref().unwrap().data(), [-0.5, 3.0]);
        assert_eq!(g[vb.0].as_ref().unwrap().data(), [3.0, -2.0]);
    }

    #[test]
    fn inputs_get_no_gradient() {
        let w = Matrix::from_vec(2, 1, vec![1.0, 2.0]);
        let mut t = Tape::new();
        let x = t.input(ones(3, 2));
        let vw = t.param(&w);
        let y = t.matmul(x, vw);
        let g = t.backward(&[(y, ones(3, 1))]);
        assert!(g[x.0].is_none());
        assert_eq!(g[vw.0].as_ref().unwrap().data(), [3.0, 3.0]);
    }

    #[test]
    fn gather_scatters_back() {
        let table = Matrix::from_vec(3, 1, vec![10.0, 20.0, 30.0]);
        let mut t = Tape::new();
        let vt = t.param(&table);
        let rows = t.gather(vt, vec![2, 0, 2]);
        assert_eq!(t.value(rows).data(), [30.0, 10.0, 30.0]);
        let g = t.backward(&[(rows, Matrix::from_vec(3, 1, vec![1.0, 2.0, 4.0]))]);
        assert_eq!(g[vt.0].as_ref().unwrap().data(), [2.0, 0.0, 5.0]);
    }

    #[test]
    fn masked_rows_are_inert() {
        let logits = Matrix::from_vec(2, 3, vec![0.1, 0.2, 0.3, 5.0, -1.0, 2.0]);
        let mut t = Tape::new();
        let vl = t.param(&logits);
        let x = t.softmax_xent(vl, vec![None, Some(1)]);
        assert_eq!(t.value(x).get(0, 0), 0.0);
        let g = t.backward(&[(x, ones(2, 1))]);
        let d = g[vl.0].as_ref().unwrap();
        assert!(d.row(0).iter().all(|&v| v == 0.0));
        assert!(d.row(1).iter().sum::<f64>().abs() < 1e-15);
        assert!(d.get(1, 1) < 0.0);
    }
}
