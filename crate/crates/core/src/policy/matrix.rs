use alloc::vec;
use alloc::vec::Vec;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data has the wrong length");
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn same_shape(&self, other: &Matrix) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub(crate) fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub(crate) fn zip(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert!(self.same_shape(other), "shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub(crate) fn add_assign(&mut self, other: &Matrix) {
        assert!(self.same_shape(other), "shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// `a · b`. Each output element sums over the inner index in ascending
/// order, so a row's result does not depend on the other rows.
pub(crate) fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.cols, b.rows, "matmul inner dimensions differ");
    let mut c = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let out = &mut c.data[i * b.cols..(i + 1) * b.cols];
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            for (o, &bkj) in out.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    }
    c
}

/// `acc += aᵀ · dc`
pub(crate) fn matmul_at_b_acc(a: &Matrix, dc: &Matrix, acc: &mut Matrix) {
    for i in 0..a.rows {
        let drow = dc.row(i);
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let out = &mut acc.data[k * dc.cols..(k + 1) * dc.cols];
            for (o, &d) in out.iter_mut().zip(drow) {
                *o += aik * d;
            }
        }
    }
}

/// `acc += dc · bᵀ`
pub(crate) fn matmul_a_bt_acc(dc: &Matrix, b: &Matrix, acc: &mut Matrix) {
    for i in 0..dc.rows {
        let drow = dc.row(i);
        for k in 0..b.rows {
            acc.data[i * b.rows + k] += dot(drow, b.row(k));
        }
    }
}

/// Dot product with four interleaved partial sums, combined in a fixed order.
fn dot(x: &[f64], y: &[f64]) -> f64 {
    let mut lanes = [0.0; 4];
    let (xc, yc) = (x.chunks_exact(4), y.chunks_exact(4));
    let tail: f64 = xc.remainder().iter().zip(yc.remainder()).map(|(&a, &b)| a * b).sum();
    for (a, b) in xc.zip(yc) {
        for l in 0..4 {
            lanes[l] += a[l] * b[l];
        }
    }
    (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + tail
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// Cross-entropy of one logit row against `target`, `logsumexp - logit`.
pub(crate) fn row_xent(logits: &[f64], target: usize) -> f64 {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = logits.iter().map(|&l| libm::exp(l - m)).sum();
    (m + libm::log(s)) - logits[target]
}

/// Softmax of one logit row.
pub(crate) fn row_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|&l| libm::exp(l - m)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products() {
        let a = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = Matrix::from_vec(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        assert_eq!(matmul(&a, &b).data(), [58.0, 64.0, 139.0, 154.0]);
        let mut acc = Matrix::zeros(3, 2);
        let dc = Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        matmul_at_b_acc(&a, &dc, &mut acc);
        assert_eq!(acc.data(), [1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
        let mut acc = Matrix::zeros(2, 3);
        matmul_a_bt_acc(&dc, &Matrix::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), &mut acc);
        assert_eq!(acc.data(), [1.0, 3.0, 5.0, 2.0, 4.0, 6.0]);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let p = row_softmax(&[1000.0, 999.0, -5.0, 0.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((row_xent(&[0.0; 4], 2) - libm::log(4.0)).abs() < 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn softmax_is_a_distribution(logits in proptest::collection::vec(-50.0f64..50.0, 1..40)) {
            let p = row_softmax(&logits);
            proptest::prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            proptest::prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }
}
