//! Dense vector helpers and a small row-major Jacobian type.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn neg(a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| -x).collect()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Matrix of partial derivatives `∂out_i / ∂in_j`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Jacobian {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Jacobian {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut j = Self::zeros(n, n);
        for i in 0..n {
            j.data[i * n + i] = s;
        }
        j
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `self += alpha * a b^T`
    pub fn add_outer(&mut self, alpha: f64, a: &[f64], b: &[f64]) {
        debug_assert_eq!(a.len(), self.rows);
        debug_assert_eq!(b.len(), self.cols);
        for (i, ai) in a.iter().enumerate() {
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            axpy(alpha * ai, b, row);
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.data.chunks_exact(self.cols).map(|row| dot(row, v)).collect()
    }

    /// `J^T g`, the vector-Jacobian product used for backpropagation.
    pub fn t_mul_vec(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (row, gi) in self.data.chunks_exact(self.cols).zip(g) {
            axpy(*gi, row, &mut out);
        }
        out
    }

    pub fn matmul(&self, other: &Jacobian) -> Jacobian {
        assert_eq!(self.cols, other.rows, "jacobian shapes do not chain");
        let mut out = Jacobian::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let src = &other.data[k * other.cols..(k + 1) * other.cols];
                axpy(a, src, &mut out.data[i * other.cols..(i + 1) * other.cols]);
            }
        }
        out
    }

    pub fn add(&mut self, other: &Jacobian) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        axpy(1.0, &other.data, &mut self.data);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transpose_product_matches_explicit_transpose() {
        let mut j = Jacobian::zeros(2, 3);
        j.add_outer(1.0, &[1.0, 2.0], &[3.0, 4.0, 5.0]);
        assert_eq!(j.get(1, 2), 10.0);
        assert_eq!(j.t_mul_vec(&[1.0, 1.0]), vec![9.0, 12.0, 15.0]);
        assert_eq!(j.mul_vec(&[1.0, 0.0, 0.0]), vec![3.0, 6.0]);
    }

    #[test]
    fn matmul_with_identity() {
        let mut j = Jacobian::zeros(2, 2);
        j.add_outer(1.0, &[1.0, -1.0], &[0.5, 2.0]);
        assert_eq!(j.matmul(&Jacobian::identity(2)), j);
    }
}
