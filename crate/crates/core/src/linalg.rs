//! Small dense kernels: row-major matrices, the Thomas tridiagonal solver,
//! orthogonal complements and singular values by one-sided Jacobi.
//!
//! Everything here targets desk-scale sizes (tens to a few hundred rows).

use alloc::vec;
use alloc::vec::Vec;

/// Euclidean dot product over the common prefix; missing entries count as zero.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// All-zero `rows x cols` matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Wraps row-major data. Panics if the length does not match.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        Self { rows, cols, data }
    }

    /// Builds a matrix from equal-length rows. Returns `None` on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Some(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry `(i, j)`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Mutable entry `(i, j)`.
    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }

    /// Row `i` as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `y = A^T x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut y = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (yj, aij) in y.iter_mut().zip(self.row(i)) {
                *yj += aij * xi;
            }
        }
        y
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    *out.get_mut(i, j) += a * rhs.get(k, j);
                }
            }
        }
        out
    }
}

/// Solves a tridiagonal system with the Thomas algorithm.
///
/// `sub[i]` couples row `i + 1` to column `i`, `sup[i]` couples row `i` to
/// column `i + 1`. Intended for diagonally dominant systems (no pivoting).
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    debug_assert!(sub.len() + 1 == n.max(1) && sup.len() + 1 == n.max(1) && rhs.len() == n);
    if n == 0 {
        return Vec::new();
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = if n > 1 { sup[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i - 1] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / m } else { 0.0 };
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

/// Result of splitting `R^dim` into the span of some row vectors and its
/// orthogonal complement.
#[derive(Debug, Clone)]
pub struct Complement {
    /// Orthonormal basis of the row space.
    pub row_space: Vec<Vec<f64>>,
    /// Orthonormal basis of the null space (orthogonal complement).
    pub null_space: Vec<Vec<f64>>,
}

impl Complement {
    /// Numerical rank of the rows.
    pub fn rank(&self) -> usize {
        self.row_space.len()
    }

    /// Orthogonal projection of `w` onto the null space.
    pub fn project_null(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; w.len()];
        for b in &self.null_space {
            let c = dot(b, w);
            for (o, bi) in out.iter_mut().zip(b) {
                *o += c * bi;
            }
        }
        out
    }
}

/// Orthonormal bases of the row space of `rows` (each truncated or
/// zero-padded to `dim` entries) and of its orthogonal complement in `R^dim`.
///
/// Modified Gram-Schmidt with one re-orthogonalization pass; a vector is
/// dropped as dependent when its residual falls below `rel_tol` times its
/// original length.
pub fn orthogonal_complement(rows: &[Vec<f64>], dim: usize, rel_tol: f64) -> Complement {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let absorb = |mut v: Vec<f64>, basis: &mut Vec<Vec<f64>>| -> bool {
        let orig = norm2(&v);
        if orig == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for b in basis.iter() {
                let c = dot(b, &v);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        let r = norm2(&v);
        if r <= rel_tol * orig {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= r);
        basis.push(v);
        true
    };

    for row in rows {
        let mut v = vec![0.0; dim];
        for (vi, ri) in v.iter_mut().zip(row) {
            *vi = *ri;
        }
        absorb(v, &mut basis);
    }
    let rank = basis.len();
    for i in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        absorb(e, &mut basis);
    }
    let null_space = basis.split_off(rank);
    Complement {
        row_space: basis,
        null_space,
    }
}

/// Singular values of `a`, descending, by one-sided Jacobi rotations.
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    // Work on columns of the taller orientation.
    let (m, n, mut cols) = if a.rows() >= a.cols() {
        let cols: Vec<Vec<f64>> = (0..a.cols())
            .map(|j| (0..a.rows()).map(|i| a.get(i, j)).collect())
            .collect();
        (a.rows(), a.cols(), cols)
    } else {
        let cols: Vec<Vec<f64>> = (0..a.rows()).map(|i| a.row(i).to_vec()).collect();
        (a.cols(), a.rows(), cols)
    };
    let _ = m;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || libm::fabs(gamma) <= 1e-15 * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = libm::copysign(1.0, zeta) / (libm::fabs(zeta) + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_matches_hand_solution() {
        // [2 -1 0; -1 2 -1; 0 -1 2] x = (1, 0, 1)  =>  x = (1, 1, 1)
        let x = solve_tridiagonal(&[-1.0, -1.0], &[2.0, 2.0, 2.0], &[-1.0, -1.0], &[1.0, 0.0, 1.0]);
        for xi in x {
            assert!((xi - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn complement_of_coordinate_rows() {
        let rows = vec![vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0], vec![0.0, 1.0]];
        let c = orthogonal_complement(&rows, 3, 1e-12);
        assert_eq!(c.rank(), 2);
        assert_eq!(c.null_space.len(), 1);
        assert!((c.null_space[0][2].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn full_rank_leaves_empty_complement() {
        let rows = vec![vec![1.0, 1.0], vec![1.0, -1.0]];
        let c = orthogonal_complement(&rows, 2, 1e-12);
        assert!(c.null_space.is_empty());
    }

    #[test]
    fn jacobi_singular_values_of_diagonal() {
        let a = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, -0.5], vec![0.0, 0.0]]).unwrap();
        let sv = singular_values(&a);
        assert!((sv[0] - 3.0).abs() < 1e-14 && (sv[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn transpose_product_agrees_with_explicit_transpose() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(a.tr_mul_vec(&[1.0, -1.0]), vec![-3.0, -3.0, -3.0]);
        assert_eq!(a.mul_vec(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
    }
}
