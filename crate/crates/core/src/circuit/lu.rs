//! Dense complex LU factorization with partial pivoting.
//!
//! Storage is dense row-major, but the elimination skips zero multipliers and
//! zero pivot-row entries, so banded ladder systems factor in close to linear
//! time when unknowns are ordered along the ladder.

use num_complex::Complex64;

/// Pivot magnitudes at or below this fraction of the original column scale are
/// treated as singular.
const PIVOT_RTOL: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroPivot {
    /// Column (unknown index) that could not be eliminated.
    pub column: usize,
}

/// Square complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.dim + col] += value;
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    /// `self * x`
    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .filter(|(a, _)| a.re != 0.0 || a.im != 0.0)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Packed L and U factors with the row permutation applied during pivoting.
#[derive(Debug, Clone)]
pub struct LuFactors {
    dim: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn factor(matrix: &DenseMatrix) -> Result<Self, ZeroPivot> {
        let n = matrix.dim;
        let mut a = matrix.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();

        let col_scale: Vec<f64> = (0..n)
            .map(|c| (0..n).map(|r| a[r * n + c].norm()).fold(0.0, f64::max))
            .collect();

        let zero = Complex64::new(0.0, 0.0);
        let mut pivot_cols: Vec<usize> = Vec::with_capacity(n);

        for k in 0..n {
            let mut best = k;
            let mut best_abs = a[k * n + k].norm();
            for r in (k + 1)..n {
                let v = a[r * n + k].norm();
                if v > best_abs {
                    best = r;
                    best_abs = v;
                }
            }
            if !(best_abs > PIVOT_RTOL * col_scale[k]) || !best_abs.is_finite() {
                return Err(ZeroPivot { column: k });
            }
            if best != k {
                for c in 0..n {
                    a.swap(k * n + c, best * n + c);
                }
                perm.swap(k, best);
            }

            let pivot = a[k * n + k];
            pivot_cols.clear();
            pivot_cols.extend(((k + 1)..n).filter(|&c| a[k * n + c] != zero));

            for r in (k + 1)..n {
                let entry = a[r * n + k];
                if entry == zero {
                    continue;
                }
                let factor = entry / pivot;
                a[r * n + k] = factor;
                for &c in &pivot_cols {
                    let upd = factor * a[k * n + c];
                    a[r * n + c] -= upd;
                }
            }
        }

        Ok(Self { dim: n, lu: a, perm })
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        assert_eq!(rhs.len(), n);
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for r in 0..n {
            let mut acc = x[r];
            for c in 0..r {
                let l = self.lu[r * n + c];
                if l.re != 0.0 || l.im != 0.0 {
                    acc -= l * x[c];
                }
            }
            x[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = x[r];
            for c in (r + 1)..n {
                let u = self.lu[r * n + c];
                if u.re != 0.0 || u.im != 0.0 {
                    acc -= u * x[c];
                }
            }
            x[r] = acc / self.lu[r * n + r];
        }
        x
    }
}
