//! Small dense complex matrices: product/sum, Kronecker product, LU solve
//! with partial pivoting, and a Pade-13 scaling-and-squaring matrix
//! exponential.
//!
//! The exponential is deliberately independent of the closed-form Green's
//! matrices in [`crate::green`]; the two routes cross-validate each other.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}x{0} vs {1}x{1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix is numerically singular (pivot {pivot:.3e} at step {step})")]
    Singular { step: usize, pivot: f64 },
}

/// Row-major square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    n: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            *m.at_mut(i, i) = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[Complex64]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "row {i} has wrong length");
            for (j, &v) in row.iter().enumerate() {
                *m.at_mut(i, j) = v;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for l in 0..n {
                let a = self.at(i, l);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    *out.at_mut(i, j) += a * other.at(l, j);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for a in &mut out.data {
            *a *= s;
        }
        out
    }

    pub fn add_assign_scaled(&mut self, other: &Self, s: Complex64) {
        assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn mat_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.at(i, j) * v[j]).sum())
            .collect()
    }

    /// Maximum column sum of entry moduli (operator 1-norm).
    pub fn one_norm(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.at(i, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Kronecker product `self (x) other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (p, q) = (self.n, other.n);
        let mut out = Self::zeros(p * q);
        for i in 0..p {
            for j in 0..p {
                let a = self.at(i, j);
                for r in 0..q {
                    for c in 0..q {
                        *out.at_mut(i * q + r, j * q + c) = a * other.at(r, c);
                    }
                }
            }
        }
        out
    }

    /// Solve `self * X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.n != rhs.n {
            return Err(LinalgError::DimensionMismatch(self.n, rhs.n));
        }
        let n = self.n;
        let mut lu = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let (pivot_row, pivot_abs) = (col..n)
                .map(|r| (r, lu.at(r, col).norm()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("nonempty pivot search");
            if pivot_abs == 0.0 {
                return Err(LinalgError::Singular {
                    step: col,
                    pivot: pivot_abs,
                });
            }
            if pivot_row != col {
                for j in 0..n {
                    let tmp = lu.at(col, j);
                    *lu.at_mut(col, j) = lu.at(pivot_row, j);
                    *lu.at_mut(pivot_row, j) = tmp;
                }
                perm.swap(col, pivot_row);
            }
            let inv_pivot = Complex64::new(1.0, 0.0) / lu.at(col, col);
            for r in col + 1..n {
                let factor = lu.at(r, col) * inv_pivot;
                *lu.at_mut(r, col) = factor;
                for j in col + 1..n {
                    let sub = factor * lu.at(col, j);
                    *lu.at_mut(r, j) -= sub;
                }
            }
        }
        let mut x = Self::zeros(n);
        // Apply the row permutation to the right-hand side, then L- and U-solve.
        for (r, &src) in perm.iter().enumerate() {
            for j in 0..n {
                *x.at_mut(r, j) = rhs.at(src, j);
            }
        }
        // Forward substitution (unit lower triangle).
        for r in 1..n {
            for l in 0..r {
                let factor = lu.at(r, l);
                for col in 0..n {
                    let sub = factor * x.at(l, col);
                    *x.at_mut(r, col) -= sub;
                }
            }
        }
        // Back substitution.
        for r in (0..n).rev() {
            for l in r + 1..n {
                let factor = lu.at(r, l);
                for col in 0..n {
                    let sub = factor * x.at(l, col);
                    *x.at_mut(r, col) -= sub;
                }
            }
            let inv = Complex64::new(1.0, 0.0) / lu.at(r, r);
            for col in 0..n {
                *x.at_mut(r, col) *= inv;
            }
        }
        Ok(x)
    }
}

/// Pade-13 numerator/denominator coefficients.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// 1-norm threshold above which the argument is scaled by powers of two.
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by Pade-13 approximation with scaling and squaring.
pub fn expm(a: &CMat) -> Result<CMat, LinalgError> {
    let norm = a.one_norm();
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.scale(Complex64::new((0.5f64).powi(s as i32), 0.0));
    let n = a.dim();
    let id = CMat::identity(n);
    let a2 = scaled.mul(&scaled);
    let a4 = a2.mul(&a2);
    let a6 = a2.mul(&a4);

    let re = |x: f64| Complex64::new(x, 0.0);
    let mut u_inner = a6.scale(re(PADE13[13]));
    u_inner.add_assign_scaled(&a4, re(PADE13[11]));
    u_inner.add_assign_scaled(&a2, re(PADE13[9]));
    let mut u_poly = a6.mul(&u_inner);
    u_poly.add_assign_scaled(&a6, re(PADE13[7]));
    u_poly.add_assign_scaled(&a4, re(PADE13[5]));
    u_poly.add_assign_scaled(&a2, re(PADE13[3]));
    u_poly.add_assign_scaled(&id, re(PADE13[1]));
    let u = scaled.mul(&u_poly);

    let mut v_inner = a6.scale(re(PADE13[12]));
    v_inner.add_assign_scaled(&a4, re(PADE13[10]));
    v_inner.add_assign_scaled(&a2, re(PADE13[8]));
    let mut v = a6.mul(&v_inner);
    v.add_assign_scaled(&a6, re(PADE13[6]));
    v.add_assign_scaled(&a4, re(PADE13[4]));
    v.add_assign_scaled(&a2, re(PADE13[2]));
    v.add_assign_scaled(&id, re(PADE13[0]));

    let mut x = v.sub(&u).solve(&v.add(&u))?;
    for _ in 0..s {
        x = x.mul(&x);
    }
    Ok(x)
}
