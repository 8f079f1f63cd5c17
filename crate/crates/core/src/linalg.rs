//! Dense linear algebra kernels over complex scalars.
//!
//! Everything here is written for dense problems of at most a few hundred
//! unknowns, where an auditable O(n^3) loop beats a tuned library call.
//! Storage is row-major `Vec<Complex64>`; all shipped models are real-valued
//! but the kernels accept complex entries throughout.
//!
//! Kernels:
//! * [`lu_solve`] / [`LuFactors`]: partial-pivot LU with a recomputed
//!   residual and a cheap condition estimate.
//! * [`sym_eig`]: cyclic Jacobi for real symmetric matrices, eigenvalues
//!   ascending, orthonormal eigenvectors.
//! * [`hermitian_eigvals`]: Hermitian eigenvalues through the real
//!   symmetric embedding `[[X, -Y], [Y, X]]`.
//! * [`expm`]: scaling-and-squaring with the degree-13 Pade kernel.
//! * [`op_pnorm`]: weighted operator p-norm, exact for diagonal matrices
//!   and for p = 1, a certified lower bound otherwise.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sampler::Sampler;
use crate::tol::Tolerances;

pub type C64 = Complex64;

// ── Matrix ───────────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    /// Build from nested rows.  Panics on ragged input or non-finite
    /// entries; both indicate a programming error, not a data condition.
    pub fn from_rows(rows: Vec<Vec<C64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            assert_eq!(row.len(), c, "ragged row in matrix literal");
            for &v in row {
                assert!(v.re.is_finite() && v.im.is_finite(), "non-finite entry");
                data.push(v);
            }
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn from_real_rows(rows: Vec<Vec<f64>>) -> Self {
        Matrix::from_rows(
            rows.into_iter()
                .map(|row| row.into_iter().map(|x| C64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Matrix::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        Matrix::from_diag(&diag.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in add");
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in sub");
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn scale(&self, s: C64) -> Matrix {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= s;
        }
        out
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, other.rows,
            "inner dimension mismatch in matrix product"
        );
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let out_row = i * out.cols;
                let oth_row = k * other.cols;
                for j in 0..other.cols {
                    out.data[out_row + j] += a * other.data[oth_row + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, x.len(), "length mismatch in matvec");
        let mut y = vec![C64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let mut acc = C64::new(0.0, 0.0);
            let row = self.row(i);
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            y[i] = acc;
        }
        y
    }

    /// Apply the adjoint without materializing it.
    pub fn adjoint_matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.rows, x.len(), "length mismatch in adjoint matvec");
        let mut y = vec![C64::new(0.0, 0.0); self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            let row = self.row(i);
            for (yj, a) in y.iter_mut().zip(row) {
                *yj += a.conj() * xi;
            }
        }
        y
    }

    /// Horizontal concatenation [self | other].
    pub fn hstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "row mismatch in hstack");
        Matrix::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self.get(i, j)
            } else {
                other.get(i, j - self.cols)
            }
        })
    }

    /// Vertical concatenation [self; other].
    pub fn vstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "column mismatch in vstack");
        Matrix::from_fn(self.rows + other.rows, self.cols, |i, j| {
            if i < self.rows {
                self.get(i, j)
            } else {
                other.get(i - self.rows, j)
            }
        })
    }

    /// Copy of the rectangle rows r0..r1, cols c0..c1 (half-open).
    pub fn block(&self, r0: usize, c0: usize, r1: usize, c1: usize) -> Matrix {
        assert!(r1 <= self.rows && c1 <= self.cols && r0 <= r1 && c0 <= c1);
        Matrix::from_fn(r1 - r0, c1 - c0, |i, j| self.get(r0 + i, c0 + j))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest |a_ij - b_ij| over all entries.
    pub fn max_entry_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in diff");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest asymmetry |a_ij - a_ji| of a square matrix.
    pub fn max_asymmetry(&self) -> f64 {
        assert!(self.is_square());
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).norm());
            }
        }
        worst
    }

    /// True when every off-diagonal entry is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    let v = self.get(i, j);
                    if v.re != 0.0 || v.im != 0.0 {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Max column sum of magnitudes (the induced 1-norm for uniform weights).
    pub fn one_norm(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.cols {
            let mut s = 0.0;
            for i in 0..self.rows {
                s += self.get(i, j).norm();
            }
            worst = worst.max(s);
        }
        worst
    }

    /// Max row sum of magnitudes (the induced sup-norm).
    pub fn inf_norm(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            let s: f64 = self.row(i).iter().map(|z| z.norm()).sum();
            worst = worst.max(s);
        }
        worst
    }
}

// ── Vector helpers ───────────────────────────────────────────────────────

pub fn vec_norm2(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn real_to_complex(x: &[f64]) -> Vec<C64> {
    x.iter().map(|&v| C64::new(v, 0.0)).collect()
}

// ── LU factorization ─────────────────────────────────────────────────────

/// Partial-pivot LU factors of a square matrix, reusable across many
/// right-hand sides.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: Matrix,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn new(a: &Matrix, tol: &Tolerances) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: (a.rows(), a.rows()),
                got: a.shape(),
            });
        }
        let n = a.rows();
        let scale = a.max_abs();
        let threshold = tol.pivot_rel * scale;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let mut pivot_row = k;
            let mut pivot_mag = lu.get(k, k).norm();
            for i in (k + 1)..n {
                let mag = lu.get(i, k).norm();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = i;
                }
            }
            if pivot_mag < threshold || pivot_mag == 0.0 {
                return Err(Error::SingularMatrix {
                    pivot: pivot_mag,
                    threshold,
                });
            }
            if pivot_row != k {
                perm.swap(k, pivot_row);
                for j in 0..n {
                    let tmp = lu.get(k, j);
                    lu.set(k, j, lu.get(pivot_row, j));
                    lu.set(pivot_row, j, tmp);
                }
            }
            let pivot = lu.get(k, k);
            for i in (k + 1)..n {
                let factor = lu.get(i, k) / pivot;
                lu.set(i, k, factor);
                if factor.re == 0.0 && factor.im == 0.0 {
                    continue;
                }
                for j in (k + 1)..n {
                    let v = lu.get(i, j) - factor * lu.get(k, j);
                    lu.set(i, j, v);
                }
            }
        }
        Ok(LuFactors { lu, perm })
    }

    pub fn n(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n();
        assert_eq!(b.len(), n, "rhs length mismatch");
        let mut y: Vec<C64> = self.perm.iter().map(|&pi| b[pi]).collect();
        // forward substitution with unit lower-triangular factor
        for i in 1..n {
            let mut acc = y[i];
            for j in 0..i {
                acc -= self.lu.get(i, j) * y[j];
            }
            y[i] = acc;
        }
        // back substitution
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in (i + 1)..n {
                acc -= self.lu.get(i, j) * y[j];
            }
            y[i] = acc / self.lu.get(i, i);
        }
        y
    }

    pub fn solve_matrix(&self, b: &Matrix) -> Matrix {
        assert_eq!(b.rows(), self.n(), "rhs row mismatch");
        let mut out = Matrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let col: Vec<C64> = (0..b.rows()).map(|i| b.get(i, j)).collect();
            let x = self.solve(&col);
            for (i, v) in x.into_iter().enumerate() {
                out.set(i, j, v);
            }
        }
        out
    }

    /// Lower-bound estimate of the 1-norm condition number from a handful
    /// of probe solves; cheap, and adequate for flagging near-singularity.
    pub fn condition_estimate(&self, a: &Matrix) -> f64 {
        let n = self.n();
        if n == 0 {
            return 0.0;
        }
        let ones: Vec<C64> = vec![C64::new(1.0, 0.0); n];
        let alt: Vec<C64> = (0..n)
            .map(|i| C64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
            .collect();
        let mut inv_norm = 0.0f64;
        for probe in [&ones, &alt] {
            let x = self.solve(probe);
            let num: f64 = x.iter().map(|z| z.norm()).sum();
            let den: f64 = probe.iter().map(|z| z.norm()).sum();
            if den > 0.0 {
                inv_norm = inv_norm.max(num / den);
            }
        }
        a.one_norm() * inv_norm
    }
}

/// Solution of `A x = b` with a recomputed residual.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Vec<C64>,
    pub residual_norm: f64,
    pub condition_estimate: f64,
}

pub fn lu_solve(a: &Matrix, b: &[C64], tol: &Tolerances) -> Result<SolveReport> {
    if a.rows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: (a.rows(), 1),
            got: (b.len(), 1),
        });
    }
    let factors = LuFactors::new(a, tol)?;
    let solution = factors.solve(b);
    let residual_norm = vec_norm2(&vec_sub(&a.matvec(&solution), b));
    let condition_estimate = factors.condition_estimate(a);
    Ok(SolveReport {
        solution,
        residual_norm,
        condition_estimate,
    })
}

pub fn invert(a: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    let factors = LuFactors::new(a, tol)?;
    Ok(factors.solve_matrix(&Matrix::identity(a.rows())))
}

// ── Symmetric eigensolve (cyclic Jacobi) ─────────────────────────────────

/// Eigendecomposition of a real symmetric matrix: `values` ascending,
/// `vectors` orthonormal columns in matching order.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

pub fn sym_eig(a: &Matrix, tol: &Tolerances) -> Result<SymEig> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: (a.rows(), a.rows()),
            got: a.shape(),
        });
    }
    let n = a.rows();
    let scale = a.max_abs();
    let threshold = tol.asymmetry_rel * scale;
    let asymmetry = a.max_asymmetry().max(a.max_imag());
    if asymmetry > threshold {
        return Err(Error::NotSymmetric {
            asymmetry,
            threshold,
        });
    }

    // Work on the symmetrized real part; the asymmetry already passed the
    // gate so this changes entries by at most `threshold`.
    let mut b: Vec<f64> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            b.push(0.5 * (a.get(i, j).re + a.get(j, i).re));
        }
    }
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let off = |b: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += b[i * n + j] * b[i * n + j];
            }
        }
        s.sqrt()
    };

    let fro = {
        let mut s = 0.0;
        for x in &b {
            s += x * x;
        }
        s.sqrt()
    };
    let stop = 1e-15 * fro.max(f64::MIN_POSITIVE);

    for _sweep in 0..64 {
        if off(&b) <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = b[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = b[p * n + p];
                let aqq = b[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = b[k * n + p];
                    let akq = b[k * n + q];
                    b[k * n + p] = c * akp - s * akq;
                    b[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = b[p * n + k];
                    let aqk = b[q * n + k];
                    b[p * n + k] = c * apk - s * aqk;
                    b[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        b[i * n + i]
            .partial_cmp(&b[j * n + j])
            .expect("non-finite eigenvalue")
    });
    let values: Vec<f64> = order.iter().map(|&i| b[i * n + i]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| C64::new(v[i * n + order[j]], 0.0));
    Ok(SymEig { values, vectors })
}

/// Eigenvalues of a Hermitian matrix via the real symmetric embedding
/// `[[X, -Y], [Y, X]]`, whose spectrum is that of `X + iY` doubled.
pub fn hermitian_eigvals(a: &Matrix, tol: &Tolerances) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: (a.rows(), a.rows()),
            got: a.shape(),
        });
    }
    let n = a.rows();
    let scale = a.max_abs();
    let threshold = tol.asymmetry_rel * scale;
    let mut herm_defect = 0.0f64;
    for i in 0..n {
        for j in i..n {
            herm_defect = herm_defect.max((a.get(i, j) - a.get(j, i).conj()).norm());
        }
    }
    if herm_defect > threshold {
        return Err(Error::NotSymmetric {
            asymmetry: herm_defect,
            threshold,
        });
    }
    if a.max_imag() <= threshold {
        return Ok(sym_eig(a, tol)?.values);
    }
    let embed = Matrix::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, ii) = (i / n, i % n);
        let (bj, jj) = (j / n, j % n);
        let z = a.get(ii, jj);
        let val = match (bi, bj) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            (1, 0) => z.im,
            _ => unreachable!(),
        };
        C64::new(val, 0.0)
    });
    let all = sym_eig(&embed, tol)?.values;
    // eigenvalues come in coincident pairs after sorting; average each pair
    Ok(all.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect())
}

// ── Matrix exponential ───────────────────────────────────────────────────

/// Degree-13 Pade numerator coefficients for the exponential.
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

/// 1-norm threshold below which the degree-13 kernel meets f64 accuracy
/// without scaling.
const PADE13_THETA: f64 = 5.371920351148152;

/// `expm(a, t)` evaluates exp(t*a) by scaling and squaring around the
/// degree-13 Pade approximant.  Arguments with `||t*a||_1` beyond
/// `tol.expm_limit` are refused: squaring would amplify rounding past any
/// useful accuracy, and every caller in this crate is on a contraction
/// (or mild growth) regime where such norms signal a configuration error.
pub fn expm(a: &Matrix, t: f64, tol: &Tolerances) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: (a.rows(), a.rows()),
            got: a.shape(),
        });
    }
    let n = a.rows();
    let ta = a.scale(C64::new(t, 0.0));
    let norm = ta.one_norm();
    if !norm.is_finite() || norm > tol.expm_limit {
        return Err(Error::Overflow {
            norm,
            limit: tol.expm_limit,
        });
    }

    let s = if norm > PADE13_THETA {
        (norm / PADE13_THETA).log2().ceil() as u32
    } else {
        0
    };
    let scaled = ta.scale(C64::new(0.5f64.powi(s as i32), 0.0));

    let ident = Matrix::identity(n);
    let a2 = scaled.mul(&scaled);
    let a4 = a2.mul(&a2);
    let a6 = a4.mul(&a2);

    let b = |k: usize| C64::new(PADE13[k], 0.0);
    // u = A * (A6*(b13*A6 + b11*A4 + b9*A2) + b7*A6 + b5*A4 + b3*A2 + b1*I)
    let inner_u = a6
        .scale(b(13))
        .add(&a4.scale(b(11)))
        .add(&a2.scale(b(9)));
    let u_poly = a6
        .mul(&inner_u)
        .add(&a6.scale(b(7)))
        .add(&a4.scale(b(5)))
        .add(&a2.scale(b(3)))
        .add(&ident.scale(b(1)));
    let u = scaled.mul(&u_poly);
    // v = A6*(b12*A6 + b10*A4 + b8*A2) + b6*A6 + b4*A4 + b2*A2 + b0*I
    let inner_v = a6
        .scale(b(12))
        .add(&a4.scale(b(10)))
        .add(&a2.scale(b(8)));
    let v = a6
        .mul(&inner_v)
        .add(&a6.scale(b(6)))
        .add(&a4.scale(b(4)))
        .add(&a2.scale(b(2)))
        .add(&ident.scale(b(0)));

    // (v - u) X = (v + u)
    let factors = LuFactors::new(&v.sub(&u), tol).map_err(|_| Error::Overflow {
        norm,
        limit: tol.expm_limit,
    })?;
    let mut result = factors.solve_matrix(&v.add(&u));
    for _ in 0..s {
        result = result.mul(&result);
    }
    Ok(result)
}

// ── Operator p-norm ──────────────────────────────────────────────────────

/// Operator norm estimate between weighted l^p spaces.
///
/// `exact` is true for the closed-form cases (diagonal matrices, and p = 1
/// where the weighted column-sum formula is sharp); otherwise the value is
/// the best ascent iterate over several deterministic starts and is a
/// certified lower bound on the true norm.
#[derive(Debug, Clone, Copy)]
pub struct PNormEstimate {
    pub value: f64,
    pub exact: bool,
}

fn weighted_pnorm(x: &[C64], p: f64, w: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), w.len());
    if p == f64::INFINITY {
        return x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    }
    x.iter()
        .zip(w)
        .map(|(z, &wi)| wi * z.norm().powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// Duality map of `y` in the weighted p-norm: the vector `d` with
/// plain-dot pairing `sum_i d_i^* y_i = ||y||_p` and unit dual norm.
fn duality_direction(y: &[C64], p: f64, w: &[f64]) -> Vec<C64> {
    let np = weighted_pnorm(y, p, w);
    if np == 0.0 {
        return vec![C64::new(0.0, 0.0); y.len()];
    }
    y.iter()
        .zip(w)
        .map(|(z, &wi)| {
            let m = z.norm();
            if m < 1e-300 {
                C64::new(0.0, 0.0)
            } else {
                (z / m) * (wi * (m / np).powf(p - 1.0))
            }
        })
        .collect()
}

/// Normalize `z` into the steepest-ascent point of the weighted p-norm
/// unit sphere (the inverse duality map, exponent q = p/(p-1)).
fn ascent_point(z: &[C64], p: f64, w: &[f64]) -> Vec<C64> {
    let mut x: Vec<C64> = z
        .iter()
        .zip(w)
        .map(|(v, &wi)| {
            let m = v.norm();
            if m < 1e-300 || wi <= 0.0 {
                C64::new(0.0, 0.0)
            } else {
                (v / m) * (m / wi).powf(1.0 / (p - 1.0))
            }
        })
        .collect();
    let nrm = weighted_pnorm(&x, p, w);
    if nrm > 0.0 {
        for v in x.iter_mut() {
            *v /= nrm;
        }
    }
    x
}

pub fn op_pnorm(
    a: &Matrix,
    p: f64,
    domain_w: &[f64],
    range_w: &[f64],
    sampler: &mut Sampler,
) -> PNormEstimate {
    assert!(p >= 1.0, "operator norm requires p >= 1");
    assert_eq!(a.cols(), domain_w.len(), "domain weight length mismatch");
    assert_eq!(a.rows(), range_w.len(), "range weight length mismatch");

    if a.is_diagonal() {
        let mut worst = 0.0f64;
        for i in 0..a.rows() {
            let ratio = if domain_w[i] > 0.0 {
                (range_w[i] / domain_w[i]).powf(1.0 / p)
            } else {
                1.0
            };
            worst = worst.max(a.get(i, i).norm() * ratio);
        }
        return PNormEstimate {
            value: worst,
            exact: true,
        };
    }

    if p == 1.0 {
        // Weighted column-sum formula; extremal vectors are coordinate
        // directions, so this is exact.
        let mut worst = 0.0f64;
        for j in 0..a.cols() {
            let mut s = 0.0;
            for i in 0..a.rows() {
                s += range_w[i] * a.get(i, j).norm();
            }
            worst = worst.max(s / domain_w[j]);
        }
        return PNormEstimate {
            value: worst,
            exact: true,
        };
    }

    // Ascent iteration (dual power method) from several starts.
    let n = a.cols();
    let mut starts: Vec<Vec<C64>> = vec![
        vec![C64::new(1.0, 0.0); n],
        (0..n)
            .map(|i| C64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
            .collect(),
    ];
    for _ in 0..3 {
        starts.push(sampler.complex_vector(n));
    }

    let mut best = 0.0f64;
    for start in starts {
        let mut x = start;
        let nx = weighted_pnorm(&x, p, domain_w);
        if nx == 0.0 {
            continue;
        }
        for v in x.iter_mut() {
            *v /= nx;
        }
        let mut current = 0.0f64;
        for _ in 0..200 {
            let y = a.matvec(&x);
            let ny = weighted_pnorm(&y, p, range_w);
            if ny <= current * (1.0 + 1e-13) {
                current = current.max(ny);
                break;
            }
            current = ny;
            let z = a.adjoint_matvec(&duality_direction(&y, p, range_w));
            let next = ascent_point(&z, p, domain_w);
            if weighted_pnorm(&next, p, domain_w) == 0.0 {
                break;
            }
            x = next;
        }
        best = best.max(current);
    }
    PNormEstimate {
        value: best,
        exact: false,
    }
}

/// Operator 2-norm of `a` between spaces weighted by `w` (same weights on
/// domain and range): the largest singular value of `D^(1/2) A D^(-1/2)`,
/// computed through the eigenvalues of the Gram matrix.  Exact up to the
/// eigensolver's rounding, unlike the ascent estimate.
pub fn spectral_norm_weighted(a: &Matrix, w: &[f64], tol: &Tolerances) -> Result<f64> {
    assert!(a.is_square() && a.rows() == w.len());
    let n = a.rows();
    let b = Matrix::from_fn(n, n, |i, j| {
        a.get(i, j) * (w[i].sqrt() / w[j].sqrt())
    });
    let gram = b.adjoint().mul(&b);
    let vals = hermitian_eigvals(&gram, tol)?;
    Ok(vals.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// Riesz-Thorin interpolation bound `||A||_1^(1/p) * ||A||_inf^(1-1/p)`
/// on the weighted p-norm; used as an upper-bound self-check against the
/// ascent estimate.
pub fn holder_interpolation_bound(a: &Matrix, p: f64, domain_w: &[f64], range_w: &[f64]) -> f64 {
    let mut one = 0.0f64;
    for j in 0..a.cols() {
        let mut s = 0.0;
        for i in 0..a.rows() {
            s += range_w[i] * a.get(i, j).norm();
        }
        one = one.max(s / domain_w[j]);
    }
    let inf = a.inf_norm();
    one.powf(1.0 / p) * inf.powf(1.0 - 1.0 / p)
}

// ── Tests ────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn lu_solves_known_system() {
        let a = Matrix::from_real_rows(vec![
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, 1.0],
            vec![0.0, 1.0, 2.0],
        ]);
        let x_true = real_to_complex(&[1.0, -2.0, 3.0]);
        let b = a.matvec(&x_true);
        let report = lu_solve(&a, &b, &tol()).unwrap();
        for (got, want) in report.solution.iter().zip(&x_true) {
            assert_relative_eq!(got.re, want.re, max_relative = 1e-12);
        }
        let scale = a.max_abs() * vec_norm2(&report.solution) + vec_norm2(&b);
        assert!(report.residual_norm <= 1e-10 * scale);
        assert!(report.condition_estimate >= 1.0);
    }

    #[test]
    fn lu_rejects_singular_with_pivot_context() {
        let a = Matrix::from_real_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0]]);
        let b = real_to_complex(&[1.0, 0.0]);
        match lu_solve(&a, &b, &tol()) {
            Err(Error::SingularMatrix { pivot, threshold }) => {
                assert!(pivot < threshold || pivot == 0.0);
            }
            other => panic!("expected SingularMatrix, got {other:?}"),
        }
    }

    #[test]
    fn lu_rejects_shape_mismatch() {
        let a = Matrix::zeros(3, 2);
        let b = real_to_complex(&[1.0, 0.0, 0.0]);
        assert!(matches!(
            lu_solve(&a, &b, &tol()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn lu_handles_complex_entries() {
        let i = C64::new(0.0, 1.0);
        let a = Matrix::from_rows(vec![
            vec![C64::new(2.0, 0.0), i],
            vec![-i, C64::new(3.0, 0.0)],
        ]);
        let x_true = vec![C64::new(1.0, 1.0), C64::new(-2.0, 0.5)];
        let b = a.matvec(&x_true);
        let report = lu_solve(&a, &b, &tol()).unwrap();
        for (got, want) in report.solution.iter().zip(&x_true) {
            assert!((got - want).norm() < 1e-12);
        }
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = Matrix::from_real_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let b = real_to_complex(&[2.0, 3.0]);
        let report = lu_solve(&a, &b, &tol()).unwrap();
        assert_relative_eq!(report.solution[0].re, 3.0, max_relative = 1e-14);
        assert_relative_eq!(report.solution[1].re, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn sym_eig_diagonal_is_sorted_identity() {
        let a = Matrix::from_real_diag(&[3.0, -1.0, 2.0]);
        let eig = sym_eig(&a, &tol()).unwrap();
        assert_eq!(eig.values.len(), 3);
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        assert_relative_eq!(eig.values[0], -1.0, max_relative = 1e-14);
        assert_relative_eq!(eig.values[2], 3.0, max_relative = 1e-14);
    }

    #[test]
    fn sym_eig_reconstructs_matrix() {
        let a = Matrix::from_real_rows(vec![
            vec![2.0, 1.0, 0.5],
            vec![1.0, -1.0, 0.25],
            vec![0.5, 0.25, 3.0],
        ]);
        let eig = sym_eig(&a, &tol()).unwrap();
        let d = Matrix::from_real_diag(&eig.values);
        let recon = eig.vectors.mul(&d).mul(&eig.vectors.transpose());
        assert!(a.max_entry_diff(&recon) <= 1e-12 * a.max_abs());
        // orthonormality
        let qtq = eig.vectors.transpose().mul(&eig.vectors);
        assert!(qtq.max_entry_diff(&Matrix::identity(3)) <= 1e-13);
        // pair residuals
        for k in 0..3 {
            let v: Vec<C64> = (0..3).map(|i| eig.vectors.get(i, k)).collect();
            let av = a.matvec(&v);
            let lv: Vec<C64> = v.iter().map(|z| z * eig.values[k]).collect();
            assert!(vec_norm2(&vec_sub(&av, &lv)) <= 1e-9 * a.max_abs());
        }
    }

    #[test]
    fn sym_eig_rejects_asymmetric() {
        let a = Matrix::from_real_rows(vec![vec![1.0, 2.0], vec![0.0, 1.0]]);
        assert!(matches!(
            sym_eig(&a, &tol()),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn hermitian_eigvals_matches_known_spectrum() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let i = C64::new(0.0, 1.0);
        let a = Matrix::from_rows(vec![
            vec![C64::new(2.0, 0.0), i],
            vec![-i, C64::new(2.0, 0.0)],
        ]);
        let vals = hermitian_eigvals(&a, &tol()).unwrap();
        assert_relative_eq!(vals[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(vals[1], 3.0, max_relative = 1e-12);
    }

    #[test]
    fn expm_matches_rotation_closed_form() {
        // exp(t * [[0,-1],[1,0]]) = [[cos t, -sin t], [sin t, cos t]]
        let a = Matrix::from_real_rows(vec![vec![0.0, -1.0], vec![1.0, 0.0]]);
        for &t in &[0.3, 1.7, -2.2] {
            let e = expm(&a, t, &tol()).unwrap();
            assert_relative_eq!(e.get(0, 0).re, t.cos(), max_relative = 1e-12);
            assert_relative_eq!(e.get(1, 0).re, t.sin(), max_relative = 1e-12);
        }
    }

    #[test]
    fn expm_diagonal_is_entrywise_exponential() {
        let a = Matrix::from_real_diag(&[-1.0, 0.5, 2.0]);
        let e = expm(&a, 1.0, &tol()).unwrap();
        for (i, &d) in [-1.0f64, 0.5, 2.0].iter().enumerate() {
            assert_relative_eq!(e.get(i, i).re, d.exp(), max_relative = 1e-12);
        }
    }

    #[test]
    fn expm_inverse_product_is_identity() {
        let a = Matrix::from_real_rows(vec![
            vec![-0.5, 0.3, 0.0],
            vec![0.1, -1.0, 0.4],
            vec![0.0, 0.2, -0.3],
        ]);
        let t = 1.3;
        let e = expm(&a, t, &tol()).unwrap();
        let einv = expm(&a, -t, &tol()).unwrap();
        let prod = e.mul(&einv);
        assert!(prod.max_entry_diff(&Matrix::identity(3)) <= 1e-8);
    }

    #[test]
    fn expm_refuses_overflowing_argument() {
        let a = Matrix::from_real_diag(&[2000.0]);
        assert!(matches!(
            expm(&a, 1.0, &tol()),
            Err(Error::Overflow { .. })
        ));
    }

    #[test]
    fn op_pnorm_diagonal_is_exact() {
        let a = Matrix::from_real_diag(&[1.0, -4.0, 2.5]);
        let w = vec![0.25; 3];
        let mut s = Sampler::new(1);
        for &p in &[1.0, 1.5, 2.0, 3.0] {
            let est = op_pnorm(&a, p, &w, &w, &mut s);
            assert!(est.exact);
            assert_eq!(est.value, 4.0);
        }
    }

    #[test]
    fn op_pnorm_p2_matches_singular_value() {
        let mut s = Sampler::new(5);
        let a = Matrix::from_fn(8, 8, |_, _| C64::new(s.normal(), 0.0));
        let w = vec![1.0; 8];
        let est = op_pnorm(&a, 2.0, &w, &w, &mut Sampler::new(9));
        // oracle: largest eigenvalue of A^T A via the Jacobi solver
        let ata = a.transpose().mul(&a);
        let eig = sym_eig(&ata, &tol()).unwrap();
        let sigma = eig.values.last().unwrap().max(0.0).sqrt();
        assert_relative_eq!(est.value, sigma, max_relative = 1e-6);
    }

    #[test]
    fn op_pnorm_never_exceeds_interpolation_bound() {
        let mut s = Sampler::new(11);
        let a = Matrix::from_fn(6, 6, |_, _| C64::new(s.normal(), 0.0));
        let w = vec![1.0 / 6.0; 6];
        for &p in &[1.0, 1.5, 2.0, 3.0] {
            let est = op_pnorm(&a, p, &w, &w, &mut Sampler::new(13));
            let bound = holder_interpolation_bound(&a, p, &w, &w);
            assert!(
                est.value <= bound * (1.0 + 1e-12),
                "p={p}: estimate {} above bound {}",
                est.value,
                bound
            );
        }
    }

    #[test]
    fn condition_estimate_tracks_scaling() {
        let well = Matrix::from_real_diag(&[1.0, 1.0, 1.0]);
        let factors = LuFactors::new(&well, &tol()).unwrap();
        assert_relative_eq!(factors.condition_estimate(&well), 1.0, max_relative = 1e-12);
        let ill = Matrix::from_real_diag(&[1.0, 1e-8, 1.0]);
        let f2 = LuFactors::new(&ill, &tol()).unwrap();
        assert!(f2.condition_estimate(&ill) >= 1e7);
    }
}
