//! Dense matrix kernel for the small systems in this crate (2 to 16 rows).
//!
//! Real and complex matrices share one row-major [`Matrix`] type. The
//! eigen routines reduce to Hessenberg form and run a shifted complex QR
//! iteration, which also yields the ordered Schur basis used to extract
//! stable invariant subspaces.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::{One, Zero};
use thiserror::Error;

/// Relative distance from the imaginary axis below which an eigenvalue is
/// treated as lying on it.
pub const IMAG_AXIS_TOL: f64 = 1e-9;

/// Condition-number ceiling for [`solve_linear`].
pub const MAX_CONDITION: f64 = 1e12;

const MAX_QR_SWEEPS_PER_EIG: usize = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("QR iteration did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("eigenvalue {re:+.3e}{im:+.3e}i lies on the imaginary axis (tolerance {tol:.1e})")]
    ImaginaryAxisEigenvalue { re: f64, im: f64, tol: f64 },
    #[error("matrix is singular or ill-conditioned (condition estimate {0:.3e})")]
    Singular(f64),
}

/// Scalar field of a [`Matrix`].
pub trait Scalar:
    Copy
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + Send
    + Sync
{
    fn is_finite(self) -> bool;
    fn modulus(self) -> f64;
    fn conj(self) -> Self;
    fn from_real(x: f64) -> Self;
}

impl Scalar for f64 {
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn conj(self) -> Self {
        self
    }
    fn from_real(x: f64) -> Self {
        x
    }
}

impl Scalar for Complex64 {
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type Mat = Matrix<f64>;
pub type CMat = Matrix<Complex64>;

impl<T: Scalar> Matrix<T> {
    /// Builds a matrix from row-major entries, rejecting NaN/Inf.
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, MatError> {
        if rows * cols != data.len() {
            return Err(MatError::Dimension(format!(
                "{rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|x| !x.is_finite()) {
            return Err(MatError::NonFinite { row: k / cols.max(1), col: k % cols.max(1) });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, T::one())
    }

    /// `s·I` of size `n`.
    pub fn scalar(n: usize, s: T) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = s;
        }
        m
    }

    pub fn from_diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from nested rows. Panics on ragged input; intended for literals.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.as_ref().len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.as_ref().len(), c, "ragged matrix literal");
            data.extend_from_slice(row.as_ref());
        }
        Self { rows: r, cols: c, data }
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

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> T {
        self.diag().into_iter().fold(T::zero(), |a, b| a + b)
    }

    pub fn scale(&self, s: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|x| x.modulus().powi(2)).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].modulus()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.modulus()).fold(0.0, f64::max)
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self, MatError> {
        if self.cols != rhs.rows {
            return Err(MatError::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    fn zip(&self, rhs: &Self, op: &str, f: impl Fn(T, T) -> T) -> Result<Self, MatError> {
        if self.shape() != rhs.shape() {
            return Err(MatError::Dimension(format!(
                "cannot {op} {}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self, MatError> {
        self.zip(rhs, "add", |a, b| a + b)
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self, MatError> {
        self.zip(rhs, "subtract", |a, b| a - b)
    }

    /// Copy of the `nr`×`nc` block starting at (`r0`, `c0`).
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols, "block out of range");
        Self::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        assert!(r0 + b.rows <= self.rows && c0 + b.cols <= self.cols, "block out of range");
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    pub fn hstack(parts: &[&Self]) -> Result<Self, MatError> {
        let rows = parts.first().map_or(0, |p| p.rows);
        if parts.iter().any(|p| p.rows != rows) {
            return Err(MatError::Dimension("hstack with differing row counts".into()));
        }
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut c0 = 0;
        for p in parts {
            out.set_block(0, c0, p);
            c0 += p.cols;
        }
        Ok(out)
    }

    pub fn vstack(parts: &[&Self]) -> Result<Self, MatError> {
        let cols = parts.first().map_or(0, |p| p.cols);
        if parts.iter().any(|p| p.cols != cols) {
            return Err(MatError::Dimension("vstack with differing column counts".into()));
        }
        let rows = parts.iter().map(|p| p.rows).sum();
        let mut out = Self::zeros(rows, cols);
        let mut r0 = 0;
        for p in parts {
            out.set_block(r0, 0, p);
            r0 += p.rows;
        }
        Ok(out)
    }

    /// `[[a, b], [c, d]]`.
    pub fn from_blocks(a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Self, MatError> {
        let top = Self::hstack(&[a, b])?;
        let bottom = Self::hstack(&[c, d])?;
        Self::vstack(&[&top, &bottom])
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl Mat {
    /// `(m + mᵀ)/2`.
    pub fn symmetrize(&self) -> Mat {
        Mat::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    pub fn to_complex(&self) -> CMat {
        CMat::from_fn(self.rows, self.cols, |i, j| Complex64::new(self[(i, j)], 0.0))
    }

    /// True when every off-diagonal entry is at most `tol` in magnitude.
    pub fn is_diagonal(&self, tol: f64) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)].abs() <= tol))
    }

    /// `Some(s)` when the matrix equals `s·I` within `tol`.
    pub fn as_scalar_identity(&self, tol: f64) -> Option<f64> {
        if !self.is_square() || self.rows == 0 || !self.is_diagonal(tol) {
            return None;
        }
        let s = self[(0, 0)];
        self.diag().iter().all(|d| (d - s).abs() <= tol).then_some(s)
    }

    /// Spectral norm.
    pub fn norm2(&self) -> f64 {
        max_singular_value(&self.to_complex())
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

// Operator forms panic on shape mismatch; fallible `try_*` variants exist for
// unvalidated input.
impl<T: Scalar> Mul for &Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        self.try_mul(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl<T: Scalar> Add for &Matrix<T> {
    type Output = Matrix<T>;
    fn add(self, rhs: &Matrix<T>) -> Matrix<T> {
        self.try_add(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl<T: Scalar> Sub for &Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, rhs: &Matrix<T>) -> Matrix<T> {
        self.try_sub(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl<T: Scalar> Neg for &Matrix<T> {
    type Output = Matrix<T>;
    fn neg(self) -> Matrix<T> {
        self.map(|x| -x)
    }
}

impl<T: Scalar> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| format!("{:?}", self[(i, j)])).collect();
            writeln!(f, "  {}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// The 2×2 symplectic unit `[[0, 1], [-1, 0]]`.
pub fn j2() -> Mat {
    Mat::from_rows(&[[0.0, 1.0], [-1.0, 0.0]])
}

/// Block-diagonal `diag(J, …, J)` of size `n` (must be even).
pub fn canonical_theta(n: usize) -> Result<Mat, MatError> {
    if n % 2 != 0 {
        return Err(MatError::Dimension(format!("canonical commutation matrix needs even size, got {n}")));
    }
    let mut t = Mat::zeros(n, n);
    for k in (0..n).step_by(2) {
        t[(k, k + 1)] = 1.0;
        t[(k + 1, k)] = -1.0;
    }
    Ok(t)
}

fn require_square<T: Scalar>(m: &Matrix<T>, what: &str) -> Result<(), MatError> {
    if !m.is_square() {
        return Err(MatError::Dimension(format!("{what} requires a square matrix, got {}x{}", m.rows, m.cols)));
    }
    if !m.is_finite() {
        return Err(MatError::NonFinite { row: 0, col: 0 });
    }
    Ok(())
}

struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    fn factor(a: &Matrix<T>) -> Result<Self, MatError> {
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| lu[(x, k)].modulus().total_cmp(&lu[(y, k)].modulus()))
                .unwrap_or(k);
            if lu[(p, k)].modulus() == 0.0 {
                return Err(MatError::Singular(f64::INFINITY));
            }
            lu.swap_rows(k, p);
            perm.swap(k, p);
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f == T::zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] = lu[(i, j)] - f * u;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    fn solve(&self, b: &Matrix<T>) -> Matrix<T> {
        let n = self.lu.rows;
        let mut x = Matrix::from_fn(n, b.cols, |i, j| b[(self.perm[i], j)]);
        for c in 0..b.cols {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s = s - self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s = s - self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / self.lu[(i, i)];
            }
        }
        x
    }
}

/// One-norm condition number, computed from an explicit inverse.
pub fn condition_estimate<T: Scalar>(a: &Matrix<T>) -> Result<f64, MatError> {
    require_square(a, "condition estimate")?;
    let lu = Lu::factor(a)?;
    let inv = lu.solve(&Matrix::identity(a.rows));
    Ok(a.norm_one() * inv.norm_one())
}

/// Solves `a·x = b` by LU with partial pivoting.
pub fn solve_linear<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>, MatError> {
    require_square(a, "solve_linear")?;
    if b.rows != a.rows {
        return Err(MatError::Dimension(format!(
            "right-hand side has {} rows, system has {}",
            b.rows, a.rows
        )));
    }
    let lu = Lu::factor(a)?;
    let inv = lu.solve(&Matrix::identity(a.rows));
    let cond = a.norm_one() * inv.norm_one();
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(MatError::Singular(cond));
    }
    Ok(lu.solve(b))
}

/// [`solve_linear`] without the condition-number guard; fails only on an
/// exactly zero pivot. For systems known to be nonsingular, such as
/// resolvents of a Hurwitz matrix on the imaginary axis.
pub fn solve_linear_unchecked<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>, MatError> {
    require_square(a, "solve_linear_unchecked")?;
    if b.rows != a.rows {
        return Err(MatError::Dimension(format!(
            "right-hand side has {} rows, system has {}",
            b.rows, a.rows
        )));
    }
    Ok(Lu::factor(a)?.solve(b))
}

pub fn inverse<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>, MatError> {
    solve_linear(a, &Matrix::identity(a.rows))
}

/// Reduces a real square matrix to upper Hessenberg form `H = Qᵀ·m·Q`.
fn hessenberg(m: &Mat) -> (Mat, Mat) {
    let n = m.rows;
    let mut h = m.clone();
    let mut q = Mat::identity(n);
    for k in 0..n.saturating_sub(2) {
        let norm = (k + 1..n).map(|i| h[(i, k)].powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        for j in 0..n {
            let s: f64 = v.iter().enumerate().map(|(i, vi)| vi * h[(k + 1 + i, j)]).sum();
            let f = 2.0 * s / vv;
            for (i, vi) in v.iter().enumerate() {
                h[(k + 1 + i, j)] -= f * vi;
            }
        }
        for target in [&mut h, &mut q] {
            for i in 0..n {
                let s: f64 = v.iter().enumerate().map(|(j, vj)| target[(i, k + 1 + j)] * vj).sum();
                let f = 2.0 * s / vv;
                for (j, vj) in v.iter().enumerate() {
                    target[(i, k + 1 + j)] -= f * vj;
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = 0.0;
        }
    }
    (h, q)
}

/// Plane rotation `G = [[c, s], [-s̄, c]]` with `G·[a; b] = [r; 0]`.
#[derive(Clone, Copy)]
struct Givens {
    c: f64,
    s: Complex64,
}

impl Givens {
    fn zeroing(a: Complex64, b: Complex64) -> Self {
        let (na, nb) = (a.norm(), b.norm());
        if nb == 0.0 {
            return Self { c: 1.0, s: Complex64::zero() };
        }
        if na == 0.0 {
            return Self { c: 0.0, s: b.conj() / nb };
        }
        let r = na.hypot(nb);
        Self { c: na / r, s: (a / na) * b.conj() / r }
    }

    /// Rows `k`, `k+1` ← `G·rows`, over columns `cols`.
    fn apply_rows(&self, m: &mut CMat, k: usize, cols: std::ops::Range<usize>) {
        for j in cols {
            let (x, y) = (m[(k, j)], m[(k + 1, j)]);
            m[(k, j)] = x * self.c + self.s * y;
            m[(k + 1, j)] = -self.s.conj() * x + y * self.c;
        }
    }

    /// Columns `k`, `k+1` ← `cols·Gᴴ`, over rows `rows`.
    fn apply_cols(&self, m: &mut CMat, k: usize, rows: std::ops::Range<usize>) {
        for i in rows {
            let (x, y) = (m[(i, k)], m[(i, k + 1)]);
            m[(i, k)] = x * self.c + y * self.s.conj();
            m[(i, k + 1)] = -x * self.s + y * self.c;
        }
    }
}

/// Complex Schur decomposition `m = Z·T·Zᴴ` of a real square matrix, with `T`
/// upper triangular.
pub fn complex_schur(m: &Mat) -> Result<(CMat, CMat), MatError> {
    require_square(m, "complex_schur")?;
    let n = m.rows;
    let (h, q) = hessenberg(m);
    let mut t = h.to_complex();
    let mut z = q.to_complex();
    if n < 2 {
        return Ok((t, z));
    }
    let budget = MAX_QR_SWEEPS_PER_EIG * n;
    let mut sweeps = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n - 1;
    let scale = m.norm_fro().max(f64::MIN_POSITIVE);
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let sub = t[(lo, lo - 1)].norm();
            let mut near = t[(lo - 1, lo - 1)].norm() + t[(lo, lo)].norm();
            if near == 0.0 {
                near = scale;
            }
            if sub <= f64::EPSILON * near {
                t[(lo, lo - 1)] = Complex64::zero();
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        sweeps += 1;
        since_deflation += 1;
        if sweeps > budget {
            return Err(MatError::NoConvergence(sweeps));
        }
        let mu = if since_deflation % 11 == 10 {
            t[(hi, hi)] + Complex64::new(0.75 * t[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(t[(hi - 1, hi - 1)], t[(hi - 1, hi)], t[(hi, hi - 1)], t[(hi, hi)])
        };
        for i in lo..=hi {
            t[(i, i)] -= mu;
        }
        let mut rotations = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let g = Givens::zeroing(t[(k, k)], t[(k + 1, k)]);
            g.apply_rows(&mut t, k, k..n);
            t[(k + 1, k)] = Complex64::zero();
            rotations.push(g);
        }
        for (offset, g) in rotations.iter().enumerate() {
            let k = lo + offset;
            g.apply_cols(&mut t, k, 0..(k + 2).min(hi + 1));
            g.apply_cols(&mut z, k, 0..n);
        }
        for i in lo..=hi {
            t[(i, i)] += mu;
        }
    }
    for i in 1..n {
        for j in 0..i {
            t[(i, j)] = Complex64::zero();
        }
    }
    Ok((t, z))
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let (m1, m2) = (mean + disc, mean - disc);
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// All eigenvalues of a real square matrix, with multiplicity.
pub fn eigenvalues(m: &Mat) -> Result<Vec<Complex64>, MatError> {
    let (t, _) = complex_schur(m)?;
    Ok(t.diag())
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &Mat) -> Result<f64, MatError> {
    Ok(eigenvalues(m)?.iter().map(|l| l.norm()).fold(0.0, f64::max))
}

/// Swaps adjacent diagonal entries `k`, `k+1` of an upper-triangular `t`.
fn swap_schur(t: &mut CMat, z: &mut CMat, k: usize) {
    let n = t.rows;
    let (a, b) = (t[(k, k)], t[(k + 1, k + 1)]);
    let g = Givens::zeroing(t[(k, k + 1)], b - a);
    g.apply_rows(t, k, k..n);
    g.apply_cols(t, k, 0..k + 2);
    g.apply_cols(z, k, 0..n);
    t[(k + 1, k)] = Complex64::zero();
    t[(k, k)] = b;
    t[(k + 1, k + 1)] = a;
}

/// Orthonormal real basis (n×k) of the invariant subspace belonging to the
/// eigenvalues with negative real part. Uses [`IMAG_AXIS_TOL`].
pub fn stable_subspace(m: &Mat) -> Result<Mat, MatError> {
    stable_subspace_with_tol(m, IMAG_AXIS_TOL)
}

pub fn stable_subspace_with_tol(m: &Mat, rel_tol: f64) -> Result<Mat, MatError> {
    let (mut t, mut z) = complex_schur(m)?;
    let n = m.rows;
    let tol = rel_tol * m.norm_fro();
    for l in t.diag() {
        if l.re.abs() <= tol {
            return Err(MatError::ImaginaryAxisEigenvalue { re: l.re, im: l.im, tol });
        }
    }
    let mut k = 0;
    for i in 0..n {
        if t[(i, i)].re < 0.0 {
            for j in (k..i).rev() {
                swap_schur(&mut t, &mut z, j);
            }
            k += 1;
        }
    }
    // The complex basis spans a conjugation-closed subspace, so its real and
    // imaginary parts span the same real subspace.
    let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(2 * k);
    for j in 0..k {
        candidates.push((0..n).map(|i| z[(i, j)].re).collect());
        candidates.push((0..n).map(|i| z[(i, j)].im).collect());
    }
    let basis = pivoted_gram_schmidt(candidates, k);
    Ok(Mat::from_fn(n, k, |i, j| basis[j][i]))
}

/// Picks `k` orthonormal vectors from the span of `cols`, largest residual first.
fn pivoted_gram_schmidt(mut cols: Vec<Vec<f64>>, k: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(k);
    for _ in 0..k {
        let (best, _) = cols
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.iter().map(|x| x * x).sum::<f64>()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("candidate set exhausted");
        let mut v = cols.swap_remove(best);
        for _ in 0..2 {
            for q in &out {
                let d: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(x, qi)| *x -= d * qi);
            }
        }
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= nv);
        for c in cols.iter_mut() {
            let d: f64 = v.iter().zip(c.iter()).map(|(a, b)| a * b).sum();
            c.iter_mut().zip(&v).for_each(|(x, vi)| *x -= d * vi);
        }
        out.push(v);
    }
    out
}

/// Eigenvalues of a real symmetric matrix (cyclic Jacobi), ascending.
pub fn symmetric_eigenvalues(m: &Mat) -> Result<Vec<f64>, MatError> {
    symmetric_eigen(m).map(|(d, _)| d)
}

/// Eigen-decomposition of a real symmetric matrix: ascending eigenvalues and
/// the matching orthonormal eigenvectors as columns.
pub fn symmetric_eigen(m: &Mat) -> Result<(Vec<f64>, Mat), MatError> {
    require_square(m, "symmetric_eigen")?;
    let n = m.rows;
    let mut a = m.symmetrize();
    let mut v = Mat::identity(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].powi(2))
            .sum();
        if off <= (f64::EPSILON * a.norm_fro()).powi(2) {
            let d = a.diag();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
            let values = order.iter().map(|&i| d[i]).collect();
            let vectors = Mat::from_fn(n, n, |r, c| v[(r, order[c])]);
            return Ok((values, vectors));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    Err(MatError::NoConvergence(100))
}

/// Largest singular value of a complex matrix.
pub fn max_singular_value(m: &CMat) -> f64 {
    if m.rows == 0 || m.cols == 0 {
        return 0.0;
    }
    // Work with the smaller Gram matrix; embed the Hermitian matrix as a real
    // symmetric one of twice the size (each eigenvalue appears twice).
    let g = if m.rows >= m.cols { &m.adjoint() * m } else { m * &m.adjoint() };
    let k = g.rows;
    match k {
        1 => return g[(0, 0)].re.max(0.0).sqrt(),
        2 => {
            let (a, d, b) = (g[(0, 0)].re, g[(1, 1)].re, g[(0, 1)]);
            let mean = 0.5 * (a + d);
            let top = mean + (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
            return top.max(0.0).sqrt();
        }
        _ => {}
    }
    let mut s = Mat::zeros(2 * k, 2 * k);
    for i in 0..k {
        for j in 0..k {
            let z = g[(i, j)];
            s[(i, j)] = z.re;
            s[(i + k, j + k)] = z.re;
            s[(i, j + k)] = -z.im;
            s[(i + k, j)] = z.im;
        }
    }
    match symmetric_eigenvalues(&s) {
        Ok(ev) => ev.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
        Err(_) => f64::NAN,
    }
}
