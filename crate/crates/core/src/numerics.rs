//! Dense complex matrices.
//!
//! Everything downstream works with small dense matrices over `Complex<f64>`
//! (at most 4^6 rows). [`Matrix`] stores entries row-major and delegates the
//! factorizations (LU, SVD) to `nalgebra`.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Default absolute tolerance on residuals.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default relative tolerance on invariant values.
pub const DEFAULT_REL_TOL: f64 = 1e-7;

/// Shorthand constructor for a complex number.
#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Real number as a complex number.
#[inline]
pub fn r(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

pub const I: C64 = Complex { re: 0.0, im: 1.0 };
pub const ONE: C64 = Complex { re: 1.0, im: 0.0 };
pub const ZERO: C64 = Complex { re: 0.0, im: 0.0 };

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Build from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Build from a list of rows. Panics on ragged input, which is a
    /// programming error for literal matrices.
    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Self {
        let nr = rows.len();
        let nc = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nr * nc);
        for row in rows {
            assert_eq!(row.as_ref().len(), nc, "ragged matrix literal");
            data.extend_from_slice(row.as_ref());
        }
        Matrix { rows: nr, cols: nc, data }
    }

    /// Build a matrix from real rows.
    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let rows: Vec<Vec<C64>> =
            rows.iter().map(|r| r.as_ref().iter().map(|&x| Complex::new(x, 0.0)).collect()).collect();
        Matrix::from_rows(&rows)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    /// Column vector from entries.
    pub fn column(entries: &[C64]) -> Self {
        Matrix { rows: entries.len(), cols: 1, data: entries.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise difference; `f64::INFINITY` on shape mismatch.
    pub fn dist(&self, other: &Matrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// Checked product.
    pub fn try_mul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Commutator `AB - BA`.
    pub fn commutator(&self, other: &Matrix) -> Matrix {
        &(self * other) - &(other * self)
    }

    /// Anticommutator `AB + BA`.
    pub fn anticommutator(&self, other: &Matrix) -> Matrix {
        &(self * other) + &(other * self)
    }

    /// Integer power (negative exponents invert).
    pub fn pow(&self, e: i32) -> Result<Matrix> {
        let base = if e < 0 { self.inverse()? } else { self.clone() };
        let mut acc = Matrix::identity(self.rows);
        for _ in 0..e.unsigned_abs() {
            acc = &acc * &base;
        }
        Ok(acc)
    }

    /// Copy `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Matrix) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(blocks: &[Matrix]) -> Matrix {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Matrix::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            out.set_block(r0, c0, b);
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    /// Stack matrices vertically.
    pub fn vstack(blocks: &[Matrix]) -> Result<Matrix> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        if blocks.iter().any(|b| b.cols != cols) {
            return Err(Error::Dimension("vstack of matrices with different widths".into()));
        }
        let mut data = Vec::new();
        for b in blocks {
            data.extend_from_slice(&b.data);
        }
        Ok(Matrix { rows: data.len() / cols.max(1), cols, data })
    }

    fn to_na(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn from_na(m: &DMatrix<C64>) -> Matrix {
        Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    /// Determinant (LU with partial pivoting). The 0x0 determinant is 1.
    pub fn det(&self) -> Result<C64> {
        det(self)
    }

    /// Inverse via LU; errors on an exactly singular pivot.
    pub fn inverse(&self) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::Dimension(format!("inverse of non-square {}x{}", self.rows, self.cols)));
        }
        if self.rows == 0 {
            return Ok(Matrix::zeros(0, 0));
        }
        let inv = self
            .to_na()
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Dimension("matrix is singular".into()))?;
        let out = Matrix::from_na(&inv);
        if !out.is_finite() {
            return Err(Error::Dimension("matrix is numerically singular".into()));
        }
        Ok(out)
    }

    /// Solve `self * x = b` for square `self`.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        if !self.is_square() || self.rows != b.rows {
            return Err(Error::Dimension("solve with incompatible shapes".into()));
        }
        let x = self
            .to_na()
            .lu()
            .solve(&b.to_na())
            .ok_or_else(|| Error::Dimension("matrix is singular".into()))?;
        Ok(Matrix::from_na(&x))
    }

    /// Minimum-norm least-squares solution of `self * x ≈ b` via SVD.
    ///
    /// Singular values below `tol` times the largest are treated as zero.
    pub fn lstsq(&self, b: &Matrix, tol: f64) -> Result<Matrix> {
        if self.rows != b.rows {
            return Err(Error::Dimension("lstsq with incompatible shapes".into()));
        }
        if self.rows == 0 || self.cols == 0 {
            return Ok(Matrix::zeros(self.cols, b.cols));
        }
        let svd = self.to_na().svd(true, true);
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let x = svd
            .solve(&b.to_na(), tol * smax.max(f64::MIN_POSITIVE))
            .map_err(|e| Error::Dimension(format!("lstsq failed: {e}")))?;
        Ok(Matrix::from_na(&x))
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        if self.rows == 0 || self.cols == 0 {
            return Vec::new();
        }
        let mut s: Vec<f64> = self.to_na().singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.try_mul(rhs).expect("matrix product shape mismatch")
    }
}

impl Mul for Matrix {
    type Output = Matrix;
    fn mul(self, rhs: Matrix) -> Matrix {
        &self * &rhs
    }
}

impl Mul<C64> for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: C64) -> Matrix {
        self.scale(rhs)
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix sum shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Add for Matrix {
    type Output = Matrix;
    fn add(self, rhs: Matrix) -> Matrix {
        &self + &rhs
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix difference shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Sub for Matrix {
    type Output = Matrix;
    fn sub(self, rhs: Matrix) -> Matrix {
        &self - &rhs
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.scale(-ONE)
    }
}

/// Determinant by LU factorization with partial pivoting.
pub fn det(m: &Matrix) -> Result<C64> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("determinant of non-square {}x{}", m.rows, m.cols)));
    }
    match m.rows {
        0 => Ok(ONE),
        1 => Ok(m.data[0]),
        _ => Ok(m.to_na().lu().determinant()),
    }
}

/// Result of [`nullspace`].
#[derive(Clone, Debug)]
pub struct Nullspace {
    /// Orthonormal column vectors spanning the numerical null space.
    pub basis: Vec<Matrix>,
    /// All singular values, descending. Wide inputs are padded with zero
    /// rows, so there is one value per column.
    pub singular_values: Vec<f64>,
}

impl Nullspace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Ratio between the smallest singular value outside the null space and
    /// the largest one inside it (floored at machine precision relative to
    /// the top singular value). Large ratios mean a well-separated kernel.
    pub fn gap_ratio(&self) -> f64 {
        let k = self.basis.len();
        let s = &self.singular_values;
        if k == 0 || k >= s.len() {
            return f64::INFINITY;
        }
        let top = s.first().copied().unwrap_or(0.0);
        let inside = s[s.len() - k].max(f64::EPSILON * top.max(1.0));
        s[s.len() - k - 1] / inside
    }
}

/// Right null space of `m`: an orthonormal basis of `{v : |mv| <= tol |m|}`
/// read off a singular value decomposition.
pub fn nullspace(m: &Matrix, tol: f64) -> Nullspace {
    let n = m.cols;
    if n == 0 {
        return Nullspace { basis: Vec::new(), singular_values: Vec::new() };
    }
    let mut a = m.to_na();
    if a.nrows() < n {
        a = a.resize_vertically(n, ZERO);
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let scale = singular_values.first().copied().unwrap_or(0.0);
    let cutoff = tol * scale;
    let basis = order
        .iter()
        .filter(|&&i| svd.singular_values[i] <= cutoff || scale == 0.0)
        .map(|&i| Matrix::from_fn(n, 1, |r, _| v_t[(i, r)].conj()))
        .collect();
    Nullspace { basis, singular_values }
}

/// Kronecker product: entry `(i,j)` of `a` times entry `(k,l)` of `b` lands at
/// `(i*rows(b)+k, j*cols(b)+l)`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (br, bc) = (b.rows, b.cols);
    let mut out = Matrix::zeros(a.rows * br, a.cols * bc);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let x = a[(i, j)];
            if x == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = x * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a list; the empty list gives the 1x1 identity.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a Matrix>) -> Matrix {
    factors.into_iter().fold(Matrix::identity(1), |acc, f| kron(&acc, f))
}

/// Eigenvalues of a 2x2 matrix from the characteristic quadratic. The root
/// of larger modulus comes first; the second is recovered as `det/first` to
/// avoid cancellation.
pub fn eig2(m: &Matrix) -> Result<(C64, C64)> {
    if m.rows != 2 || m.cols != 2 {
        return Err(Error::Dimension(format!("eig2 needs a 2x2 matrix, got {}x{}", m.rows, m.cols)));
    }
    let tr = m.trace();
    let d = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (tr * tr - d * 4.0).sqrt();
    let (p, q) = ((tr + disc) * 0.5, (tr - disc) * 0.5);
    let big = if p.norm() >= q.norm() { p } else { q };
    if big == ZERO {
        return Ok((ZERO, ZERO));
    }
    Ok((big, d / big))
}

/// Principal square root with argument in (-pi/2, pi/2].
pub fn principal_sqrt(z: C64) -> C64 {
    let s = z.sqrt();
    // num-complex already returns the principal root; fix the branch cut so
    // that negative reals map to +i*sqrt(|z|).
    if s.re.abs() <= f64::EPSILON * s.norm() && s.im < 0.0 {
        -s
    } else {
        s
    }
}

/// Principal fourth root with argument in (-pi/4, pi/4].
pub fn principal_fourth_root(z: C64) -> C64 {
    let (rad, arg) = z.to_polar();
    // to_polar returns arg in (-pi, pi]
    C64::from_polar(rad.powf(0.25), arg / 4.0)
}

/// Relative deviation `|a-b| / max(|a|,|b|,tiny)`.
pub fn rel_err(a: C64, b: C64) -> f64 {
    let scale = a.norm().max(b.norm()).max(1e-300);
    (a - b).norm() / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn approx(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn det_examples() {
        assert_eq!(det(&Matrix::zeros(0, 0)).unwrap(), ONE);
        assert!(approx(det(&Matrix::identity(3)).unwrap(), ONE, 1e-15));
        let m = Matrix::from_real_rows(&[[2.0, -1.0], [-1.0, 1.0]]);
        assert!(approx(det(&m).unwrap(), ONE, 1e-14));
        assert!(matches!(det(&Matrix::zeros(2, 3)), Err(Error::Dimension(_))));
    }

    #[test]
    fn nullspace_examples() {
        assert!(nullspace(&Matrix::identity(2), 1e-9).basis.is_empty());
        let m = Matrix::from_real_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        let ns = nullspace(&m, 1e-9);
        assert_eq!(ns.dim(), 1);
        let v = &ns.basis[0];
        // proportional to (1,-1)/sqrt 2
        let ratio = v[(1, 0)] / v[(0, 0)];
        assert!(approx(ratio, r(-1.0), 1e-12));
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nullspace_of_wide_matrix() {
        let m = Matrix::from_real_rows(&[[1.0, 0.0, 0.0]]);
        let ns = nullspace(&m, 1e-9);
        assert_eq!(ns.dim(), 2);
        for v in &ns.basis {
            assert!((&m * v).max_abs() < 1e-12);
        }
    }

    #[test]
    fn kron_examples() {
        assert_eq!(kron(&Matrix::identity(2), &Matrix::identity(2)), Matrix::identity(4));
        let a = Matrix::diag(&[r(2.0), r(3.0)]);
        let b = Matrix::diag(&[r(5.0), r(7.0)]);
        assert_eq!(kron(&a, &b), Matrix::diag(&[r(10.0), r(14.0), r(15.0), r(21.0)]));
        let n = Matrix::from_real_rows(&[[0.0, 1.0], [0.0, 0.0]]);
        let k = kron(&n, &Matrix::identity(2));
        let mut expect = Matrix::zeros(4, 4);
        expect.set_block(0, 2, &Matrix::identity(2));
        assert_eq!(k, expect);
    }

    #[test]
    fn eig2_examples() {
        let (a, b) = eig2(&Matrix::diag(&[r(4.0), r(0.25)])).unwrap();
        assert!(approx(a, r(4.0), 1e-14) && approx(b, r(0.25), 1e-14));
        let (a, b) = eig2(&Matrix::identity(2)).unwrap();
        assert!(approx(a, ONE, 1e-14) && approx(b, ONE, 1e-14));
        let (a, b) = eig2(&Matrix::from_real_rows(&[[2.0, -1.0], [-1.0, 1.0]])).unwrap();
        let s5 = 5f64.sqrt();
        assert!(approx(a, r((3.0 + s5) / 2.0), 1e-14));
        assert!(approx(b, r((3.0 - s5) / 2.0), 1e-14));
        assert!(eig2(&Matrix::identity(3)).is_err());
    }

    #[test]
    fn roots_use_principal_branch() {
        assert!(approx(principal_sqrt(r(-4.0)), c(0.0, 2.0), 1e-15));
        let z = principal_fourth_root(r(-16.0));
        assert!(approx(z.powi(4), r(-16.0), 1e-12));
        assert!(z.arg() > 0.0 && z.arg() <= std::f64::consts::FRAC_PI_4 + 1e-15);
    }

    #[test]
    fn inverse_roundtrip() {
        let m = Matrix::from_rows(&[[c(1.0, 2.0), c(0.5, 0.0)], [c(-1.0, 0.0), c(0.0, 3.0)]]);
        let p = &m * &m.inverse().unwrap();
        assert!(p.dist(&Matrix::identity(2)) < 1e-14);
    }

    fn unit_disc_matrix(n: usize) -> impl Strategy<Value = Matrix> {
        proptest::collection::vec((0.0f64..1.0, 0.0f64..std::f64::consts::TAU), n * n).prop_map(
            move |v| Matrix::from_vec(n, n, v.into_iter().map(|(rad, t)| C64::from_polar(rad, t)).collect()).unwrap(),
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn det_is_multiplicative(a in unit_disc_matrix(6), b in unit_disc_matrix(6)) {
            let lhs = det(&(&a * &b)).unwrap();
            let rhs = det(&a).unwrap() * det(&b).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm().max(1e-3));
        }

        #[test]
        fn kron_is_associative(a in unit_disc_matrix(2), b in unit_disc_matrix(3), cm in unit_disc_matrix(2)) {
            let left = kron(&kron(&a, &b), &cm);
            let right = kron(&a, &kron(&b, &cm));
            prop_assert!(left.dist(&right) == 0.0 || left.dist(&right) < 1e-15);
        }

        #[test]
        fn nullspace_vectors_are_annihilated(a in unit_disc_matrix(4), b in unit_disc_matrix(4)) {
            // rank-deficient product of a 4x2 and a 2x4 block
            let left = a.block(0, 0, 4, 2);
            let right = b.block(0, 0, 2, 4);
            let m = &left * &right;
            let tol = 1e-9;
            let ns = nullspace(&m, tol);
            for v in &ns.basis {
                prop_assert!((&m * v).norm() <= 10.0 * tol * m.norm());
            }
        }
    }
}
