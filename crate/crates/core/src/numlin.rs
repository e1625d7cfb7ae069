//! Dense row-major matrices and the structural predicates used by the
//! positivity checks.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: fmt::Debug> fmt::Debug for Mat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[r * self.cols..(r + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Dimension(format!(
                "{} entries cannot fill a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite_value()) {
            return Err(Error::Domain(format!("non-finite matrix entry {bad}")));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Builds a matrix from nested rows. All rows must share one length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_vec(rows.len(), cols, rows.iter().flatten().cloned().collect())
    }

    /// Convenience for literals: `Mat::from_f64(&[&[1.0, 2.0]])`.
    pub fn from_f64(rows: &[&[f64]]) -> Self {
        let nested: Vec<Vec<T>> = rows.iter().map(|r| r.iter().map(|&v| T::lit(v)).collect()).collect();
        Self::from_rows(&nested).expect("literal matrix")
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn diag(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = v.clone();
        }
        m
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

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn map(&self, f: impl Fn(&T) -> T) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn cast<U: Scalar>(&self) -> Mat<U> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|v| v.clone() * s.clone())
    }

    fn check_same_shape(&self, other: &Self, op: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "{op}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect();
        Ok(Mat { rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "sub")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect();
        Ok(Mat { rows: self.rows, cols: self.cols, data })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "matmul: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out[(i, j)].clone() + a.clone() * other[(k, j)].clone();
                    out[(i, j)] = v;
                }
            }
        }
        Ok(out)
    }

    /// `M v`.
    pub fn mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!("mul_vec: {} columns, vector of {}", self.cols, v.len())));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone()))
            .collect())
    }

    /// `vᵀ M`, returned as a plain vector.
    pub fn vec_mul(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.rows {
            return Err(Error::Dimension(format!("vec_mul: {} rows, vector of {}", self.rows, v.len())));
        }
        Ok((0..self.cols)
            .map(|j| (0..self.rows).fold(T::zero(), |acc, i| acc + v[i].clone() * self[(i, j)].clone()))
            .collect())
    }

    /// `𝟙ᵀ M`.
    pub fn col_sums(&self) -> Vec<T> {
        (0..self.cols).map(|j| (0..self.rows).fold(T::zero(), |acc, i| acc + self[(i, j)].clone())).collect()
    }

    /// `M 𝟙`.
    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows).map(|i| self.row(i).iter().fold(T::zero(), |acc, v| acc + v.clone())).collect()
    }

    /// Induced 1-norm (max absolute column sum).
    pub fn norm1(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).fold(T::zero(), |acc, i| acc + self[(i, j)].abs()))
            .fold(T::zero(), T::max_of)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|v| v.abs()).fold(T::zero(), T::max_of)
    }

    pub fn hstack(blocks: &[&Mat<T>]) -> Result<Self> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        if blocks.iter().any(|b| b.rows != rows) {
            return Err(Error::Dimension("hstack: row counts differ".into()));
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut off = 0;
        for b in blocks {
            out.set_block(0, off, b);
            off += b.cols;
        }
        Ok(out)
    }

    pub fn vstack(blocks: &[&Mat<T>]) -> Result<Self> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        if blocks.iter().any(|b| b.cols != cols) {
            return Err(Error::Dimension("vstack: column counts differ".into()));
        }
        let rows = blocks.iter().map(|b| b.rows).sum();
        let mut out = Self::zeros(rows, cols);
        let mut off = 0;
        for b in blocks {
            out.set_block(off, 0, b);
            off += b.rows;
        }
        Ok(out)
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Mat<T>) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols, "block out of range");
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)].clone();
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)].clone())
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Every off-diagonal entry is `>= -tol`.
pub fn is_metzler<T: Scalar>(m: &Mat<T>, tol: &T) -> Result<bool> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("Metzler test needs a square matrix, got {}x{}", m.rows, m.cols)));
    }
    let floor = -tol.clone();
    Ok((0..m.rows).all(|i| (0..m.cols).all(|j| i == j || m[(i, j)] >= floor)))
}

/// Every entry is `>= -tol`.
pub fn is_nonnegative<T: Scalar>(m: &Mat<T>, tol: &T) -> bool {
    let floor = -tol.clone();
    m.data.iter().all(|v| *v >= floor)
}

/// LU factorisation with partial pivoting, `P A = L U` packed in one matrix.
pub struct Lu<T> {
    lu: Mat<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &Mat<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!("LU needs a square matrix, got {}x{}", a.rows, a.cols)));
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax.is_zero() {
                return Err(Error::Singular { rcond: 0.0 });
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)].clone();
            for i in k + 1..n {
                let factor = lu[(i, k)].clone() / pivot.clone();
                if factor.is_zero() {
                    lu[(i, k)] = factor;
                    continue;
                }
                for j in k + 1..n {
                    let v = lu[(i, j)].clone() - factor.clone() * lu[(k, j)].clone();
                    lu[(i, j)] = v;
                }
                lu[(i, k)] = factor;
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve_mat(&self, b: &Mat<T>) -> Result<Mat<T>> {
        let n = self.lu.rows;
        if b.rows != n {
            return Err(Error::Dimension(format!("solve: {n}x{n} system, right-hand side has {} rows", b.rows)));
        }
        let mut x = Mat::zeros(n, b.cols);
        for c in 0..b.cols {
            let mut y: Vec<T> = self.perm.iter().map(|&p| b[(p, c)].clone()).collect();
            for i in 0..n {
                for k in 0..i {
                    y[i] = y[i].clone() - self.lu[(i, k)].clone() * y[k].clone();
                }
            }
            for i in (0..n).rev() {
                for k in i + 1..n {
                    y[i] = y[i].clone() - self.lu[(i, k)].clone() * y[k].clone();
                }
                y[i] = y[i].clone() / self.lu[(i, i)].clone();
            }
            for (i, v) in y.into_iter().enumerate() {
                x[(i, c)] = v;
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Mat<T>> {
        self.solve_mat(&Mat::identity(self.lu.rows))
    }
}

/// Reciprocal 1-norm condition number `1 / (‖A‖₁ ‖A⁻¹‖₁)`.
pub fn rcond1<T: Scalar>(a: &Mat<T>) -> Result<T> {
    let lu = Lu::factor(a)?;
    let inv = lu.inverse()?;
    let denom = a.norm1() * inv.norm1();
    if denom.is_zero() {
        return Ok(T::zero());
    }
    Ok(T::one() / denom)
}

/// Solves `a X = b`. Fails when `a` is singular up to the scalar type's
/// conditioning threshold.
pub fn solve<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Result<Mat<T>> {
    let lu = Lu::factor(a)?;
    if a.rows > 0 {
        let inv = lu.inverse()?;
        let denom = a.norm1() * inv.norm1();
        let rcond = if denom.is_zero() { T::zero() } else { T::one() / denom };
        if rcond.is_zero() || rcond < T::singular_rcond() {
            return Err(Error::Singular { rcond: rcond.as_f64() });
        }
    }
    lu.solve_mat(b)
}

/// Dot product of equally long slices.
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub fn ones<T: Scalar>(n: usize) -> Vec<T> {
    vec![T::one(); n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use proptest::prelude::*;

    fn a0() -> Mat<f64> {
        Mat::from_f64(&[&[-10.0, 2.0, 4.0], &[3.0, -8.0, 1.0], &[2.0, 1.0, -5.0]])
    }

    #[test]
    fn metzler_examples() {
        assert!(is_metzler(&Mat::<f64>::from_f64(&[&[-1.0, 0.0], &[0.0, -1.0]]), &0.0).unwrap());
        assert!(is_metzler(&a0(), &0.0).unwrap());
        assert!(!is_metzler(&Mat::<f64>::from_f64(&[&[-1.0, -0.5], &[1.0, -1.0]]), &0.0).unwrap());
        assert!(matches!(is_metzler(&Mat::<f64>::zeros(2, 3), &0.0), Err(Error::Dimension(_))));
    }

    #[test]
    fn nonnegative_examples() {
        assert!(is_nonnegative(&Mat::<f64>::from_f64(&[&[1.0, 3.0], &[3.0, 0.0], &[2.0, 1.0]]), &0.0));
        assert!(is_nonnegative(&Mat::<f64>::zeros(3, 2), &0.0));
        assert!(!is_nonnegative(&Mat::<f64>::from_f64(&[&[1.0, -1.0]]), &0.0));
        assert!(is_nonnegative(&Mat::<f64>::from_f64(&[&[1.0, -1e-12]]), &1e-9));
    }

    #[test]
    fn solve_identity_and_scalar() {
        let b = Mat::<f64>::from_f64(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(solve(&Mat::identity(2), &b).unwrap(), b);
        let x = solve(&Mat::<f64>::from_f64(&[&[2.0]]), &Mat::from_f64(&[&[4.0]])).unwrap();
        assert_eq!(x[(0, 0)], 2.0);
    }

    #[test]
    fn solve_a0_e0_residual() {
        let e0 = Mat::<f64>::from_f64(&[&[1.0, 3.0], &[3.0, 0.0], &[2.0, 1.0]]);
        let x = solve(&a0(), &e0).unwrap();
        let resid = a0().matmul(&x).unwrap().sub(&e0).unwrap();
        assert!(resid.max_abs() <= 1e-10 * e0.max_abs());
        // A0 is Metzler and Hurwitz, so its inverse is entrywise nonpositive.
        assert!(x.data().iter().all(|v| *v <= 0.0));
    }

    #[test]
    fn solve_exact_rational() {
        let a: Mat<Rational> = Mat::from_f64(&[&[-10.0, 2.0, 4.0], &[3.0, -8.0, 1.0], &[2.0, 1.0, -5.0]]);
        let b = Mat::<Rational>::identity(3);
        let x = solve(&a, &b).unwrap();
        assert_eq!(a.matmul(&x).unwrap(), b);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = Mat::<f64>::from_f64(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(solve(&a, &Mat::identity(2)), Err(Error::Singular { .. })));
        let nearly = Mat::<f64>::from_f64(&[&[1.0, 1.0], &[1.0, 1.0 + 1e-15]]);
        assert!(matches!(solve(&nearly, &Mat::identity(2)), Err(Error::Singular { .. })));
    }

    #[test]
    fn metzler_block_composition() {
        let a = a0();
        let b = Mat::<f64>::from_f64(&[&[1.0, 0.0, 2.0], &[0.5, 0.0, 0.0], &[0.0, 3.0, 1.0]]);
        let top = Mat::hstack(&[&a, &b]).unwrap();
        let bottom = Mat::hstack(&[&b.transpose(), &a.transpose()]).unwrap();
        let big = Mat::vstack(&[&top, &bottom]).unwrap();
        assert!(is_metzler(&big, &0.0).unwrap());
    }

    proptest! {
        #[test]
        fn solve_recovers_x(n in 1usize..=50, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            // diagonally dominant, hence well conditioned
            let mut a = Mat::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            for i in 0..n {
                a[(i, i)] = n as f64 + 1.0;
            }
            let x = Mat::<f64>::from_fn(n, 1, |_, _| rng.gen_range(-10.0..10.0));
            let b = a.matmul(&x).unwrap();
            let got = solve(&a, &b).unwrap();
            for i in 0..n {
                prop_assert!((got[(i, 0)] - x[(i, 0)]).abs() <= 1e-9 * x.max_abs().max(1.0));
            }
        }
    }
}
