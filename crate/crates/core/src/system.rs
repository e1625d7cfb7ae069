//! Continuous-time LTI systems
//!
//! ```text
//! ẋ = A x + B u + E w
//! z = C x + D u + F w
//! ```
//!
//! with positivity classification, transposition and the static-gain oracle.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{solve_lp, strictify, LinearProgram, OpenRelation, OpenRow, StrictnessPolicy};
use crate::numlin::{is_metzler, is_nonnegative, solve, Mat};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub matrix: String,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({},{}) = {}", self.matrix, self.row + 1, self.col + 1, self.value)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub is_positive: bool,
    pub violations: Vec<Violation>,
}

impl PositivityReport {
    pub fn first_violation(&self) -> String {
        self.violations.first().map(|v| v.to_string()).unwrap_or_else(|| "none".to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PositiveLtiSystem<T> {
    pub a: Mat<T>,
    pub b: Mat<T>,
    pub c: Mat<T>,
    pub d: Mat<T>,
    pub e: Mat<T>,
    pub f: Mat<T>,
    pub metzler_a: bool,
    pub nonneg_e: bool,
    pub nonneg_c: bool,
    pub nonneg_f: bool,
}

impl<T: Scalar> PositiveLtiSystem<T> {
    /// Full constructor. `b` must be `n×m` and `d` `q×m`; pass `m = 0`
    /// matrices for analysis-only systems.
    pub fn new(a: Mat<T>, b: Mat<T>, c: Mat<T>, d: Mat<T>, e: Mat<T>, f: Mat<T>) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() {
            return Err(Error::Dimension(format!("A must be square, got {}x{}", a.rows(), a.cols())));
        }
        let q = c.rows();
        let p = e.cols();
        let m = b.cols();
        let checks = [
            ("B", b.shape(), (n, m)),
            ("C", c.shape(), (q, n)),
            ("D", d.shape(), (q, m)),
            ("E", e.shape(), (n, p)),
            ("F", f.shape(), (q, p)),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(Error::Dimension(format!("{name} is {}x{}, expected {}x{}", got.0, got.1, want.0, want.1)));
            }
        }
        let zero = T::zero();
        let metzler_a = is_metzler(&a, &zero)?;
        let nonneg_e = is_nonnegative(&e, &zero);
        let nonneg_c = is_nonnegative(&c, &zero);
        let nonneg_f = is_nonnegative(&f, &zero);
        Ok(PositiveLtiSystem { a, b, c, d, e, f, metzler_a, nonneg_e, nonneg_c, nonneg_f })
    }

    /// System without control input.
    pub fn autonomous(a: Mat<T>, c: Mat<T>, e: Mat<T>, f: Mat<T>) -> Result<Self> {
        let n = a.rows();
        let q = c.rows();
        Self::new(a, Mat::zeros(n, 0), c, Mat::zeros(q, 0), e, f)
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }
    pub fn m(&self) -> usize {
        self.b.cols()
    }
    pub fn p(&self) -> usize {
        self.e.cols()
    }
    pub fn q(&self) -> usize {
        self.c.rows()
    }

    pub fn has_input(&self) -> bool {
        self.m() > 0
    }

    pub fn is_positive(&self) -> bool {
        self.metzler_a && self.nonneg_e && self.nonneg_c && self.nonneg_f
    }

    /// Same as [`classify`] but with an explicit entry tolerance.
    pub fn classify_with(&self, tol: &T) -> PositivityReport {
        let mut violations = Vec::new();
        let neg = -tol.clone();
        let mut scan = |name: &str, m: &Mat<T>, skip_diag: bool| {
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    if skip_diag && i == j {
                        continue;
                    }
                    if m[(i, j)] < neg {
                        violations.push(Violation { matrix: name.to_string(), row: i, col: j, value: m[(i, j)].as_f64() });
                    }
                }
            }
        };
        scan("A", &self.a, true);
        scan("E", &self.e, false);
        scan("C", &self.c, false);
        scan("F", &self.f, false);
        PositivityReport { is_positive: violations.is_empty(), violations }
    }

    pub fn with_feedback(&self, k: &Mat<T>) -> Result<Self> {
        if k.shape() != (self.m(), self.n()) {
            return Err(Error::Dimension(format!("K must be {}x{}", self.m(), self.n())));
        }
        let a = self.a.add(&self.b.matmul(k)?)?;
        let c = self.c.add(&self.d.matmul(k)?)?;
        Self::autonomous(a, c, self.e.clone(), self.f.clone())
    }

    pub fn cast<U: Scalar>(&self) -> PositiveLtiSystem<U> {
        PositiveLtiSystem::new(self.a.cast(), self.b.cast(), self.c.cast(), self.d.cast(), self.e.cast(), self.f.cast())
            .expect("cast preserves shapes")
    }
}

/// Lists every negative off-diagonal entry of A and every negative entry of
/// E, C and F.
pub fn classify<T: Scalar>(sys: &PositiveLtiSystem<T>) -> PositivityReport {
    sys.classify_with(&T::zero())
}

/// `(Aᵀ, Cᵀ, Eᵀ, Fᵀ)`: the input matrix becomes `Cᵀ` and the output matrix
/// `Eᵀ`. Control channels are dropped.
pub fn transpose_system<T: Scalar>(sys: &PositiveLtiSystem<T>) -> PositiveLtiSystem<T> {
    PositiveLtiSystem::autonomous(sys.a.transpose(), sys.e.transpose(), sys.c.transpose(), sys.f.transpose())
        .expect("transposition preserves consistency")
}

/// `F − C A⁻¹ E`.
pub fn static_gain<T: Scalar>(sys: &PositiveLtiSystem<T>) -> Result<Mat<T>> {
    if sys.metzler_a && !is_stable(sys)? {
        return Err(Error::Unstable);
    }
    let x = solve(&sys.a, &sys.e)?;
    sys.f.sub(&sys.c.matmul(&x)?)
}

/// `(max column sum, max row sum)` of the static gain.
pub fn oracle_gains<T: Scalar>(sys: &PositiveLtiSystem<T>) -> Result<(T, T)> {
    let h = static_gain(sys)?;
    Ok(gains_of_static(&h))
}

pub fn gains_of_static<T: Scalar>(h: &Mat<T>) -> (T, T) {
    let l1 = h.col_sums().into_iter().fold(T::zero(), T::max_of);
    let linf = h.row_sums().into_iter().fold(T::zero(), T::max_of);
    (l1, linf)
}

/// Metzler–Hurwitz test: is `{λ ≥ floor, λᵀA ≤ −ε}` feasible?
pub fn is_stable<T: Scalar>(sys: &PositiveLtiSystem<T>) -> Result<bool> {
    is_hurwitz_metzler(&sys.a, &StrictnessPolicy::default())
}

pub fn is_hurwitz_metzler<T: Scalar>(a: &Mat<T>, policy: &StrictnessPolicy<T>) -> Result<bool> {
    if !is_metzler(a, &T::zero())? {
        return Err(Error::NotMetzler);
    }
    let n = a.rows();
    let mut open = Vec::with_capacity(2 * n);
    for i in 0..n {
        open.push(OpenRow::positive(i, n));
    }
    for j in 0..n {
        open.push(OpenRow::new(a.col(j), OpenRelation::Lt, T::zero()));
    }
    let mut lp = LinearProgram::new();
    for i in 0..n {
        lp.add_var(format!("lambda{i}"), None, None);
    }
    for row in strictify(&open, policy) {
        lp.add_row(row.coeffs, row.relation, row.rhs)?;
    }
    Ok(solve_lp(&lp)?.is_optimal())
}

/// Seeded random positive, Hurwitz system with `B`, `D` drawn from `[−1, 1)`.
pub fn random_positive_system(n: usize, m: usize, p: usize, q: usize, seed: u64) -> PositiveLtiSystem<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Mat::from_fn(n, n, |i, j| if i == j { 0.0 } else { rng.gen_range(0.0..1.0) });
    for i in 0..n {
        let s: f64 = a.row(i).iter().sum();
        a[(i, i)] = -(s + rng.gen_range(0.1..1.1));
    }
    let b = Mat::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0));
    let c = Mat::from_fn(q, n, |_, _| rng.gen_range(0.0..1.0));
    let d = Mat::from_fn(q, m, |_, _| rng.gen_range(-1.0..1.0));
    let e = Mat::from_fn(n, p, |_, _| rng.gen_range(0.0..1.0));
    let f = Mat::from_fn(q, p, |_, _| rng.gen_range(0.0..1.0));
    PositiveLtiSystem::new(a, b, c, d, e, f).expect("generated shapes are consistent")
}
