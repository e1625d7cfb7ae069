//! Multivariate polynomials in `δ ∈ ℝᴺ` with scalar, vector, matrix or
//! symbolic coefficients.
//!
//! Terms are kept in a `BTreeMap` under the graded-lexicographic monomial
//! order (total degree first, then larger exponent of the earlier parameter
//! first), so every dense coefficient listing is reproducible.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numlin::Mat;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(num_params: usize) -> Self {
        Monomial(vec![0; num_params])
    }

    /// `δ_k` among `num_params` parameters.
    pub fn var(num_params: usize, k: usize) -> Self {
        let mut e = vec![0; num_params];
        e[k] = 1;
        Monomial(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn num_params(&self) -> usize {
        self.0.len()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn eval<T: Scalar>(&self, point: &[T]) -> T {
        let mut v = T::one();
        for (x, &e) in point.iter().zip(&self.0) {
            for _ in 0..e {
                v = v * x.clone();
            }
        }
        v
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All monomials in `num_params` variables with total degree `≤ max_degree`,
/// in graded-lex order.
pub fn monomials_up_to(num_params: usize, max_degree: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    for deg in 0..=max_degree {
        let mut current = vec![0u32; num_params];
        exponents_of_degree(num_params, deg, 0, &mut current, &mut out);
    }
    out
}

fn exponents_of_degree(n: usize, remaining: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<Monomial>) {
    if n == 0 {
        if remaining == 0 {
            out.push(Monomial(Vec::new()));
        }
        return;
    }
    if pos == n - 1 {
        current[pos] = remaining;
        out.push(Monomial(current.clone()));
        current[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        exponents_of_degree(n, remaining - e, pos + 1, current, out);
    }
    current[pos] = 0;
}

/// Coefficient types a polynomial can carry.
pub trait Coefficient<T: Scalar>: Clone + Debug + PartialEq {
    fn is_zero_coeff(&self) -> bool;
    fn zero_like(&self) -> Self;
    fn add_coeff(&self, other: &Self) -> Result<Self>;
    fn scale_coeff(&self, s: &T) -> Self;
}

impl<T: Scalar> Coefficient<T> for T {
    fn is_zero_coeff(&self) -> bool {
        self.is_zero()
    }
    fn zero_like(&self) -> Self {
        T::zero()
    }
    fn add_coeff(&self, other: &Self) -> Result<Self> {
        Ok(self.clone() + other.clone())
    }
    fn scale_coeff(&self, s: &T) -> Self {
        self.clone() * s.clone()
    }
}

impl<T: Scalar> Coefficient<T> for Vec<T> {
    fn is_zero_coeff(&self) -> bool {
        self.iter().all(|v| v.is_zero())
    }
    fn zero_like(&self) -> Self {
        vec![T::zero(); self.len()]
    }
    fn add_coeff(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!("vector lengths {} and {}", self.len(), other.len())));
        }
        Ok(self.iter().zip(other).map(|(a, b)| a.clone() + b.clone()).collect())
    }
    fn scale_coeff(&self, s: &T) -> Self {
        self.iter().map(|v| v.clone() * s.clone()).collect()
    }
}

impl<T: Scalar> Coefficient<T> for Mat<T> {
    fn is_zero_coeff(&self) -> bool {
        self.data().iter().all(|v| v.is_zero())
    }
    fn zero_like(&self) -> Self {
        Mat::zeros(self.rows(), self.cols())
    }
    fn add_coeff(&self, other: &Self) -> Result<Self> {
        self.add(other)
    }
    fn scale_coeff(&self, s: &T) -> Self {
        self.scale(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<C> {
    num_params: usize,
    /// Shape template; also the value of the zero polynomial.
    zero: C,
    terms: BTreeMap<Monomial, C>,
}

pub type Poly<T> = Polynomial<T>;
pub type PolyVec<T> = Polynomial<Vec<T>>;
pub type PolyMatrix<T> = Polynomial<Mat<T>>;

impl<C> Polynomial<C> {
    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn zero_coeff(&self) -> &C {
        &self.zero
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn coeff(&self, m: &Monomial) -> &C {
        self.terms.get(m).unwrap_or(&self.zero)
    }
}

impl<C> Polynomial<C> {
    pub fn map_coeffs<D: Clone>(&self, f: impl Fn(&C) -> D) -> Polynomial<D> {
        Polynomial {
            num_params: self.num_params,
            zero: f(&self.zero),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), f(c))).collect(),
        }
    }
}

impl<C> Polynomial<C> {
    pub fn zero<T: Scalar>(num_params: usize, template: C) -> Self
    where
        C: Coefficient<T>,
    {
        Polynomial { num_params, zero: template.zero_like(), terms: BTreeMap::new() }
    }

    pub fn constant<T: Scalar>(num_params: usize, c: C) -> Self
    where
        C: Coefficient<T>,
    {
        let mut p = Self::zero(num_params, c.clone());
        p.add_term(Monomial::one(num_params), c).expect("same shape");
        p
    }

    /// Builds from `(exponents, coefficient)` pairs; repeated monomials add up.
    pub fn from_terms<T: Scalar>(num_params: usize, template: C, terms: impl IntoIterator<Item = (Monomial, C)>) -> Result<Self>
    where
        C: Coefficient<T>,
    {
        let mut p = Self::zero(num_params, template);
        for (m, c) in terms {
            p.add_term(m, c)?;
        }
        Ok(p)
    }

    pub fn add_term<T: Scalar>(&mut self, m: Monomial, c: C) -> Result<()>
    where
        C: Coefficient<T>,
    {
        if m.num_params() != self.num_params {
            return Err(Error::Dimension(format!("monomial has {} exponents, expected {}", m.num_params(), self.num_params)));
        }
        // shape check against the template
        self.zero.add_coeff(&c)?;
        let sum = match self.terms.get(&m) {
            Some(old) => old.add_coeff(&c)?,
            None => c,
        };
        if sum.is_zero_coeff() {
            self.terms.remove(&m);
        } else {
            self.terms.insert(m, sum);
        }
        Ok(())
    }

    pub fn add<T: Scalar>(&self, other: &Self) -> Result<Self>
    where
        C: Coefficient<T>,
    {
        if self.num_params != other.num_params {
            return Err(Error::Dimension("parameter counts differ".into()));
        }
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone())?;
        }
        Ok(out)
    }

    pub fn scale<T: Scalar>(&self, s: &T) -> Self
    where
        C: Coefficient<T>,
    {
        let mut out = Self::zero(self.num_params, self.zero.clone());
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.scale_coeff(s)).expect("same shape");
        }
        out
    }

    pub fn sub<T: Scalar>(&self, other: &Self) -> Result<Self>
    where
        C: Coefficient<T>,
    {
        self.add(&other.scale(&-T::one()))
    }

    /// Product under a bilinear coefficient map `f`.
    pub fn mul_with<T: Scalar, D, R>(&self, other: &Polynomial<D>, f: impl Fn(&C, &D) -> Result<R>) -> Result<Polynomial<R>>
    where
        C: Coefficient<T>,
        D: Coefficient<T>,
        R: Coefficient<T>,
    {
        if self.num_params != other.num_params {
            return Err(Error::Dimension("parameter counts differ".into()));
        }
        let template = f(&self.zero, &other.zero)?;
        let mut out = Polynomial::zero(self.num_params, template);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), f(ca, cb)?)?;
            }
        }
        Ok(out)
    }

    /// Multiplies by a scalar polynomial.
    pub fn mul_poly<T: Scalar>(&self, s: &Poly<T>) -> Result<Self>
    where
        C: Coefficient<T>,
    {
        self.mul_with(s, |c, v| Ok(c.scale_coeff(v)))
    }

    pub fn eval<T: Scalar>(&self, point: &[T]) -> Result<C>
    where
        C: Coefficient<T>,
    {
        if point.len() != self.num_params {
            return Err(Error::Dimension(format!("point has {} entries, expected {}", point.len(), self.num_params)));
        }
        let mut acc = self.zero.clone();
        for (m, c) in &self.terms {
            acc = acc.add_coeff(&c.scale_coeff(&m.eval(point)))?;
        }
        Ok(acc)
    }

    /// Dense coefficients over [`monomials_up_to`]`(N, d)`, zero padded.
    pub fn coefficient_rows<T: Scalar>(&self, d: u32) -> Result<Vec<C>>
    where
        C: Coefficient<T>,
    {
        let deg = self.degree();
        if deg > d {
            return Err(Error::Degree { degree: deg as usize, max: d as usize });
        }
        Ok(monomials_up_to(self.num_params, d).iter().map(|m| self.coeff(m).clone()).collect())
    }

    pub fn from_coefficient_rows<T: Scalar>(num_params: usize, d: u32, template: C, rows: Vec<C>) -> Result<Self>
    where
        C: Coefficient<T>,
    {
        let monos = monomials_up_to(num_params, d);
        if monos.len() != rows.len() {
            return Err(Error::Dimension(format!("{} rows for {} monomials", rows.len(), monos.len())));
        }
        Self::from_terms(num_params, template, monos.into_iter().zip(rows))
    }
}

impl<T: Scalar> Poly<T> {
    /// The scalar polynomial `δ_k`.
    pub fn var(num_params: usize, k: usize) -> Self {
        Polynomial::from_terms(num_params, T::zero(), [(Monomial::var(num_params, k), T::one())]).expect("valid monomial")
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.mul_with(other, |a: &T, b: &T| Ok(a.clone() * b.clone())).expect("scalar product")
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Polynomial::constant(self.num_params, T::one());
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }
}

impl<T: Scalar> PolyMatrix<T> {
    /// `Σ_k δᵏ M_k` for a univariate coefficient list.
    pub fn univariate(coeffs: &[Mat<T>]) -> Result<Self> {
        let template = coeffs.first().cloned().ok_or_else(|| Error::Dimension("no coefficients".into()))?;
        Polynomial::from_terms(1, template, coeffs.iter().enumerate().map(|(k, c)| (Monomial(vec![k as u32]), c.clone())))
    }

    pub fn shape(&self) -> (usize, usize) {
        self.zero_coeff().shape()
    }

    pub fn transpose(&self) -> Self {
        self.map_coeffs(|m| m.transpose())
    }

    pub fn cast<U: Scalar>(&self) -> PolyMatrix<U> {
        self.map_coeffs(|m| m.cast())
    }

    /// Vector-matrix product `vᵀ M(δ)` with a polynomial row vector.
    pub fn left_mul_vec(&self, v: &PolyVec<T>) -> Result<PolyVec<T>> {
        v.mul_with(self, |a: &Vec<T>, m: &Mat<T>| m.vec_mul(a))
    }
}

/// Axis-aligned box of parameter values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> BoxDomain<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension("box bounds differ in length".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l >= u) {
            return Err(Error::Domain("box requires lower < upper in every coordinate".into()));
        }
        Ok(BoxDomain { lower, upper })
    }

    pub fn unit(num_params: usize) -> Self {
        BoxDomain { lower: vec![T::zero(); num_params], upper: vec![T::one(); num_params] }
    }

    pub fn num_params(&self) -> usize {
        self.lower.len()
    }

    /// Tensor grid with `points` evenly spaced values per coordinate.
    pub fn grid(&self, points: usize) -> Vec<Vec<T>> {
        let axes: Vec<Vec<T>> = (0..self.num_params())
            .map(|k| {
                if points <= 1 {
                    return vec![self.lower[k].clone()];
                }
                let span = self.upper[k].clone() - self.lower[k].clone();
                let steps = T::from_int(points as i64 - 1);
                (0..points).map(|i| self.lower[k].clone() + span.clone() * T::from_int(i as i64) / steps.clone()).collect()
            })
            .collect();
        cartesian(&axes)
    }

    pub fn vertices(&self) -> Vec<Vec<T>> {
        let axes: Vec<Vec<T>> = (0..self.num_params()).map(|k| vec![self.lower[k].clone(), self.upper[k].clone()]).collect();
        cartesian(&axes)
    }
}

fn cartesian<T: Clone>(axes: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for v in axis {
                let mut p = prefix.clone();
                p.push(v.clone());
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Affine expression `Σ coeffs[v]·x_v + constant` in LP decision variables.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearForm<T> {
    pub coeffs: BTreeMap<usize, T>,
    pub constant: T,
}

impl<T: Scalar> LinearForm<T> {
    pub fn zero() -> Self {
        LinearForm { coeffs: BTreeMap::new(), constant: T::zero() }
    }

    pub fn var(v: usize, coeff: T) -> Self {
        let mut f = Self::zero();
        f.add_var(v, coeff);
        f
    }

    pub fn constant(c: T) -> Self {
        LinearForm { coeffs: BTreeMap::new(), constant: c }
    }

    pub fn add_var(&mut self, v: usize, coeff: T) {
        if coeff.is_zero() {
            return;
        }
        let sum = match self.coeffs.remove(&v) {
            Some(old) => old + coeff,
            None => coeff,
        };
        if !sum.is_zero() {
            self.coeffs.insert(v, sum);
        }
    }

    /// Dense coefficient vector of length `width`.
    pub fn dense(&self, width: usize) -> Vec<T> {
        let mut out = vec![T::zero(); width];
        for (&v, c) in &self.coeffs {
            out[v] = c.clone();
        }
        out
    }

    pub fn eval(&self, x: &[T]) -> T {
        self.coeffs.iter().fold(self.constant.clone(), |acc, (&v, c)| acc + c.clone() * x[v].clone())
    }

    pub fn max_var(&self) -> Option<usize> {
        self.coeffs.keys().next_back().copied()
    }
}

impl<T: Scalar> Coefficient<T> for LinearForm<T> {
    fn is_zero_coeff(&self) -> bool {
        self.coeffs.is_empty() && self.constant.is_zero()
    }
    fn zero_like(&self) -> Self {
        Self::zero()
    }
    fn add_coeff(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        for (&v, c) in &other.coeffs {
            out.add_var(v, c.clone());
        }
        out.constant = out.constant + other.constant.clone();
        Ok(out)
    }
    fn scale_coeff(&self, s: &T) -> Self {
        let mut out = Self::zero();
        for (&v, c) in &self.coeffs {
            out.add_var(v, c.clone() * s.clone());
        }
        out.constant = self.constant.clone() * s.clone();
        out
    }
}

/// Polynomial in `δ` whose coefficients are affine in the decision variables.
pub type PolyAffine<T> = Polynomial<LinearForm<T>>;

impl<T: Scalar> PolyAffine<T> {
    /// Value of the coefficients at `x`, leaving a scalar polynomial in `δ`.
    pub fn at(&self, x: &[T]) -> Poly<T> {
        Polynomial::from_terms(self.num_params(), T::zero(), self.terms().map(|(m, f)| (m.clone(), f.eval(x)))).expect("same parameters")
    }

    /// Multiplies by a scalar polynomial.
    pub fn times(&self, s: &Poly<T>) -> Self {
        self.mul_poly(s).expect("same parameter count")
    }
}

impl<T: Scalar> PolyMatrix<T> {
    /// Entry `(i, j)` as a scalar polynomial.
    pub fn entry(&self, i: usize, j: usize) -> Poly<T> {
        Polynomial::from_terms(self.num_params(), T::zero(), self.terms().map(|(m, c)| (m.clone(), c[(i, j)].clone())))
            .expect("same parameters")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn x() -> Poly<f64> {
        Poly::var(1, 0)
    }

    #[test]
    fn graded_lex_order() {
        let m = monomials_up_to(2, 2);
        let e: Vec<Vec<u32>> = m.into_iter().map(|m| m.0).collect();
        assert_eq!(e, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(monomials_up_to(0, 3), vec![Monomial(vec![])]);
    }

    #[test]
    fn ring_examples() {
        let one = Poly::constant(1, 1.0);
        let p = one.add(&x()).unwrap();
        assert_eq!(p.mul(&one), p);
        let q = one.sub(&x()).unwrap();
        let r = p.mul(&q);
        assert_eq!(r.coefficient_rows(2).unwrap(), vec![1.0, 0.0, -1.0]);
    }

    #[test]
    fn constant_rows_are_padded() {
        let p = Poly::constant(1, 3.0);
        assert_eq!(p.coefficient_rows(2).unwrap(), vec![3.0, 0.0, 0.0]);
        assert!(matches!(x().pow(3).coefficient_rows(2), Err(Error::Degree { degree: 3, max: 2 })));
    }

    #[test]
    fn matrix_polynomial_evaluation() {
        let a0 = Mat::from_f64(&[&[-10.0, 2.0, 4.0], &[3.0, -8.0, 1.0], &[2.0, 1.0, -5.0]]);
        let a1 = Mat::from_f64(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let a2 = Mat::from_f64(&[&[0.5, 0.0, 0.0], &[0.0, 0.5, 0.0], &[0.0, 0.0, 0.5]]);
        let p = PolyMatrix::univariate(&[a0.clone(), a1.clone(), a2.clone()]).unwrap();
        assert_eq!(p.eval(&[0.0]).unwrap(), a0);
        assert_eq!(p.eval(&[1.0]).unwrap(), a0.add(&a1).unwrap().add(&a2).unwrap());
    }

    #[test]
    fn vector_times_affine_matrix_by_hand() {
        // φ(δ) = (1 + δ, 2δ),  Δ(δ) = [[δ, 1], [0, 2δ]]
        let phi = PolyVec::from_terms(1, vec![0.0, 0.0], [(Monomial(vec![0]), vec![1.0, 0.0]), (Monomial(vec![1]), vec![1.0, 2.0])])
            .unwrap();
        let delta = PolyMatrix::univariate(&[Mat::from_f64(&[&[0.0, 1.0], &[0.0, 0.0]]), Mat::from_f64(&[&[1.0, 0.0], &[0.0, 2.0]])])
            .unwrap();
        let r = delta.left_mul_vec(&phi).unwrap();
        // φᵀΔ = (δ(1+δ), (1+δ) + 4δ²) = (δ + δ², 1 + δ + 4δ²)
        assert_eq!(r.coefficient_rows(2).unwrap(), vec![vec![0.0, 1.0], vec![1.0, 1.0], vec![1.0, 4.0]]);
    }

    #[test]
    fn random_cubic_rows_reconstruct_values() {
        let coeffs = [0.3, -1.2, 2.5, 0.7];
        let p = Poly::from_terms(1, 0.0, coeffs.iter().enumerate().map(|(k, &c)| (Monomial(vec![k as u32]), c))).unwrap();
        let rows = p.coefficient_rows(3).unwrap();
        for t in [0.0f64, 0.25, 0.5, 0.75, 1.0] {
            let direct: f64 = rows.iter().enumerate().map(|(k, c)| c * t.powi(k as i32)).sum();
            assert!((direct - p.eval(&[t]).unwrap()).abs() < 1e-14);
        }
        let back = Poly::from_coefficient_rows(1, 3, 0.0, rows).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn affine_coefficients_cancel() {
        let mut f = LinearForm::var(2, 1.5);
        f.add_var(2, -1.5);
        assert!(f.is_zero_coeff());
        let g = LinearForm::var(0, 2.0).add_coeff(&LinearForm::constant(1.0)).unwrap();
        let p = PolyAffine::constant(1, g).times(&x());
        assert_eq!(p.at(&[3.0]).coefficient_rows(1).unwrap(), vec![0.0, 7.0]);
    }

    #[test]
    fn grid_and_vertices() {
        let b = BoxDomain::<f64>::unit(2);
        assert_eq!(b.grid(3).len(), 9);
        assert_eq!(b.vertices(), vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]);
        assert!(BoxDomain::new(vec![1.0], vec![1.0]).is_err());
    }

    fn small_poly() -> impl Strategy<Value = Poly<f64>> {
        proptest::collection::vec(((0u32..3, 0u32..3), -2.0f64..2.0), 0..5).prop_map(|ts| {
            Poly::from_terms(2, 0.0, ts.into_iter().map(|((a, b), c)| (Monomial(vec![a, b]), c))).unwrap()
        })
    }

    proptest! {
        #[test]
        fn ring_axioms_at_sample_points(p in small_poly(), q in small_poly(), r in small_poly(),
                                        pts in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 10)) {
            let assoc_l = p.mul(&q).mul(&r);
            let assoc_r = p.mul(&q.mul(&r));
            let dist_l = p.mul(&q.add(&r).unwrap());
            let dist_r = p.mul(&q).add(&p.mul(&r)).unwrap();
            for (a, b) in pts {
                let pt = [a, b];
                prop_assert!((assoc_l.eval(&pt).unwrap() - assoc_r.eval(&pt).unwrap()).abs() < 1e-12);
                prop_assert!((dist_l.eval(&pt).unwrap() - dist_r.eval(&pt).unwrap()).abs() < 1e-12);
            }
        }

        #[test]
        fn coefficient_rows_round_trip(p in small_poly()) {
            let rows = p.coefficient_rows(4).unwrap();
            prop_assert_eq!(Poly::from_coefficient_rows(2, 4, 0.0, rows).unwrap(), p);
        }
    }
}
