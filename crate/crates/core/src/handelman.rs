//! Handelman relaxation of polynomial-in-`δ` rows over a box.
//!
//! On `[lo, hi]ᴺ` the affine forms `g_{2k} = δ_k − lo_k` and
//! `g_{2k+1} = hi_k − δ_k` are nonnegative, so a polynomial written as a
//! nonpositive combination of their products is nonpositive on the box.
//! Matching coefficients against the products turns each robust row into
//! finitely many linear rows.
//!
//! Two equivalent encodings are provided. The full one keeps one multiplier
//! per product and one equality per monomial. The reduced one eliminates a
//! nonsingular square block `Υ_B` of the product matrix and keeps only the
//! remaining multipliers, at the price of dense inequality rows.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{strictify, LinearProgram, OpenRelation, Relation};
use crate::numlin::{Lu, Mat};
use crate::poly::{monomials_up_to, BoxDomain, Coefficient, LinearForm, Monomial, Poly, Polynomial};
use crate::robust::{push, RobustLinearProgram};
use crate::scalar::Scalar;

/// Largest number of products a relaxation may use.
pub const PRODUCT_CAP: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RelaxationForm {
    Full,
    Reduced,
}

impl std::str::FromStr for RelaxationForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(RelaxationForm::Full),
            "reduced" => Ok(RelaxationForm::Reduced),
            _ => Err(Error::Parse(format!("unknown relaxation form {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct HandelmanBasis<T> {
    pub domain: BoxDomain<T>,
    pub degree: u32,
    /// `g_0, g_1, …` as polynomials in `δ`.
    pub forms: Vec<Poly<T>>,
}

impl<T: Scalar> HandelmanBasis<T> {
    pub fn new(domain: &BoxDomain<T>, degree: u32) -> Self {
        let np = domain.num_params();
        let mut forms = Vec::with_capacity(2 * np);
        for k in 0..np {
            let x = Poly::var(np, k);
            forms.push(x.sub(&Poly::constant(np, domain.lower[k].clone())).expect("same parameters"));
            forms.push(Poly::constant(np, domain.upper[k].clone()).sub(&x).expect("same parameters"));
        }
        HandelmanBasis { domain: domain.clone(), degree, forms }
    }

    pub fn num_params(&self) -> usize {
        self.domain.num_params()
    }
}

/// `C(r + b, b)`, saturating.
fn count_up_to(r: usize, b: u32) -> usize {
    let mut acc: u128 = 1;
    for i in 1..=b as u128 {
        acc = acc * (r as u128 + i) / i;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// Exponent vectors over the `2N` forms, total degree `0..=b`, graded
/// lexicographic order.
pub fn enumerate_products<T: Scalar>(basis: &HandelmanBasis<T>) -> Result<Vec<Monomial>> {
    let r = basis.forms.len();
    let count = count_up_to(r, basis.degree);
    if count > PRODUCT_CAP {
        return Err(Error::Combinatorial { count, cap: PRODUCT_CAP });
    }
    Ok(monomials_up_to(r, basis.degree))
}

/// `"1"`, `"g1"`, `"g1*g2"`, `"g1^2"`, … with forms numbered from 1.
pub fn product_label(product: &Monomial) -> String {
    let parts: Vec<String> = product
        .0
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(i, &e)| if e == 1 { format!("g{}", i + 1) } else { format!("g{}^{e}", i + 1) })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

/// `Υ[j, k]` is the coefficient of the `j`-th monomial in `δ` (degree up to
/// `b`) in the `k`-th product.
pub fn build_upsilon<T: Scalar>(basis: &HandelmanBasis<T>, products: &[Monomial]) -> Mat<T> {
    let np = basis.num_params();
    let monos = monomials_up_to(np, basis.degree);
    let index: BTreeMap<&Monomial, usize> = monos.iter().enumerate().map(|(j, m)| (m, j)).collect();
    let mut ups = Mat::zeros(monos.len(), products.len());
    for (k, prod) in products.iter().enumerate() {
        let mut p = Poly::constant(np, T::one());
        for (i, &e) in prod.0.iter().enumerate() {
            if e > 0 {
                p = p.mul(&basis.forms[i].pow(e));
            }
        }
        for (m, c) in p.terms() {
            ups[(index[m], k)] = c.clone();
        }
    }
    ups
}

/// Columns of `Υ` used as the eliminated block, and its inverse.
#[derive(Clone, Debug)]
pub struct ReducedBasis<T> {
    pub basis_cols: Vec<usize>,
    pub tail_cols: Vec<usize>,
    pub basis_inverse: Mat<T>,
    /// `Υ_B⁻¹ Υ_N`.
    pub tail_map: Mat<T>,
}

/// Picks `M` columns of `Υ` forming a nonsingular block. With one parameter
/// these are the pure powers of `δ − lo`; otherwise columns are taken
/// greedily in product order.
fn select_basis<T: Scalar>(ups: &Mat<T>, products: &[Monomial], np: usize) -> Option<ReducedBasis<T>> {
    let (m, k) = ups.shape();
    let basis_cols: Vec<usize> = if np == 1 {
        (0..k).filter(|&c| products[c].0[1] == 0).collect()
    } else {
        greedy_columns(ups)
    };
    if basis_cols.len() != m {
        return None;
    }
    let block = Mat::from_fn(m, m, |i, j| ups[(i, basis_cols[j])].clone());
    let basis_inverse = Lu::factor(&block).ok()?.inverse().ok()?;
    let tail_cols: Vec<usize> = (0..k).filter(|c| !basis_cols.contains(c)).collect();
    let tail = Mat::from_fn(m, tail_cols.len(), |i, j| ups[(i, tail_cols[j])].clone());
    let tail_map = basis_inverse.matmul(&tail).ok()?;
    Some(ReducedBasis { basis_cols, tail_cols, basis_inverse, tail_map })
}

fn greedy_columns<T: Scalar>(ups: &Mat<T>) -> Vec<usize> {
    let (m, k) = ups.shape();
    let tol = if T::is_inexact() { T::lit(1e-9) } else { T::zero() };
    // Reduced pivot vectors with their pivot rows.
    let mut pivots: Vec<(usize, Vec<T>)> = Vec::new();
    let mut chosen = Vec::new();
    for c in 0..k {
        if chosen.len() == m {
            break;
        }
        let mut v = ups.col(c);
        for (r, p) in &pivots {
            let f = v[*r].clone() / p[*r].clone();
            if !f.is_zero() {
                for (vi, pi) in v.iter_mut().zip(p) {
                    *vi = vi.clone() - f.clone() * pi.clone();
                }
            }
        }
        let (best, mag) = v.iter().enumerate().fold((0, T::zero()), |(bi, bm), (i, x)| {
            let a = x.abs();
            if a > bm {
                (i, a)
            } else {
                (bi, bm)
            }
        });
        if mag > tol {
            pivots.push((best, v));
            chosen.push(c);
        }
    }
    chosen
}

/// Bookkeeping for one relaxed row.
#[derive(Clone, Debug)]
pub struct RelaxedBlock<T> {
    pub label: String,
    /// Index into the robust program's rows.
    pub row: usize,
    /// Coefficients of the nonpositive polynomial, one per monomial.
    pub coefficients: Vec<LinearForm<T>>,
    /// LP variable of each multiplier held explicitly (all products for the
    /// full form, the tail for the reduced one).
    pub multiplier_vars: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Relaxation<T> {
    pub lp: LinearProgram<T>,
    pub form: RelaxationForm,
    pub degree: u32,
    pub products: Vec<Monomial>,
    pub upsilon: Mat<T>,
    pub reduced: Option<ReducedBasis<T>>,
    pub blocks: Vec<RelaxedBlock<T>>,
}

/// Multipliers proving one row nonpositive on the box.
#[derive(Clone, Debug, Serialize)]
pub struct CertificateBlock<T> {
    pub label: String,
    pub multipliers: Vec<T>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HandelmanCertificate<T> {
    pub form: RelaxationForm,
    pub degree: u32,
    pub products: Vec<Vec<u32>>,
    pub upsilon_shape: (usize, usize),
    pub blocks: Vec<CertificateBlock<T>>,
}

impl<T: Scalar> HandelmanCertificate<T> {
    /// Largest multiplier; a valid certificate has all multipliers `≤ 0`.
    pub fn max_multiplier(&self) -> Option<T> {
        self.blocks.iter().flat_map(|b| b.multipliers.iter().cloned()).reduce(T::max_of)
    }
}

impl<T: Scalar> Relaxation<T> {
    /// Full multiplier vectors at a solution `x`. For the reduced form the
    /// eliminated multipliers are recovered through `Υ_B⁻¹`.
    pub fn certificate(&self, x: &[T]) -> HandelmanCertificate<T> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let multipliers = match &self.reduced {
                    None => b.multiplier_vars.iter().map(|&v| x[v].clone()).collect(),
                    Some(rb) => {
                        let p: Vec<T> = b.coefficients.iter().map(|f| f.eval(x)).collect();
                        let tail: Vec<T> = b.multiplier_vars.iter().map(|&v| x[v].clone()).collect();
                        let mut q = vec![T::zero(); self.products.len()];
                        for (i, &c) in rb.basis_cols.iter().enumerate() {
                            let mut acc = T::zero();
                            for (j, pj) in p.iter().enumerate() {
                                acc = acc + rb.basis_inverse[(i, j)].clone() * pj.clone();
                            }
                            for (t, qt) in tail.iter().enumerate() {
                                acc = acc - rb.tail_map[(i, t)].clone() * qt.clone();
                            }
                            q[c] = acc;
                        }
                        for (t, &c) in rb.tail_cols.iter().enumerate() {
                            q[c] = tail[t].clone();
                        }
                        q
                    }
                };
                CertificateBlock { label: b.label.clone(), multipliers }
            })
            .collect();
        HandelmanCertificate {
            form: self.form,
            degree: self.degree,
            products: self.products.iter().map(|m| m.0.clone()).collect(),
            upsilon_shape: self.upsilon.shape(),
            blocks,
        }
    }
}

/// Coefficients of `P(x, δ)`, which must be `≤ 0` on the box, for an
/// inequality row.
fn nonpositive_form<T: Scalar>(row: &crate::robust::RobustRow<T>, monos: &[Monomial], eps: &T) -> Vec<LinearForm<T>> {
    let (sign, strict) = match row.relation {
        OpenRelation::Lt => (T::one(), true),
        OpenRelation::Le => (T::one(), false),
        OpenRelation::Ge => (-T::one(), false),
        OpenRelation::Gt => (-T::one(), true),
        OpenRelation::Eq => unreachable!("equalities are matched coefficient-wise"),
    };
    let mut out: Vec<LinearForm<T>> = monos.iter().map(|m| row.expr.coeff(m).scale_coeff(&sign)).collect();
    if strict {
        out[0].constant = out[0].constant.clone() + eps.clone();
    }
    out
}

fn form_row<T: Scalar>(f: &LinearForm<T>, extra: &[(usize, T)], width: usize) -> (Vec<T>, T) {
    let mut coeffs = f.dense(width);
    for (v, c) in extra {
        coeffs[*v] = coeffs[*v].clone() + c.clone();
    }
    let rhs = if f.constant.is_zero() { T::zero() } else { -f.constant.clone() };
    (coeffs, rhs)
}

/// Relaxes `rlp` with products of degree up to `b`.
pub fn relax<T: Scalar>(rlp: &RobustLinearProgram<T>, b: u32, form: RelaxationForm) -> Result<Relaxation<T>> {
    let d = rlp.degree();
    if d > b {
        return Err(Error::Degree { degree: d as usize, max: b as usize });
    }
    let np = rlp.num_params();
    let basis = HandelmanBasis::new(&rlp.domain, b);
    let products = enumerate_products(&basis)?;
    let upsilon = build_upsilon(&basis, &products);
    let monos = monomials_up_to(np, b);
    // Monomial 0 must be the constant for the strictness shift.
    debug_assert!(monos[0].degree() == 0);
    let reduced = match form {
        RelaxationForm::Full => None,
        RelaxationForm::Reduced => select_basis(&upsilon, &products, np),
    };
    let form = if reduced.is_some() { RelaxationForm::Reduced } else { RelaxationForm::Full };

    let mut lp = rlp.base.clone();
    let mut blocks = Vec::new();
    for (r, row) in rlp.rows.iter().enumerate() {
        if row.degree() == 0 {
            let open = row.constant_row(lp.num_vars);
            for c in strictify(&[open], &rlp.policy) {
                push(&mut lp, c)?;
            }
            continue;
        }
        if row.relation == OpenRelation::Eq {
            for (_, f) in row.expr.terms() {
                let (coeffs, rhs) = form_row(f, &[], lp.num_vars);
                lp.add_row(coeffs, Relation::Eq, rhs)?;
            }
            continue;
        }
        let coefficients = nonpositive_form(row, &monos, &rlp.policy.epsilon);
        let multiplier_vars: Vec<usize> = match &reduced {
            None => (0..products.len()).map(|k| lp.add_var(format!("q{r}_{k}"), None, Some(T::zero()))).collect(),
            Some(rb) => rb.tail_cols.iter().map(|&k| lp.add_var(format!("q{r}_{k}"), None, Some(T::zero()))).collect(),
        };
        match &reduced {
            None => {
                for (j, f) in coefficients.iter().enumerate() {
                    let extra: Vec<(usize, T)> = multiplier_vars
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| !upsilon[(j, *k)].is_zero())
                        .map(|(k, &v)| (v, -upsilon[(j, k)].clone()))
                        .collect();
                    let (coeffs, rhs) = form_row(f, &extra, lp.num_vars);
                    lp.add_row(coeffs, Relation::Eq, rhs)?;
                }
            }
            Some(rb) => {
                for i in 0..rb.basis_cols.len() {
                    let mut combined = LinearForm::zero();
                    for (j, f) in coefficients.iter().enumerate() {
                        let w = &rb.basis_inverse[(i, j)];
                        if w.is_zero() {
                            continue;
                        }
                        for (&v, c) in &f.coeffs {
                            combined.add_var(v, c.clone() * w.clone());
                        }
                        combined.constant = combined.constant.clone() + f.constant.clone() * w.clone();
                    }
                    let extra: Vec<(usize, T)> = multiplier_vars
                        .iter()
                        .enumerate()
                        .filter(|(t, _)| !rb.tail_map[(i, *t)].is_zero())
                        .map(|(t, &v)| (v, -rb.tail_map[(i, t)].clone()))
                        .collect();
                    let (coeffs, rhs) = form_row(&combined, &extra, lp.num_vars);
                    lp.add_row(coeffs, Relation::Le, rhs)?;
                }
            }
        }
        blocks.push(RelaxedBlock { label: row.label.clone(), row: r, coefficients, multiplier_vars });
    }
    Ok(Relaxation { lp, form, degree: b, products, upsilon, reduced, blocks })
}

pub fn relax_full<T: Scalar>(rlp: &RobustLinearProgram<T>, b: u32) -> Result<Relaxation<T>> {
    relax(rlp, b, RelaxationForm::Full)
}

/// Reduced relaxation; falls back to the full form when no nonsingular
/// block is found.
pub fn relax_reduced<T: Scalar>(rlp: &RobustLinearProgram<T>, b: u32) -> Result<Relaxation<T>> {
    relax(rlp, b, RelaxationForm::Reduced)
}

/// Checks `P(δ) = Σ_k q_k Π g^e` with `q ≤ 0` by expanding the products.
pub fn expand_certificate<T: Scalar>(basis: &HandelmanBasis<T>, products: &[Monomial], multipliers: &[T]) -> Poly<T> {
    let np = basis.num_params();
    let mut acc = Polynomial::zero(np, T::zero());
    for (prod, q) in products.iter().zip(multipliers) {
        if q.is_zero() {
            continue;
        }
        let mut p = Poly::constant(np, q.clone());
        for (i, &e) in prod.0.iter().enumerate() {
            if e > 0 {
                p = p.mul(&basis.forms[i].pow(e));
            }
        }
        acc = acc.add(&p).expect("same parameters");
    }
    acc
}
