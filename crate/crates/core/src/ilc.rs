//! Scalings for integral linear constraints on the loop channels.
//!
//! A channel `w0 = Δ z0` is described by two scalings, `φ1` paired with
//! `z0` and `φ2` paired with `w0`, for which `∫ φ1ᵀz0 + φ2ᵀw0 dt ≥ 0` holds
//! along every nonnegative trajectory. For static positive channels this
//! reduces to `φ1(δ) + Δ(δ)ᵀφ2(δ) ≥ 0` on the parameter box, and to an
//! equality when the channel gain `Δ0` is known exactly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::OpenRelation;
use crate::numlin::{is_nonnegative, Mat};
use crate::poly::{monomials_up_to, LinearForm, Poly, PolyAffine, PolyMatrix, Polynomial};
use crate::robust::RobustRow;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum ScalingTemplate<T> {
    /// Constant `φ1`, `φ2` subject to `φ1 + Δ(δ)ᵀφ2 ≥ 0` on the box.
    FreeConstant,
    /// Polynomial scalings of total degree `degree`. With `saturate`, `φ2`
    /// has degree `degree − 1` and `φ1 = −Δ(δ)ᵀφ2` holds identically.
    FreePolynomial { degree: u32, saturate: bool },
    /// Channel with known static gain `Δ0 ≥ 0`: `φ1 = −Δ0ᵀφ2`.
    SaturatedStaticGain(Mat<T>),
    /// Constant delay, `φ1 = −φ2`.
    ConstantDelay,
    /// Delay with rate bound `ḣ ≤ mu_delay < 1`: `φ1 = φ ≥ 0`,
    /// `φ2 = −(1 − mu_delay)φ`.
    TimeVaryingDelay { mu_delay: T },
}

impl<T: Scalar> ScalingTemplate<T> {
    pub fn name(&self) -> String {
        match self {
            ScalingTemplate::FreeConstant => "constant".into(),
            ScalingTemplate::FreePolynomial { degree, saturate: false } => format!("polynomial degree {degree}"),
            ScalingTemplate::FreePolynomial { degree, saturate: true } => format!("saturated polynomial degree {degree}"),
            ScalingTemplate::SaturatedStaticGain(_) => "saturated static gain".into(),
            ScalingTemplate::ConstantDelay => "constant delay".into(),
            ScalingTemplate::TimeVaryingDelay { mu_delay } => format!("time-varying delay (mu_delay = {mu_delay})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingVar {
    pub name: String,
    /// `true` for `≥ 0`, otherwise free.
    pub nonnegative: bool,
}

/// Decision variables, scaling expressions and constraints produced by one
/// template. Variable `k` of `vars` has LP index `first_var + k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingConstraintSet<T> {
    pub first_var: usize,
    pub vars: Vec<ScalingVar>,
    pub phi1: Vec<PolyAffine<T>>,
    pub phi2: Vec<PolyAffine<T>>,
    pub inequalities: Vec<RobustRow<T>>,
    pub equalities: Vec<RobustRow<T>>,
}

impl<T: Scalar> ScalingConstraintSet<T> {
    pub fn n0(&self) -> usize {
        self.phi1.len()
    }

    /// `φ1(δ)`, `φ2(δ)` at a solution `x`, evaluated at `delta`.
    pub fn values_at(&self, x: &[T], delta: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let ev = |p: &PolyAffine<T>| p.at(x).eval(delta);
        Ok((self.phi1.iter().map(ev).collect::<Result<_>>()?, self.phi2.iter().map(ev).collect::<Result<_>>()?))
    }
}

struct VarAlloc {
    next: usize,
    vars: Vec<ScalingVar>,
}

impl VarAlloc {
    fn take(&mut self, name: String, nonnegative: bool) -> usize {
        self.vars.push(ScalingVar { name, nonnegative });
        self.next += 1;
        self.next - 1
    }

    /// One free coefficient per (component, monomial) up to `degree`.
    fn poly_vector<T: Scalar>(&mut self, prefix: &str, n0: usize, np: usize, degree: u32) -> Vec<PolyAffine<T>> {
        let monos = monomials_up_to(np, degree);
        (0..n0)
            .map(|c| {
                let mut p = Polynomial::zero(np, LinearForm::zero());
                for m in &monos {
                    let name = if degree == 0 {
                        format!("{prefix}_{c}")
                    } else {
                        let exps: Vec<String> = m.0.iter().map(|e| e.to_string()).collect();
                        format!("{prefix}_{c}_d{}", exps.join("_"))
                    };
                    let v = self.take(name, false);
                    p.add_term(m.clone(), LinearForm::var(v, T::one())).expect("shape");
                }
                p
            })
            .collect()
    }
}

/// `(Δ(δ)ᵀφ)_j = Σ_k Δ_kj(δ) φ_k(δ)`.
pub fn delta_transpose_times<T: Scalar>(delta: &PolyMatrix<T>, phi: &[PolyAffine<T>]) -> Vec<PolyAffine<T>> {
    let n0 = phi.len();
    let np = delta.num_params();
    (0..n0)
        .map(|j| {
            let mut acc = Polynomial::zero(np, LinearForm::zero());
            for (k, ph) in phi.iter().enumerate() {
                let e = delta.entry(k, j);
                if e.num_terms() > 0 {
                    acc = acc.add(&ph.times(&e)).expect("same parameters");
                }
            }
            acc
        })
        .collect()
}

fn constant_transpose_times<T: Scalar>(d0: &Mat<T>, phi: &[PolyAffine<T>]) -> Vec<PolyAffine<T>> {
    let np = phi.first().map_or(0, |p| p.num_params());
    delta_transpose_times(&Polynomial::constant(np, d0.clone()), phi)
}

fn rows_of<T: Scalar>(exprs: Vec<PolyAffine<T>>, relation: OpenRelation, label: &str) -> Vec<RobustRow<T>> {
    exprs.into_iter().enumerate().map(|(j, expr)| RobustRow { expr, relation, label: format!("{label}{j}") }).collect()
}

fn sum<T: Scalar>(a: &[PolyAffine<T>], b: &[PolyAffine<T>]) -> Vec<PolyAffine<T>> {
    a.iter().zip(b).map(|(x, y)| x.add(y).expect("same parameters")).collect()
}

/// Instantiates `template` for the channel block `delta` (`n0×n0`). New
/// variables are numbered from `first_var`.
pub fn instantiate<T: Scalar>(template: &ScalingTemplate<T>, delta: &PolyMatrix<T>, first_var: usize) -> Result<ScalingConstraintSet<T>> {
    let (n0, cols) = delta.shape();
    if n0 != cols {
        return Err(Error::Dimension(format!("channel block is {n0}x{cols}, expected square")));
    }
    let np = delta.num_params();
    let mut alloc = VarAlloc { next: first_var, vars: Vec::new() };
    let mut inequalities = Vec::new();
    let mut equalities = Vec::new();
    let (phi1, phi2) = match template {
        ScalingTemplate::FreeConstant | ScalingTemplate::FreePolynomial { saturate: false, .. } => {
            let d = match template {
                ScalingTemplate::FreePolynomial { degree, .. } => *degree,
                _ => 0,
            };
            let phi1 = alloc.poly_vector("phi1", n0, np, d);
            let phi2 = alloc.poly_vector("phi2", n0, np, d);
            inequalities = rows_of(sum(&phi1, &delta_transpose_times(delta, &phi2)), OpenRelation::Ge, "ilc");
            (phi1, phi2)
        }
        ScalingTemplate::FreePolynomial { degree, saturate: true } => {
            if *degree == 0 {
                return Err(Error::Domain("saturated polynomial scalings need degree at least 1".into()));
            }
            let phi2 = alloc.poly_vector("phi2", n0, np, degree - 1);
            let phi1 = alloc.poly_vector("phi1", n0, np, degree - 1 + delta.degree());
            equalities = rows_of(sum(&phi1, &delta_transpose_times(delta, &phi2)), OpenRelation::Eq, "saturation");
            (phi1, phi2)
        }
        ScalingTemplate::SaturatedStaticGain(_) | ScalingTemplate::ConstantDelay => {
            let d0 = match template {
                ScalingTemplate::SaturatedStaticGain(d0) => d0.clone(),
                _ => Mat::identity(n0),
            };
            if d0.shape() != (n0, n0) {
                return Err(Error::Dimension(format!("static gain is {}x{}, channel width is {n0}", d0.rows(), d0.cols())));
            }
            if !is_nonnegative(&d0, &T::zero()) {
                return Err(Error::Domain("static channel gain must be nonnegative".into()));
            }
            let phi1 = alloc.poly_vector("phi1", n0, np, 0);
            let phi2 = alloc.poly_vector("phi2", n0, np, 0);
            equalities = rows_of(sum(&phi1, &constant_transpose_times(&d0, &phi2)), OpenRelation::Eq, "saturation");
            (phi1, phi2)
        }
        ScalingTemplate::TimeVaryingDelay { mu_delay } => {
            if *mu_delay >= T::one() {
                return Err(Error::Domain(format!("delay rate bound must be below 1, got {mu_delay}")));
            }
            let phi1 = alloc.poly_vector("phi1", n0, np, 0);
            let phi2 = alloc.poly_vector("phi2", n0, np, 0);
            let factor = T::one() - mu_delay.clone();
            let exprs = phi2.iter().zip(&phi1).map(|(b, a)| b.add(&a.scale(&factor)).expect("same parameters")).collect();
            equalities = rows_of(exprs, OpenRelation::Eq, "saturation");
            inequalities = rows_of(phi1.clone(), OpenRelation::Ge, "ilc");
            (phi1, phi2)
        }
    };
    Ok(ScalingConstraintSet { first_var, vars: alloc.vars, phi1, phi2, inequalities, equalities })
}

/// `φ1(δ) + Δ(δ)ᵀφ2(δ)` at a solution, as scalar polynomials.
pub fn ilc_residual<T: Scalar>(set: &ScalingConstraintSet<T>, delta: &PolyMatrix<T>, x: &[T]) -> Vec<Poly<T>> {
    sum(&set.phi1, &delta_transpose_times(delta, &set.phi2)).iter().map(|p| p.at(x)).collect()
}

/// Largest degree among the scalings of a set.
pub fn scaling_degree<T: Scalar>(set: &ScalingConstraintSet<T>) -> u32 {
    set.phi1.iter().chain(&set.phi2).map(|p| p.degree()).max().unwrap_or(0)
}
