//! L1 and L∞ gains by linear programming.
//!
//! The L1 program over `(λ, γ)`:
//!
//! ```text
//! min γ   s.t.  λᵀA + 𝟙ᵀC < 0,   λᵀE − γ𝟙ᵀ + 𝟙ᵀF < 0,   λ > 0,  γ ≥ 0
//! ```
//!
//! The L∞ program is the L1 program of the transposed system.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{solve_lp, strictify, LinearProgram, LpStatus, OpenRelation, OpenRow, StrictnessPolicy};
use crate::numlin::Mat;
use crate::scalar::Scalar;
use crate::system::{classify, oracle_gains, transpose_system, PositiveLtiSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Norm {
    L1,
    Linf,
}

impl std::str::FromStr for Norm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" | "L1" => Ok(Norm::L1),
            "linf" | "Linf" | "inf" => Ok(Norm::Linf),
            other => Err(Error::Parse(format!("unknown norm '{other}' (expected l1 or linf)"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GainResult<T> {
    pub gamma: T,
    pub lambda: Vec<T>,
    /// Exact gain from the static-gain matrix, when it could be computed.
    pub oracle: Option<T>,
    pub policy: StrictnessPolicy<T>,
    pub lp_vars: usize,
    pub lp_rows: usize,
    pub iterations: usize,
}

/// Declares `lambda0..` with lower bound `floor` and `gamma ≥ 0` as the
/// objective. Returns the index of `gamma`.
pub(crate) fn declare_lambda_gamma<T: Scalar>(lp: &mut LinearProgram<T>, n: usize, policy: &StrictnessPolicy<T>) -> usize {
    for i in 0..n {
        lp.add_var(format!("lambda{i}"), Some(policy.lambda_floor.clone()), None);
    }
    let g = lp.add_var("gamma", Some(T::zero()), None);
    lp.set_objective(g, T::one());
    g
}

/// Declares `lambda0..`, the free controller columns `mu{i}_{r}` and `gamma`.
pub(crate) fn declare_lambda_gamma_mu<T: Scalar>(lp: &mut LinearProgram<T>, n: usize, m: usize, policy: &StrictnessPolicy<T>) -> usize {
    for i in 0..n {
        lp.add_var(format!("lambda{i}"), Some(policy.lambda_floor.clone()), None);
    }
    for i in 0..n {
        for r in 0..m {
            lp.add_var(format!("mu{i}_{r}"), None, None);
        }
    }
    let g = lp.add_var("gamma", Some(T::zero()), None);
    lp.set_objective(g, T::one());
    g
}

/// Open L1 rows over `(λ₀..λₙ₋₁, γ, <extra>)`, padded to `width` variables.
pub fn l1_rows<T: Scalar>(a: &Mat<T>, c: &Mat<T>, e: &Mat<T>, f: &Mat<T>, width: usize) -> Vec<OpenRow<T>> {
    let n = a.rows();
    let gamma = n;
    let mut rows = Vec::with_capacity(n + e.cols());
    let c_sums = c.col_sums();
    for j in 0..n {
        let mut coeffs = vec![T::zero(); width];
        coeffs[..n].clone_from_slice(&a.col(j));
        rows.push(OpenRow::new(coeffs, OpenRelation::Lt, -c_sums[j].clone()));
    }
    let f_sums = f.col_sums();
    for k in 0..e.cols() {
        let mut coeffs = vec![T::zero(); width];
        coeffs[..n].clone_from_slice(&e.col(k));
        coeffs[gamma] = -T::one();
        rows.push(OpenRow::new(coeffs, OpenRelation::Lt, -f_sums[k].clone()));
    }
    rows
}

/// The closed L1 program of a system.
pub fn l1_lp<T: Scalar>(sys: &PositiveLtiSystem<T>, policy: &StrictnessPolicy<T>) -> LinearProgram<T> {
    let mut lp = LinearProgram::new();
    declare_lambda_gamma(&mut lp, sys.n(), policy);
    for row in strictify(&l1_rows(&sys.a, &sys.c, &sys.e, &sys.f, sys.n() + 1), policy) {
        lp.add_row(row.coeffs, row.relation, row.rhs).expect("row width matches");
    }
    lp
}

/// The closed L∞ program: the L1 program of the transposed system.
pub fn linf_lp<T: Scalar>(sys: &PositiveLtiSystem<T>, policy: &StrictnessPolicy<T>) -> LinearProgram<T> {
    l1_lp(&transpose_system(sys), policy)
}

pub fn gain_lp<T: Scalar>(sys: &PositiveLtiSystem<T>, norm: Norm, policy: &StrictnessPolicy<T>) -> LinearProgram<T> {
    match norm {
        Norm::L1 => l1_lp(sys, policy),
        Norm::Linf => linf_lp(sys, policy),
    }
}

pub fn l1_gain<T: Scalar>(sys: &PositiveLtiSystem<T>, policy: &StrictnessPolicy<T>) -> Result<GainResult<T>> {
    gain(sys, Norm::L1, policy)
}

pub fn linf_gain<T: Scalar>(sys: &PositiveLtiSystem<T>, policy: &StrictnessPolicy<T>) -> Result<GainResult<T>> {
    gain(sys, Norm::Linf, policy)
}

pub fn gain<T: Scalar>(sys: &PositiveLtiSystem<T>, norm: Norm, policy: &StrictnessPolicy<T>) -> Result<GainResult<T>> {
    let report = classify(sys);
    if !report.is_positive {
        return Err(Error::NotPositive(report));
    }
    let lp = gain_lp(sys, norm, policy);
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::Unstable),
        LpStatus::Unbounded => return Err(Error::Unbounded),
    }
    let n = sys.n();
    let oracle = oracle_gains(sys).ok().map(|(l1, linf)| match norm {
        Norm::L1 => l1,
        Norm::Linf => linf,
    });
    Ok(GainResult {
        gamma: sol.x[n].clone(),
        lambda: sol.x[..n].to_vec(),
        oracle,
        policy: policy.clone(),
        lp_vars: lp.num_vars,
        lp_rows: lp.num_rows(),
        iterations: sol.iterations,
    })
}

/// Largest value of `λᵀA + 𝟙ᵀC` and `λᵀE − γ𝟙ᵀ + 𝟙ᵀF` (L1 form) or their
/// transposed counterparts (L∞ form). Negative means the witness is strict.
pub fn witness_margin<T: Scalar>(sys: &PositiveLtiSystem<T>, norm: Norm, lambda: &[T], gamma: &T) -> T {
    let s = match norm {
        Norm::L1 => sys.clone(),
        Norm::Linf => transpose_system(sys),
    };
    let mut worst: Option<T> = None;
    let mut bump = |v: T| {
        worst = Some(match worst.take() {
            None => v,
            Some(w) => T::max_of(w, v),
        })
    };
    let la = s.a.vec_mul(lambda).expect("lambda length");
    let cs = s.c.col_sums();
    for j in 0..s.n() {
        bump(la[j].clone() + cs[j].clone());
    }
    let le = s.e.vec_mul(lambda).expect("lambda length");
    let fs = s.f.col_sums();
    for k in 0..s.p() {
        bump(le[k].clone() - gamma.clone() + fs[k].clone());
    }
    worst.unwrap_or_else(T::zero)
}
