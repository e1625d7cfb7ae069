//! State-feedback synthesis `u = Kx` for the L∞ gain.
//!
//! With `μᵢ = K₍:,ᵢ₎ λᵢ` every closed-loop condition becomes linear in
//! `(λ, μ₁..μₙ, γ)`. Variables are laid out as `λ₀..λₙ₋₁`, then the columns
//! `μ₀, μ₁, ..` (entry `r` of column `i` at index `n + i·m + r`), then `γ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gains::{declare_lambda_gamma_mu, linf_gain};
use crate::lp::{solve_lp, strictify, LinearProgram, LpStatus, OpenRelation, OpenRow, StrictnessPolicy};
use crate::numlin::{is_nonnegative, Mat};
use crate::scalar::Scalar;
use crate::system::{is_stable, oracle_gains, random_positive_system, PositiveLtiSystem};

#[derive(Clone, Debug, PartialEq)]
pub enum ControllerSpec<T> {
    Full,
    /// Entries `(row, col)` of `K` forced to zero.
    Structured(Vec<(usize, usize)>),
    /// `lower ≤ K ≤ upper` entrywise.
    Bounded { lower: Mat<T>, upper: Mat<T> },
}

impl<T: Scalar> ControllerSpec<T> {
    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        match self {
            ControllerSpec::Full => Ok(()),
            ControllerSpec::Structured(zeros) => {
                if let Some(&(i, j)) = zeros.iter().find(|&&(i, j)| i >= m || j >= n) {
                    return Err(Error::Dimension(format!("zero pattern entry ({i},{j}) outside a {m}x{n} gain")));
                }
                Ok(())
            }
            ControllerSpec::Bounded { lower, upper } => {
                if lower.shape() != (m, n) || upper.shape() != (m, n) {
                    return Err(Error::Dimension(format!("gain bounds must be {m}x{n}")));
                }
                if lower.data().iter().zip(upper.data()).any(|(l, u)| l > u) {
                    return Err(Error::Domain("K_lower must not exceed K_upper".into()));
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthesisResult<T> {
    pub k: Mat<T>,
    pub gamma: T,
    pub lambda: Vec<T>,
    /// `mu[i]` is column `i` of `K` scaled by `λᵢ`.
    pub mu: Vec<Vec<T>>,
    pub lp_vars: usize,
    pub lp_rows: usize,
}

#[inline]
pub fn mu_index(n: usize, m: usize, col: usize, entry: usize) -> usize {
    n + col * m + entry
}

/// Open rows over `(λ, μ, γ, <extra>)` for the closed loop
/// `(A + BK, E, C + DK, F)`, padded to `width`.
pub fn synthesis_rows<T: Scalar>(sys: &PositiveLtiSystem<T>, width: usize) -> Vec<OpenRow<T>> {
    let (n, m, q) = (sys.n(), sys.m(), sys.q());
    let gamma = n + n * m;
    let mut rows = Vec::new();
    let e_sums = sys.e.row_sums();
    for r in 0..n {
        let mut coeffs = vec![T::zero(); width];
        coeffs[..n].clone_from_slice(sys.a.row(r));
        for i in 0..n {
            for s in 0..m {
                coeffs[mu_index(n, m, i, s)] = sys.b[(r, s)].clone();
            }
        }
        rows.push(OpenRow::new(coeffs, OpenRelation::Lt, -e_sums[r].clone()));
    }
    let f_sums = sys.f.row_sums();
    for r in 0..q {
        let mut coeffs = vec![T::zero(); width];
        coeffs[..n].clone_from_slice(sys.c.row(r));
        for i in 0..n {
            for s in 0..m {
                coeffs[mu_index(n, m, i, s)] = sys.d[(r, s)].clone();
            }
        }
        coeffs[gamma] = -T::one();
        rows.push(OpenRow::new(coeffs, OpenRelation::Lt, -f_sums[r].clone()));
    }
    // Metzler off-diagonals of A + BK, scaled by λⱼ.
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut coeffs = vec![T::zero(); width];
            coeffs[j] = sys.a[(i, j)].clone();
            for s in 0..m {
                coeffs[mu_index(n, m, j, s)] = sys.b[(i, s)].clone();
            }
            rows.push(OpenRow::new(coeffs, OpenRelation::Ge, T::zero()));
        }
    }
    // Nonnegativity of C + DK, scaled by λⱼ.
    for i in 0..q {
        for j in 0..n {
            let mut coeffs = vec![T::zero(); width];
            coeffs[j] = sys.c[(i, j)].clone();
            for s in 0..m {
                coeffs[mu_index(n, m, j, s)] = sys.d[(i, s)].clone();
            }
            rows.push(OpenRow::new(coeffs, OpenRelation::Ge, T::zero()));
        }
    }
    rows
}

/// Bound rows `K⁻λᵢ ≤ μᵢ ≤ K⁺λᵢ`.
pub fn bound_rows<T: Scalar>(n: usize, m: usize, lower: &Mat<T>, upper: &Mat<T>, width: usize) -> Vec<OpenRow<T>> {
    let mut rows = Vec::new();
    for i in 0..n {
        for r in 0..m {
            let mut up = vec![T::zero(); width];
            up[mu_index(n, m, i, r)] = T::one();
            up[i] = -upper[(r, i)].clone();
            rows.push(OpenRow::new(up, OpenRelation::Le, T::zero()));
            let mut lo = vec![T::zero(); width];
            lo[mu_index(n, m, i, r)] = T::one();
            lo[i] = -lower[(r, i)].clone();
            rows.push(OpenRow::new(lo, OpenRelation::Ge, T::zero()));
        }
    }
    rows
}

pub(crate) fn check_synthesis_input<T: Scalar>(sys: &PositiveLtiSystem<T>) -> Result<()> {
    if sys.m() == 0 {
        return Err(Error::Model("synthesis needs a control input (B and D)".into()));
    }
    if !is_nonnegative(&sys.e, &T::zero()) || !is_nonnegative(&sys.f, &T::zero()) {
        return Err(Error::Model("E and F must be nonnegative".into()));
    }
    Ok(())
}

/// Applies a structured zero pattern by fixing the affected μ entries.
pub(crate) fn fix_structural_zeros<T: Scalar>(lp: &mut LinearProgram<T>, n: usize, m: usize, zeros: &[(usize, usize)]) {
    for &(r, i) in zeros {
        let v = mu_index(n, m, i, r);
        lp.var_lower[v] = Some(T::zero());
        lp.var_upper[v] = Some(T::zero());
    }
}

pub fn synthesis_lp<T: Scalar>(
    sys: &PositiveLtiSystem<T>,
    spec: &ControllerSpec<T>,
    policy: &StrictnessPolicy<T>,
) -> Result<LinearProgram<T>> {
    check_synthesis_input(sys)?;
    let (n, m) = (sys.n(), sys.m());
    spec.validate(m, n)?;
    let mut lp = LinearProgram::new();
    declare_lambda_gamma_mu(&mut lp, n, m, policy);
    let width = lp.num_vars;
    let mut open = synthesis_rows(sys, width);
    if let ControllerSpec::Bounded { lower, upper } = spec {
        open.extend(bound_rows(n, m, lower, upper, width));
    }
    for row in strictify(&open, policy) {
        lp.add_row(row.coeffs, row.relation, row.rhs)?;
    }
    if let ControllerSpec::Structured(zeros) = spec {
        fix_structural_zeros(&mut lp, n, m, zeros);
    }
    Ok(lp)
}

/// Recovers `K₍:,ᵢ₎ = μᵢ / λᵢ` from a solution vector.
pub fn recover_gain<T: Scalar>(x: &[T], n: usize, m: usize) -> (Mat<T>, Vec<T>, Vec<Vec<T>>) {
    let lambda = x[..n].to_vec();
    let mu: Vec<Vec<T>> = (0..n).map(|i| (0..m).map(|r| x[mu_index(n, m, i, r)].clone()).collect()).collect();
    let k = Mat::from_fn(m, n, |r, i| {
        let v = mu[i][r].clone();
        if v.is_zero() {
            T::zero()
        } else {
            v / lambda[i].clone()
        }
    });
    (k, lambda, mu)
}

pub fn stabilize_linf<T: Scalar>(
    sys: &PositiveLtiSystem<T>,
    spec: &ControllerSpec<T>,
    policy: &StrictnessPolicy<T>,
) -> Result<SynthesisResult<T>> {
    let lp = synthesis_lp(sys, spec, policy)?;
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Infeasible("no controller in the requested set makes the closed loop positive and stable".into()))
        }
        LpStatus::Unbounded => return Err(Error::Unbounded),
    }
    let (n, m) = (sys.n(), sys.m());
    let (k, lambda, mu) = recover_gain(&sol.x, n, m);
    Ok(SynthesisResult {
        k,
        gamma: sol.x[n + n * m].clone(),
        lambda,
        mu,
        lp_vars: lp.num_vars,
        lp_rows: lp.num_rows(),
    })
}

/// Independent check of a synthesized controller.
#[derive(Clone, Debug)]
pub struct ControllerCertificate {
    pub metzler: bool,
    pub nonnegative_output: bool,
    pub stable: bool,
    pub closed_loop_gain: Option<f64>,
    pub within_bound: bool,
}

impl ControllerCertificate {
    pub fn passed(&self) -> bool {
        self.metzler && self.nonnegative_output && self.stable && self.within_bound
    }
}

/// Tolerance used when classifying a closed loop built from a float
/// controller; products `B·K` reintroduce rounding at the 1e-16 level.
pub const CLOSED_LOOP_TOL: f64 = 1e-9;

pub fn certify_controller(sys: &PositiveLtiSystem<f64>, k: &Mat<f64>, gamma: f64) -> Result<ControllerCertificate> {
    let mut cl = sys.with_feedback(k)?;
    let report = cl.classify_with(&CLOSED_LOOP_TOL);
    let metzler = report.violations.iter().all(|v| v.matrix != "A");
    let nonnegative_output = report.violations.iter().all(|v| v.matrix != "C");
    if !(metzler && nonnegative_output) {
        return Ok(ControllerCertificate { metzler, nonnegative_output, stable: false, closed_loop_gain: None, within_bound: false });
    }
    // Clip rounding-level violations so the exact tests apply.
    for i in 0..cl.n() {
        for j in 0..cl.n() {
            if i != j && cl.a[(i, j)] < 0.0 {
                cl.a[(i, j)] = 0.0;
            }
        }
    }
    cl.c = cl.c.map(|v| v.max(0.0));
    let cl = PositiveLtiSystem::autonomous(cl.a, cl.c, cl.e, cl.f)?;
    let stable = is_stable(&cl)?;
    let closed_loop_gain = if stable { Some(oracle_gains(&cl)?.1) } else { None };
    let within_bound = closed_loop_gain.map(|g| g <= gamma * (1.0 + 1e-6) + 1e-6).unwrap_or(false);
    Ok(ControllerCertificate { metzler, nonnegative_output, stable, closed_loop_gain, within_bound })
}

/// A random synthesizable instance: a positive, Hurwitz closed loop
/// `(A_p, C_p)` is realised by a hidden controller `K₀` through
/// `A = A_p − B K₀`, `C = C_p − D K₀`. About a third of the entries of `K₀`
/// are zero and reported as a structure pattern.
pub struct SynthesizableInstance {
    pub system: PositiveLtiSystem<f64>,
    pub hidden_gain: Mat<f64>,
    pub zero_pattern: Vec<(usize, usize)>,
}

pub fn random_synthesizable(n: usize, m: usize, p: usize, q: usize, seed: u64) -> SynthesizableInstance {
    let base = random_positive_system(n, m, p, q, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de);
    let mut zero_pattern = Vec::new();
    let k0 = Mat::from_fn(m, n, |r, c| {
        if rng.gen_range(0.0..1.0) < 1.0 / 3.0 {
            zero_pattern.push((r, c));
            0.0
        } else {
            rng.gen_range(-1.0..1.0)
        }
    });
    let a = base.a.sub(&base.b.matmul(&k0).unwrap()).unwrap();
    let c = base.c.sub(&base.d.matmul(&k0).unwrap()).unwrap();
    let system = PositiveLtiSystem::new(a, base.b, c, base.d, base.e, base.f).unwrap();
    SynthesizableInstance { system, hidden_gain: k0, zero_pattern }
}

/// The analysis problem of the open loop, for comparison with `K = 0`.
pub fn open_loop_linf<T: Scalar>(sys: &PositiveLtiSystem<T>, policy: &StrictnessPolicy<T>) -> Result<T> {
    let open = PositiveLtiSystem::autonomous(sys.a.clone(), sys.c.clone(), sys.e.clone(), sys.f.clone())?;
    Ok(linf_gain(&open, policy)?.gamma)
}
