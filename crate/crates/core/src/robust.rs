//! Robust gain analysis and robust state-feedback synthesis.
//!
//! A [`RobustLinearProgram`] keeps its rows symbolic: each row is an affine
//! expression in the decision variables whose coefficients are polynomials
//! in `δ`, required to satisfy its relation at every point of the box. The
//! Handelman module turns such a program into a finite LP. Rows that do not
//! depend on `δ` are emitted exactly as the nominal programs emit them, so a
//! program without loop channels is identical to its nominal counterpart.
//!
//! The certificates obtained this way are sufficient only: a feasible
//! program bounds the worst-case gain, an infeasible one proves nothing.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gains::{declare_lambda_gamma, declare_lambda_gamma_mu, l1_rows, Norm};
use crate::handelman::{relax, RelaxationForm};
use crate::ilc::{instantiate, ScalingConstraintSet, ScalingTemplate};
use crate::lft::{ChannelLayout, LftSystem, PolySystem, TransposedLft};
use crate::lp::{solve_lp, strictify, Constraint, LinearProgram, LpStatus, OpenRelation, OpenRow, StrictnessPolicy};
use crate::numlin::{is_nonnegative, solve, Mat};
use crate::poly::{BoxDomain, LinearForm, Monomial, PolyAffine, PolyMatrix, Polynomial};
use crate::scalar::Scalar;
use crate::synthesis::{bound_rows, certify_controller, fix_structural_zeros, mu_index, recover_gain, ControllerSpec};
use crate::system::{classify, is_stable, oracle_gains, transpose_system, PositiveLtiSystem};

/// Recorded with every robust result.
pub const CONSERVATISM_NOTE: &str =
    "robust bounds are sufficient conditions: the reported gamma is an upper bound and infeasibility does not prove instability";

/// `expr(x, δ)  relation  0` for every `δ` in the box.
#[derive(Clone, Debug, PartialEq)]
pub struct RobustRow<T> {
    pub expr: PolyAffine<T>,
    pub relation: OpenRelation,
    pub label: String,
}

impl<T: Scalar> RobustRow<T> {
    pub fn degree(&self) -> u32 {
        self.expr.degree()
    }

    /// The nominal row `coeffs · x  relation  rhs` of a `δ`-free expression.
    pub(crate) fn constant_row(&self, width: usize) -> OpenRow<T> {
        let f = self.expr.coeff(&Monomial::one(self.expr.num_params()));
        let rhs = if f.constant.is_zero() { T::zero() } else { -f.constant.clone() };
        OpenRow::new(f.dense(width), self.relation, rhs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RobustKind {
    /// L1 gain of the LFT `w1 → z1`.
    GainL1,
    /// L∞ gain, posed as the L1 program of a transposed LFT.
    GainLinf,
    /// L∞ state-feedback synthesis.
    Synthesis,
    /// Exact analysis for a known constant channel gain.
    ConstantDelta,
}

#[derive(Clone, Debug)]
pub struct RobustLinearProgram<T> {
    /// Variables, bounds and objective; rows are added on relaxation.
    pub base: LinearProgram<T>,
    pub rows: Vec<RobustRow<T>>,
    pub domain: BoxDomain<T>,
    pub policy: StrictnessPolicy<T>,
    pub kind: RobustKind,
    pub n: usize,
    /// Controller inputs; zero for analysis.
    pub m: usize,
    pub gamma: usize,
    pub scalings: ScalingConstraintSet<T>,
    /// Loop channel block the scalings refer to.
    pub delta: PolyMatrix<T>,
}

impl<T: Scalar> RobustLinearProgram<T> {
    pub fn num_params(&self) -> usize {
        self.domain.num_params()
    }

    /// Largest row degree in `δ`.
    pub fn degree(&self) -> u32 {
        self.rows.iter().map(RobustRow::degree).max().unwrap_or(0)
    }

    pub fn num_vars(&self) -> usize {
        self.base.num_vars
    }

    /// The finite LP of a program without `δ`-dependent rows.
    pub fn finite_lp(&self) -> Result<LinearProgram<T>> {
        let d = self.degree();
        if d > 0 {
            return Err(Error::Degree { degree: d as usize, max: 0 });
        }
        let mut lp = self.base.clone();
        let width = lp.num_vars;
        let open: Vec<OpenRow<T>> = self.rows.iter().map(|r| r.constant_row(width)).collect();
        for c in strictify(&open, &self.policy) {
            push(&mut lp, c)?;
        }
        Ok(lp)
    }
}

pub(crate) fn push<T: Scalar>(lp: &mut LinearProgram<T>, c: Constraint<T>) -> Result<usize> {
    lp.add_row(c.coeffs, c.relation, c.rhs)
}

/// `Σ_i m[(i, j)] λ_i`, the `j`-th entry of `λᵀM`.
fn lambda_col<T: Scalar>(m: &Mat<T>, j: usize) -> LinearForm<T> {
    let mut f = LinearForm::zero();
    for i in 0..m.rows() {
        f.add_var(i, m[(i, j)].clone());
    }
    f
}

/// Entry `j` of `λᵀ(P + QK)ᵀ` with `μᵢ = K₍:,ᵢ₎λᵢ`:
/// `Σ_i P_ji λ_i + Σ_s Q_js Σ_i μ_{i,s}`.
fn feedback_col<T: Scalar>(p: &Mat<T>, q: &Mat<T>, j: usize, n: usize, m: usize) -> LinearForm<T> {
    let mut f = LinearForm::zero();
    for i in 0..n {
        f.add_var(i, p[(j, i)].clone());
    }
    for i in 0..n {
        for s in 0..m {
            f.add_var(mu_index(n, m, i, s), q[(j, s)].clone());
        }
    }
    f
}

/// Numeric LFT blocks with the `λ`-dependent parts already expressed as
/// linear forms.
struct LoopData<T> {
    lam_a: Vec<LinearForm<T>>,
    lam_e0: Vec<LinearForm<T>>,
    lam_e1: Vec<LinearForm<T>>,
    c0: Mat<T>,
    c1: Mat<T>,
    f00: Mat<T>,
    f01: Mat<T>,
    f10: Mat<T>,
    f11: Mat<T>,
}

fn with_constant<T: Scalar>(mut f: LinearForm<T>, c: T) -> LinearForm<T> {
    f.constant = c;
    f
}

/// `Σ_k φ_k(δ) M_kj`.
fn phi_times_col<T: Scalar>(phi: &[PolyAffine<T>], m: &Mat<T>, j: usize, np: usize) -> PolyAffine<T> {
    let mut acc = Polynomial::zero(np, LinearForm::zero());
    for (k, ph) in phi.iter().enumerate() {
        let v = &m[(k, j)];
        if !v.is_zero() {
            acc = acc.add(&ph.scale(v)).expect("same parameters");
        }
    }
    acc
}

/// Rows of the loop program:
///
/// ```text
/// λᵀA  + φ1ᵀC0                + 𝟙ᵀC1  < 0
/// λᵀE0 + φ2ᵀ + φ1ᵀF00         + 𝟙ᵀF10 < 0
/// λᵀE1 − γ𝟙ᵀ + φ1ᵀF01         + 𝟙ᵀF11 < 0
/// ```
fn loop_rows<T: Scalar>(data: LoopData<T>, scal: &ScalingConstraintSet<T>, gamma: usize, np: usize) -> Vec<RobustRow<T>> {
    let mut rows = Vec::new();
    let c1_sums = data.c1.col_sums();
    for (j, f) in data.lam_a.into_iter().enumerate() {
        let base = Polynomial::constant(np, with_constant(f, c1_sums[j].clone()));
        let expr = base.add(&phi_times_col(&scal.phi1, &data.c0, j, np)).expect("same parameters");
        rows.push(RobustRow { expr, relation: OpenRelation::Lt, label: format!("state{j}") });
    }
    let f10_sums = data.f10.col_sums();
    for (j, f) in data.lam_e0.into_iter().enumerate() {
        let base = Polynomial::constant(np, with_constant(f, f10_sums[j].clone()));
        let expr = base
            .add(&scal.phi2[j])
            .and_then(|e| e.add(&phi_times_col(&scal.phi1, &data.f00, j, np)))
            .expect("same parameters");
        rows.push(RobustRow { expr, relation: OpenRelation::Lt, label: format!("loop{j}") });
    }
    let f11_sums = data.f11.col_sums();
    for (j, mut f) in data.lam_e1.into_iter().enumerate() {
        f.add_var(gamma, -T::one());
        let base = Polynomial::constant(np, with_constant(f, f11_sums[j].clone()));
        let expr = base.add(&phi_times_col(&scal.phi1, &data.f01, j, np)).expect("same parameters");
        rows.push(RobustRow { expr, relation: OpenRelation::Lt, label: format!("gain{j}") });
    }
    rows.extend(scal.inequalities.iter().cloned());
    rows.extend(scal.equalities.iter().cloned());
    rows
}

fn declare_scalings<T: Scalar>(lp: &mut LinearProgram<T>, template: &ScalingTemplate<T>, delta: &PolyMatrix<T>) -> Result<ScalingConstraintSet<T>> {
    let scal = instantiate(template, delta, lp.num_vars)?;
    for v in &scal.vars {
        lp.add_var(v.name.clone(), if v.nonnegative { Some(T::zero()) } else { None }, None);
    }
    Ok(scal)
}

fn analysis_program<T: Scalar>(
    lft: &LftSystem<T>,
    template: &ScalingTemplate<T>,
    delta: &PolyMatrix<T>,
    policy: &StrictnessPolicy<T>,
    kind: RobustKind,
) -> Result<RobustLinearProgram<T>> {
    let n = lft.n();
    let mut base = LinearProgram::new();
    let gamma = declare_lambda_gamma(&mut base, n, policy);
    let scal = declare_scalings(&mut base, template, delta)?;
    let data = LoopData {
        lam_a: (0..n).map(|j| lambda_col(&lft.a, j)).collect(),
        lam_e0: (0..lft.n0()).map(|j| lambda_col(&lft.e0, j)).collect(),
        lam_e1: (0..lft.p()).map(|j| lambda_col(&lft.e1, j)).collect(),
        c0: lft.c0.clone(),
        c1: lft.c1.clone(),
        f00: lft.f00.clone(),
        f01: lft.f01.clone(),
        f10: lft.f10.clone(),
        f11: lft.f11.clone(),
    };
    let rows = loop_rows(data, &scal, gamma, delta.num_params());
    Ok(RobustLinearProgram {
        base,
        rows,
        domain: lft.domain.clone(),
        policy: policy.clone(),
        kind,
        n,
        m: 0,
        gamma,
        scalings: scal,
        delta: delta.clone(),
    })
}

/// Robust L1 program of an LFT. Minimising `γ` bounds the L1 gain of
/// `w1 → z1` over the whole box when feasible.
pub fn robust_l1<T: Scalar>(lft: &LftSystem<T>, template: &ScalingTemplate<T>, policy: &StrictnessPolicy<T>) -> Result<RobustLinearProgram<T>> {
    lft.check_well_posed(11)?;
    analysis_program(lft, template, &lft.delta, policy, RobustKind::GainL1)
}

/// Robust L∞ program: the L1 program of the transposed LFT.
pub fn robust_linf<T: Scalar>(tlft: &TransposedLft<T>, template: &ScalingTemplate<T>, policy: &StrictnessPolicy<T>) -> Result<RobustLinearProgram<T>> {
    let mut rlp = robust_l1(&tlft.0, template, policy)?;
    rlp.kind = RobustKind::GainLinf;
    Ok(rlp)
}

/// L1 program at a fixed channel gain `Δ0 ≥ 0`, with `φ1 + Δ0ᵀφ2 = 0`.
/// Feasibility is necessary and sufficient for stability of the closed
/// loop at `Δ0` together with the gain bound.
pub fn constant_delta_program<T: Scalar>(lft: &LftSystem<T>, d0: &Mat<T>, policy: &StrictnessPolicy<T>) -> Result<RobustLinearProgram<T>> {
    let n0 = lft.n0();
    if d0.shape() != (n0, n0) {
        return Err(Error::Dimension(format!("channel gain must be {n0}x{n0}")));
    }
    if !is_nonnegative(d0, &T::zero()) {
        return Err(Error::Domain("channel gain must be nonnegative".into()));
    }
    if n0 > 0 {
        let lhs = Mat::identity(n0).sub(&d0.matmul(&lft.f00)?)?;
        if solve(&lhs, &Mat::identity(n0)).is_err() {
            return Err(Error::IllPosed(Vec::new()));
        }
    }
    let delta = Polynomial::constant(0, d0.clone());
    let template = ScalingTemplate::SaturatedStaticGain(d0.clone());
    let mut rlp = analysis_program(lft, &template, &delta, policy, RobustKind::ConstantDelta)?;
    rlp.domain = BoxDomain::unit(0);
    Ok(rlp)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantDeltaOutcome<T> {
    pub feasible: bool,
    pub gamma: Option<T>,
    pub lambda: Vec<T>,
    pub phi1: Vec<T>,
    pub phi2: Vec<T>,
    pub lp_vars: usize,
    pub lp_rows: usize,
}

pub fn exact_constant_delta<T: Scalar>(lft: &LftSystem<T>, d0: &Mat<T>, policy: &StrictnessPolicy<T>) -> Result<ConstantDeltaOutcome<T>> {
    let rlp = constant_delta_program(lft, d0, policy)?;
    let lp = rlp.finite_lp()?;
    let sol = solve_lp(&lp)?;
    let (lp_vars, lp_rows) = (lp.num_vars, lp.num_rows());
    match sol.status {
        LpStatus::Optimal => {
            let (phi1, phi2) = rlp.scalings.values_at(&sol.x, &[])?;
            Ok(ConstantDeltaOutcome {
                feasible: true,
                gamma: Some(sol.x[rlp.gamma].clone()),
                lambda: sol.x[..rlp.n].to_vec(),
                phi1,
                phi2,
                lp_vars,
                lp_rows,
            })
        }
        LpStatus::Infeasible => Ok(ConstantDeltaOutcome { feasible: false, gamma: None, lambda: vec![], phi1: vec![], phi2: vec![], lp_vars, lp_rows }),
        LpStatus::Unbounded => Err(Error::Unbounded),
    }
}

/// Positivity rows `[A(δ)]_ij λ_j + Σ_s [B(δ)]_is μ_{j,s} ≥ 0` (`i ≠ j`) and
/// `[C(δ)]_ij λ_j + Σ_s [D(δ)]_is μ_{j,s} ≥ 0`.
fn closed_loop_positivity_rows<T: Scalar>(psys: &PolySystem<T>) -> Vec<RobustRow<T>> {
    let (n, m, q, np) = (psys.n(), psys.m(), psys.q(), psys.num_params());
    let build = |pm: &PolyMatrix<T>, qm: &PolyMatrix<T>, i: usize, j: usize| {
        let mut expr = Polynomial::zero(np, LinearForm::zero());
        let mut monos: Vec<Monomial> = pm.terms().map(|(mo, _)| mo.clone()).collect();
        monos.extend(qm.terms().map(|(mo, _)| mo.clone()));
        monos.sort();
        monos.dedup();
        if monos.is_empty() {
            monos.push(Monomial::one(np));
        }
        for mo in monos {
            let mut f = LinearForm::zero();
            f.add_var(j, pm.coeff(&mo)[(i, j)].clone());
            for s in 0..m {
                f.add_var(mu_index(n, m, j, s), qm.coeff(&mo)[(i, s)].clone());
            }
            expr.add_term(mo, f).expect("shape");
        }
        expr
    };
    let mut rows = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                rows.push(RobustRow { expr: build(&psys.a, &psys.b, i, j), relation: OpenRelation::Ge, label: format!("metzler{i}_{j}") });
            }
        }
    }
    for i in 0..q {
        for j in 0..n {
            rows.push(RobustRow { expr: build(&psys.c, &psys.d, i, j), relation: OpenRelation::Ge, label: format!("output{i}_{j}") });
        }
    }
    rows
}

fn monomials_of<T: Scalar>(ms: &[&PolyMatrix<T>]) -> Vec<Monomial> {
    let mut out: Vec<Monomial> = ms.iter().flat_map(|m| m.terms().map(|(mo, _)| mo.clone())).collect();
    out.sort();
    out.dedup();
    out
}

/// Robust L∞ synthesis program over `(λ, μ, γ, φ)`. The closed loop is
/// analysed through the canonical LFT of its transpose, whose blocks are
/// affine in `(λ, μ)`.
pub fn robust_stabilize<T: Scalar>(
    psys: &PolySystem<T>,
    template: &ScalingTemplate<T>,
    spec: &ControllerSpec<T>,
    policy: &StrictnessPolicy<T>,
) -> Result<RobustLinearProgram<T>> {
    let (n, m, p, q, np) = (psys.n(), psys.m(), psys.p(), psys.q(), psys.num_params());
    if m == 0 {
        return Err(Error::Model("synthesis needs a control input (B and D)".into()));
    }
    for pt in psys.domain.grid(11) {
        if !is_nonnegative(&psys.e.eval(&pt)?, &T::zero()) || !is_nonnegative(&psys.f.eval(&pt)?, &T::zero()) {
            return Err(Error::Model("E(delta) and F(delta) must be nonnegative on the box".into()));
        }
    }
    spec.validate(m, n)?;
    let layout = ChannelLayout::new(np, n, q, &monomials_of(&[&psys.a, &psys.b, &psys.e]), &monomials_of(&[&psys.c, &psys.d, &psys.f]));
    let (c0, f00, f01, delta) = layout.wiring::<T>();
    let n0 = layout.n0();
    let one = Monomial::one(np);

    let mut base = LinearProgram::new();
    let gamma = declare_lambda_gamma_mu(&mut base, n, m, policy);
    let scal = declare_scalings(&mut base, template, &delta)?;

    let mut lam_e0 = Vec::with_capacity(n0);
    let mut f10 = Mat::zeros(p, n0);
    for (k, ch) in layout.state.iter().enumerate() {
        let (a, b) = (psys.a.coeff(&ch.monomial), psys.b.coeff(&ch.monomial));
        lam_e0.extend((0..n).map(|t| feedback_col(a, b, t, n, m)));
        f10.set_block(0, layout.state_offset(k), &psys.e.coeff(&ch.monomial).transpose());
    }
    for (k, ch) in layout.input.iter().enumerate() {
        let (c, d) = (psys.c.coeff(&ch.monomial), psys.d.coeff(&ch.monomial));
        lam_e0.extend((0..q).map(|t| feedback_col(c, d, t, n, m)));
        f10.set_block(0, layout.input_offset(k), &psys.f.coeff(&ch.monomial).transpose());
    }
    let data = LoopData {
        lam_a: (0..n).map(|j| feedback_col(psys.a.coeff(&one), psys.b.coeff(&one), j, n, m)).collect(),
        lam_e0,
        lam_e1: (0..q).map(|j| feedback_col(psys.c.coeff(&one), psys.d.coeff(&one), j, n, m)).collect(),
        c0,
        c1: psys.e.coeff(&one).transpose(),
        f00,
        f01,
        f10,
        f11: psys.f.coeff(&one).transpose(),
    };
    let mut rows = loop_rows(data, &scal, gamma, np);
    rows.extend(closed_loop_positivity_rows(psys));
    if let ControllerSpec::Bounded { lower, upper } = spec {
        for (k, r) in bound_rows(n, m, lower, upper, base.num_vars).into_iter().enumerate() {
            let mut f = LinearForm::zero();
            for (v, c) in r.coeffs.into_iter().enumerate() {
                f.add_var(v, c);
            }
            f.constant = -r.rhs;
            rows.push(RobustRow { expr: Polynomial::constant(np, f), relation: r.relation, label: format!("bound{k}") });
        }
    }
    if let ControllerSpec::Structured(zeros) = spec {
        fix_structural_zeros(&mut base, n, m, zeros);
    }
    Ok(RobustLinearProgram {
        base,
        rows,
        domain: psys.domain.clone(),
        policy: policy.clone(),
        kind: RobustKind::Synthesis,
        n,
        m,
        gamma,
        scalings: scal,
        delta,
    })
}

#[derive(Clone, Debug)]
pub struct RobustOptions {
    /// Handelman product degree; `None` uses the program degree plus two.
    pub handelman_degree: Option<u32>,
    pub form: RelaxationForm,
}

impl Default for RobustOptions {
    fn default() -> Self {
        RobustOptions { handelman_degree: None, form: RelaxationForm::Full }
    }
}

impl RobustOptions {
    pub fn degree_for<T: Scalar>(&self, rlp: &RobustLinearProgram<T>) -> u32 {
        self.handelman_degree.unwrap_or(rlp.degree() + 2)
    }
}

#[derive(Clone, Debug)]
pub struct RobustSolution<T> {
    pub status: LpStatus,
    pub gamma: Option<T>,
    pub x: Vec<T>,
    pub lambda: Vec<T>,
    pub handelman_degree: u32,
    pub form: RelaxationForm,
    pub lp_vars: usize,
    pub lp_rows: usize,
    pub iterations: usize,
    pub certificate: Option<crate::handelman::HandelmanCertificate<T>>,
}

pub fn solve_robust<T: Scalar>(rlp: &RobustLinearProgram<T>, options: &RobustOptions) -> Result<RobustSolution<T>> {
    let b = options.degree_for(rlp);
    let relaxation = relax(rlp, b, options.form)?;
    let sol = solve_lp(&relaxation.lp)?;
    let optimal = sol.status == LpStatus::Optimal;
    Ok(RobustSolution {
        status: sol.status,
        gamma: optimal.then(|| sol.x[rlp.gamma].clone()),
        lambda: if optimal { sol.x[..rlp.n].to_vec() } else { Vec::new() },
        handelman_degree: b,
        form: relaxation.form,
        lp_vars: relaxation.lp.num_vars,
        lp_rows: relaxation.lp.num_rows(),
        iterations: sol.iterations,
        certificate: optimal.then(|| relaxation.certificate(&sol.x)),
        x: sol.x,
    })
}

/// The finite LP `solve_robust` would solve.
pub fn relaxed_lp<T: Scalar>(rlp: &RobustLinearProgram<T>, options: &RobustOptions) -> Result<LinearProgram<T>> {
    Ok(relax(rlp, options.degree_for(rlp), options.form)?.lp)
}

#[derive(Clone, Debug)]
pub struct RobustSynthesisResult<T> {
    pub k: Mat<T>,
    pub gamma: T,
    pub lambda: Vec<T>,
    pub mu: Vec<Vec<T>>,
    pub solution: RobustSolution<T>,
}

pub fn robust_synthesize<T: Scalar>(
    psys: &PolySystem<T>,
    template: &ScalingTemplate<T>,
    spec: &ControllerSpec<T>,
    policy: &StrictnessPolicy<T>,
    options: &RobustOptions,
) -> Result<RobustSynthesisResult<T>> {
    let rlp = robust_stabilize(psys, template, spec, policy)?;
    let solution = solve_robust(&rlp, options)?;
    match solution.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Infeasible("no controller certified by the relaxation; try a higher scaling or Handelman degree".into()))
        }
        LpStatus::Unbounded => return Err(Error::Unbounded),
    }
    let (k, lambda, mu) = recover_gain(&solution.x, rlp.n, rlp.m);
    Ok(RobustSynthesisResult { k, gamma: solution.gamma.clone().expect("optimal"), lambda, mu, solution })
}

/// Outcome of an independent sweep over a grid of the box. It can refute a
/// robust result but never prove one.
#[derive(Clone, Debug, Serialize)]
pub struct GridVerdict {
    pub points: usize,
    pub rows_hold: bool,
    pub gain_bound_holds: bool,
    pub worst_gain: Option<f64>,
    pub failure: Option<String>,
}

impl GridVerdict {
    pub fn passed(&self) -> bool {
        self.rows_hold && self.gain_bound_holds
    }

    pub fn label(&self) -> &'static str {
        if self.passed() {
            "not refuted"
        } else {
            "refuted"
        }
    }
}

/// Checks every robust row at `x` on a grid with `points` values per
/// parameter. Returns the first violation found.
pub fn check_rows_on_grid(rlp: &RobustLinearProgram<f64>, x: &[f64], points: usize) -> Option<String> {
    let grid = rlp.domain.grid(points);
    rlp.rows.par_iter().find_map_any(|row| {
        let p = row.expr.at(x);
        let scale: f64 = row.expr.terms().map(|(_, f)| f.coeffs.iter().map(|(&v, c)| (c * x[v]).abs()).sum::<f64>() + f.constant.abs()).sum();
        let tol = 1e-8 * (1.0 + scale);
        grid.iter().find_map(|pt| {
            let v = p.eval(pt).ok()?;
            let ok = match row.relation {
                OpenRelation::Lt | OpenRelation::Le => v <= tol,
                OpenRelation::Gt | OpenRelation::Ge => v >= -tol,
                OpenRelation::Eq => v.abs() <= tol,
            };
            (!ok).then(|| format!("row {} evaluates to {v:e} at delta = {pt:?}", row.label))
        })
    })
}

/// Frozen-parameter check: for every grid point the closed system must be
/// positive and stable with oracle gain at most `γ(1 + 1e-6) + 1e-6`.
pub fn check_gain_on_grid(
    domain: &BoxDomain<f64>,
    points: usize,
    gamma: f64,
    frozen: impl Fn(&[f64]) -> Result<PositiveLtiSystem<f64>> + Sync,
    norm: Norm,
) -> (bool, Option<f64>, Option<String>) {
    let grid = domain.grid(points);
    let results: Vec<std::result::Result<f64, String>> = grid
        .par_iter()
        .map(|pt| {
            let sys = frozen(pt).map_err(|e| format!("at delta = {pt:?}: {e}"))?;
            if !classify(&sys).is_positive {
                return Err(format!("frozen system not positive at delta = {pt:?}"));
            }
            if !is_stable(&sys).map_err(|e| e.to_string())? {
                return Err(format!("frozen system unstable at delta = {pt:?}"));
            }
            let (l1, linf) = oracle_gains(&sys).map_err(|e| e.to_string())?;
            let g = if norm == Norm::L1 { l1 } else { linf };
            if g > gamma * (1.0 + 1e-6) + 1e-6 {
                return Err(format!("frozen gain {g} exceeds {gamma} at delta = {pt:?}"));
            }
            Ok(g)
        })
        .collect();
    let mut worst: Option<f64> = None;
    for r in results {
        match r {
            Ok(g) => worst = Some(worst.map_or(g, |w: f64| w.max(g))),
            Err(msg) => return (false, worst, Some(msg)),
        }
    }
    (true, worst, None)
}

/// Grid sweep of a solved robust gain program.
pub fn certify_robust_gain(lft: &LftSystem<f64>, rlp: &RobustLinearProgram<f64>, sol: &RobustSolution<f64>, points: usize) -> GridVerdict {
    let Some(gamma) = sol.gamma else {
        return GridVerdict { points, rows_hold: false, gain_bound_holds: false, worst_gain: None, failure: Some("no solution".into()) };
    };
    let row_failure = check_rows_on_grid(rlp, &sol.x, points);
    let (gain_ok, worst, gain_failure) = check_gain_on_grid(&rlp.domain, points, gamma, |pt| lft.close_loop(pt), Norm::L1);
    GridVerdict {
        points,
        rows_hold: row_failure.is_none(),
        gain_bound_holds: gain_ok,
        worst_gain: worst,
        failure: row_failure.or(gain_failure),
    }
}

/// Grid sweep of a robust controller: positivity, stability and the L∞
/// bound of `A(δ) + B(δ)K` at every grid point.
pub fn certify_robust_controller(psys: &PolySystem<f64>, k: &Mat<f64>, gamma: f64, points: usize) -> GridVerdict {
    let grid = psys.domain.grid(points);
    let outcomes: Vec<std::result::Result<f64, String>> = grid
        .par_iter()
        .map(|pt| {
            let sys = psys.eval(pt).map_err(|e| e.to_string())?;
            let cert = certify_controller(&sys, k, gamma).map_err(|e| e.to_string())?;
            if cert.passed() {
                Ok(cert.closed_loop_gain.unwrap_or(0.0))
            } else {
                Err(format!("closed loop fails at delta = {pt:?}: {cert:?}"))
            }
        })
        .collect();
    let mut worst: Option<f64> = None;
    for o in outcomes {
        match o {
            Ok(g) => worst = Some(worst.map_or(g, |w: f64| w.max(g))),
            Err(msg) => return GridVerdict { points, rows_hold: false, gain_bound_holds: false, worst_gain: worst, failure: Some(msg) },
        }
    }
    GridVerdict { points, rows_hold: true, gain_bound_holds: true, worst_gain: worst, failure: None }
}

/// Largest frozen-parameter oracle gain over a grid.
pub fn grid_sweep_gain(domain: &BoxDomain<f64>, points: usize, frozen: impl Fn(&[f64]) -> Result<PositiveLtiSystem<f64>> + Sync, norm: Norm) -> Result<f64> {
    let gains: Vec<Result<f64>> = domain
        .grid(points)
        .par_iter()
        .map(|pt| {
            let (l1, linf) = oracle_gains(&frozen(pt)?)?;
            Ok(if norm == Norm::L1 { l1 } else { linf })
        })
        .collect();
    let mut worst = f64::NEG_INFINITY;
    for g in gains {
        worst = worst.max(g?);
    }
    Ok(worst)
}

/// `(A, C, E, F)` perturbation along one coordinate of an affine family.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineDirection<T> {
    pub a: Mat<T>,
    pub c: Mat<T>,
    pub e: Mat<T>,
    pub f: Mat<T>,
}

/// `S(ε) = S0 + Σ_k ε_k S_k` for `ε ∈ [−1, 1]ᴺ`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineFamily<T> {
    pub nominal: PositiveLtiSystem<T>,
    pub directions: Vec<AffineDirection<T>>,
}

/// Largest parameter count accepted by [`vertex_gain`].
pub const VERTEX_PARAM_CAP: usize = 20;

impl<T: Scalar> AffineFamily<T> {
    pub fn new(nominal: PositiveLtiSystem<T>, directions: Vec<AffineDirection<T>>) -> Result<Self> {
        for (k, d) in directions.iter().enumerate() {
            if d.a.shape() != nominal.a.shape() || d.c.shape() != nominal.c.shape() || d.e.shape() != nominal.e.shape() || d.f.shape() != nominal.f.shape() {
                return Err(Error::Dimension(format!("direction {k} does not match the nominal shapes")));
            }
        }
        Ok(AffineFamily { nominal, directions })
    }

    /// Only `A` is uncertain.
    pub fn state_only(a0: Mat<T>, a_dirs: Vec<Mat<T>>, c: Mat<T>, e: Mat<T>, f: Mat<T>) -> Self {
        let nominal = PositiveLtiSystem::autonomous(a0, c, e, f).expect("consistent shapes");
        let directions = a_dirs
            .into_iter()
            .map(|a| AffineDirection {
                a,
                c: Mat::zeros(nominal.q(), nominal.n()),
                e: Mat::zeros(nominal.n(), nominal.p()),
                f: Mat::zeros(nominal.q(), nominal.p()),
            })
            .collect();
        AffineFamily { nominal, directions }
    }

    /// Rewrites an affine polynomial system on its box as a family over
    /// `[−1, 1]ᴺ` via `δ = c + h ε`. `B` and `D` are dropped.
    pub fn from_poly_system(ps: &PolySystem<T>) -> Result<Self> {
        if ps.degree() > 1 {
            return Err(Error::Degree { degree: ps.degree() as usize, max: 1 });
        }
        let np = ps.num_params();
        let two = T::from_int(2);
        let center: Vec<T> = (0..np).map(|k| (ps.domain.lower[k].clone() + ps.domain.upper[k].clone()) / two.clone()).collect();
        let half: Vec<T> = (0..np).map(|k| (ps.domain.upper[k].clone() - ps.domain.lower[k].clone()) / two.clone()).collect();
        let nominal = ps.eval(&center)?;
        let nominal = PositiveLtiSystem::autonomous(nominal.a, nominal.c, nominal.e, nominal.f)?;
        let directions = (0..np)
            .map(|k| {
                let mono = Monomial::var(np, k);
                AffineDirection {
                    a: ps.a.coeff(&mono).scale(&half[k]),
                    c: ps.c.coeff(&mono).scale(&half[k]),
                    e: ps.e.coeff(&mono).scale(&half[k]),
                    f: ps.f.coeff(&mono).scale(&half[k]),
                }
            })
            .collect();
        AffineFamily::new(nominal, directions)
    }

    pub fn num_params(&self) -> usize {
        self.directions.len()
    }

    pub fn at(&self, eps: &[T]) -> Result<PositiveLtiSystem<T>> {
        if eps.len() != self.num_params() {
            return Err(Error::Dimension(format!("{} coordinates for {} directions", eps.len(), self.num_params())));
        }
        let (mut a, mut c, mut e, mut f) = (self.nominal.a.clone(), self.nominal.c.clone(), self.nominal.e.clone(), self.nominal.f.clone());
        for (d, x) in self.directions.iter().zip(eps) {
            a = a.add(&d.a.scale(x))?;
            c = c.add(&d.c.scale(x))?;
            e = e.add(&d.e.scale(x))?;
            f = f.add(&d.f.scale(x))?;
        }
        PositiveLtiSystem::autonomous(a, c, e, f)
    }

    pub fn domain(&self) -> BoxDomain<T> {
        let np = self.num_params();
        BoxDomain { lower: vec![-T::one(); np], upper: vec![T::one(); np] }
    }
}

#[derive(Clone, Debug)]
pub struct VertexGainResult<T> {
    pub gamma: T,
    pub lambda: Vec<T>,
    pub vertices: usize,
    /// Largest oracle gain among the vertex systems (a lower bound on the
    /// worst case).
    pub vertex_oracle_max: T,
    pub lp_vars: usize,
    pub lp_rows: usize,
}

/// One gain LP with the rows replicated at every vertex of the box and a
/// shared `λ` and `γ`. Also returns the largest vertex oracle gain.
pub fn vertex_lp<T: Scalar>(fam: &AffineFamily<T>, norm: Norm, policy: &StrictnessPolicy<T>) -> Result<(LinearProgram<T>, T, usize)> {
    let np = fam.num_params();
    if np > VERTEX_PARAM_CAP {
        return Err(Error::Combinatorial { count: np, cap: VERTEX_PARAM_CAP });
    }
    let n = fam.nominal.n();
    let mut lp = LinearProgram::new();
    declare_lambda_gamma(&mut lp, n, policy);
    let mut vertex_max: Option<T> = None;
    let verts = fam.domain().vertices();
    for v in &verts {
        let sys = fam.at(v)?;
        let report = classify(&sys);
        if !report.is_positive {
            return Err(Error::NotPositive(report));
        }
        if !is_stable(&sys)? {
            return Err(Error::Unstable);
        }
        let (l1, linf) = oracle_gains(&sys)?;
        let g = if norm == Norm::L1 { l1 } else { linf };
        vertex_max = Some(match vertex_max {
            None => g,
            Some(w) => T::max_of(w, g),
        });
        let s = if norm == Norm::L1 { sys } else { transpose_system(&sys) };
        for row in strictify(&l1_rows(&s.a, &s.c, &s.e, &s.f, n + 1), policy) {
            push(&mut lp, row)?;
        }
    }
    Ok((lp, vertex_max.expect("at least one vertex"), verts.len()))
}

pub fn vertex_gain<T: Scalar>(fam: &AffineFamily<T>, norm: Norm, policy: &StrictnessPolicy<T>) -> Result<VertexGainResult<T>> {
    let n = fam.nominal.n();
    let (lp, vertex_oracle_max, vertices) = vertex_lp(fam, norm, policy)?;
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::Infeasible("no common copositive Lyapunov vector across the vertices".into())),
        LpStatus::Unbounded => return Err(Error::Unbounded),
    }
    Ok(VertexGainResult {
        gamma: sol.x[n].clone(),
        lambda: sol.x[..n].to_vec(),
        vertices,
        vertex_oracle_max,
        lp_vars: lp.num_vars,
        lp_rows: lp.num_rows(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data;
    use crate::gains::{l1_lp, linf_lp};
    use crate::lft::{lft_from_polynomial, transpose_lft};
    use crate::synthesis::synthesis_lp;
    use crate::system::random_positive_system;

    fn constant_poly_system(sys: &PositiveLtiSystem<f64>) -> PolySystem<f64> {
        let c = |m: &Mat<f64>| Polynomial::constant(1, m.clone());
        PolySystem::new(c(&sys.a), c(&sys.b), c(&sys.c), c(&sys.d), c(&sys.e), c(&sys.f)).unwrap()
    }

    #[test]
    fn no_channels_reproduce_the_nominal_programs() {
        let p = StrictnessPolicy::default();
        let sys = random_positive_system(4, 2, 2, 3, 17);
        let ps = constant_poly_system(&sys);
        for template in [ScalingTemplate::FreeConstant, ScalingTemplate::FreePolynomial { degree: 2, saturate: true }] {
            let r1 = robust_l1(&lft_from_polynomial(&ps, 0).unwrap(), &template, &p).unwrap();
            assert_eq!(r1.finite_lp().unwrap().dump(), l1_lp(&sys, &p).dump());
            let ri = robust_linf(&transpose_lft(&ps, 0).unwrap(), &template, &p).unwrap();
            assert_eq!(ri.finite_lp().unwrap().dump(), linf_lp(&sys, &p).dump());
            let rs = robust_stabilize(&ps, &template, &ControllerSpec::Full, &p).unwrap();
            assert_eq!(rs.finite_lp().unwrap().dump(), synthesis_lp(&sys, &ControllerSpec::Full, &p).unwrap().dump());
        }
    }

    #[test]
    fn zero_channel_gain_is_the_nominal_gain() {
        let p = StrictnessPolicy::default();
        let lft = lft_from_polynomial(&data::quadratic_system(), 2).unwrap();
        let out = exact_constant_delta(&lft, &Mat::zeros(lft.n0(), lft.n0()), &p).unwrap();
        let nominal = PositiveLtiSystem::autonomous(lft.a.clone(), lft.c1.clone(), lft.e1.clone(), lft.f11.clone()).unwrap();
        let g = crate::gains::l1_gain(&nominal, &p).unwrap().gamma;
        assert!((out.gamma.unwrap() - g).abs() <= 1e-6 * g);
    }

    #[test]
    fn delay_verdicts_match_the_summed_matrix() {
        let p = StrictnessPolicy::default();
        for seed in 0..10u64 {
            let stable = seed % 2 == 0;
            let (a, ah) = data::random_delay_pair(4, seed, stable);
            let e = Mat::from_fn(4, 1, |_, _| 1.0);
            let lft = data::delay_lft(&a, &ah, &Mat::identity(4), &e, &Mat::zeros(4, 1));
            let out = exact_constant_delta(&lft, &Mat::identity(4), &p).unwrap();
            let direct = crate::system::is_hurwitz_metzler(&a.add(&ah).unwrap(), &p).unwrap();
            assert_eq!(out.feasible, direct, "seed {seed}");
            assert_eq!(out.feasible, stable);
            if out.feasible {
                let sum = PositiveLtiSystem::autonomous(a.add(&ah).unwrap(), Mat::identity(4), e.clone(), Mat::zeros(4, 1)).unwrap();
                let o = oracle_gains(&sum).unwrap().0;
                assert!((out.gamma.unwrap() - o).abs() <= 1e-4 * o);
            }
        }
    }

    #[test]
    fn gene_expression_vertex_values() {
        let p = StrictnessPolicy::default();
        for (level, reference, _) in data::GENE_TABLE {
            let r = vertex_gain(&data::gene_expression(level), Norm::Linf, &p).unwrap();
            assert!((r.gamma - reference).abs() <= 1e-3 * reference, "{level}: {}", r.gamma);
            assert!(r.gamma >= data::gene_expression_exact(level) - 1e-9);
        }
    }

    #[test]
    fn scalar_robust_controller() {
        let p = StrictnessPolicy::default();
        let ps = data::scalar_robust_synthesis();
        let r = robust_synthesize(&ps, &ScalingTemplate::FreeConstant, &ControllerSpec::Full, &p, &RobustOptions::default()).unwrap();
        let k = r.k[(0, 0)];
        assert!(1.0 + 1.0 + k <= -p.epsilon * 0.5, "K = {k}");
        let worst = 1.0 / (-2.0 - k);
        assert!(worst <= r.gamma * (1.0 + 1e-6) + 1e-6);
        assert!(certify_robust_controller(&ps, &r.k, r.gamma, 101).passed());
    }
}
