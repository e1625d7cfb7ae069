//! Linear fractional representations of polynomially uncertain systems.
//!
//! ```text
//! ẋ  = A x   + E0 w0  + E1 w1
//! z0 = C0 x  + F00 w0 + F01 w1
//! z1 = C1 x  + F10 w0 + F11 w1
//! w0 = Δ(δ) z0
//! ```
//!
//! The canonical construction gives every monomial of the state-side
//! matrices (`A`, `C`) and of the input-side matrices (`E`, `F`) its own loop
//! channel. Channels form a prefix tree: the channel of `δ^α` reads the
//! channel of `δ^α / δ_k` (or `x`, `w1` at the root) and multiplies it by
//! `δ_k`, where `δ_k` is the last factor of `α` in parameter order. For one
//! parameter this is the familiar shift chain `δx, δ²x, …, δw1, δ²w1, …`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numlin::{rcond1, solve, Mat};
use crate::poly::{BoxDomain, Monomial, PolyMatrix, Polynomial};
use crate::scalar::Scalar;
use crate::system::PositiveLtiSystem;

/// Matrices `A(δ), B(δ), C(δ), D(δ), E(δ), F(δ)`; `B` and `D` may have zero
/// columns.
#[derive(Clone, Debug, PartialEq)]
pub struct PolySystem<T> {
    pub a: PolyMatrix<T>,
    pub b: PolyMatrix<T>,
    pub c: PolyMatrix<T>,
    pub d: PolyMatrix<T>,
    pub e: PolyMatrix<T>,
    pub f: PolyMatrix<T>,
    pub domain: BoxDomain<T>,
}

impl<T: Scalar> PolySystem<T> {
    pub fn new(
        a: PolyMatrix<T>,
        b: PolyMatrix<T>,
        c: PolyMatrix<T>,
        d: PolyMatrix<T>,
        e: PolyMatrix<T>,
        f: PolyMatrix<T>,
    ) -> Result<Self> {
        let np = a.num_params();
        if [&b, &c, &d, &e, &f].iter().any(|m| m.num_params() != np) {
            return Err(Error::Dimension("all matrices must share the parameter count".into()));
        }
        // reuse the nominal shape checks
        PositiveLtiSystem::new(
            a.zero_coeff().clone(),
            b.zero_coeff().clone(),
            c.zero_coeff().clone(),
            d.zero_coeff().clone(),
            e.zero_coeff().clone(),
            f.zero_coeff().clone(),
        )?;
        Ok(PolySystem { a, b, c, d, e, f, domain: BoxDomain::unit(np) })
    }

    pub fn with_domain(mut self, domain: BoxDomain<T>) -> Result<Self> {
        if domain.num_params() != self.num_params() {
            return Err(Error::Dimension("domain dimension differs from the parameter count".into()));
        }
        self.domain = domain;
        Ok(self)
    }

    /// Analysis-only system from `A, C, E, F`.
    pub fn autonomous(a: PolyMatrix<T>, c: PolyMatrix<T>, e: PolyMatrix<T>, f: PolyMatrix<T>) -> Result<Self> {
        let np = a.num_params();
        let n = a.shape().0;
        let q = c.shape().0;
        Self::new(
            a,
            Polynomial::zero(np, Mat::zeros(n, 0)),
            c,
            Polynomial::zero(np, Mat::zeros(q, 0)),
            e,
            f,
        )
    }

    pub fn num_params(&self) -> usize {
        self.a.num_params()
    }
    pub fn n(&self) -> usize {
        self.a.shape().0
    }
    pub fn m(&self) -> usize {
        self.b.shape().1
    }
    pub fn p(&self) -> usize {
        self.e.shape().1
    }
    pub fn q(&self) -> usize {
        self.c.shape().0
    }

    pub fn degree(&self) -> u32 {
        [&self.a, &self.b, &self.c, &self.d, &self.e, &self.f].iter().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn eval(&self, delta: &[T]) -> Result<PositiveLtiSystem<T>> {
        PositiveLtiSystem::new(
            self.a.eval(delta)?,
            self.b.eval(delta)?,
            self.c.eval(delta)?,
            self.d.eval(delta)?,
            self.e.eval(delta)?,
            self.f.eval(delta)?,
        )
    }

    /// `(Aᵀ, Eᵀ as output, Cᵀ as input, Fᵀ)`, without control channels.
    pub fn transpose(&self) -> Self {
        PolySystem::autonomous(self.a.transpose(), self.e.transpose(), self.c.transpose(), self.f.transpose())
            .expect("transposition keeps shapes consistent")
            .with_domain(self.domain.clone())
            .expect("same parameter count")
    }

    /// The closed loop `(A + BK, C + DK, E, F)`.
    pub fn with_feedback(&self, k: &Mat<T>) -> Result<Self> {
        let kp = Polynomial::constant(self.num_params(), k.clone());
        let bk = self.b.mul_with(&kp, |b: &Mat<T>, k: &Mat<T>| b.matmul(k))?;
        let dk = self.d.mul_with(&kp, |d: &Mat<T>, k: &Mat<T>| d.matmul(k))?;
        PolySystem::autonomous(self.a.add(&bk)?, self.c.add(&dk)?, self.e.clone(), self.f.clone())?.with_domain(self.domain.clone())
    }

    pub fn cast<U: Scalar>(&self) -> PolySystem<U> {
        PolySystem {
            a: self.a.cast(),
            b: self.b.cast(),
            c: self.c.cast(),
            d: self.d.cast(),
            e: self.e.cast(),
            f: self.f.cast(),
            domain: BoxDomain { lower: self.domain.lower.iter().map(|v| U::lit(v.as_f64())).collect(), upper: self.domain.upper.iter().map(|v| U::lit(v.as_f64())).collect() },
        }
    }
}

/// One loop channel of the canonical construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Channel {
    pub monomial: Monomial,
    /// Index of the channel this one reads from, within the same side.
    pub parent: Option<usize>,
    /// Parameter multiplying the channel.
    pub param: usize,
}

/// Channel trees of the state side (width `n`) and input side (width `p`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelLayout {
    pub num_params: usize,
    pub n: usize,
    pub p: usize,
    pub state: Vec<Channel>,
    pub input: Vec<Channel>,
}

fn channel_tree(num_params: usize, monomials: &[Monomial]) -> Vec<Channel> {
    let mut nodes: Vec<Monomial> = Vec::new();
    for m in monomials {
        if m.degree() == 0 {
            continue;
        }
        let mut factors: Vec<usize> = Vec::new();
        for (k, &e) in m.0.iter().enumerate() {
            factors.extend(std::iter::repeat_n(k, e as usize));
        }
        let mut prefix = vec![0u32; num_params];
        for &k in &factors {
            prefix[k] += 1;
            let pm = Monomial(prefix.clone());
            if !nodes.contains(&pm) {
                nodes.push(pm);
            }
        }
    }
    nodes.sort();
    nodes
        .iter()
        .map(|m| {
            let param = m.0.iter().rposition(|&e| e > 0).expect("nonconstant");
            let mut parent_m = m.clone();
            parent_m.0[param] -= 1;
            let parent = if parent_m.degree() == 0 { None } else { nodes.iter().position(|x| *x == parent_m) };
            Channel { monomial: m.clone(), parent, param }
        })
        .collect()
}

impl ChannelLayout {
    pub fn new(num_params: usize, n: usize, p: usize, state_monomials: &[Monomial], input_monomials: &[Monomial]) -> Self {
        ChannelLayout {
            num_params,
            n,
            p,
            state: channel_tree(num_params, state_monomials),
            input: channel_tree(num_params, input_monomials),
        }
    }

    pub fn n0(&self) -> usize {
        self.state.len() * self.n + self.input.len() * self.p
    }

    pub fn state_offset(&self, k: usize) -> usize {
        k * self.n
    }

    pub fn input_offset(&self, k: usize) -> usize {
        self.state.len() * self.n + k * self.p
    }

    /// `(C0, F00, F01, Δ)`.
    pub fn wiring<T: Scalar>(&self) -> (Mat<T>, Mat<T>, Mat<T>, PolyMatrix<T>) {
        let (n, p, n0) = (self.n, self.p, self.n0());
        let mut c0 = Mat::zeros(n0, n);
        let mut f00 = Mat::zeros(n0, n0);
        let mut f01 = Mat::zeros(n0, p);
        let mut delta = Polynomial::zero(self.num_params, Mat::zeros(n0, n0));
        for (k, ch) in self.state.iter().enumerate() {
            let off = self.state_offset(k);
            match ch.parent {
                None => c0.set_block(off, 0, &Mat::identity(n)),
                Some(par) => f00.set_block(off, self.state_offset(par), &Mat::identity(n)),
            }
            let mut block = Mat::zeros(n0, n0);
            block.set_block(off, off, &Mat::identity(n));
            delta.add_term(Monomial::var(self.num_params, ch.param), block).expect("shape");
        }
        for (k, ch) in self.input.iter().enumerate() {
            let off = self.input_offset(k);
            match ch.parent {
                None => f01.set_block(off, 0, &Mat::identity(p)),
                Some(par) => f00.set_block(off, self.input_offset(par), &Mat::identity(p)),
            }
            let mut block = Mat::zeros(n0, n0);
            block.set_block(off, off, &Mat::identity(p));
            delta.add_term(Monomial::var(self.num_params, ch.param), block).expect("shape");
        }
        (c0, f00, f01, delta)
    }
}

fn monomials_of<T: Scalar>(ms: &[&PolyMatrix<T>]) -> Vec<Monomial> {
    let mut out: Vec<Monomial> = Vec::new();
    for m in ms {
        for (mono, _) in m.terms() {
            if !out.contains(mono) {
                out.push(mono.clone());
            }
        }
    }
    out.sort();
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct LftSystem<T> {
    pub a: Mat<T>,
    pub e0: Mat<T>,
    pub e1: Mat<T>,
    pub c0: Mat<T>,
    pub c1: Mat<T>,
    pub f00: Mat<T>,
    pub f01: Mat<T>,
    pub f10: Mat<T>,
    pub f11: Mat<T>,
    /// `Δ(δ)`, `n0×n0`.
    pub delta: PolyMatrix<T>,
    pub domain: BoxDomain<T>,
}

impl<T: Scalar> LftSystem<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: Mat<T>,
        e0: Mat<T>,
        e1: Mat<T>,
        c0: Mat<T>,
        c1: Mat<T>,
        f00: Mat<T>,
        f01: Mat<T>,
        f10: Mat<T>,
        f11: Mat<T>,
        delta: PolyMatrix<T>,
    ) -> Result<Self> {
        let n = a.rows();
        let n0 = e0.cols();
        let p = e1.cols();
        let q = c1.rows();
        let checks = [
            ("A", a.shape(), (n, n)),
            ("E0", e0.shape(), (n, n0)),
            ("E1", e1.shape(), (n, p)),
            ("C0", c0.shape(), (n0, n)),
            ("C1", c1.shape(), (q, n)),
            ("F00", f00.shape(), (n0, n0)),
            ("F01", f01.shape(), (n0, p)),
            ("F10", f10.shape(), (q, n0)),
            ("F11", f11.shape(), (q, p)),
            ("Delta", delta.shape(), (n0, n0)),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(Error::Dimension(format!("{name} is {}x{}, expected {}x{}", got.0, got.1, want.0, want.1)));
            }
        }
        let domain = BoxDomain::unit(delta.num_params());
        Ok(LftSystem { a, e0, e1, c0, c1, f00, f01, f10, f11, delta, domain })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }
    pub fn n0(&self) -> usize {
        self.e0.cols()
    }
    pub fn p(&self) -> usize {
        self.e1.cols()
    }
    pub fn q(&self) -> usize {
        self.c1.rows()
    }
    pub fn num_params(&self) -> usize {
        self.delta.num_params()
    }

    /// Closes `w0 = Δ z0` for a given value of the loop gain.
    pub fn close_with(&self, delta_value: &Mat<T>) -> Result<PositiveLtiSystem<T>> {
        let n0 = self.n0();
        if n0 == 0 {
            return PositiveLtiSystem::autonomous(self.a.clone(), self.c1.clone(), self.e1.clone(), self.f11.clone());
        }
        let lhs = Mat::identity(n0).sub(&delta_value.matmul(&self.f00)?)?;
        // M = (I − ΔF00)⁻¹ Δ
        let m = solve(&lhs, delta_value)?;
        let e0m = self.e0.matmul(&m)?;
        let f10m = self.f10.matmul(&m)?;
        PositiveLtiSystem::autonomous(
            self.a.add(&e0m.matmul(&self.c0)?)?,
            self.c1.add(&f10m.matmul(&self.c0)?)?,
            self.e1.add(&e0m.matmul(&self.f01)?)?,
            self.f11.add(&f10m.matmul(&self.f01)?)?,
        )
    }

    pub fn close_loop(&self, delta: &[T]) -> Result<PositiveLtiSystem<T>> {
        self.close_with(&self.delta.eval(delta)?)
    }

    /// Checks that `I − Δ(δ)F00` is invertible at every point of a grid.
    pub fn check_well_posed(&self, points_per_param: usize) -> Result<()> {
        let n0 = self.n0();
        if n0 == 0 {
            return Ok(());
        }
        for pt in self.domain.grid(points_per_param) {
            let lhs = Mat::identity(n0).sub(&self.delta.eval(&pt)?.matmul(&self.f00)?)?;
            let singular = match rcond1(&lhs) {
                Ok(rc) => rc.is_zero() || (T::is_inexact() && rc < T::singular_rcond()),
                Err(Error::Singular { .. }) => true,
                Err(e) => return Err(e),
            };
            if singular {
                return Err(Error::IllPosed(pt.iter().map(|v| v.as_f64()).collect()));
            }
        }
        Ok(())
    }

    /// An LFT with no loop channels.
    pub fn from_nominal(sys: &PositiveLtiSystem<T>) -> Self {
        let (n, p, q) = (sys.n(), sys.p(), sys.q());
        LftSystem::new(
            sys.a.clone(),
            Mat::zeros(n, 0),
            sys.e.clone(),
            Mat::zeros(0, n),
            sys.c.clone(),
            Mat::zeros(0, 0),
            Mat::zeros(0, p),
            Mat::zeros(q, 0),
            sys.f.clone(),
            Polynomial::zero(0, Mat::zeros(0, 0)),
        )
        .expect("consistent shapes")
    }

    pub fn cast<U: Scalar>(&self) -> LftSystem<U> {
        let mut out = LftSystem::new(
            self.a.cast(),
            self.e0.cast(),
            self.e1.cast(),
            self.c0.cast(),
            self.c1.cast(),
            self.f00.cast(),
            self.f01.cast(),
            self.f10.cast(),
            self.f11.cast(),
            self.delta.cast(),
        )
        .expect("cast keeps shapes");
        out.domain = BoxDomain {
            lower: self.domain.lower.iter().map(|v| U::lit(v.as_f64())).collect(),
            upper: self.domain.upper.iter().map(|v| U::lit(v.as_f64())).collect(),
        };
        out
    }
}

/// Canonical LFT of `(A(δ), C(δ), E(δ), F(δ))`. `max_degree` bounds the
/// polynomial degree accepted.
pub fn lft_from_polynomial<T: Scalar>(psys: &PolySystem<T>, max_degree: u32) -> Result<LftSystem<T>> {
    let deg = psys.degree();
    if deg > max_degree {
        return Err(Error::Degree { degree: deg as usize, max: max_degree as usize });
    }
    let np = psys.num_params();
    let (n, p, q) = (psys.n(), psys.p(), psys.q());
    let layout =
        ChannelLayout::new(np, n, p, &monomials_of(&[&psys.a, &psys.c]), &monomials_of(&[&psys.e, &psys.f]));
    let (c0, f00, f01, delta) = layout.wiring::<T>();
    let n0 = layout.n0();
    let mut e0 = Mat::zeros(n, n0);
    let mut f10 = Mat::zeros(q, n0);
    for (k, ch) in layout.state.iter().enumerate() {
        let off = layout.state_offset(k);
        e0.set_block(0, off, psys.a.coeff(&ch.monomial));
        f10.set_block(0, off, psys.c.coeff(&ch.monomial));
    }
    for (k, ch) in layout.input.iter().enumerate() {
        let off = layout.input_offset(k);
        e0.set_block(0, off, psys.e.coeff(&ch.monomial));
        f10.set_block(0, off, psys.f.coeff(&ch.monomial));
    }
    let one = Monomial::one(np);
    let mut lft = LftSystem::new(
        psys.a.coeff(&one).clone(),
        e0,
        psys.e.coeff(&one).clone(),
        c0,
        psys.c.coeff(&one).clone(),
        f00,
        f01,
        f10,
        psys.f.coeff(&one).clone(),
        delta,
    )?;
    lft.domain = psys.domain.clone();
    Ok(lft)
}

/// Canonical LFT of the transposed polynomial system. Its closed loop at
/// `δ` is the transpose of the original closed loop at `δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransposedLft<T>(pub LftSystem<T>);

impl<T: Scalar> TransposedLft<T> {
    pub fn lft(&self) -> &LftSystem<T> {
        &self.0
    }
    /// `Ẽ0`
    pub fn e0_tilde(&self) -> &Mat<T> {
        &self.0.e0
    }
    /// `F̃10`
    pub fn f10_tilde(&self) -> &Mat<T> {
        &self.0.f10
    }
    /// `C̄0`
    pub fn c0_bar(&self) -> &Mat<T> {
        &self.0.c0
    }
    /// `F̄00`
    pub fn f00_bar(&self) -> &Mat<T> {
        &self.0.f00
    }
    /// `F̄01`
    pub fn f01_bar(&self) -> &Mat<T> {
        &self.0.f01
    }
}

pub fn transpose_lft<T: Scalar>(psys: &PolySystem<T>, max_degree: u32) -> Result<TransposedLft<T>> {
    Ok(TransposedLft(lft_from_polynomial(&psys.transpose(), max_degree)?))
}
