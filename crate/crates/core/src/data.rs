//! Worked examples shipped with the library: a two-compartment drug
//! distribution model, an uncertain gene expression model, positive
//! time-delay systems, a quadratic single-parameter system, and small robust
//! synthesis problems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lft::{LftSystem, PolySystem};
use crate::numlin::Mat;
use crate::poly::{PolyMatrix, Polynomial};
use crate::robust::AffineFamily;
use crate::system::PositiveLtiSystem;

/// Two-compartment model with injection into the first compartment.
///
/// ```text
/// A = [ −(a11 + a21)   a12 ]      E = [1]
///     [      a21      −a12 ]          [0]
/// ```
pub fn drug_model(a11: f64, a12: f64, a21: f64, c: Mat<f64>) -> PositiveLtiSystem<f64> {
    let a = Mat::from_f64(&[&[-(a11 + a21), a12], &[a21, -a12]]);
    let e = Mat::from_f64(&[&[1.0], &[0.0]]);
    let q = c.rows();
    PositiveLtiSystem::autonomous(a, c, e, Mat::zeros(q, 1)).expect("2-state model")
}

/// Closed-form gains `(l1, linf)` of [`drug_model`] for `C = diag(k1, k2)`.
pub fn drug_gains_diag(a11: f64, a12: f64, a21: f64, k1: f64, k2: f64) -> (f64, f64) {
    let t1 = k1.abs() / a11;
    let t2 = k2.abs() * a21 / (a11 * a12);
    (t1 + t2, t1.max(t2))
}

/// mRNA/protein model with relative uncertainty `level` on the degradation
/// and translation rates, as an affine family over `ε ∈ [−1, 1]³`. The
/// output is the protein count.
pub fn gene_expression(level: f64) -> AffineFamily<f64> {
    let (gr, kp, gp) = (1.0, 2.0, 1.0);
    let a0 = Mat::from_f64(&[&[-gr, 0.0], &[kp, -gp]]);
    let dirs = vec![
        Mat::from_f64(&[&[-level * gr, 0.0], &[0.0, 0.0]]),
        Mat::from_f64(&[&[0.0, 0.0], &[level * kp, 0.0]]),
        Mat::from_f64(&[&[0.0, 0.0], &[0.0, -level * gp]]),
    ];
    let e = Mat::from_f64(&[&[1.0], &[0.0]]);
    let c = Mat::from_f64(&[&[0.0, 1.0]]);
    AffineFamily::state_only(a0, dirs, c, e, Mat::zeros(1, 1))
}

/// Worst-case protein gain over the box, `2(1 + N)/(1 − N)²`.
pub fn gene_expression_exact(level: f64) -> f64 {
    2.0 * (1.0 + level) / ((1.0 - level) * (1.0 - level))
}

/// Reference values for `N = 0, 0.1, 0.3, 0.5, 0.7`: `(N, computed, theoretical)`.
pub const GENE_TABLE: [(f64, f64, f64); 5] =
    [(0.0, 2.0, 2.0), (0.1, 2.7162, 2.7161), (0.3, 5.3063, 5.3062), (0.5, 12.0003, 12.0000), (0.7, 37.7783, 37.7779)];

fn m3(rows: [[f64; 3]; 3]) -> Mat<f64> {
    Mat::from_fn(3, 3, |i, j| rows[i][j])
}
fn m32(rows: [[f64; 2]; 3]) -> Mat<f64> {
    Mat::from_fn(3, 2, |i, j| rows[i][j])
}
fn m23(rows: [[f64; 3]; 2]) -> Mat<f64> {
    Mat::from_fn(2, 3, |i, j| rows[i][j])
}
fn m22(rows: [[f64; 2]; 2]) -> Mat<f64> {
    Mat::from_fn(2, 2, |i, j| rows[i][j])
}

/// Three states, two inputs, two outputs, every matrix quadratic in
/// `δ ∈ [0, 1]`.
pub fn quadratic_system() -> PolySystem<f64> {
    let a = PolyMatrix::univariate(&[
        m3([[-10.0, 2.0, 4.0], [3.0, -8.0, 1.0], [2.0, 1.0, -5.0]]),
        m3([[1.0, 0.0, 2.0], [0.0, 1.0, 2.0], [-1.0, 2.0, -1.0]]),
        m3([[1.0, -1.0, -1.0], [1.0, -1.0, 0.0], [0.0, 1.0, -1.0]]),
    ])
    .unwrap();
    let e = PolyMatrix::univariate(&[
        m32([[1.0, 3.0], [3.0, 0.0], [2.0, 1.0]]),
        m32([[1.0, 3.0], [1.0, 1.0], [2.0, 1.0]]),
        m32([[1.0, 3.0], [0.0, 1.0], [1.0, 4.0]]),
    ])
    .unwrap();
    let c = PolyMatrix::univariate(&[
        m23([[1.0, 3.0, 1.0], [2.0, 0.0, 1.0]]),
        m23([[1.0, 0.0, 2.0], [3.0, 1.0, 0.0]]),
        m23([[0.0, 3.0, 2.0], [1.0, 4.0, 1.0]]),
    ])
    .unwrap();
    let f = PolyMatrix::univariate(&[m22([[2.0, 1.0], [1.0, 2.0]]), m22([[0.0, 2.0], [1.0, 0.0]]), m22([[1.0, 1.0], [2.0, 1.0]])])
        .unwrap();
    PolySystem::autonomous(a, c, e, f).unwrap()
}

/// Reference robust bounds: (constant scalings, degree-2 saturated scalings)
/// for L1 and L∞, then the exact worst-case gains.
pub const QUADRATIC_L1: (f64, f64) = (133.95, 94.167);
pub const QUADRATIC_LINF: (f64, f64) = (86.195, 82.025);
pub const QUADRATIC_WORST: (f64, f64) = (92.8358, 82.0249);

/// `ẋ = A x + A_h x(t − h) + E w`, `z = C x + F w` written with the delay
/// as loop operator: `E0 = A_h`, `C0 = I`, `F00 = 0`.
pub fn delay_lft(a: &Mat<f64>, ah: &Mat<f64>, c: &Mat<f64>, e: &Mat<f64>, f: &Mat<f64>) -> LftSystem<f64> {
    let n = a.rows();
    let (p, q) = (e.cols(), c.rows());
    LftSystem::new(
        a.clone(),
        ah.clone(),
        e.clone(),
        Mat::identity(n),
        c.clone(),
        Mat::zeros(n, n),
        Mat::zeros(n, p),
        Mat::zeros(q, n),
        f.clone(),
        Polynomial::constant(0, Mat::identity(n)),
    )
    .expect("consistent delay LFT")
}

/// Random `(A, A_h)` with `A` Metzler and `A_h ≥ 0`. Stable instances get
/// strictly diagonally dominant `A + A_h`; unstable ones have all row sums
/// of `A + A_h` positive.
pub fn random_delay_pair(n: usize, seed: u64, stable: bool) -> (Mat<f64>, Mat<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Mat::from_fn(n, n, |i, j| if i == j { 0.0 } else { rng.gen_range(0.0..1.0) });
    let ah = Mat::from_fn(n, n, |_, _| rng.gen_range(0.0..1.0));
    for i in 0..n {
        let off: f64 = a.row(i).iter().sum::<f64>() + ah.row(i).iter().sum::<f64>();
        let margin = rng.gen_range(0.1..1.1);
        a[(i, i)] = if stable { -(off + margin) } else { -(off - margin) };
    }
    (a, ah)
}

/// `ẋ = (1 + δ)x + u + w`, `z = x`.
pub fn scalar_robust_synthesis() -> PolySystem<f64> {
    let k = |v: f64| Mat::from_f64(&[&[v]]);
    PolySystem::new(
        PolyMatrix::univariate(&[k(1.0), k(1.0)]).unwrap(),
        Polynomial::constant(1, k(1.0)),
        Polynomial::constant(1, k(1.0)),
        Polynomial::constant(1, k(0.0)),
        Polynomial::constant(1, k(1.0)),
        Polynomial::constant(1, k(0.0)),
    )
    .unwrap()
}

/// Two states, one input, affine in `δ`, open loop neither Metzler nor
/// stable.
pub fn toy_robust_synthesis() -> PolySystem<f64> {
    let a0 = Mat::from_f64(&[&[1.0, -1.0], &[0.5, -2.0]]);
    let a1 = Mat::from_f64(&[&[1.0, 0.0], &[0.0, 1.0]]);
    PolySystem::new(
        PolyMatrix::univariate(&[a0, a1]).unwrap(),
        Polynomial::constant(1, Mat::from_f64(&[&[1.0], &[0.0]])),
        Polynomial::constant(1, Mat::from_f64(&[&[1.0, 0.5]])),
        Polynomial::constant(1, Mat::from_f64(&[&[0.0]])),
        Polynomial::constant(1, Mat::from_f64(&[&[1.0], &[1.0]])),
        Polynomial::constant(1, Mat::from_f64(&[&[0.0]])),
    )
    .unwrap()
}

/// `count` drug-model parameter sets `(a11, a12, a21)` drawn from
/// `[0.1, 10]³` and output weights `(k1, k2)` from `[0.1, 5]²`.
pub fn random_drug_parameters(count: usize, seed: u64) -> Vec<([f64; 3], [f64; 2])> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a = [rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0)];
            let k = [rng.gen_range(0.1..5.0), rng.gen_range(0.1..5.0)];
            (a, k)
        })
        .collect()
}

/// Coefficient map on `[−1, 1]` for degree-two products of `g1 = 1 + x`
/// and `g2 = 1 − x`, in the product order `g1, g2, g1*g2, g1^2, g2^2`:
/// each row gives the coefficient of one power of `x` in every product.
pub const INTERVAL_PRODUCT_ORDER: [&str; 5] = ["g1", "g2", "g1*g2", "g1^2", "g2^2"];
pub const INTERVAL_PRODUCT_MAP: [(&str, [i64; 5]); 3] =
    [("x^2", [0, 0, -1, 1, 1]), ("x", [1, -1, 0, 2, -2]), ("1", [1, 1, 1, 1, 1])];
