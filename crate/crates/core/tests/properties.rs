use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use posgain::gains::{l1_gain, linf_gain, witness_margin, Norm};
use posgain::handelman::RelaxationForm;
use posgain::ilc::ScalingTemplate;
use posgain::io::{parse_system_file, write_document, PolySystemFile, PolyTerm, SystemFile};
use posgain::lft::{lft_from_polynomial, transpose_lft, PolySystem};
use posgain::lp::LpStatus;
use posgain::robust::{certify_robust_gain, robust_l1, robust_linf, solve_robust, RobustOptions};
use posgain::system::{oracle_gains, random_positive_system, transpose_system, PositiveLtiSystem};
use posgain::{Policy, Rational, Scalar};

fn autonomous(n: usize, p: usize, q: usize, seed: u64) -> PositiveLtiSystem<f64> {
    let s = random_positive_system(n, 0, p, q, seed);
    PositiveLtiSystem::autonomous(s.a, s.c, s.e, s.f).unwrap()
}

fn rows(r: usize, c: usize, mut f: impl FnMut(usize, usize) -> f64) -> Vec<Vec<f64>> {
    (0..r).map(|i| (0..c).map(|j| f(i, j)).collect()).collect()
}

/// Affine family `A0 + Σ δ_k A_k` on the unit box, diagonally dominant at
/// every point so each frozen system is positive and stable.
fn random_affine(seed: u64, np: usize) -> PolySystem<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=4);
    let base = random_positive_system(n, 0, 1, 2, seed);
    let mut terms = vec![PolyTerm {
        exponents: vec![0; np],
        a: rows(n, n, |i, j| base.a[(i, j)]),
        b: vec![],
        c: rows(2, n, |i, j| base.c[(i, j)]),
        d: vec![],
        e: rows(n, 1, |i, _| base.e[(i, 0)]),
        f: rows(2, 1, |i, _| base.f[(i, 0)]),
    }];
    for k in 0..np {
        let mut a = rows(n, n, |i, j| if i == j { 0.0 } else { rng.gen_range(0.0..0.2) });
        for (i, row) in a.iter_mut().enumerate() {
            let off: f64 = row.iter().sum();
            row[i] = -off - rng.gen_range(0.0..0.3);
        }
        let mut exponents = vec![0; np];
        exponents[k] = 1;
        terms.push(PolyTerm {
            exponents,
            a,
            b: vec![],
            c: rows(2, n, |_, _| rng.gen_range(0.0..0.3)),
            d: vec![],
            e: rows(n, 1, |_, _| rng.gen_range(0.0..0.3)),
            f: vec![],
        });
    }
    PolySystemFile { num_params: np, n, m: 0, p: 1, q: 2, lower: None, upper: None, terms }.poly_system().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn gains_bound_the_oracle_from_above(seed in any::<u64>(), n in 2usize..12, p in 1usize..4, q in 1usize..4) {
        let sys = autonomous(n, p, q, seed);
        let policy = Policy::default();
        let (o1, oinf) = oracle_gains(&sys).unwrap();
        let g1 = l1_gain(&sys, &policy).unwrap().gamma;
        let ginf = linf_gain(&sys, &policy).unwrap().gamma;
        prop_assert!(g1 >= o1 - 1e-9 && g1 <= o1 * (1.0 + 1e-4));
        prop_assert!(ginf >= oinf - 1e-9 && ginf <= oinf * (1.0 + 1e-4));
    }

    #[test]
    fn witnesses_are_strict(seed in any::<u64>(), n in 2usize..10) {
        let sys = autonomous(n, 2, 2, seed);
        let policy = Policy::default();
        for norm in [Norm::L1, Norm::Linf] {
            let r = posgain::gains::gain(&sys, norm, &policy).unwrap();
            prop_assert!(r.lambda.iter().all(|&l| l >= policy.lambda_floor * (1.0 - 1e-9)));
            prop_assert!(witness_margin(&sys, norm, &r.lambda, &r.gamma) <= -policy.epsilon / 2.0);
        }
    }

    #[test]
    fn transposition_swaps_the_norms(seed in any::<u64>(), n in 2usize..10, p in 1usize..4, q in 1usize..4) {
        let sys = autonomous(n, p, q, seed);
        let policy = Policy::default();
        let a = linf_gain(&sys, &policy).unwrap().gamma;
        let b = l1_gain(&transpose_system(&sys), &policy).unwrap().gamma;
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn system_documents_round_trip(seed in any::<u64>(), n in 1usize..6, m in 0usize..3) {
        let sys = random_positive_system(n, m, 2, 1, seed);
        let text = write_document(&SystemFile::from_system(&sys)).unwrap();
        let back: PositiveLtiSystem<f64> = parse_system_file(&text).unwrap().system().unwrap();
        prop_assert_eq!(back.a, sys.a);
        prop_assert_eq!(back.b, sys.b);
        prop_assert_eq!(back.f, sys.f);
    }

    #[test]
    fn closed_lft_matches_direct_evaluation(seed in any::<u64>(), np in 1usize..3, t in 0.0f64..1.0) {
        let ps = random_affine(seed, np);
        let lft = lft_from_polynomial(&ps, ps.degree()).unwrap();
        let delta = vec![t; np];
        let (a1, ainf) = oracle_gains(&lft.close_loop(&delta).unwrap()).unwrap();
        let (b1, binf) = oracle_gains(&ps.eval(&delta).unwrap()).unwrap();
        prop_assert!((a1 - b1).abs() <= 1e-9 * b1.max(1.0));
        prop_assert!((ainf - binf).abs() <= 1e-9 * binf.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn relaxed_solutions_survive_the_grid(seed in any::<u64>(), np in 1usize..3, constant in any::<bool>()) {
        let ps = random_affine(seed, np);
        let policy = Policy::default();
        let template = if constant {
            ScalingTemplate::FreeConstant
        } else {
            ScalingTemplate::FreePolynomial { degree: 1, saturate: true }
        };
        let lft = lft_from_polynomial(&ps, 1).unwrap();
        let rlp = robust_l1(&lft, &template, &policy).unwrap();
        let sol = solve_robust(&rlp, &RobustOptions::default()).unwrap();
        if sol.status == LpStatus::Optimal {
            let v = certify_robust_gain(&lft, &rlp, &sol, 11);
            prop_assert!(v.passed(), "{:?}", v);
        }
    }

    #[test]
    fn full_and_reduced_forms_agree(seed in any::<u64>(), np in 1usize..3, b in 1u32..4) {
        let ps = random_affine(seed, np);
        let policy = Policy::default();
        let template = ScalingTemplate::FreeConstant;
        let rlp = robust_linf(&transpose_lft(&ps, 1).unwrap(), &template, &policy).unwrap();
        let full = solve_robust(&rlp, &RobustOptions { handelman_degree: Some(b), form: RelaxationForm::Full }).unwrap();
        let red = solve_robust(&rlp, &RobustOptions { handelman_degree: Some(b), form: RelaxationForm::Reduced }).unwrap();
        prop_assert_eq!(full.status, red.status);
        if let (Some(a), Some(c)) = (full.gamma, red.gamma) {
            prop_assert!((a - c).abs() <= 1e-7 * a.max(1.0), "{} vs {}", a, c);
        }
    }

    #[test]
    fn raising_the_degree_never_loosens_the_bound(seed in any::<u64>()) {
        let ps = random_affine(seed, 1);
        let policy = Policy::default();
        let rlp = robust_l1(&lft_from_polynomial(&ps, 1).unwrap(), &ScalingTemplate::FreeConstant, &policy).unwrap();
        let mut previous = f64::INFINITY;
        for b in 1..=4 {
            let g = solve_robust(&rlp, &RobustOptions { handelman_degree: Some(b), ..Default::default() }).unwrap().gamma.unwrap_or(f64::INFINITY);
            prop_assert!(g <= previous + 1e-9);
            previous = g;
        }
    }
}

#[test]
fn scalar_types_agree() {
    let sys = autonomous(5, 2, 3, 99);
    let g64 = l1_gain(&sys, &Policy::default()).unwrap().gamma;
    let g32 = l1_gain(&sys.cast::<f32>(), &posgain::lp::StrictnessPolicy::<f32>::default()).unwrap().gamma;
    let exact = l1_gain(&sys.cast::<Rational>(), &posgain::ExactPolicy::default()).unwrap();
    assert!(((g32 as f64) - g64).abs() <= 1e-3 * g64);
    assert!((exact.gamma.as_f64() - g64).abs() <= 1e-9 * g64);
    assert!(exact.gamma >= exact.oracle.unwrap());
}
