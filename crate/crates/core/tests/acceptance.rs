//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use posgain::data;
use posgain::gains::{l1_gain, l1_lp, linf_gain, linf_lp, Norm};
use posgain::handelman::{build_upsilon, enumerate_products, product_label, HandelmanBasis, RelaxationForm};
use posgain::ilc::ScalingTemplate;
use posgain::lft::{lft_from_polynomial, transpose_lft, PolySystem};
use posgain::lp::StrictnessPolicy;
use posgain::numlin::Mat;
use posgain::poly::{BoxDomain, Polynomial};
use posgain::robust::{
    certify_robust_controller, exact_constant_delta, grid_sweep_gain, relaxed_lp, robust_l1, robust_linf, robust_stabilize,
    robust_synthesize, solve_robust, vertex_gain, RobustLinearProgram, RobustOptions,
};
use posgain::synthesis::{certify_controller, random_synthesizable, stabilize_linf, synthesis_lp, ControllerSpec};
use posgain::system::{is_hurwitz_metzler, oracle_gains, random_positive_system, transpose_system, PositiveLtiSystem};
use posgain::{Policy, Rational, Scalar};

struct Outcome {
    pass: bool,
    summary: String,
}

fn outcome(pass: bool, summary: String) -> Outcome {
    Outcome { pass, summary }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn random_shapes(count: usize) -> Vec<PositiveLtiSystem<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..count)
        .map(|i| {
            let n = rng.gen_range(2..=20);
            let p = rng.gen_range(1..=5);
            let q = rng.gen_range(1..=5);
            let sys = random_positive_system(n, 0, p, q, 1000 + i as u64);
            PositiveLtiSystem::autonomous(sys.a, sys.c, sys.e, sys.f).unwrap()
        })
        .collect()
}

fn oracle_equivalence(systems: &[PositiveLtiSystem<f64>]) -> Outcome {
    let policy = Policy::default();
    let mut worst = 0.0f64;
    let mut upward = true;
    for sys in systems {
        let (o1, oinf) = oracle_gains(sys).unwrap();
        let g1 = l1_gain(sys, &policy).unwrap().gamma;
        let ginf = linf_gain(sys, &policy).unwrap().gamma;
        upward &= g1 >= o1 * (1.0 - 1e-12) && ginf >= oinf * (1.0 - 1e-12);
        worst = worst.max(rel(g1, o1)).max(rel(ginf, oinf));
    }
    outcome(worst <= 1e-4 && upward, format!("{} systems, worst rel err {worst:.2e} (tol 1e-4), bias upward: {upward}", systems.len()))
}

fn duality(systems: &[PositiveLtiSystem<f64>]) -> Outcome {
    let policy = Policy::default();
    let worst = systems
        .iter()
        .map(|sys| {
            let a = linf_gain(sys, &policy).unwrap().gamma;
            let b = l1_gain(&transpose_system(sys), &policy).unwrap().gamma;
            rel(a, b)
        })
        .fold(0.0, f64::max);
    outcome(worst <= 1e-9, format!("{} systems, worst rel gap {worst:.2e} (tol 1e-9)", systems.len()))
}

fn drug_table(policy: &Policy) -> f64 {
    let mut worst = 0.0f64;
    for ([a11, a12, a21], [k1, k2]) in data::random_drug_parameters(50, 7) {
        let x1 = 1.0 / a11;
        let x2 = a21 / (a11 * a12);
        let (d1, dinf) = data::drug_gains_diag(a11, a12, a21, k1, k2);
        for (c, r1, rinf) in [
            (Mat::from_f64(&[&[1.0, 0.0]]), x1, x1),
            (Mat::from_f64(&[&[0.0, 1.0]]), x2, x2),
            (Mat::diag(&[k1, k2]), d1, dinf),
        ] {
            let sys = data::drug_model(a11, a12, a21, c);
            worst = worst.max(rel(l1_gain(&sys, policy).unwrap().gamma, r1));
            worst = worst.max(rel(linf_gain(&sys, policy).unwrap().gamma, rinf));
        }
    }
    worst
}

fn drug_model() -> Outcome {
    let tight = StrictnessPolicy::new(1e-9, 1e-6).unwrap();
    let worst = drug_table(&tight);
    let at_default = drug_table(&Policy::default());
    outcome(
        worst <= 1e-6,
        format!("50 instances x 3 outputs, worst rel err {worst:.2e} at epsilon 1e-9 (tol 1e-6); {at_default:.2e} at the default epsilon 1e-7"),
    )
}

fn gene_table() -> Outcome {
    let policy = Policy::default();
    let mut worst = 0.0f64;
    for (level, reference, _) in data::GENE_TABLE {
        let g = vertex_gain(&data::gene_expression(level), Norm::L1, &policy).unwrap().gamma;
        worst = worst.max(rel(g, reference));
    }
    outcome(worst <= 1e-3, format!("5 levels, worst rel err {worst:.2e} (tol 1e-3)"))
}

fn robust_gamma(ps: &PolySystem<f64>, norm: Norm, template: &ScalingTemplate<f64>, options: &RobustOptions) -> f64 {
    let policy = Policy::default();
    let rlp = robust_program(ps, norm, template, &policy);
    solve_robust(&rlp, options).unwrap().gamma.unwrap_or(f64::NAN)
}

fn robust_program(ps: &PolySystem<f64>, norm: Norm, template: &ScalingTemplate<f64>, policy: &Policy) -> RobustLinearProgram<f64> {
    match norm {
        Norm::L1 => robust_l1(&lft_from_polynomial(ps, ps.degree()).unwrap(), template, policy).unwrap(),
        Norm::Linf => robust_linf(&transpose_lft(ps, ps.degree()).unwrap(), template, policy).unwrap(),
    }
}

fn saturated() -> ScalingTemplate<f64> {
    ScalingTemplate::FreePolynomial { degree: 2, saturate: true }
}

fn quadratic_tables() -> Outcome {
    let ps = data::quadratic_system();
    let options = RobustOptions { handelman_degree: Some(2), form: RelaxationForm::Full };
    let mut parts = Vec::new();
    let mut pass = true;
    for (norm, reference, exact_ref) in [(Norm::L1, data::QUADRATIC_L1, data::QUADRATIC_WORST.0), (Norm::Linf, data::QUADRATIC_LINF, data::QUADRATIC_WORST.1)] {
        let c = robust_gamma(&ps, norm, &ScalingTemplate::FreeConstant, &options);
        let s = robust_gamma(&ps, norm, &saturated(), &options);
        let exact = grid_sweep_gain(&ps.domain, 1001, |d| ps.eval(d), norm).unwrap();
        pass &= rel(c, reference.0) <= 5e-3 && rel(s, reference.1) <= 5e-3 && (exact - exact_ref).abs() <= 1e-3;
        parts.push(format!("{norm:?}: const {c:.3}, saturated {s:.3}, sweep {exact:.4}"));
    }
    let b4 = robust_gamma(&ps, Norm::L1, &saturated(), &RobustOptions::default());
    outcome(pass, format!("{} (b = 2; L1 saturated at the default b = 4 gives {b4:.3})", parts.join("; ")))
}

fn delay_exactness() -> Outcome {
    let policy = Policy::default();
    let mut agree = 0;
    let mut gamma_worst = 0.0f64;
    for i in 0..100u64 {
        let n = 2 + (i as usize % 5);
        let stable = i % 2 == 0;
        let (a, ah) = data::random_delay_pair(n, 500 + i, stable);
        let c = Mat::from_fn(1, n, |_, j| 1.0 + j as f64);
        let e = Mat::from_fn(n, 1, |_, _| 1.0);
        let f = Mat::zeros(1, 1);
        let lft = data::delay_lft(&a, &ah, &c, &e, &f);
        let out = exact_constant_delta(&lft, &Mat::identity(n), &policy).unwrap();
        let sum = a.add(&ah).unwrap();
        let reference = is_hurwitz_metzler(&sum, &policy).unwrap();
        if out.feasible == reference {
            agree += 1;
        }
        if let (true, Some(g)) = (reference, out.gamma) {
            let o = oracle_gains(&PositiveLtiSystem::autonomous(sum, c, e, f).unwrap()).unwrap().0;
            gamma_worst = gamma_worst.max(rel(g, o));
        }
    }
    outcome(agree == 100, format!("{agree}/100 verdicts agree; stable cases gain vs A + A_h oracle worst rel err {gamma_worst:.2e}"))
}

fn synthesis_certification() -> Outcome {
    let policy = Policy::default();
    let mut failures = Vec::new();
    for i in 0..50u64 {
        let n = 2 + (i as usize % 6);
        let m = 1 + (i as usize % 3);
        let inst = random_synthesizable(n, m, 2, 2, 3000 + i);
        let sys = &inst.system;
        let structured = ControllerSpec::Structured(inst.zero_pattern.clone());
        let r = stabilize_linf(sys, &structured, &policy).unwrap();
        if !certify_controller(sys, &r.k, r.gamma).unwrap().passed() {
            failures.push(format!("{i}: structured certificate"));
        }
        if inst.zero_pattern.iter().any(|&(a, b)| r.k[(a, b)] != 0.0) {
            failures.push(format!("{i}: structural zero not exact"));
        }
        let lower = inst.hidden_gain.map(|v| v - 0.5);
        let upper = inst.hidden_gain.map(|v| v + 0.5);
        let bounded = ControllerSpec::Bounded { lower: lower.clone(), upper: upper.clone() };
        let r = stabilize_linf(sys, &bounded, &policy).unwrap();
        if !certify_controller(sys, &r.k, r.gamma).unwrap().passed() {
            failures.push(format!("{i}: bounded certificate"));
        }
        let slack = (0..m * n)
            .map(|j| (lower.data()[j] - r.k.data()[j]).max(r.k.data()[j] - upper.data()[j]))
            .fold(f64::NEG_INFINITY, f64::max);
        if slack > 1e-9 {
            failures.push(format!("{i}: bound exceeded by {slack:e}"));
        }
    }
    outcome(failures.is_empty(), format!("50 instances, structured and bounded; failures: {failures:?}"))
}

fn handelman_regression() -> Outcome {
    let dom = BoxDomain::new(vec![Rational::from_int(-1)], vec![Rational::from_int(1)]).unwrap();
    let basis = HandelmanBasis::new(&dom, 2);
    let products = enumerate_products(&basis).unwrap();
    let ups = build_upsilon(&basis, &products);
    let col = |l: &str| products.iter().position(|p| product_label(p) == l).unwrap();
    let exact = [2usize, 1, 0].into_iter().zip(data::INTERVAL_PRODUCT_MAP).all(|(power, (_, expected))| {
        data::INTERVAL_PRODUCT_ORDER
            .iter()
            .zip(expected)
            .all(|(l, v)| ups[(power, col(l))] == Rational::from_int(v))
    });

    let ps = data::quadratic_system();
    let mut form_gap = 0.0f64;
    let mut verdicts_agree = true;
    let mut monotone = true;
    let mut battery = 0;
    for norm in [Norm::L1, Norm::Linf] {
        for template in [ScalingTemplate::FreeConstant, saturated()] {
            let mut previous = f64::INFINITY;
            for b in 2..=4 {
                let full = robust_gamma(&ps, norm, &template, &RobustOptions { handelman_degree: Some(b), form: RelaxationForm::Full });
                let red = robust_gamma(&ps, norm, &template, &RobustOptions { handelman_degree: Some(b), form: RelaxationForm::Reduced });
                form_gap = form_gap.max(rel(red, full));
                monotone &= full <= previous + 1e-9;
                previous = full;
                battery += 1;
            }
        }
    }
    let policy = Policy::default();
    for ps in [data::scalar_robust_synthesis(), data::toy_robust_synthesis()] {
        for template in [ScalingTemplate::FreeConstant, saturated()] {
            let rlp = robust_stabilize(&ps, &template, &ControllerSpec::Full, &policy).unwrap();
            let full = solve_robust(&rlp, &RobustOptions { handelman_degree: None, form: RelaxationForm::Full }).unwrap();
            let red = solve_robust(&rlp, &RobustOptions { handelman_degree: None, form: RelaxationForm::Reduced }).unwrap();
            verdicts_agree &= full.status == red.status;
            if let (Some(a), Some(b)) = (full.gamma, red.gamma) {
                form_gap = form_gap.max(rel(b, a));
            }
            battery += 1;
        }
    }
    outcome(
        exact && form_gap <= 1e-7 && verdicts_agree && monotone,
        format!("upsilon exact: {exact}; {battery} programs, full vs reduced worst rel gap {form_gap:.2e} (tol 1e-7), verdicts agree: {verdicts_agree}; nonincreasing in b: {monotone}"),
    )
}

fn constant_poly_system(sys: &PositiveLtiSystem<f64>) -> PolySystem<f64> {
    let c = |m: &Mat<f64>| Polynomial::constant(1, m.clone());
    PolySystem::new(c(&sys.a), c(&sys.b), c(&sys.c), c(&sys.d), c(&sys.e), c(&sys.f)).unwrap()
}

fn reduction_consistency() -> Outcome {
    let policy = Policy::default();
    let mut mismatches = 0;
    let mut compared = 0;
    for seed in 0..10u64 {
        let sys = random_positive_system(2 + seed as usize % 5, 1 + seed as usize % 2, 2, 2, 40 + seed);
        let ps = constant_poly_system(&sys);
        let autonomous = PositiveLtiSystem::autonomous(sys.a.clone(), sys.c.clone(), sys.e.clone(), sys.f.clone()).unwrap();
        for template in [ScalingTemplate::FreeConstant, saturated()] {
            for options in [RobustOptions::default(), RobustOptions { handelman_degree: Some(3), form: RelaxationForm::Reduced }] {
                let pairs = [
                    (robust_l1(&lft_from_polynomial(&ps, 0).unwrap(), &template, &policy).unwrap(), l1_lp(&autonomous, &policy)),
                    (robust_linf(&transpose_lft(&ps, 0).unwrap(), &template, &policy).unwrap(), linf_lp(&autonomous, &policy)),
                    (
                        robust_stabilize(&ps, &template, &ControllerSpec::Full, &policy).unwrap(),
                        synthesis_lp(&sys, &ControllerSpec::Full, &policy).unwrap(),
                    ),
                ];
                for (rlp, nominal) in pairs {
                    compared += 2;
                    if rlp.finite_lp().unwrap().structural_hash() != nominal.structural_hash() {
                        mismatches += 1;
                    }
                    if relaxed_lp(&rlp, &options).unwrap().structural_hash() != nominal.structural_hash() {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    outcome(mismatches == 0, format!("{compared} robust/nominal LP pairs, {mismatches} hash mismatches"))
}

fn robust_synthesis() -> Outcome {
    let policy = Policy::default();
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, ps) in [("scalar", data::scalar_robust_synthesis()), ("2x2", data::toy_robust_synthesis())] {
        let r = robust_synthesize(&ps, &ScalingTemplate::FreeConstant, &ControllerSpec::Full, &policy, &RobustOptions::default()).unwrap();
        let verdict = certify_robust_controller(&ps, &r.k, r.gamma, 101);
        pass &= verdict.passed();
        parts.push(format!("{name}: gamma {:.6}, grid worst {:.6}, {}", r.gamma, verdict.worst_gain.unwrap_or(f64::NAN), verdict.label()));
    }
    outcome(pass, parts.join("; "))
}

fn main() -> ExitCode {
    let systems = random_shapes(200);
    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let criteria: Vec<(&str, Check)> = vec![
        ("oracle equivalence", Box::new(|| oracle_equivalence(&systems))),
        ("transposition duality", Box::new(|| duality(&systems))),
        ("drug model table", Box::new(drug_model)),
        ("gene expression table", Box::new(gene_table)),
        ("quadratic system tables", Box::new(quadratic_tables)),
        ("time-delay exactness", Box::new(delay_exactness)),
        ("synthesis certification", Box::new(synthesis_certification)),
        ("Handelman regression", Box::new(handelman_regression)),
        ("reduction consistency", Box::new(reduction_consistency)),
        ("robust synthesis", Box::new(robust_synthesis)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {} [{:.2}s]", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.summary, t.elapsed().as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
