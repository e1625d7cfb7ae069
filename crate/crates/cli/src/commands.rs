use std::fmt;
use std::fs;
use std::path::Path;

use posgain::gains::{self, Norm};
use posgain::handelman::RelaxationForm;
use posgain::ilc::ScalingTemplate;
use posgain::io::{self, Document, SystemFile};
use posgain::lft::{lft_from_polynomial, transpose_lft, LftSystem, PolySystem};
use posgain::lp::{LinearProgram, StrictnessPolicy};
use posgain::report::{LpSize, Report, Status};
use posgain::robust::{
    self, certify_robust_controller, certify_robust_gain, check_gain_on_grid, AffineFamily, GridVerdict, RobustOptions,
    CONSERVATISM_NOTE,
};
use posgain::synthesis::{self, ControllerSpec};
use posgain::system::{self, PositiveLtiSystem};
use posgain::Error;

use crate::args::{Cli, Command, FormArg, GlobalOpts, NormArg, RelaxOpts};
use crate::reproduce;

/// Failures that never produced a report.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                Error::Parse(_)
                | Error::Dimension(_)
                | Error::Io(_)
                | Error::Domain(_)
                | Error::Unsupported(_)
                | Error::Model(_)
                | Error::Degree { .. }
                | Error::Combinatorial { .. } => 2,
                _ => 1,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(s) => write!(f, "{s}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn run(cli: &Cli) -> CliResult<Report> {
    let g = &cli.global;
    let policy = StrictnessPolicy::new(g.epsilon, g.lambda_floor)?;
    match &cli.command {
        Command::Check { file, tol } => check(file, *tol, &policy),
        Command::Gain { file, norm } => gain(file, norm_of(*norm), g, &policy),
        Command::Synth { file, norm, zeros, bounds } => synth(file, *norm, zeros.as_deref(), bounds.as_deref(), g, &policy),
        Command::RobustGain { file, norm, relax, vertices } => {
            if *vertices {
                robust_gain_vertices(file, norm_of(*norm), g, &policy)
            } else {
                robust_gain(file, norm_of(*norm), relax, g, &policy)
            }
        }
        Command::RobustSynth { file, relax, zeros, bounds } => robust_synth(file, relax, zeros.as_deref(), bounds.as_deref(), g, &policy),
        Command::Reproduce { experiment, count, relax } => reproduce::run(*experiment, *count, relax, g, &policy),
    }
}

pub fn norm_of(n: NormArg) -> Norm {
    match n {
        NormArg::L1 => Norm::L1,
        NormArg::Linf => Norm::Linf,
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn dump(g: &GlobalOpts, lp: &LinearProgram<f64>) -> CliResult<()> {
    if let Some(path) = &g.dump_lp {
        fs::write(path, lp.dump()).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

/// Parses `const`, `poly:<d>`, `saturated` or `saturated:<d>`.
pub fn parse_scaling(s: &str) -> CliResult<ScalingTemplate<f64>> {
    let bad = || CliError::Usage(format!("unknown scaling {s:?}; expected const, poly:<d>, saturated or saturated:<d>"));
    let (head, tail) = match s.split_once(':') {
        Some((h, t)) => (h, Some(t)),
        None => (s, None),
    };
    let degree = match tail {
        Some(t) => Some(t.parse::<u32>().map_err(|_| bad())?),
        None => None,
    };
    match head {
        "const" if degree.is_none() => Ok(ScalingTemplate::FreeConstant),
        "poly" => Ok(ScalingTemplate::FreePolynomial { degree: degree.ok_or_else(bad)?, saturate: false }),
        "saturated" => Ok(ScalingTemplate::FreePolynomial { degree: degree.unwrap_or(2), saturate: true }),
        _ => Err(bad()),
    }
}

pub fn robust_options(relax: &RelaxOpts) -> RobustOptions {
    RobustOptions {
        handelman_degree: relax.degree,
        form: match relax.form {
            FormArg::Full => RelaxationForm::Full,
            FormArg::Reduced => RelaxationForm::Reduced,
        },
    }
}

fn load_system(path: &Path) -> CliResult<(SystemFile, PositiveLtiSystem<f64>)> {
    let file = io::parse_system_file(&read(path)?)?;
    let sys = file.system()?;
    Ok((file, sys))
}

fn check(path: &Path, tol: f64, policy: &StrictnessPolicy<f64>) -> CliResult<Report> {
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(CliError::Usage("--tol must be a nonnegative number".into()));
    }
    let (_, sys) = load_system(path)?;
    let positivity = sys.classify_with(&tol);
    let mut report = Report::new("check", Status::Positive, policy);
    report.detail("positive", positivity.is_positive);
    report.detail("violations", &positivity.violations);
    if !positivity.is_positive {
        report.status = Status::NotPositive;
        report.messages.push(positivity.first_violation());
        return Ok(report);
    }
    let stable = system::is_hurwitz_metzler(&sys.a, policy)?;
    report.detail("stable", stable);
    if !stable {
        report.status = Status::Unstable;
        return Ok(report);
    }
    report.status = Status::Stable;
    let (l1, linf) = system::oracle_gains(&sys)?;
    report.detail("l1_gain", l1);
    report.detail("linf_gain", linf);
    Ok(report)
}

fn gain(path: &Path, norm: Norm, g: &GlobalOpts, policy: &StrictnessPolicy<f64>) -> CliResult<Report> {
    let (_, sys) = load_system(path)?;
    let command = format!("gain {}", norm_label(norm));
    match gains::gain(&sys, norm, policy) {
        Ok(res) => {
            dump(g, &gains::gain_lp(&sys, norm, policy))?;
            let mut report = Report::new(command, Status::Optimal, policy);
            report.gamma = Some(res.gamma);
            report.oracle = res.oracle;
            report.witness_lambda = res.lambda.clone();
            report.lp = Some(LpSize { vars: res.lp_vars, rows: res.lp_rows });
            report.detail("witness_margin", gains::witness_margin(&sys, norm, &res.lambda, &res.gamma));
            report.detail("iterations", res.iterations);
            Ok(report)
        }
        Err(e) => failure_report(command, e, policy),
    }
}

/// Turns verdict-type errors into a failing report and passes the rest on.
fn failure_report(command: String, e: Error, policy: &StrictnessPolicy<f64>) -> CliResult<Report> {
    let status = match &e {
        Error::NotPositive(_) => Status::NotPositive,
        Error::Unstable | Error::NotMetzler => Status::Unstable,
        Error::Infeasible(_) => Status::Infeasible,
        _ => return Err(e.into()),
    };
    let mut report = Report::new(command, status, policy);
    report.messages.push(e.to_string());
    Ok(report)
}

fn norm_label(norm: Norm) -> &'static str {
    match norm {
        Norm::L1 => "l1",
        Norm::Linf => "linf",
    }
}

/// Merges the optional `--zeros` and `--bounds` documents into the system
/// file before reading the controller set from it.
fn controller_spec(file: &mut SystemFile, zeros: Option<&Path>, bounds: Option<&Path>) -> CliResult<ControllerSpec<f64>> {
    #[derive(serde::Deserialize)]
    struct Zeros {
        zero_pattern: Vec<(usize, usize)>,
    }
    #[derive(serde::Deserialize)]
    struct Bounds {
        #[serde(rename = "K_lower")]
        lower: Vec<Vec<f64>>,
        #[serde(rename = "K_upper")]
        upper: Vec<Vec<f64>>,
    }
    if let Some(p) = zeros {
        let z: Zeros = serde_json::from_str(&read(p)?).map_err(|e| CliError::Core(Error::Parse(e.to_string())))?;
        file.zero_pattern = Some(z.zero_pattern);
    }
    if let Some(p) = bounds {
        let b: Bounds = serde_json::from_str(&read(p)?).map_err(|e| CliError::Core(Error::Parse(e.to_string())))?;
        file.k_lower = Some(b.lower);
        file.k_upper = Some(b.upper);
    }
    Ok(file.controller_spec()?)
}

fn synth(
    path: &Path,
    norm: NormArg,
    zeros: Option<&Path>,
    bounds: Option<&Path>,
    g: &GlobalOpts,
    policy: &StrictnessPolicy<f64>,
) -> CliResult<Report> {
    if norm != NormArg::Linf {
        return Err(CliError::Usage("synthesis is available for the linf norm only".into()));
    }
    let (mut file, sys) = load_system(path)?;
    let spec = controller_spec(&mut file, zeros, bounds)?;
    let command = "synth linf".to_string();
    let res = match synthesis::stabilize_linf(&sys, &spec, policy) {
        Ok(r) => r,
        Err(e) => return failure_report(command, e, policy),
    };
    dump(g, &synthesis::synthesis_lp(&sys, &spec, policy)?)?;
    let cert = synthesis::certify_controller(&sys, &res.k, res.gamma)?;
    let mut report = Report::new(command, Status::Optimal, policy);
    report.gamma = Some(res.gamma);
    report.oracle = cert.closed_loop_gain;
    report.witness_lambda = res.lambda.clone();
    report.lp = Some(LpSize { vars: res.lp_vars, rows: res.lp_rows });
    report.detail("K", res.k.to_rows());
    report.detail("closed_loop_metzler", cert.metzler);
    report.detail("closed_loop_output_nonnegative", cert.nonnegative_output);
    report.detail("closed_loop_stable", cert.stable);
    report.detail("closed_loop_within_bound", cert.within_bound);
    if !cert.passed() {
        report.status = Status::Mismatch;
        report.messages.push("the recovered controller failed the independent closed-loop check".into());
    }
    Ok(report)
}

enum RobustModel {
    Poly(PolySystem<f64>),
    Lft(LftSystem<f64>),
}

fn load_robust_model(path: &Path) -> CliResult<RobustModel> {
    match io::parse_document(&read(path)?)? {
        Document::Poly(f) => Ok(RobustModel::Poly(f.poly_system()?)),
        Document::Lft(f) => Ok(RobustModel::Lft(f.lft()?)),
        Document::System(_) => Err(CliError::Usage("expected a polynomial system or LFT document, found a plain system".into())),
    }
}

fn robust_gain(path: &Path, norm: Norm, relax: &RelaxOpts, g: &GlobalOpts, policy: &StrictnessPolicy<f64>) -> CliResult<Report> {
    let template = parse_scaling(&relax.scaling)?;
    let options = robust_options(relax);
    let model = load_robust_model(path)?;
    let (lft, rlp) = match (model, norm) {
        (RobustModel::Poly(ps), Norm::L1) => {
            let lft = lft_from_polynomial(&ps, ps.degree())?;
            let rlp = robust::robust_l1(&lft, &template, policy)?;
            (lft, rlp)
        }
        (RobustModel::Poly(ps), Norm::Linf) => {
            let tl = transpose_lft(&ps, ps.degree())?;
            let rlp = robust::robust_linf(&tl, &template, policy)?;
            (tl.0, rlp)
        }
        (RobustModel::Lft(lft), Norm::L1) => {
            let rlp = robust::robust_l1(&lft, &template, policy)?;
            (lft, rlp)
        }
        (RobustModel::Lft(_), Norm::Linf) => {
            return Err(CliError::Core(Error::Unsupported(
                "linf robust analysis needs a polynomial system document; an LFT document only supports l1".into(),
            )))
        }
    };
    let command = format!("robust-gain {}", norm_label(norm));
    let sol = robust::solve_robust(&rlp, &options)?;
    dump(g, &robust::relaxed_lp(&rlp, &options)?)?;
    let mut report = Report::new(command, Status::Optimal, policy);
    report.conservatism = Some(CONSERVATISM_NOTE.into());
    report.lp = Some(LpSize { vars: sol.lp_vars, rows: sol.lp_rows });
    report.detail("scaling", template.name());
    report.detail("handelman_degree", sol.handelman_degree);
    report.detail("form", format!("{:?}", sol.form).to_lowercase());
    let Some(gamma) = sol.gamma else {
        report.status = Status::Infeasible;
        report.messages.push(
            "the relaxation is infeasible; this does not show the family is unstable. Try a richer --scaling or a higher --degree".into(),
        );
        return Ok(report);
    };
    report.gamma = Some(gamma);
    report.witness_lambda = sol.lambda.clone();
    if let Some(cert) = &sol.certificate {
        report.detail("handelman_products", cert.products.clone());
        report.detail("upsilon_shape", cert.upsilon_shape);
        report.detail("max_multiplier", cert.max_multiplier());
    }
    if g.grid > 0 {
        report = report.with_grid(certify_robust_gain(&lft, &rlp, &sol, g.grid));
    }
    Ok(report)
}

fn robust_gain_vertices(path: &Path, norm: Norm, g: &GlobalOpts, policy: &StrictnessPolicy<f64>) -> CliResult<Report> {
    let ps = match load_robust_model(path)? {
        RobustModel::Poly(ps) => ps,
        RobustModel::Lft(_) => return Err(CliError::Usage("--vertices needs an affine polynomial system document".into())),
    };
    let fam = AffineFamily::from_poly_system(&ps)?;
    let command = format!("robust-gain {} (vertices)", norm_label(norm));
    let res = match robust::vertex_gain(&fam, norm, policy) {
        Ok(r) => r,
        Err(e) => return failure_report(command, e, policy),
    };
    dump(g, &robust::vertex_lp(&fam, norm, policy)?.0)?;
    let mut report = Report::new(command, Status::Optimal, policy);
    report.gamma = Some(res.gamma);
    report.oracle = Some(res.vertex_oracle_max);
    report.witness_lambda = res.lambda.clone();
    report.lp = Some(LpSize { vars: res.lp_vars, rows: res.lp_rows });
    report.detail("vertices", res.vertices);
    if g.grid > 0 {
        let (ok, worst, failure) = check_gain_on_grid(&fam.domain(), g.grid, res.gamma, |pt| fam.at(pt), norm);
        report = report.with_grid(GridVerdict { points: g.grid, rows_hold: true, gain_bound_holds: ok, worst_gain: worst, failure });
    }
    Ok(report)
}

fn robust_synth(
    path: &Path,
    relax: &RelaxOpts,
    zeros: Option<&Path>,
    bounds: Option<&Path>,
    g: &GlobalOpts,
    policy: &StrictnessPolicy<f64>,
) -> CliResult<Report> {
    let template = parse_scaling(&relax.scaling)?;
    let options = robust_options(relax);
    let ps = match load_robust_model(path)? {
        RobustModel::Poly(ps) => ps,
        RobustModel::Lft(_) => return Err(CliError::Usage("robust-synth needs a polynomial system document".into())),
    };
    let mut file = SystemFile::from_system(&ps.eval(&ps.domain.lower)?);
    let spec = controller_spec(&mut file, zeros, bounds)?;
    let command = "robust-synth linf".to_string();
    let res = match robust::robust_synthesize(&ps, &template, &spec, policy, &options) {
        Ok(r) => r,
        Err(e) => return failure_report(command, e, policy),
    };
    let rlp = robust::robust_stabilize(&ps, &template, &spec, policy)?;
    dump(g, &robust::relaxed_lp(&rlp, &options)?)?;
    let mut report = Report::new(command, Status::Optimal, policy);
    report.conservatism = Some(CONSERVATISM_NOTE.into());
    report.gamma = Some(res.gamma);
    report.witness_lambda = res.lambda.clone();
    report.lp = Some(LpSize { vars: res.solution.lp_vars, rows: res.solution.lp_rows });
    report.detail("K", res.k.to_rows());
    report.detail("scaling", template.name());
    report.detail("handelman_degree", res.solution.handelman_degree);
    if g.grid > 0 {
        report = report.with_grid(certify_robust_controller(&ps, &res.k, res.gamma, g.grid));
    }
    Ok(report)
}

