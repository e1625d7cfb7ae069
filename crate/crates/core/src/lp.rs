//! Linear-program model, strict-inequality closing, and the text interchange
//! format used by `--dump-lp`.
//!
//! Every program is `min cᵀx` subject to rows `aᵀx ≤ b` or `aᵀx = b` and
//! optional per-variable bounds. Strict rows (`<`, `>`) never reach the
//! solver; [`strictify`] closes them with the margins of a
//! [`StrictnessPolicy`].

use std::collections::hash_map::DefaultHasher;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
pub use crate::simplex::{solve_lp, solve_lp_with, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<T> {
    pub coeffs: Vec<T>,
    pub relation: Relation,
    pub rhs: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram<T> {
    pub num_vars: usize,
    /// Minimised.
    pub objective: Vec<T>,
    pub rows: Vec<Constraint<T>>,
    pub var_lower: Vec<Option<T>>,
    pub var_upper: Vec<Option<T>>,
    pub names: Vec<String>,
}

impl<T: Scalar> Default for LinearProgram<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new() -> Self {
        LinearProgram {
            num_vars: 0,
            objective: Vec::new(),
            rows: Vec::new(),
            var_lower: Vec::new(),
            var_upper: Vec::new(),
            names: Vec::new(),
        }
    }

    /// Declares a variable and returns its index. Rows that already exist get
    /// a zero coefficient for it.
    pub fn add_var(&mut self, name: impl Into<String>, lower: Option<T>, upper: Option<T>) -> usize {
        self.num_vars += 1;
        self.objective.push(T::zero());
        self.var_lower.push(lower);
        self.var_upper.push(upper);
        self.names.push(name.into());
        for row in &mut self.rows {
            row.coeffs.push(T::zero());
        }
        self.num_vars - 1
    }

    pub fn set_objective(&mut self, var: usize, coeff: T) {
        self.objective[var] = coeff;
    }

    pub fn add_row(&mut self, coeffs: Vec<T>, relation: Relation, rhs: T) -> Result<usize> {
        if coeffs.len() != self.num_vars {
            return Err(Error::InvalidLp(format!(
                "row has {} coefficients for {} variables",
                coeffs.len(),
                self.num_vars
            )));
        }
        self.rows.push(Constraint { coeffs, relation, rhs });
        Ok(self.rows.len() - 1)
    }

    pub fn add_sparse_row(&mut self, terms: &[(usize, T)], relation: Relation, rhs: T) -> Result<usize> {
        let mut coeffs = vec![T::zero(); self.num_vars];
        for (j, v) in terms {
            if *j >= self.num_vars {
                return Err(Error::InvalidLp(format!("variable index {j} out of range")));
            }
            coeffs[*j] = coeffs[*j].clone() + v.clone();
        }
        self.add_row(coeffs, relation, rhs)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars;
        if self.objective.len() != n
            || self.var_lower.len() != n
            || self.var_upper.len() != n
            || self.names.len() != n
        {
            return Err(Error::InvalidLp("per-variable arrays disagree with num_vars".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(Error::InvalidLp(format!("row {i} has {} coefficients", row.coeffs.len())));
            }
            if !row.rhs.is_finite_value() || row.coeffs.iter().any(|c| !c.is_finite_value()) {
                return Err(Error::InvalidLp(format!("row {i} has a non-finite entry")));
            }
        }
        for j in 0..n {
            if let (Some(l), Some(u)) = (&self.var_lower[j], &self.var_upper[j]) {
                if l > u {
                    return Err(Error::InvalidLp(format!("variable {} has lower bound above upper", self.names[j])));
                }
            }
        }
        Ok(())
    }

    /// Line-oriented text form: objective first, then one bound line per
    /// variable, then one line per constraint.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "lp {} {}", self.num_vars, self.rows.len());
        let _ = writeln!(out, "min {}", join(&self.objective));
        for j in 0..self.num_vars {
            let lo = self.var_lower[j].as_ref().map_or("-inf".to_string(), fmt_num);
            let hi = self.var_upper[j].as_ref().map_or("inf".to_string(), fmt_num);
            let _ = writeln!(out, "var {} {} {}", self.names[j], lo, hi);
        }
        for row in &self.rows {
            let rel = match row.relation {
                Relation::Le => "le",
                Relation::Eq => "eq",
            };
            let _ = writeln!(out, "{} {} : {}", rel, fmt_num(&row.rhs), join(&row.coeffs));
        }
        out
    }

    /// Hash of the dump text; two programs hash equal iff their dumps are
    /// byte-identical (up to hash collisions).
    pub fn structural_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.dump().hash(&mut h);
        h.finish()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Largest violation of rows and bounds at `x` (zero when feasible).
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for row in &self.rows {
            let lhs = crate::numlin::dot(&row.coeffs, x);
            let v = match row.relation {
                Relation::Le => lhs - row.rhs.clone(),
                Relation::Eq => (lhs - row.rhs.clone()).abs(),
            };
            worst = T::max_of(worst, v);
        }
        for j in 0..self.num_vars {
            if let Some(l) = &self.var_lower[j] {
                worst = T::max_of(worst, l.clone() - x[j].clone());
            }
            if let Some(u) = &self.var_upper[j] {
                worst = T::max_of(worst, x[j].clone() - u.clone());
            }
        }
        worst
    }
}

impl<T: Scalar + FromStr> LinearProgram<T> {
    /// Parses the output of [`LinearProgram::dump`].
    pub fn parse_dump(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Parse(format!("lp dump: {msg}"));
        let num = |tok: &str| tok.parse::<T>().map_err(|_| Error::Parse(format!("lp dump: bad number {tok:?}")));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty"))?.split_whitespace().collect();
        if header.len() != 3 || header[0] != "lp" {
            return Err(bad("missing header"));
        }
        let n: usize = header[1].parse().map_err(|_| bad("bad variable count"))?;
        let m: usize = header[2].parse().map_err(|_| bad("bad row count"))?;
        let obj_line = lines.next().ok_or_else(|| bad("missing objective"))?;
        let obj_toks: Vec<&str> = obj_line.split_whitespace().collect();
        if obj_toks.first() != Some(&"min") || obj_toks.len() != n + 1 {
            return Err(bad("malformed objective"));
        }
        let mut lp = LinearProgram::new();
        let mut pending = Vec::with_capacity(n);
        for _ in 0..n {
            let toks: Vec<&str> = lines.next().ok_or_else(|| bad("missing var line"))?.split_whitespace().collect();
            if toks.len() != 4 || toks[0] != "var" {
                return Err(bad("malformed var line"));
            }
            let lo = if toks[2] == "-inf" { None } else { Some(num(toks[2])?) };
            let hi = if toks[3] == "inf" { None } else { Some(num(toks[3])?) };
            pending.push((toks[1].to_string(), lo, hi));
        }
        for (name, lo, hi) in pending {
            lp.add_var(name, lo, hi);
        }
        for (j, tok) in obj_toks[1..].iter().enumerate() {
            lp.objective[j] = num(tok)?;
        }
        for _ in 0..m {
            let line = lines.next().ok_or_else(|| bad("missing row"))?;
            let (head, body) = line.split_once(':').ok_or_else(|| bad("row without ':'"))?;
            let h: Vec<&str> = head.split_whitespace().collect();
            if h.len() != 2 {
                return Err(bad("malformed row head"));
            }
            let relation = match h[0] {
                "le" => Relation::Le,
                "eq" => Relation::Eq,
                _ => return Err(bad("unknown relation")),
            };
            let coeffs = body.split_whitespace().map(num).collect::<Result<Vec<T>>>()?;
            lp.add_row(coeffs, relation, num(h[1])?)?;
        }
        Ok(lp)
    }
}

// -0.0 and 0.0 print alike
fn fmt_num<T: Scalar>(x: &T) -> String {
    if x.is_zero() {
        "0".to_string()
    } else {
        x.to_string()
    }
}

fn join<T: Scalar>(v: &[T]) -> String {
    v.iter().map(fmt_num).collect::<Vec<_>>().join(" ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    pub x: Vec<T>,
    pub objective_value: T,
    pub iterations: usize,
    /// Row multipliers of the original rows (`≤ 0` for `≤` rows at a
    /// minimum). Empty unless optimal.
    pub duals: Vec<T>,
    /// `|primal − dual|` objective values, including bound rows.
    pub duality_gap: T,
    /// `max_i |y_i · slack_i|` over the original rows.
    pub complementarity: T,
    /// Farkas multipliers over the original rows when infeasible; a primal
    /// recession direction when unbounded.
    pub certificate: Option<Vec<T>>,
}

impl<T: Scalar> LpSolution<T> {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Margins used to close strict inequalities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrictnessPolicy<T> {
    /// `expr < c` becomes `expr ≤ c − epsilon`.
    pub epsilon: T,
    /// `λᵢ > 0` becomes `λᵢ ≥ lambda_floor`.
    pub lambda_floor: T,
}

impl<T: Scalar> Default for StrictnessPolicy<T> {
    fn default() -> Self {
        StrictnessPolicy { epsilon: T::ratio(1, 10_000_000), lambda_floor: T::ratio(1, 1_000_000) }
    }
}

impl<T: Scalar> StrictnessPolicy<T> {
    pub fn new(epsilon: T, lambda_floor: T) -> Result<Self> {
        if epsilon <= T::zero() || lambda_floor <= T::zero() {
            return Err(Error::Domain("epsilon and lambda_floor must be strictly positive".into()));
        }
        Ok(StrictnessPolicy { epsilon, lambda_floor })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpenRelation {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

/// A row that may carry a strict relation: `coeffs · x  (rel)  rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct OpenRow<T> {
    pub coeffs: Vec<T>,
    pub relation: OpenRelation,
    pub rhs: T,
}

impl<T: Scalar> OpenRow<T> {
    pub fn new(coeffs: Vec<T>, relation: OpenRelation, rhs: T) -> Self {
        OpenRow { coeffs, relation, rhs }
    }

    /// `x_var > 0` over `num_vars` variables.
    pub fn positive(var: usize, num_vars: usize) -> Self {
        let mut coeffs = vec![T::zero(); num_vars];
        coeffs[var] = T::one();
        OpenRow { coeffs, relation: OpenRelation::Gt, rhs: T::zero() }
    }

    fn single_positive_var(&self) -> Option<usize> {
        let mut found = None;
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if found.is_some() || !c.is_one() {
                return None;
            }
            found = Some(j);
        }
        found
    }
}

/// Closes strict rows: `expr < c` → `expr ≤ c − ε`, `xᵢ > 0` → `xᵢ ≥ floor`,
/// any other `expr > c` → `expr ≥ c + ε`. `≥` rows are flipped to `≤`.
pub fn strictify<T: Scalar>(rows: &[OpenRow<T>], policy: &StrictnessPolicy<T>) -> Vec<Constraint<T>> {
    rows.iter()
        .map(|row| {
            let neg = || row.coeffs.iter().map(|c| if c.is_zero() { T::zero() } else { -c.clone() }).collect::<Vec<T>>();
            match row.relation {
                OpenRelation::Lt => Constraint {
                    coeffs: row.coeffs.clone(),
                    relation: Relation::Le,
                    rhs: row.rhs.clone() - policy.epsilon.clone(),
                },
                OpenRelation::Le => Constraint { coeffs: row.coeffs.clone(), relation: Relation::Le, rhs: row.rhs.clone() },
                OpenRelation::Eq => Constraint { coeffs: row.coeffs.clone(), relation: Relation::Eq, rhs: row.rhs.clone() },
                OpenRelation::Ge => Constraint { coeffs: neg(), relation: Relation::Le, rhs: -row.rhs.clone() },
                OpenRelation::Gt => {
                    let margin = if row.rhs.is_zero() && row.single_positive_var().is_some() {
                        policy.lambda_floor.clone()
                    } else {
                        policy.epsilon.clone()
                    };
                    Constraint { coeffs: neg(), relation: Relation::Le, rhs: -(row.rhs.clone() + margin) }
                }
            }
        })
        .collect()
}
