//! JSON documents for systems, polynomial systems and user-supplied LFTs.
//!
//! Matrices are nested row arrays. Dimensions are stored explicitly so that
//! empty blocks (no inputs, no loop channels) round-trip. Files written by
//! this module read back to the same document, and writing it again gives
//! the same bytes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lft::{LftSystem, PolySystem};
use crate::numlin::Mat;
use crate::poly::{BoxDomain, Monomial, PolyMatrix, Polynomial};
use crate::scalar::Scalar;
use crate::synthesis::ControllerSpec;
use crate::system::PositiveLtiSystem;

pub type Rows = Vec<Vec<f64>>;

fn to_mat<T: Scalar>(name: &str, rows: &Rows, r: usize, c: usize) -> Result<Mat<T>> {
    if rows.is_empty() && (r == 0 || c == 0) {
        return Ok(Mat::zeros(r, c));
    }
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Dimension(format!("{name} must be {r}x{c}")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Parse(format!("{name} has a non-finite entry")));
    }
    Ok(Mat::from_fn(r, c, |i, j| T::lit(rows[i][j])))
}

fn to_rows<T: Scalar>(m: &Mat<T>) -> Rows {
    if m.cols() == 0 {
        return Vec::new();
    }
    (0..m.rows()).map(|i| m.row(i).iter().map(Scalar::as_f64).collect()).collect()
}

/// A plain system, optionally with a controller specification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub n: usize,
    #[serde(default)]
    pub m: usize,
    pub p: usize,
    pub q: usize,
    #[serde(rename = "A")]
    pub a: Rows,
    #[serde(rename = "B", default, skip_serializing_if = "Vec::is_empty")]
    pub b: Rows,
    #[serde(rename = "C")]
    pub c: Rows,
    #[serde(rename = "D", default, skip_serializing_if = "Vec::is_empty")]
    pub d: Rows,
    #[serde(rename = "E")]
    pub e: Rows,
    #[serde(rename = "F")]
    pub f: Rows,
    /// `(row, col)` entries of `K` forced to zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_pattern: Option<Vec<(usize, usize)>>,
    #[serde(rename = "K_lower", default, skip_serializing_if = "Option::is_none")]
    pub k_lower: Option<Rows>,
    #[serde(rename = "K_upper", default, skip_serializing_if = "Option::is_none")]
    pub k_upper: Option<Rows>,
}

impl SystemFile {
    pub fn from_system<T: Scalar>(sys: &PositiveLtiSystem<T>) -> Self {
        SystemFile {
            n: sys.n(),
            m: sys.m(),
            p: sys.p(),
            q: sys.q(),
            a: to_rows(&sys.a),
            b: to_rows(&sys.b),
            c: to_rows(&sys.c),
            d: to_rows(&sys.d),
            e: to_rows(&sys.e),
            f: to_rows(&sys.f),
            zero_pattern: None,
            k_lower: None,
            k_upper: None,
        }
    }

    pub fn system<T: Scalar>(&self) -> Result<PositiveLtiSystem<T>> {
        let (n, m, p, q) = (self.n, self.m, self.p, self.q);
        PositiveLtiSystem::new(
            to_mat("A", &self.a, n, n)?,
            to_mat("B", &self.b, n, m)?,
            to_mat("C", &self.c, q, n)?,
            to_mat("D", &self.d, q, m)?,
            to_mat("E", &self.e, n, p)?,
            to_mat("F", &self.f, q, p)?,
        )
    }

    /// The controller set described by the file: structured when
    /// `zero_pattern` is present, bounded when `K_lower`/`K_upper` are,
    /// unconstrained otherwise.
    pub fn controller_spec<T: Scalar>(&self) -> Result<ControllerSpec<T>> {
        match (&self.zero_pattern, &self.k_lower, &self.k_upper) {
            (None, None, None) => Ok(ControllerSpec::Full),
            (Some(z), None, None) => Ok(ControllerSpec::Structured(z.clone())),
            (None, Some(lo), Some(hi)) => Ok(ControllerSpec::Bounded {
                lower: to_mat("K_lower", lo, self.m, self.n)?,
                upper: to_mat("K_upper", hi, self.m, self.n)?,
            }),
            (None, _, _) => Err(Error::Parse("K_lower and K_upper must be given together".into())),
            _ => Err(Error::Unsupported("a controller set is either structured or bounded, not both".into())),
        }
    }
}

pub fn parse_system_file(text: &str) -> Result<SystemFile> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_document<S: Serialize>(doc: &S) -> Result<String> {
    let mut s = serde_json::to_string_pretty(doc)?;
    s.push('\n');
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyTerm {
    pub exponents: Vec<u32>,
    #[serde(rename = "A", default, skip_serializing_if = "Vec::is_empty")]
    pub a: Rows,
    #[serde(rename = "B", default, skip_serializing_if = "Vec::is_empty")]
    pub b: Rows,
    #[serde(rename = "C", default, skip_serializing_if = "Vec::is_empty")]
    pub c: Rows,
    #[serde(rename = "D", default, skip_serializing_if = "Vec::is_empty")]
    pub d: Rows,
    #[serde(rename = "E", default, skip_serializing_if = "Vec::is_empty")]
    pub e: Rows,
    #[serde(rename = "F", default, skip_serializing_if = "Vec::is_empty")]
    pub f: Rows,
}

/// Polynomial system: a list of term records, one per monomial. A matrix
/// missing from a term is zero in that term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolySystemFile {
    pub num_params: usize,
    pub n: usize,
    #[serde(default)]
    pub m: usize,
    pub p: usize,
    pub q: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
    pub terms: Vec<PolyTerm>,
}

fn poly_rows<T: Scalar>(p: &PolyMatrix<T>, mono: &Monomial) -> Rows {
    let c = p.coeff(mono);
    if c.data().iter().all(|v| v.is_zero()) {
        Vec::new()
    } else {
        to_rows(c)
    }
}

impl PolySystemFile {
    pub fn from_poly_system<T: Scalar>(ps: &PolySystem<T>) -> Self {
        let mut monos: Vec<Monomial> = [&ps.a, &ps.b, &ps.c, &ps.d, &ps.e, &ps.f]
            .iter()
            .flat_map(|m| m.terms().map(|(mo, _)| mo.clone()).collect::<Vec<_>>())
            .collect();
        monos.sort();
        monos.dedup();
        let unit = BoxDomain::<T>::unit(ps.num_params());
        let (lower, upper) = if ps.domain == unit {
            (None, None)
        } else {
            (Some(ps.domain.lower.iter().map(Scalar::as_f64).collect()), Some(ps.domain.upper.iter().map(Scalar::as_f64).collect()))
        };
        PolySystemFile {
            num_params: ps.num_params(),
            n: ps.n(),
            m: ps.m(),
            p: ps.p(),
            q: ps.q(),
            lower,
            upper,
            terms: monos
                .iter()
                .map(|mo| PolyTerm {
                    exponents: mo.0.clone(),
                    a: poly_rows(&ps.a, mo),
                    b: poly_rows(&ps.b, mo),
                    c: poly_rows(&ps.c, mo),
                    d: poly_rows(&ps.d, mo),
                    e: poly_rows(&ps.e, mo),
                    f: poly_rows(&ps.f, mo),
                })
                .collect(),
        }
    }

    pub fn poly_system<T: Scalar>(&self) -> Result<PolySystem<T>> {
        let (np, n, m, p, q) = (self.num_params, self.n, self.m, self.p, self.q);
        let mut mats: [PolyMatrix<T>; 6] = [
            Polynomial::zero(np, Mat::zeros(n, n)),
            Polynomial::zero(np, Mat::zeros(n, m)),
            Polynomial::zero(np, Mat::zeros(q, n)),
            Polynomial::zero(np, Mat::zeros(q, m)),
            Polynomial::zero(np, Mat::zeros(n, p)),
            Polynomial::zero(np, Mat::zeros(q, p)),
        ];
        let shapes = [(n, n), (n, m), (q, n), (q, m), (n, p), (q, p)];
        let names = ["A", "B", "C", "D", "E", "F"];
        for t in &self.terms {
            if t.exponents.len() != np {
                return Err(Error::Dimension(format!("term exponents {:?} for {np} parameters", t.exponents)));
            }
            let mono = Monomial(t.exponents.clone());
            for (k, rows) in [&t.a, &t.b, &t.c, &t.d, &t.e, &t.f].into_iter().enumerate() {
                if rows.is_empty() {
                    continue;
                }
                let (r, c) = shapes[k];
                mats[k].add_term(mono.clone(), to_mat(names[k], rows, r, c)?)?;
            }
        }
        let [a, b, c, d, e, f] = mats;
        let ps = PolySystem::new(a, b, c, d, e, f)?;
        match (&self.lower, &self.upper) {
            (None, None) => Ok(ps),
            (Some(lo), Some(hi)) => ps.with_domain(BoxDomain::new(lo.iter().map(|v| T::lit(*v)).collect(), hi.iter().map(|v| T::lit(*v)).collect())?),
            _ => Err(Error::Parse("lower and upper must be given together".into())),
        }
    }
}

pub fn parse_poly_system_file(text: &str) -> Result<PolySystemFile> {
    Ok(serde_json::from_str(text)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaTerm {
    pub exponents: Vec<u32>,
    pub value: Rows,
}

/// All nine LFT blocks and the channel block `Δ(δ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LftFile {
    pub num_params: usize,
    pub n: usize,
    pub n0: usize,
    pub p: usize,
    pub q: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
    #[serde(rename = "A")]
    pub a: Rows,
    #[serde(rename = "E0")]
    pub e0: Rows,
    #[serde(rename = "E1")]
    pub e1: Rows,
    #[serde(rename = "C0")]
    pub c0: Rows,
    #[serde(rename = "C1")]
    pub c1: Rows,
    #[serde(rename = "F00")]
    pub f00: Rows,
    #[serde(rename = "F01")]
    pub f01: Rows,
    #[serde(rename = "F10")]
    pub f10: Rows,
    #[serde(rename = "F11")]
    pub f11: Rows,
    pub delta: Vec<DeltaTerm>,
}

impl LftFile {
    pub fn from_lft<T: Scalar>(lft: &LftSystem<T>) -> Self {
        let np = lft.num_params();
        let unit = BoxDomain::<T>::unit(np);
        let (lower, upper) = if lft.domain == unit {
            (None, None)
        } else {
            (Some(lft.domain.lower.iter().map(Scalar::as_f64).collect()), Some(lft.domain.upper.iter().map(Scalar::as_f64).collect()))
        };
        LftFile {
            num_params: np,
            n: lft.n(),
            n0: lft.n0(),
            p: lft.p(),
            q: lft.q(),
            lower,
            upper,
            a: to_rows(&lft.a),
            e0: to_rows(&lft.e0),
            e1: to_rows(&lft.e1),
            c0: to_rows(&lft.c0),
            c1: to_rows(&lft.c1),
            f00: to_rows(&lft.f00),
            f01: to_rows(&lft.f01),
            f10: to_rows(&lft.f10),
            f11: to_rows(&lft.f11),
            delta: lft.delta.terms().map(|(m, v)| DeltaTerm { exponents: m.0.clone(), value: to_rows(v) }).collect(),
        }
    }

    pub fn lft<T: Scalar>(&self) -> Result<LftSystem<T>> {
        let (np, n, n0, p, q) = (self.num_params, self.n, self.n0, self.p, self.q);
        let mut delta = Polynomial::zero(np, Mat::zeros(n0, n0));
        for t in &self.delta {
            if t.exponents.len() != np {
                return Err(Error::Dimension(format!("delta exponents {:?} for {np} parameters", t.exponents)));
            }
            delta.add_term(Monomial(t.exponents.clone()), to_mat("delta", &t.value, n0, n0)?)?;
        }
        let mut lft = LftSystem::new(
            to_mat("A", &self.a, n, n)?,
            to_mat("E0", &self.e0, n, n0)?,
            to_mat("E1", &self.e1, n, p)?,
            to_mat("C0", &self.c0, n0, n)?,
            to_mat("C1", &self.c1, q, n)?,
            to_mat("F00", &self.f00, n0, n0)?,
            to_mat("F01", &self.f01, n0, p)?,
            to_mat("F10", &self.f10, q, n0)?,
            to_mat("F11", &self.f11, q, p)?,
            delta,
        )?;
        match (&self.lower, &self.upper) {
            (None, None) => {}
            (Some(lo), Some(hi)) => lft.domain = BoxDomain::new(lo.iter().map(|v| T::lit(*v)).collect(), hi.iter().map(|v| T::lit(*v)).collect())?,
            _ => return Err(Error::Parse("lower and upper must be given together".into())),
        }
        if lft.domain.num_params() != np {
            return Err(Error::Dimension("box dimension differs from num_params".into()));
        }
        Ok(lft)
    }
}

pub fn parse_lft_file(text: &str) -> Result<LftFile> {
    Ok(serde_json::from_str(text)?)
}

/// Which of the three document kinds a JSON text holds.
#[derive(Clone, Debug, PartialEq)]
pub enum Document {
    System(SystemFile),
    Poly(PolySystemFile),
    Lft(LftFile),
}

pub fn parse_document(text: &str) -> Result<Document> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    if v.get("terms").is_some() {
        Ok(Document::Poly(serde_json::from_value(v)?))
    } else if v.get("E0").is_some() {
        Ok(Document::Lft(serde_json::from_value(v)?))
    } else {
        Ok(Document::System(serde_json::from_value(v)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data;

    #[test]
    fn system_without_inputs_round_trips() {
        let sys = data::drug_model(1.5, 0.5, 2.0, Mat::from_f64(&[&[1.0, 0.0]]));
        let text = write_document(&SystemFile::from_system(&sys)).unwrap();
        assert!(!text.contains("\"B\""));
        let back = parse_system_file(&text).unwrap();
        assert_eq!(back.system::<f64>().unwrap(), sys);
        assert_eq!(write_document(&back).unwrap(), text);
    }

    #[test]
    fn controller_sets_are_read() {
        let text = r#"{"n":2,"m":1,"p":1,"q":1,"A":[[-1,0],[0,-1]],"B":[[1],[0]],"C":[[1,1]],"D":[[0]],
            "E":[[1],[1]],"F":[[0]],"K_lower":[[-2,-2]],"K_upper":[[1,1]]}"#;
        let f = parse_system_file(text).unwrap();
        assert!(matches!(f.controller_spec::<f64>().unwrap(), ControllerSpec::Bounded { .. }));
        let bad = text.replace("\"K_upper\":[[1,1]]", "\"zero_pattern\":[[0,1]]");
        assert!(parse_system_file(&bad).unwrap().controller_spec::<f64>().is_err());
        assert!(parse_system_file(&text.replace("\"n\":2", "\"n\":2,\"extra\":1")).is_err());
    }

    #[test]
    fn polynomial_and_lft_documents_round_trip() {
        let ps = data::quadratic_system();
        let pf = PolySystemFile::from_poly_system(&ps);
        let text = write_document(&pf).unwrap();
        assert!(matches!(parse_document(&text).unwrap(), Document::Poly(_)));
        let back = parse_poly_system_file(&text).unwrap().poly_system::<f64>().unwrap();
        assert_eq!(back, ps);

        let lft = crate::lft::lft_from_polynomial(&ps, 2).unwrap();
        let lf = LftFile::from_lft(&lft);
        let text = write_document(&lf).unwrap();
        let parsed = parse_lft_file(&text).unwrap();
        assert_eq!(parsed.lft::<f64>().unwrap(), lft);
        assert_eq!(write_document(&parsed).unwrap(), text);
    }

    #[test]
    fn shape_errors_are_reported() {
        let text = r#"{"n":2,"p":1,"q":1,"A":[[-1,0]],"C":[[1,1]],"E":[[1],[1]],"F":[[0]]}"#;
        assert!(matches!(parse_system_file(text).unwrap().system::<f64>(), Err(Error::Dimension(_))));
    }
}
