//! Certificate templates, instances, checkers and constructions.

mod check;
mod claims;
mod construct;
mod finite;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::expr::{parse_with, Expr, RegionEnv};
use crate::problem::{Problem, SpecKind};

pub use check::{
    check, check_with, sample_check, CheckReport, ConditionResult, SampleReport, SampleStats,
    Status, Verdict,
};
pub use claims::{condition_claims, image_of, Arg, Condition};
pub use construct::{
    cc_from_barrier, cc_from_triplet_barriers, compute_ql_qr, BarrierCc, CutBarrier, QlQr,
    TripletCc,
};
pub use finite::{
    finite_barrier, finite_check, finite_ltl_cc, finite_persistence_cc, finite_safety_cc,
    FiniteInstance, FiniteViolation, FINITE_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertKind {
    Barrier,
    SafetyCc,
    PersistenceCc,
    LtlCc,
}

impl CertKind {
    /// Argument blocks of the certificate function.
    pub fn blocks(self) -> usize {
        match self {
            CertKind::Barrier => 1,
            _ => 2,
        }
    }

    pub fn spec(self) -> SpecKind {
        match self {
            CertKind::Barrier | CertKind::SafetyCc => SpecKind::Safety,
            CertKind::PersistenceCc => SpecKind::Persistence,
            CertKind::LtlCc => SpecKind::Ltl,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CertKind::Barrier => "barrier",
            CertKind::SafetyCc => "safety-cc",
            CertKind::PersistenceCc => "persistence-cc",
            CertKind::LtlCc => "ltl-cc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CheckMode {
    /// Implications replaced by the linear strengthenings.
    #[default]
    Strengthened,
    /// The original implication forms.
    Implication,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    Flat(Vec<f64>),
    /// Keyed by automaton state pair `(i, j)`.
    Piecewise(BTreeMap<(usize, usize), Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertError {
    #[error("certificate format error: {0}")]
    Format(String),
    #[error("{kind} certificate used with a {spec:?} problem")]
    WrongKind { kind: &'static str, spec: SpecKind },
    #[error("basis function {index} uses {got} variables; {kind} allows {allowed}")]
    ArityMismatch {
        index: usize,
        kind: &'static str,
        allowed: usize,
        got: usize,
    },
    #[error("no piece for automaton states ({0}, {1})")]
    MissingPiece(usize, usize),
    #[error("certificate is unbounded over the state box")]
    UnboundedTemplate,
    #[error("template basis function {0} depends on the coefficients")]
    TemplateNotLinearInCoefficients(usize),
    #[error("{0}")]
    Falsifier(String),
    #[error("automaton run {0:?} reaches acceptance past every cut")]
    UncutPath(Vec<usize>),
}

fn fmt_err(msg: impl Into<String>) -> CertError {
    CertError::Format(msg.into())
}

/// A linear combination of basis functions with unknown coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub kind: CertKind,
    pub basis: Vec<Expr>,
    pub basis_text: Vec<String>,
    /// One coefficient vector per automaton state pair.
    pub piecewise: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub kind: CertKind,
    pub basis: Vec<Expr>,
    pub basis_text: Vec<String>,
    pub coefficients: Coefficients,
    pub xi: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
}

/// A certificate as a function of `(x, i, y, j)`. Barriers ignore `y`,
/// non-piecewise certificates ignore the automaton states.
pub trait PairFunction: Sync {
    fn value(&self, x: &[f64], i: usize, y: &[f64], j: usize) -> f64;
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTemplate {
    kind: CertKind,
    basis: Vec<String>,
    piecewise: Option<bool>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawCoefficients {
    Flat(Vec<f64>),
    Piecewise(BTreeMap<String, Vec<f64>>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCertificate {
    kind: CertKind,
    basis: Option<Vec<String>>,
    /// Shorthand for a one-element basis with coefficient 1.
    expr: Option<String>,
    coefficients: Option<RawCoefficients>,
    xi: Option<f64>,
    tau1: Option<f64>,
    tau2: Option<f64>,
    tau3: Option<f64>,
}

fn parse_basis(kind: CertKind, texts: &[String], p: &Problem) -> Result<Vec<Expr>, CertError> {
    if texts.is_empty() {
        return Err(fmt_err("empty basis"));
    }
    let ctx = p.context(kind.blocks());
    let allowed = p.dim() * kind.blocks();
    texts
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let e = parse_with(t, &ctx).map_err(|e| fmt_err(format!("basis {t:?}: {e}")))?;
            if e.arity() > allowed {
                return Err(CertError::ArityMismatch {
                    index: k,
                    kind: kind.name(),
                    allowed,
                    got: e.arity(),
                });
            }
            Ok(e)
        })
        .collect()
}

fn state_index(p: &Problem, s: &str) -> Result<usize, CertError> {
    if let Some(a) = &p.nba {
        if let Some(k) = a.state_names.iter().position(|n| n == s) {
            return Ok(k);
        }
    }
    s.trim()
        .parse()
        .map_err(|_| fmt_err(format!("unknown automaton state {s:?}")))
}

impl Template {
    pub fn parse(text: &str, p: &Problem) -> Result<Template, CertError> {
        let raw: RawTemplate = serde_json::from_str(text).map_err(|e| fmt_err(e.to_string()))?;
        let basis = parse_basis(raw.kind, &raw.basis, p)?;
        Ok(Template {
            kind: raw.kind,
            basis,
            basis_text: raw.basis,
            piecewise: raw.piecewise.unwrap_or(raw.kind == CertKind::LtlCc),
        })
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn instantiate(&self, coefficients: Coefficients, xi: f64, tau: [f64; 3]) -> Certificate {
        Certificate {
            kind: self.kind,
            basis: self.basis.clone(),
            basis_text: self.basis_text.clone(),
            coefficients,
            xi,
            tau1: tau[0],
            tau2: tau[1],
            tau3: tau[2],
        }
    }
}

impl Certificate {
    /// Parses a certificate document; unspecified `τ` default to the problem's.
    pub fn parse(text: &str, p: &Problem) -> Result<Certificate, CertError> {
        let raw: RawCertificate = serde_json::from_str(text).map_err(|e| fmt_err(e.to_string()))?;
        let (basis_text, coefficients) = match (raw.basis, raw.expr, raw.coefficients) {
            (None, Some(e), None) => (vec![e], Coefficients::Flat(vec![1.0])),
            (Some(b), None, Some(c)) => {
                let c = match c {
                    RawCoefficients::Flat(v) => Coefficients::Flat(v),
                    RawCoefficients::Piecewise(m) => {
                        let mut out = BTreeMap::new();
                        for (k, v) in m {
                            let (a, b) = k
                                .split_once(',')
                                .ok_or_else(|| fmt_err(format!("bad piece key {k:?}")))?;
                            out.insert((state_index(p, a)?, state_index(p, b)?), v);
                        }
                        Coefficients::Piecewise(out)
                    }
                };
                (b, c)
            }
            _ => return Err(fmt_err("give either expr, or basis with coefficients")),
        };
        let basis = parse_basis(raw.kind, &basis_text, p)?;
        let check_len = |v: &Vec<f64>| {
            if v.len() != basis.len() {
                Err(fmt_err(format!(
                    "{} coefficients for {} basis functions",
                    v.len(),
                    basis.len()
                )))
            } else if v.iter().any(|c| !c.is_finite()) {
                Err(fmt_err("non-finite coefficient"))
            } else {
                Ok(())
            }
        };
        match &coefficients {
            Coefficients::Flat(v) => check_len(v)?,
            Coefficients::Piecewise(m) => m.values().try_for_each(check_len)?,
        }
        let xi = raw.xi.unwrap_or(if raw.kind == CertKind::Barrier {
            0.0
        } else {
            p.params.xi_min
        });
        if raw.kind != CertKind::Barrier && !(xi > 0.0) {
            return Err(fmt_err("xi must be positive"));
        }
        let taus = [
            raw.tau1.unwrap_or(p.params.tau1),
            raw.tau2.unwrap_or(p.params.tau2),
            raw.tau3.unwrap_or(p.params.tau3),
        ];
        if taus.iter().any(|t| !(*t >= 0.0)) {
            return Err(fmt_err("tau must be nonnegative"));
        }
        Ok(Certificate {
            kind: raw.kind,
            basis,
            basis_text,
            coefficients,
            xi,
            tau1: taus[0],
            tau2: taus[1],
            tau3: taus[2],
        })
    }

    pub fn to_json(&self, p: &Problem) -> Value {
        let coeffs = match &self.coefficients {
            Coefficients::Flat(v) => json!(v),
            Coefficients::Piecewise(m) => {
                let name = |k: usize| {
                    p.nba
                        .as_ref()
                        .map_or(k.to_string(), |a| a.state_names[k].clone())
                };
                let obj: serde_json::Map<String, Value> = m
                    .iter()
                    .map(|((i, j), v)| (format!("{},{}", name(*i), name(*j)), json!(v)))
                    .collect();
                Value::Object(obj)
            }
        };
        json!({
            "kind": self.kind,
            "basis": self.basis_text,
            "coefficients": coeffs,
            "xi": self.xi,
            "tau1": self.tau1,
            "tau2": self.tau2,
            "tau3": self.tau3,
        })
    }

    pub fn tau(&self) -> [f64; 3] {
        [self.tau1, self.tau2, self.tau3]
    }

    fn combine(&self, c: &[f64]) -> Expr {
        Expr::linear_combination(c.iter().copied().zip(&self.basis))
    }

    /// Coefficients of piece `(i, j)`; flat certificates use one vector for all.
    pub fn coeffs(&self, i: usize, j: usize) -> Result<&[f64], CertError> {
        match &self.coefficients {
            Coefficients::Flat(v) => Ok(v),
            Coefficients::Piecewise(m) => m
                .get(&(i, j))
                .map(Vec::as_slice)
                .ok_or(CertError::MissingPiece(i, j)),
        }
    }

    pub fn piece(&self, i: usize, j: usize) -> Result<Expr, CertError> {
        Ok(self.combine(self.coeffs(i, j)?))
    }

    pub fn expr(&self) -> Result<Expr, CertError> {
        self.piece(0, 0)
    }

    /// Every piece over `q` automaton states, or the first missing pair.
    pub fn pieces(&self, q: usize) -> Result<Vec<Vec<Expr>>, CertError> {
        (0..q)
            .map(|i| (0..q).map(|j| self.piece(i, j)).collect())
            .collect()
    }

    /// Basis values at the concatenated point `xy`.
    pub fn basis_values(&self, xy: &[f64], env: &dyn RegionEnv) -> Vec<f64> {
        self.basis.iter().map(|b| b.eval(xy, env)).collect()
    }

    pub fn bind<'a>(&'a self, env: &'a dyn RegionEnv) -> Bound<'a> {
        Bound { cert: self, env }
    }
}

/// A certificate paired with the region environment its indicators need.
pub struct Bound<'a> {
    pub cert: &'a Certificate,
    pub env: &'a dyn RegionEnv,
}

impl PairFunction for Bound<'_> {
    fn value(&self, x: &[f64], i: usize, y: &[f64], j: usize) -> f64 {
        let c = match self.cert.coeffs(i, j) {
            Ok(c) => c,
            Err(_) => return f64::NAN,
        };
        let mut xy = x.to_vec();
        if self.cert.kind != CertKind::Barrier {
            xy.extend_from_slice(y);
        }
        c.iter()
            .zip(&self.cert.basis)
            .map(|(c, b)| c * b.eval(&xy, self.env))
            .sum()
    }
}
