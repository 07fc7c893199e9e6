//! The state-triplet baseline: cut every simple accepting path of the
//! automaton with a barrier that separates two consecutive edge labels.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::automata::{decompose_triplets, enumerate_simple_paths, unroll_once, AutomataError, Letter, Nba, Triplet};
use crate::cegis::{synthesize, CegisConfig, SynthError};
use crate::certificate::{
    cc_from_triplet_barriers, check, CertError, CertKind, Certificate, CheckMode, Coefficients, CutBarrier, PairFunction,
    QlQr, Template, TripletCc,
};
use crate::falsifier::FalsifierConfig;
use crate::problem::{Problem, SpecKind, System};
use crate::region::Region;

#[derive(Debug, Error)]
pub enum TripletError {
    #[error("problem has no automaton")]
    NoAutomaton,
    #[error(transparent)]
    Automata(#[from] AutomataError),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

#[derive(Debug, Clone, Serialize)]
pub struct TripletConfig {
    /// Barrier template as JSON; `None` picks a tabular basis on finite
    /// systems and quadratic monomials on continuous ones.
    pub template: Option<String>,
    pub n: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub falsifier: FalsifierConfig,
    pub allow_unroll: bool,
    /// `ξ` of the subsumption certificate.
    pub xi: f64,
}

impl Default for TripletConfig {
    fn default() -> Self {
        TripletConfig {
            template: None,
            n: 50,
            max_iters: 200,
            seed: 0,
            falsifier: FalsifierConfig::default(),
            allow_unroll: false,
            xi: 1.0,
        }
    }
}

/// Union of the regions of `letters`, as the initial or unsafe set of a
/// triplet barrier. Letters that label nothing contribute nothing.
fn letter_union(p: &Problem, letters: &[Letter]) -> (Region, Vec<usize>) {
    let mut clauses = Vec::new();
    let mut states = Vec::new();
    for l in letters {
        let Some(rid) = p.letter_region(l) else { continue };
        clauses.extend(p.region(rid).clauses.iter().cloned());
        if let Some(f) = &p.finite {
            states.extend(f.state_letters.iter().enumerate().filter(|(_, m)| *m == l).map(|(s, _)| s));
        }
    }
    states.sort_unstable();
    states.dedup();
    (Region::new(clauses), states)
}

/// Barrier problem of a triplet: initial set labelled by first-edge letters,
/// unsafe set by second-edge letters, same dynamics.
pub fn triplet_problem(p: &Problem, t: &Triplet) -> Result<Problem, TripletError> {
    let (init, init_states) = letter_union(p, &t.first_letters());
    let (bad, bad_states) = letter_union(p, &t.second_letters());
    let mut sub = p.clone();
    sub.spec = SpecKind::Safety;
    sub.name = format!("{} triplet ({},{},{})", p.name, t.states.0, t.states.1, t.states.2);
    sub.init = sub.regions.insert("triplet_init", init);
    sub.unsafe_region = Some(sub.regions.insert("triplet_unsafe", bad));
    if let System::Finite(f) = &mut sub.system {
        f.initial = init_states;
        if let Some(sets) = &mut sub.finite {
            sets.unsafe_states = bad_states;
        }
    }
    Ok(sub)
}

fn default_template(p: &Problem) -> String {
    let basis: Vec<String> = match p.finite_system() {
        Some(f) => (0..f.states).map(|k| format!("ind(state{k})")).collect(),
        None => {
            let n = p.dim();
            let mut b = vec!["1".to_string()];
            b.extend((1..=n).map(|i| format!("x{i}")));
            for i in 1..=n {
                for j in i..=n {
                    b.push(format!("x{i}*x{j}"));
                }
            }
            b
        }
    };
    serde_json::json!({ "kind": "barrier", "basis": basis }).to_string()
}

#[derive(Debug, Clone, Serialize)]
pub enum AttemptStatus {
    Cut,
    Failed(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct PathReport {
    pub path: Vec<usize>,
    /// Triplet index tried along the path and its outcome, in path order.
    pub attempts: Vec<(usize, AttemptStatus)>,
    /// Position of the cutting triplet along the path.
    pub cut_at: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct TripletVerification {
    /// Automaton the paths were taken from (unrolled when `unroll_used`).
    pub nba: Nba,
    pub cuts: Vec<(Triplet, Certificate, Problem)>,
    pub uncut: Vec<Vec<usize>>,
    pub unroll_used: bool,
    pub paths: Vec<PathReport>,
    pub triplets: Vec<Triplet>,
}

impl TripletVerification {
    pub fn verified(&self) -> bool {
        self.uncut.is_empty()
    }
}

/// Tries the triplets of each simple path from the start, keeping the first
/// one a barrier cuts. Results are shared between paths.
fn verify_nba(p: &Problem, a: &Nba, cfg: &TripletConfig) -> Result<TripletVerification, TripletError> {
    let mut prob = p.clone();
    prob.nba = Some(a.clone());
    let paths = enumerate_simple_paths(a)?;
    let mut triplets: Vec<Triplet> = Vec::new();
    let mut outcome: BTreeMap<usize, Result<usize, String>> = BTreeMap::new();
    let mut cuts: Vec<(Triplet, Certificate, Problem)> = Vec::new();
    let mut reports = Vec::new();
    let mut uncut = Vec::new();
    for path in paths {
        let ts = if path.len() < 3 { Vec::new() } else { decompose_triplets(a, &path)? };
        let mut rep = PathReport { path: path.clone(), attempts: Vec::new(), cut_at: None };
        for (pos, t) in ts.into_iter().enumerate() {
            let idx = match triplets.iter().position(|u| *u == t) {
                Some(i) => i,
                None => {
                    triplets.push(t.clone());
                    triplets.len() - 1
                }
            };
            if !outcome.contains_key(&idx) {
                let res = cut_triplet(&prob, &t, cfg)?;
                let res = res.map(|(cert, sub)| {
                    cuts.push((t.clone(), cert, sub));
                    cuts.len() - 1
                });
                outcome.insert(idx, res);
            }
            match &outcome[&idx] {
                Ok(_) => {
                    rep.attempts.push((idx, AttemptStatus::Cut));
                    rep.cut_at = Some(pos);
                    break;
                }
                Err(why) => rep.attempts.push((idx, AttemptStatus::Failed(why.clone()))),
            }
        }
        if rep.cut_at.is_none() {
            uncut.push(path);
        }
        reports.push(rep);
    }
    Ok(TripletVerification { nba: a.clone(), cuts, uncut, unroll_used: false, paths: reports, triplets })
}

/// Synthesizes and re-checks a barrier for one triplet. `Err` carries the
/// reason the triplet stays uncut.
fn cut_triplet(
    p: &Problem,
    t: &Triplet,
    cfg: &TripletConfig,
) -> Result<Result<(Certificate, Problem), String>, TripletError> {
    let sub = triplet_problem(p, t)?;
    // no state carries one of the two edges: a constant barrier cuts
    let empty = |rid| sub.region(rid).is_empty();
    let no_init = empty(sub.init) || sub.finite_system().is_some_and(|f| f.initial.is_empty());
    let no_bad = sub.unsafe_region.is_none_or(empty)
        || sub.finite.as_ref().is_some_and(|f| f.unsafe_states.is_empty());
    if no_init || no_bad {
        let tmpl = Template::parse(r#"{"kind": "barrier", "basis": ["1"]}"#, &sub)?;
        let c = if no_init { 1.0 } else { -1.0 };
        return Ok(Ok((tmpl.instantiate(Coefficients::Flat(vec![c]), 0.0, [0.0; 3]), sub)));
    }
    let text = cfg.template.clone().unwrap_or_else(|| default_template(&sub));
    let tmpl = Template::parse(&text, &sub)?;
    let mut cc = CegisConfig::for_problem(&sub);
    cc.n = cfg.n;
    cc.n_vf = 2 * cfg.n;
    cc.max_iters = cfg.max_iters;
    cc.seed = cfg.seed;
    cc.falsifier = cfg.falsifier;
    match synthesize(&sub, &tmpl, &cc) {
        Ok((cert, _)) => {
            let r = check(&cert, &sub, CheckMode::Implication)?;
            if r.verdict.is_verified() {
                Ok(Ok((cert, sub)))
            } else {
                Ok(Err(format!("barrier failed re-check: {:?}", r.verdict)))
            }
        }
        Err(SynthError::Failure { reason, .. }) => Ok(Err(format!("{reason:?}"))),
        Err(SynthError::Lp(e)) => Ok(Err(format!("lp: {e}"))),
        Err(e) => Err(e.into()),
    }
}

/// Verified when every simple accepting path has a cut triplet, on the
/// automaton or, when allowed and needed, on its one-step unrolling.
pub fn triplet_verify(p: &Problem, cfg: &TripletConfig) -> Result<TripletVerification, TripletError> {
    let a = p.nba.as_ref().ok_or(TripletError::NoAutomaton)?;
    let tv = verify_nba(p, a, cfg)?;
    if tv.verified() || !cfg.allow_unroll {
        return Ok(tv);
    }
    let mut tv = verify_nba(p, &unroll_once(a), cfg)?;
    tv.unroll_used = true;
    Ok(tv)
}

/// The subsumption certificate as a function over product pairs.
pub fn subsume_function<'a>(tv: &'a TripletVerification, xi: f64) -> Result<TripletCc<'a>, TripletError> {
    let cuts = tv
        .cuts
        .iter()
        .map(|(t, cert, sub)| {
            let bound = cert.bind(&sub.regions);
            CutBarrier::new(t.clone(), move |x: &[f64]| bound.value(x, 0, &[], 0))
        })
        .collect();
    let mut cc = cc_from_triplet_barriers(&tv.nba, cuts, xi)?;
    if tv.cuts.iter().any(|(_, _, sub)| sub.finite_system().is_none()) {
        cc.threshold = FalsifierConfig::default().eps;
    }
    Ok(cc)
}

#[derive(Debug, Clone)]
pub struct Subsumed {
    pub certificate: Certificate,
    /// The problem with the automaton the certificate is indexed by.
    pub problem: Problem,
    pub qlqr: QlQr,
    pub top_from_qr: bool,
}

/// Piecewise LTL certificate tabulated from the subsumption construction,
/// over a basis of state-pair indicators. Finite problems only.
pub fn subsume(tv: &TripletVerification, p: &Problem, xi: f64) -> Result<Subsumed, TripletError> {
    let f = p
        .finite_system()
        .ok_or_else(|| CertError::Format("tabulated subsumption needs a finite system".into()))?;
    let cc = subsume_function(tv, xi)?;
    let mut problem = p.clone();
    problem.nba = Some(tv.nba.clone());
    let n = f.states;
    let mut basis = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            basis.push(format!("ind(state{a}, x) * ind(state{b}, y)"));
        }
    }
    let text = serde_json::json!({ "kind": "ltl-cc", "basis": basis, "piecewise": true }).to_string();
    let tmpl = Template::parse(&text, &problem)?;
    let q = tv.nba.num_states();
    let mut map = BTreeMap::new();
    for i in 0..q {
        for j in 0..q {
            let mut c = Vec::with_capacity(n * n);
            for a in 0..n {
                for b in 0..n {
                    c.push(cc.value(&f.embedding[a], i, &f.embedding[b], j));
                }
            }
            map.insert((i, j), c);
        }
    }
    let certificate = tmpl.instantiate(Coefficients::Piecewise(map), xi, [1.0, 1.0, 0.0]);
    debug_assert_eq!(certificate.kind, CertKind::LtlCc);
    Ok(Subsumed { certificate, problem, qlqr: cc.qlqr.clone(), top_from_qr: cc.top_from_qr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::load_problem;

    /// Fig. 2 automaton; state 0 reads `a1` and moves to the `a1` sink 2,
    /// state 1 reads `a0` and is unreachable from 0.
    fn fig2_finite() -> Problem {
        load_problem(
            r#"{"system": "finite", "spec": "ltl", "states": 3, "initial": [0],
                "transitions": [[0,2],[2,2],[1,1]],
                "state_labels": [["a1"], ["a0"], ["a1"]],
                "nba": {"aps": ["a0", "a1"], "states": ["q0","q1","q2","q3"], "initial": ["q0"], "accepting": ["q3"],
                        "alphabet": [["a0"], ["a1"]],
                        "edges": [{"from": "q0", "to": "q1", "letters": [["a1"]]},
                                  {"from": "q1", "to": "q1", "letters": [["a0"]]},
                                  {"from": "q1", "to": "q2", "letters": [["a0"]]},
                                  {"from": "q2", "to": "q2", "letters": [["a1"]]},
                                  {"from": "q2", "to": "q3", "letters": [["a0"]]},
                                  {"from": "q3", "to": "q3", "letters": [["a0"], ["a1"]]}]}}"#,
            None,
        )
        .unwrap()
    }

    #[test]
    fn triplet_problem_sets() {
        let p = fig2_finite();
        let t = Triplet { states: (0, 1, 2), pairs: vec![(Letter::new(&["a1"]), Letter::new(&["a0"]))] };
        let sub = triplet_problem(&p, &t).unwrap();
        assert_eq!(sub.finite_system().unwrap().initial, vec![0, 2]);
        assert_eq!(sub.finite.as_ref().unwrap().unsafe_states, vec![1]);
        let same = Triplet { states: (0, 1, 2), pairs: vec![(Letter::new(&["a0"]), Letter::new(&["a0"]))] };
        let sub = triplet_problem(&p, &same).unwrap();
        assert_eq!(sub.finite_system().unwrap().initial, sub.finite.as_ref().unwrap().unsafe_states);
        let none = Triplet { states: (0, 1, 2), pairs: vec![(Letter::new(&["a0", "a1"]), Letter::new(&["a0"]))] };
        let sub = triplet_problem(&p, &none).unwrap();
        assert!(sub.finite_system().unwrap().initial.is_empty());
        assert!(sub.region(sub.init).is_empty());
    }

    #[test]
    fn figure_two_is_cut_and_subsumed() {
        let p = fig2_finite();
        let tv = triplet_verify(&p, &TripletConfig::default()).unwrap();
        assert!(tv.verified());
        assert_eq!(tv.cuts.len(), 1);
        assert_eq!(tv.cuts[0].0.states, (0, 1, 2));
        let s = subsume(&tv, &p, 1.0).unwrap();
        let r = check(&s.certificate, &s.problem, CheckMode::Strengthened).unwrap();
        assert!(r.verdict.is_verified(), "{:?}", r.verdict);
        let r = check(&s.certificate, &s.problem, CheckMode::Implication).unwrap();
        assert!(r.verdict.is_verified());
    }

    #[test]
    fn no_accepting_path_is_vacuous() {
        let mut p = fig2_finite();
        let a = p.nba.as_mut().unwrap();
        a.transitions.retain(|t| t.to != 3 || t.from == 3);
        let tv = triplet_verify(&p, &TripletConfig::default()).unwrap();
        assert!(tv.verified() && tv.cuts.is_empty());
    }
}
