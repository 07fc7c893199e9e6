//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! Variables are boxed; each is shifted to `[0, u - l]` and the upper bound
//! becomes an explicit row. Rows are scaled to unit max-coefficient before
//! pivoting. Every feasible answer is substituted back into the original
//! rows before it is returned.

use std::fmt::Write as _;

use thiserror::Error;

/// Phase-1 optimum above this means infeasible.
pub const INFEASIBILITY_TOL: f64 = 1e-9;
/// Pivots smaller than this are treated as zero.
pub const PIVOT_TOL: f64 = 1e-12;
/// Allowed residual on a row scaled to unit max-coefficient.
pub const VERIFY_TOL: f64 = 1e-9;

const COST_TOL: f64 = 1e-11;
/// Largest basis for which the final basic solution is recomputed from the
/// original matrix by Gaussian elimination.
const REFINE_LIMIT: usize = 600;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub rel: Rel,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, rel: Rel, rhs: f64) -> Self {
        Constraint { coeffs, rel, rhs }
    }

    /// Violation at `x` after scaling the row to unit max-coefficient;
    /// non-positive when satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let scale = self
            .coeffs
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1.0);
        let lhs: f64 = self.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
        let d = (lhs - self.rhs) / scale;
        match self.rel {
            Rel::Le => d,
            Rel::Ge => -d,
            Rel::Eq => d.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub names: Vec<String>,
    pub bounds: Vec<(f64, f64)>,
    pub constraints: Vec<Constraint>,
    pub objective: Option<(Vec<f64>, Direction)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Feasible { x: Vec<f64>, objective: f64 },
    Infeasible,
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LpOutcome::Feasible { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("row {row} has {got} coefficients, expected {expected}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("variable {0} has invalid or infinite bounds")]
    InvalidBounds(usize),
    #[error("solution failed re-verification on row {row} (violation {violation:e})")]
    VerificationFailed { row: usize, violation: f64 },
}

impl LinearProgram {
    pub fn new(names: Vec<String>, bounds: Vec<(f64, f64)>) -> Self {
        LinearProgram {
            names,
            bounds,
            constraints: Vec::new(),
            objective: None,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.bounds.len()
    }

    pub fn add(&mut self, coeffs: Vec<f64>, rel: Rel, rhs: f64) {
        self.constraints.push(Constraint::new(coeffs, rel, rhs));
    }

    pub fn maximize(&mut self, c: Vec<f64>) {
        self.objective = Some((c, Direction::Maximize));
    }

    pub fn minimize(&mut self, c: Vec<f64>) {
        self.objective = Some((c, Direction::Minimize));
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        for (i, (l, u)) in self.bounds.iter().enumerate() {
            if !(l.is_finite() && u.is_finite() && l <= u) {
                return Err(LpError::InvalidBounds(i));
            }
        }
        for (row, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::DimensionMismatch {
                    row,
                    expected: n,
                    got: c.coeffs.len(),
                });
            }
        }
        if let Some((c, _)) = &self.objective {
            if c.len() != n {
                return Err(LpError::DimensionMismatch {
                    row: usize::MAX,
                    expected: n,
                    got: c.len(),
                });
            }
        }
        Ok(())
    }

    /// Index and amount of the worst violated row at `x`.
    pub fn worst_violation(&self, x: &[f64]) -> Option<(usize, f64)> {
        self.constraints
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.violation(x)))
            .filter(|(_, v)| *v > VERIFY_TOL)
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
    }

    /// Plain-text tableau dump for debugging.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let name = |i: usize| {
            self.names
                .get(i)
                .cloned()
                .unwrap_or_else(|| format!("v{i}"))
        };
        if let Some((c, dir)) = &self.objective {
            let _ = write!(
                s,
                "{} ",
                if *dir == Direction::Maximize {
                    "max"
                } else {
                    "min"
                }
            );
            for (i, v) in c.iter().enumerate().filter(|(_, v)| **v != 0.0) {
                let _ = write!(s, "{v:+} {} ", name(i));
            }
            s.push('\n');
        }
        for c in &self.constraints {
            for (i, v) in c.coeffs.iter().enumerate().filter(|(_, v)| **v != 0.0) {
                let _ = write!(s, "{v:+} {} ", name(i));
            }
            let rel = match c.rel {
                Rel::Le => "<=",
                Rel::Ge => ">=",
                Rel::Eq => "=",
            };
            let _ = writeln!(s, "{rel} {}", c.rhs);
        }
        for (i, (l, u)) in self.bounds.iter().enumerate() {
            let _ = writeln!(s, "{l} <= {} <= {u}", name(i));
        }
        s
    }
}

/// Solves the LP over all rows.
pub fn solve(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    lp.validate()?;
    let rows: Vec<usize> = (0..lp.constraints.len()).collect();
    let out = solve_rows(lp, &rows)?;
    if let LpOutcome::Feasible { x, .. } = &out {
        verify(lp, x)?;
    }
    Ok(out)
}

/// Row generation: solves on a growing subset of rows, adding the most
/// violated rows until the subset solution satisfies every row. Infeasible
/// on a subset is infeasible on the whole.
pub fn solve_rowgen(
    lp: &LinearProgram,
    initial: usize,
    batch: usize,
) -> Result<LpOutcome, LpError> {
    lp.validate()?;
    let m = lp.constraints.len();
    let mut active: Vec<bool> = vec![false; m];
    // spread the seed rows over the whole list
    let init = initial.min(m);
    for k in 0..init {
        active[k * m / init.max(1)] = true;
    }
    loop {
        let rows: Vec<usize> = (0..m).filter(|i| active[*i]).collect();
        let out = solve_rows(lp, &rows)?;
        let LpOutcome::Feasible { x, .. } = &out else {
            return Ok(out);
        };
        let mut viol: Vec<(usize, f64)> = (0..m)
            .filter(|i| !active[*i])
            .map(|i| (i, lp.constraints[i].violation(x)))
            .filter(|(_, v)| *v > VERIFY_TOL * 0.1)
            .collect();
        if viol.is_empty() {
            verify(lp, x)?;
            return Ok(out);
        }
        viol.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (i, _) in viol.into_iter().take(batch.max(1)) {
            active[i] = true;
        }
    }
}

fn verify(lp: &LinearProgram, x: &[f64]) -> Result<(), LpError> {
    for (i, (l, u)) in lp.bounds.iter().enumerate() {
        let tol = VERIFY_TOL * l.abs().max(u.abs()).max(1.0);
        if x[i] < l - tol || x[i] > u + tol {
            return Err(LpError::VerificationFailed {
                row: usize::MAX - i,
                violation: (l - x[i]).max(x[i] - u),
            });
        }
    }
    if let Some((row, violation)) = lp.worst_violation(x) {
        return Err(LpError::VerificationFailed { row, violation });
    }
    Ok(())
}

struct Tableau {
    /// `m + 1` rows; the last one holds reduced costs. Last column is rhs.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        let width = self.cols + 1;
        {
            let row = &mut self.t[r];
            for v in row.iter_mut().take(width) {
                *v /= p;
            }
            row[c] = 1.0;
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f == 0.0 {
                continue;
            }
            for (v, pv) in row.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            row[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn set_costs(&mut self, cost: &[f64]) {
        let m = self.basis.len();
        let mut obj = vec![0.0; self.cols + 1];
        obj[..self.cols].copy_from_slice(cost);
        for i in 0..m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (o, v) in obj.iter_mut().zip(&self.t[i]) {
                    *o -= cb * v;
                }
            }
        }
        self.t[m] = obj;
    }

    /// Minimizes the current cost row with Bland's rule.
    fn run(&mut self, allowed: &[bool]) -> Result<(), LpError> {
        let m = self.basis.len();
        let limit = 200_000 + 50 * (m + self.cols);
        for _ in 0..limit {
            let entering = (0..self.cols).find(|&j| allowed[j] && self.t[m][j] < -COST_TOL);
            let Some(c) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            let mut tiny = false;
            for i in 0..m {
                let a = self.t[i][c];
                if a > PIVOT_TOL {
                    let ratio = self.t[i][self.cols].max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-14 * br.abs().max(1.0)
                                || (ratio <= br + 1e-14 * br.abs().max(1.0)
                                    && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                } else if a > 0.0 {
                    tiny = true;
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None if tiny => {
                    return Err(LpError::NumericalBreakdown(format!(
                        "pivot below {PIVOT_TOL:e} in column {c}"
                    )))
                }
                None => {
                    return Err(LpError::NumericalBreakdown(format!(
                        "unbounded direction in column {c}"
                    )))
                }
            }
        }
        Err(LpError::NumericalBreakdown("iteration limit".into()))
    }
}

fn solve_rows(lp: &LinearProgram, rows: &[usize]) -> Result<LpOutcome, LpError> {
    let n = lp.num_vars();
    // rows in shifted variables s = x - l, scaled and with rhs >= 0
    let mut body: Vec<(Vec<f64>, Rel, f64)> = Vec::new();
    for &ri in rows {
        let c = &lp.constraints[ri];
        let shift: f64 = c
            .coeffs
            .iter()
            .zip(&lp.bounds)
            .map(|(a, (l, _))| a * l)
            .sum();
        let mut a = c.coeffs.clone();
        let mut b = c.rhs - shift;
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            let ok = match c.rel {
                Rel::Le => b >= -VERIFY_TOL,
                Rel::Ge => b <= VERIFY_TOL,
                Rel::Eq => b.abs() <= VERIFY_TOL,
            };
            if !ok {
                return Ok(LpOutcome::Infeasible);
            }
            continue;
        }
        a.iter_mut().for_each(|v| *v /= scale);
        b /= scale;
        body.push((a, c.rel, b));
    }
    for j in 0..n {
        let w = lp.bounds[j].1 - lp.bounds[j].0;
        let mut a = vec![0.0; n];
        a[j] = 1.0;
        body.push((a, Rel::Le, w));
    }
    for r in body.iter_mut() {
        if r.2 < 0.0 {
            r.0.iter_mut().for_each(|v| *v = -*v);
            r.2 = -r.2;
            r.1 = match r.1 {
                Rel::Le => Rel::Ge,
                Rel::Ge => Rel::Le,
                Rel::Eq => Rel::Eq,
            };
        }
    }
    let m = body.len();
    let n_slack = body.iter().filter(|r| r.1 != Rel::Eq).count();
    let n_art = body.iter().filter(|r| r.1 != Rel::Le).count();
    let cols = n + n_slack + n_art;
    let mut t = vec![vec![0.0; cols + 1]; m + 1];
    let mut basis = vec![0; m];
    let mut is_art = vec![false; cols];
    let (mut sk, mut ak) = (n, n + n_slack);
    for (i, (a, rel, b)) in body.iter().enumerate() {
        t[i][..n].copy_from_slice(a);
        t[i][cols] = *b;
        match rel {
            Rel::Le => {
                t[i][sk] = 1.0;
                basis[i] = sk;
                sk += 1;
            }
            Rel::Ge => {
                t[i][sk] = -1.0;
                sk += 1;
                t[i][ak] = 1.0;
                is_art[ak] = true;
                basis[i] = ak;
                ak += 1;
            }
            Rel::Eq => {
                t[i][ak] = 1.0;
                is_art[ak] = true;
                basis[i] = ak;
                ak += 1;
            }
        }
    }
    let original: Vec<Vec<f64>> = t[..m].to_vec();
    let mut tab = Tableau { t, basis, cols };

    if n_art > 0 {
        let cost: Vec<f64> = (0..cols)
            .map(|j| if is_art[j] { 1.0 } else { 0.0 })
            .collect();
        tab.set_costs(&cost);
        tab.run(&vec![true; cols])?;
        let phase1 = -tab.t[m][cols];
        if phase1 > INFEASIBILITY_TOL {
            return Ok(LpOutcome::Infeasible);
        }
        // drive zero-level artificials out of the basis
        for i in 0..m {
            if is_art[tab.basis[i]] {
                if let Some(c) = (0..cols).find(|&j| !is_art[j] && tab.t[i][j].abs() > 1e-9) {
                    tab.pivot(i, c);
                }
            }
        }
    }
    let allowed: Vec<bool> = is_art.iter().map(|a| !a).collect();
    let mut cost = vec![0.0; cols];
    if let Some((c, dir)) = &lp.objective {
        for j in 0..n {
            cost[j] = match dir {
                Direction::Minimize => c[j],
                Direction::Maximize => -c[j],
            };
        }
    }
    tab.set_costs(&cost);
    tab.run(&allowed)?;

    let mut s = vec![0.0; cols];
    for i in 0..m {
        s[tab.basis[i]] = tab.t[i][cols];
    }
    if m <= REFINE_LIMIT {
        if let Some(refined) = refine(&original, &tab.basis, cols) {
            s = refined;
        }
    }
    let x: Vec<f64> = (0..n)
        .map(|j| {
            let (l, u) = lp.bounds[j];
            (l + s[j].max(0.0)).clamp(l, u)
        })
        .collect();
    let objective = lp
        .objective
        .as_ref()
        .map_or(0.0, |(c, _)| c.iter().zip(&x).map(|(a, v)| a * v).sum());
    Ok(LpOutcome::Feasible { x, objective })
}

/// Recomputes the basic solution `B s_B = b` from the unpivoted rows.
fn refine(original: &[Vec<f64>], basis: &[usize], cols: usize) -> Option<Vec<f64>> {
    let m = basis.len();
    let mut a: Vec<Vec<f64>> = original
        .iter()
        .map(|row| {
            let mut r: Vec<f64> = basis.iter().map(|&j| row[j]).collect();
            r.push(row[cols]);
            r
        })
        .collect();
    for k in 0..m {
        let p = (k..m).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-13 {
            return None;
        }
        a.swap(k, p);
        let pivot_row = a[k].clone();
        for row in a.iter_mut().skip(k + 1) {
            let f = row[k] / pivot_row[k];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row).skip(k) {
                    *v -= f * pv;
                }
            }
        }
    }
    let mut sol = vec![0.0; m];
    for k in (0..m).rev() {
        let mut acc = a[k][m];
        for j in k + 1..m {
            acc -= a[k][j] * sol[j];
        }
        sol[k] = acc / a[k][k];
    }
    let mut s = vec![0.0; cols];
    for (i, &j) in basis.iter().enumerate() {
        s[j] = sol[i];
    }
    Some(s)
}
