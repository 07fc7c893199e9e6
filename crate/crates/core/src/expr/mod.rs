//! Scalar expressions over real variables.
//!
//! An [`Expr`] is an immutable tree. Variables are referenced by index into
//! the [`VarContext`] the expression was parsed against; region indicators
//! are resolved through a [`RegionEnv`] at evaluation time.

mod affine;
pub mod interval;
mod parse;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

pub use affine::Affine;
pub use interval::{Interval, IntervalBox};
pub use parse::{parse_expr, parse_with};

/// Index of a named region in the enclosing problem's region table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegionId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    /// 1 when the argument vector lies in the region, else 0.
    Indicator(RegionId, Vec<Expr>),
}

/// Three-valued containment of a box in a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Containment {
    Inside,
    Outside,
    Straddles,
}

/// Resolves region indicators during evaluation.
pub trait RegionEnv: Sync {
    fn contains(&self, region: RegionId, point: &[f64]) -> bool;
    fn classify(&self, region: RegionId, bx: &[Interval]) -> Containment;
    /// Coordinates at which the region's boundary crosses dimension `dim`
    /// of `bx` strictly inside it. Used to split boxes along indicators.
    fn cut_points(&self, _region: RegionId, _bx: &[Interval], _dim: usize) -> Vec<f64> {
        Vec::new()
    }
}

/// A region environment with no regions: indicators cannot be evaluated.
pub struct NoRegions;

impl RegionEnv for NoRegions {
    fn contains(&self, region: RegionId, _point: &[f64]) -> bool {
        panic!("unresolved region {region:?}")
    }
    fn classify(&self, region: RegionId, _bx: &[Interval]) -> Containment {
        panic!("unresolved region {region:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {position}: {message}")]
    SyntaxError { position: usize, message: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown region `{0}`")]
    UnknownRegion(String),
    #[error("exponent must be a non-negative integer")]
    NegativeExponent,
    #[error("missing assignment for `{0}`")]
    MissingAssignment(String),
    #[error("box has {got} dimensions, expression needs {need}")]
    DimensionMismatch { need: usize, got: usize },
    #[error("expression uses region indicators but no regions are available")]
    UnresolvedRegion,
}

/// Variable names, region names, and named constants visible to the parser.
#[derive(Debug, Clone, Default)]
pub struct VarContext {
    pub vars: Vec<String>,
    pub regions: Vec<String>,
    pub constants: HashMap<String, f64>,
    /// Dimension of one argument block (`x1..xn`), used by `ind(r, y)`.
    pub block_dim: usize,
}

impl VarContext {
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Self {
        VarContext {
            vars: names.iter().map(|s| s.as_ref().to_string()).collect(),
            block_dim: names.len(),
            ..Default::default()
        }
    }

    /// Variables `x1..xn`, then `y1..yn`, then `z1..zn` for up to three blocks.
    pub fn blocks(n: usize, blocks: usize) -> Self {
        let mut vars = Vec::with_capacity(n * blocks);
        for b in ["x", "y", "z"].iter().take(blocks) {
            for k in 1..=n {
                vars.push(format!("{b}{k}"));
            }
        }
        VarContext {
            vars,
            block_dim: n,
            ..Default::default()
        }
    }

    pub fn with_regions<S: AsRef<str>>(mut self, regions: &[S]) -> Self {
        self.regions = regions.iter().map(|s| s.as_ref().to_string()).collect();
        self
    }

    pub fn with_constants(mut self, constants: &HashMap<String, f64>) -> Self {
        self.constants
            .extend(constants.iter().map(|(k, v)| (k.clone(), *v)));
        self
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn region_index(&self, name: &str) -> Option<RegionId> {
        self.regions.iter().position(|r| r == name).map(RegionId)
    }

    /// Display adapter for an expression in this context.
    pub fn show<'a>(&'a self, e: &'a Expr) -> Shown<'a> {
        Shown { ctx: self, expr: e }
    }
}

impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(a: Expr, k: u32) -> Expr {
        match a {
            Expr::Const(x) => Expr::Const(x.powi(k as i32)),
            _ => Expr::Pow(Box::new(a), k),
        }
    }

    pub fn sin(a: Expr) -> Expr {
        match a {
            Expr::Const(x) => Expr::Const(x.sin()),
            _ => Expr::Sin(Box::new(a)),
        }
    }

    pub fn cos(a: Expr) -> Expr {
        match a {
            Expr::Const(x) => Expr::Const(x.cos()),
            _ => Expr::Cos(Box::new(a)),
        }
    }

    pub fn max(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x.max(*y)),
            _ => Expr::Max(Box::new(a), Box::new(b)),
        }
    }

    pub fn min(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x.min(*y)),
            _ => Expr::Min(Box::new(a), Box::new(b)),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(x) => Expr::Const(-x),
            _ => Expr::mul(Expr::Const(-1.0), a),
        }
    }

    /// Linear combination `Σ c_i e_i`, skipping zero coefficients.
    pub fn linear_combination<'a>(terms: impl IntoIterator<Item = (f64, &'a Expr)>) -> Expr {
        let mut acc: Option<Expr> = None;
        for (c, e) in terms {
            if c == 0.0 {
                continue;
            }
            let term = if c == 1.0 {
                e.clone()
            } else {
                Expr::mul(Expr::Const(c), e.clone())
            };
            acc = Some(match acc {
                None => term,
                Some(a) => Expr::add(a, term),
            });
        }
        acc.unwrap_or(Expr::Const(0.0))
    }

    pub fn free_vars(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Var(i) = e {
                out.insert(*i);
            }
        });
        out
    }

    /// One past the largest variable index used, or 0 for closed terms.
    pub fn arity(&self) -> usize {
        self.free_vars().iter().next_back().map_or(0, |m| m + 1)
    }

    pub fn regions(&self) -> BTreeSet<RegionId> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Indicator(r, _) = e {
                out.insert(*r);
            }
        });
        out
    }

    pub fn has_indicators(&self) -> bool {
        !self.regions().is_empty()
    }

    fn visit(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Const(_) | Expr::Var(_) => {}
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Max(a, b)
            | Expr::Min(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Pow(a, _) | Expr::Sin(a) | Expr::Cos(a) => a.visit(f),
            Expr::Indicator(_, args) => args.iter().for_each(|a| a.visit(f)),
        }
    }

    /// Replaces every variable `i` by `sub(i)`, re-folding constants.
    pub fn substitute(&self, sub: &dyn Fn(usize) -> Expr) -> Expr {
        match self {
            Expr::Const(v) => Expr::Const(*v),
            Expr::Var(i) => sub(*i),
            Expr::Add(a, b) => Expr::add(a.substitute(sub), b.substitute(sub)),
            Expr::Sub(a, b) => Expr::sub(a.substitute(sub), b.substitute(sub)),
            Expr::Mul(a, b) => Expr::mul(a.substitute(sub), b.substitute(sub)),
            Expr::Pow(a, k) => Expr::pow(a.substitute(sub), *k),
            Expr::Sin(a) => Expr::sin(a.substitute(sub)),
            Expr::Cos(a) => Expr::cos(a.substitute(sub)),
            Expr::Max(a, b) => Expr::max(a.substitute(sub), b.substitute(sub)),
            Expr::Min(a, b) => Expr::min(a.substitute(sub), b.substitute(sub)),
            Expr::Indicator(r, args) => {
                Expr::Indicator(*r, args.iter().map(|a| a.substitute(sub)).collect())
            }
        }
    }

    /// Re-targets argument blocks of width `n`: variable `b*n + k` becomes
    /// `blocks[b]*n + k`.
    pub fn remap_blocks(&self, n: usize, blocks: &[usize]) -> Expr {
        self.substitute(&|i| Expr::Var(blocks[i / n] * n + i % n))
    }

    /// Point evaluation. Variables beyond `vals` evaluate as NaN; use
    /// [`Expr::eval_point`] for a checked variant.
    pub fn eval(&self, vals: &[f64], env: &dyn RegionEnv) -> f64 {
        match self {
            Expr::Const(v) => *v,
            Expr::Var(i) => vals.get(*i).copied().unwrap_or(f64::NAN),
            Expr::Add(a, b) => a.eval(vals, env) + b.eval(vals, env),
            Expr::Sub(a, b) => a.eval(vals, env) - b.eval(vals, env),
            Expr::Mul(a, b) => a.eval(vals, env) * b.eval(vals, env),
            Expr::Pow(a, k) => a.eval(vals, env).powi(*k as i32),
            Expr::Sin(a) => a.eval(vals, env).sin(),
            Expr::Cos(a) => a.eval(vals, env).cos(),
            Expr::Max(a, b) => a.eval(vals, env).max(b.eval(vals, env)),
            Expr::Min(a, b) => a.eval(vals, env).min(b.eval(vals, env)),
            Expr::Indicator(r, args) => {
                let p: Vec<f64> = args.iter().map(|a| a.eval(vals, env)).collect();
                if env.contains(*r, &p) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Checked point evaluation from a name → value assignment.
    pub fn eval_point(
        &self,
        ctx: &VarContext,
        assignment: &HashMap<String, f64>,
        env: Option<&dyn RegionEnv>,
    ) -> Result<f64, ExprError> {
        let mut vals = vec![f64::NAN; self.arity()];
        for i in self.free_vars() {
            let name = ctx.vars.get(i).cloned().unwrap_or_else(|| format!("#{i}"));
            vals[i] = *assignment
                .get(&name)
                .ok_or(ExprError::MissingAssignment(name))?;
        }
        match env {
            Some(env) => Ok(self.eval(&vals, env)),
            None if self.has_indicators() => Err(ExprError::UnresolvedRegion),
            None => Ok(self.eval(&vals, &NoRegions)),
        }
    }

    /// Natural interval extension; indicators are three-valued.
    pub fn eval_box(&self, bx: &[Interval], env: &dyn RegionEnv) -> Result<Interval, ExprError> {
        if self.arity() > bx.len() {
            return Err(ExprError::DimensionMismatch {
                need: self.arity(),
                got: bx.len(),
            });
        }
        Ok(self.ieval(bx, env))
    }

    pub(crate) fn ieval(&self, bx: &[Interval], env: &dyn RegionEnv) -> Interval {
        match self {
            Expr::Const(v) => Interval::point(*v),
            Expr::Var(i) => bx[*i],
            Expr::Add(a, b) => a.ieval(bx, env).add(b.ieval(bx, env)),
            Expr::Sub(a, b) => a.ieval(bx, env).sub(b.ieval(bx, env)),
            Expr::Mul(a, b) => a.ieval(bx, env).mul(b.ieval(bx, env)),
            Expr::Pow(a, k) => a.ieval(bx, env).powi(*k),
            Expr::Sin(a) => a.ieval(bx, env).sin(),
            Expr::Cos(a) => a.ieval(bx, env).cos(),
            Expr::Max(a, b) => a.ieval(bx, env).max(b.ieval(bx, env)),
            Expr::Min(a, b) => a.ieval(bx, env).min(b.ieval(bx, env)),
            Expr::Indicator(r, args) => {
                let arg_box: Vec<Interval> = args.iter().map(|a| a.ieval(bx, env)).collect();
                indicator_range(env.classify(*r, &arg_box))
            }
        }
    }

    /// Enclosure combining the interval extension with affine arithmetic,
    /// intersected node by node. Tighter than [`Expr::eval_box`] whenever
    /// variables cancel, e.g. `(x + 1) - x - 1` encloses to `[≈0, ≈0]`.
    pub fn enclose(&self, bx: &[Interval], env: &dyn RegionEnv) -> Interval {
        self.aeval(bx, env).0
    }

    fn aeval(&self, bx: &[Interval], env: &dyn RegionEnv) -> (Interval, Affine) {
        let n = bx.len();
        let combine = |iv: Interval, af: Affine| {
            let r = af.range();
            let tight = iv.intersect(&r).unwrap_or(iv);
            (tight, af)
        };
        match self {
            Expr::Const(v) => (Interval::point(*v), Affine::constant(*v, n)),
            Expr::Var(i) => (bx[*i], Affine::variable(*i, bx[*i], n)),
            Expr::Add(a, b) => {
                let (ia, aa) = a.aeval(bx, env);
                let (ib, ab) = b.aeval(bx, env);
                combine(ia.add(ib), aa.add(&ab))
            }
            Expr::Sub(a, b) => {
                let (ia, aa) = a.aeval(bx, env);
                let (ib, ab) = b.aeval(bx, env);
                combine(ia.sub(ib), aa.sub(&ab))
            }
            Expr::Mul(a, b) => {
                let (ia, aa) = a.aeval(bx, env);
                let (ib, ab) = b.aeval(bx, env);
                combine(ia.mul(ib), aa.mul(&ab))
            }
            Expr::Pow(a, k) => {
                let (ia, aa) = a.aeval(bx, env);
                let iv = ia.powi(*k);
                let mut af = Affine::constant(1.0, n);
                for _ in 0..*k {
                    af = af.mul(&aa);
                }
                combine(iv, af)
            }
            Expr::Sin(a) => {
                let (ia, aa) = a.aeval(bx, env);
                let iv = ia.sin();
                combine(iv, aa.sin_cos(iv, false))
            }
            Expr::Cos(a) => {
                let (ia, aa) = a.aeval(bx, env);
                let iv = ia.cos();
                combine(iv, aa.sin_cos(iv, true))
            }
            Expr::Max(a, b) | Expr::Min(a, b) => {
                let is_max = matches!(self, Expr::Max(..));
                let (ia, aa) = a.aeval(bx, env);
                let (ib, ab) = b.aeval(bx, env);
                let (iv, dominant) = if is_max {
                    let iv = ia.max(ib);
                    let d = if ia.lo >= ib.hi {
                        Some(aa.clone())
                    } else if ib.lo >= ia.hi {
                        Some(ab.clone())
                    } else {
                        None
                    };
                    (iv, d)
                } else {
                    let iv = ia.min(ib);
                    let d = if ia.hi <= ib.lo {
                        Some(aa.clone())
                    } else if ib.hi <= ia.lo {
                        Some(ab.clone())
                    } else {
                        None
                    };
                    (iv, d)
                };
                combine(iv, dominant.unwrap_or_else(|| Affine::from_interval(iv, n)))
            }
            Expr::Indicator(..) => {
                let iv = self.ieval(bx, env);
                (iv, Affine::from_interval(iv, n))
            }
        }
    }
}

fn indicator_range(c: Containment) -> Interval {
    match c {
        Containment::Inside => Interval::point(1.0),
        Containment::Outside => Interval::point(0.0),
        Containment::Straddles => Interval { lo: 0.0, hi: 1.0 },
    }
}

/// Display adapter produced by [`VarContext::show`]. Output re-parses to a
/// structurally identical tree in the same context.
pub struct Shown<'a> {
    ctx: &'a VarContext,
    expr: &'a Expr,
}

impl fmt::Display for Shown<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.ctx, self.expr)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, ctx: &VarContext, e: &Expr) -> fmt::Result {
    let bin = |f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr| -> fmt::Result {
        write!(f, "(")?;
        write_expr(f, ctx, a)?;
        write!(f, " {op} ")?;
        write_expr(f, ctx, b)?;
        write!(f, ")")
    };
    let call = |f: &mut fmt::Formatter<'_>, name: &str, args: &[&Expr]| -> fmt::Result {
        write!(f, "{name}(")?;
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write_expr(f, ctx, a)?;
        }
        write!(f, ")")
    };
    match e {
        Expr::Const(v) if v.is_sign_negative() => write!(f, "(-{:?})", -v),
        Expr::Const(v) => write!(f, "{v:?}"),
        Expr::Var(i) => match ctx.vars.get(*i) {
            Some(name) => write!(f, "{name}"),
            None => write!(f, "#{i}"),
        },
        Expr::Add(a, b) => bin(f, a, "+", b),
        Expr::Sub(a, b) => bin(f, a, "-", b),
        Expr::Mul(a, b) => bin(f, a, "*", b),
        Expr::Pow(a, k) => {
            write!(f, "(")?;
            write_expr(f, ctx, a)?;
            write!(f, " ^ {k})")
        }
        Expr::Sin(a) => call(f, "sin", &[a]),
        Expr::Cos(a) => call(f, "cos", &[a]),
        Expr::Max(a, b) => call(f, "max", &[a, b]),
        Expr::Min(a, b) => call(f, "min", &[a, b]),
        Expr::Indicator(r, args) => {
            let name = ctx
                .regions
                .get(r.0)
                .cloned()
                .unwrap_or_else(|| format!("#{}", r.0));
            if let Some(block) = var_block(ctx, args) {
                if block == 0 {
                    write!(f, "ind({name})")
                } else {
                    write!(f, "ind({name}, {})", ["x", "y", "z"][block])
                }
            } else {
                write!(f, "ind({name}; ")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write_expr(f, ctx, a)?;
                }
                write!(f, ")")
            }
        }
    }
}

/// The block index when `args` is exactly one whole variable block.
fn var_block(ctx: &VarContext, args: &[Expr]) -> Option<usize> {
    let n = ctx.block_dim;
    if n == 0 || args.len() != n {
        return None;
    }
    let Expr::Var(first) = args[0] else {
        return None;
    };
    if first % n != 0 || first / n > 2 {
        return None;
    }
    let named = |i: usize| ctx.vars.get(i).map(String::as_str);
    let letter = ["x", "y", "z"][first / n];
    let ok = args.iter().enumerate().all(|(k, a)| {
        matches!(a, Expr::Var(i) if *i == first + k && named(*i) == Some(&format!("{letter}{}", k + 1)))
    });
    ok.then_some(first / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct HalfLine;
    impl RegionEnv for HalfLine {
        fn contains(&self, _r: RegionId, p: &[f64]) -> bool {
            p[0] >= 1.0
        }
        fn classify(&self, _r: RegionId, bx: &[Interval]) -> Containment {
            if bx[0].lo >= 1.0 {
                Containment::Inside
            } else if bx[0].hi < 1.0 {
                Containment::Outside
            } else {
                Containment::Straddles
            }
        }
    }

    fn ctx() -> VarContext {
        VarContext::blocks(1, 2).with_regions(&["r"])
    }

    #[test]
    fn point_eval_of_linear_certificate() {
        let c = ctx();
        let e = parse_with("10 - 4.094*y1", &c).unwrap();
        let mut a = HashMap::new();
        a.insert("y1".to_string(), 0.0);
        assert_eq!(e.eval_point(&c, &a, None).unwrap(), 10.0);
    }

    #[test]
    fn missing_assignment_is_reported() {
        let c = ctx();
        let e = parse_with("x1 + y1", &c).unwrap();
        let mut a = HashMap::new();
        a.insert("x1".to_string(), 1.0);
        assert_eq!(
            e.eval_point(&c, &a, None),
            Err(ExprError::MissingAssignment("y1".into()))
        );
    }

    #[test]
    fn indicator_point_and_box() {
        let c = ctx();
        let e = parse_with("ind(r)", &c).unwrap();
        assert_eq!(e.eval(&[2.0], &HalfLine), 1.0);
        assert_eq!(e.eval(&[0.0], &HalfLine), 0.0);
        let inside = e.eval_box(&[Interval::new(1.0, 2.0)], &HalfLine).unwrap();
        assert_eq!((inside.lo, inside.hi), (1.0, 1.0));
        let out = e.eval_box(&[Interval::new(-1.0, 0.5)], &HalfLine).unwrap();
        assert_eq!((out.lo, out.hi), (0.0, 0.0));
        let s = e.eval_box(&[Interval::new(0.0, 2.0)], &HalfLine).unwrap();
        assert_eq!((s.lo, s.hi), (0.0, 1.0));
    }

    #[test]
    fn eval_box_dimension_mismatch() {
        let c = ctx();
        let e = parse_with("x1 + y1", &c).unwrap();
        let err = e.eval_box(&[Interval::point(0.0)], &NoRegions).unwrap_err();
        assert_eq!(err, ExprError::DimensionMismatch { need: 2, got: 1 });
    }

    #[test]
    fn affine_enclosure_cancels_dependency() {
        let c = VarContext::blocks(1, 1);
        let e = parse_with("(x1 + 1) - x1 - 1", &c).unwrap();
        let bx = [Interval::new(-5.0, 7.0)];
        let plain = e.eval_box(&bx, &NoRegions).unwrap();
        let tight = e.enclose(&bx, &NoRegions);
        assert!(plain.lo < -11.0);
        assert!(tight.lo > -1e-9 && tight.hi < 1e-9, "{tight}");
    }

    #[test]
    fn remap_blocks_moves_variables() {
        let c = VarContext::blocks(1, 3);
        let e = parse_with("x1 - y1", &c).unwrap();
        let moved = e.remap_blocks(1, &[1, 2]);
        assert_eq!(moved, parse_with("y1 - z1", &c).unwrap());
    }
}
