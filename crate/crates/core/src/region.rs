//! Semialgebraic regions: unions of clauses, each a box intersected with
//! polynomial (or general expression) constraints `g(x) ≥ 0`.

use rand::Rng as _;
use thiserror::Error;

use crate::expr::{Containment, Expr, Interval, IntervalBox, NoRegions, RegionEnv, RegionId};
use crate::rng;

/// Cap on rejection-sampling attempts per call.
pub const SAMPLE_ATTEMPTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub bbox: IntervalBox,
    /// Constraints `g(x) ≥ 0` over `x1..xn`.
    pub constraints: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Region {
    pub clauses: Vec<Clause>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("rejection sampling exceeded {0} attempts")]
    EmptyRegionBudgetExceeded(usize),
}

impl Clause {
    pub fn from_box(bbox: IntervalBox) -> Self {
        Clause {
            bbox,
            constraints: Vec::new(),
        }
    }

    pub fn point(p: &[f64]) -> Self {
        Clause::from_box(IntervalBox(p.iter().map(|v| Interval::point(*v)).collect()))
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.bbox.contains_point(p)
            && self
                .constraints
                .iter()
                .all(|g| g.eval(p, &NoRegions) >= 0.0)
    }

    pub fn classify(&self, bx: &[Interval]) -> Containment {
        let mut inside = true;
        for (iv, b) in bx.iter().zip(&self.bbox.0) {
            if iv.hi < b.lo || iv.lo > b.hi {
                return Containment::Outside;
            }
            if iv.lo < b.lo || iv.hi > b.hi {
                inside = false;
            }
        }
        for g in &self.constraints {
            let r = g.enclose(bx, &NoRegions);
            if r.hi < 0.0 {
                return Containment::Outside;
            }
            if r.lo < 0.0 {
                inside = false;
            }
        }
        if inside {
            Containment::Inside
        } else {
            Containment::Straddles
        }
    }
}

impl Region {
    pub fn new(clauses: Vec<Clause>) -> Self {
        Region { clauses }
    }

    pub fn from_box(b: IntervalBox) -> Self {
        Region {
            clauses: vec![Clause::from_box(b)],
        }
    }

    pub fn from_points(points: &[Vec<f64>]) -> Self {
        Region {
            clauses: points.iter().map(|p| Clause::point(p)).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.clauses.iter().any(|c| c.contains(p))
    }

    pub fn classify(&self, bx: &[Interval]) -> Containment {
        let mut all_out = true;
        for c in &self.clauses {
            match c.classify(bx) {
                Containment::Inside => return Containment::Inside,
                Containment::Straddles => all_out = false,
                Containment::Outside => {}
            }
        }
        if all_out {
            Containment::Outside
        } else {
            Containment::Straddles
        }
    }

    pub fn bounding_box(&self) -> Option<IntervalBox> {
        let mut it = self.clauses.iter();
        let first = it.next()?.bbox.clone();
        Some(it.fold(first, |acc, c| {
            IntervalBox(
                acc.0
                    .iter()
                    .zip(&c.bbox.0)
                    .map(|(a, b)| a.hull(b))
                    .collect(),
            )
        }))
    }

    /// Clause-box faces crossing `bx[dim]` strictly inside it.
    pub fn cut_points(&self, bx: &[Interval], dim: usize) -> Vec<f64> {
        let iv = bx[dim];
        let mut cuts: Vec<f64> = Vec::new();
        for c in &self.clauses {
            let b = c.bbox.0[dim];
            if b.lo > iv.lo && b.lo <= iv.hi {
                cuts.push(b.lo);
            }
            if b.hi >= iv.lo && b.hi < iv.hi {
                cuts.push(next_up(b.hi));
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts
    }

    /// Deterministic rejection sampling: a clause is picked uniformly, then a
    /// point uniformly inside its box, accepted if it meets the constraints.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>, SampleError> {
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return Ok(out);
        }
        if self.clauses.is_empty() {
            return Err(SampleError::EmptyRegionBudgetExceeded(0));
        }
        let mut r = rng::seeded(seed);
        let mut attempts = 0;
        while out.len() < count {
            if attempts >= SAMPLE_ATTEMPTS {
                return Err(SampleError::EmptyRegionBudgetExceeded(SAMPLE_ATTEMPTS));
            }
            attempts += 1;
            let k = r.gen_range(0..self.clauses.len());
            let clause = &self.clauses[k];
            let p: Vec<f64> = clause
                .bbox
                .0
                .iter()
                .map(|iv| {
                    let u: f64 = r.gen();
                    (iv.lo + (iv.hi - iv.lo) * u).clamp(iv.lo, iv.hi)
                })
                .collect();
            if clause.contains(&p) {
                out.push(p);
            }
        }
        Ok(out)
    }
}

/// The smallest float strictly greater than `v` (finite inputs).
pub fn next_up(v: f64) -> f64 {
    if v.is_nan() || v == f64::INFINITY {
        return v;
    }
    if v == 0.0 {
        return f64::from_bits(1);
    }
    let bits = v.to_bits();
    if v > 0.0 {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    }
}

/// The largest float strictly less than `v` (finite inputs).
pub fn next_down(v: f64) -> f64 {
    -next_up(-v)
}

/// Named regions of a problem, resolvable from expressions.
#[derive(Debug, Clone, Default)]
pub struct RegionTable {
    names: Vec<String>,
    regions: Vec<Region>,
}

impl RegionTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces a named region.
    pub fn insert(&mut self, name: &str, region: Region) -> RegionId {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            self.regions[i] = region;
            return RegionId(i);
        }
        self.names.push(name.to_string());
        self.regions.push(region);
        RegionId(self.regions.len() - 1)
    }

    pub fn id(&self, name: &str) -> Option<RegionId> {
        self.names.iter().position(|n| n == name).map(RegionId)
    }

    pub fn get(&self, id: RegionId) -> &Region {
        &self.regions[id.0]
    }

    pub fn name(&self, id: RegionId) -> &str {
        &self.names[id.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }
}

impl RegionEnv for RegionTable {
    fn contains(&self, region: RegionId, point: &[f64]) -> bool {
        self.regions[region.0].contains(point)
    }

    fn classify(&self, region: RegionId, bx: &[Interval]) -> Containment {
        self.regions[region.0].classify(bx)
    }

    fn cut_points(&self, region: RegionId, bx: &[Interval], dim: usize) -> Vec<f64> {
        self.regions[region.0].cut_points(bx, dim)
    }
}
