//! Closure certificates, barrier certificates and the state-triplet method
//! for discrete-time dynamical systems.
//!
//! The crate is organized bottom-up: [`expr`] holds the expression language
//! and its interval/affine enclosures, [`lp`] and [`falsifier`] are the two
//! numeric engines, and [`certificate`], [`cegis`] and [`triplet`] build on
//! them. Problems are loaded from JSON by [`problem`].

pub mod automata;
pub mod cegis;
pub mod certificate;
pub mod expr;
pub mod falsifier;
pub mod lp;
pub mod problem;
pub mod region;
pub mod rng;
pub mod system;
pub mod triplet;

pub use automata::{Letter, Nba, Triplet};
pub use certificate::{CertKind, Certificate, CheckMode, Template, Verdict};
pub use expr::{Expr, Interval, IntervalBox, RegionId, VarContext};
pub use cegis::{synthesize, CegisConfig, SynthError};
pub use problem::{load_problem, load_problem_file, Problem, SpecKind, System};
pub use triplet::{subsume, triplet_verify, TripletConfig, TripletVerification};
pub use region::{Clause, Region, RegionTable};
pub use system::{ContinuousSystem, FiniteSystem};
