//! Property checks shared by the suites and the acceptance run. Each check
//! panics on the first violation.
#![allow(dead_code)]

pub mod automata;
pub mod certificates;
pub mod falsifier;
pub mod lp_oracle;
pub mod symbolic;
pub mod systems;
