//! Soft concurrent constraint programming: c-semirings, soft constraints,
//! soft CSPs, the scc language, its transition system and observables.

pub mod engine;
pub mod lang;
pub mod observe;
pub mod report;
pub mod scsp;
pub mod semiring;
pub mod softcon;
