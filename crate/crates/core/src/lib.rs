//! Decides nonemptiness of higher-order grammars by repeatedly lowering their
//! order until a plain order-0 grammar remains.
//!
//! The main entry points are [`pipeline::solve`] for the decision procedure,
//! [`semantics::decide_convergence`] for an independent reduction-based oracle,
//! and [`textio`] for the `.hog` text format.

pub mod cli;
pub mod grammar;
pub mod harness;
pub mod normalize;
pub mod pipeline;
pub mod semantics;
pub mod symbol;
pub mod textio;
pub mod transform;
pub mod term;
pub mod types;

pub use grammar::{Grammar, GrammarBuilder, GrammarError, Rule, VarTypes};
pub use symbol::Symbol;
pub use term::{Term, TermKind};
pub use types::SimpleType;
