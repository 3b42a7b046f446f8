//! Operational semantics: one-step reduction of ground terms to sets of
//! terms, and an exact-when-it-finishes convergence oracle on top of it.

mod ext;
pub mod fixpoint;

use std::collections::HashMap;

pub use ext::{
    decide_ext_convergence, evaluate_ext_convergence, ext_reduce_candidates, is_simplified,
    tr_ext, ExtSystem, ExtTerm,
};
pub use fixpoint::{Evaluation, ReductionSystem, Verdict};

use crate::grammar::Grammar;
use crate::term::{Term, TermKind};

pub const DEFAULT_BUDGET: usize = 100_000;

/// Terms larger than this are not expanded; reaching one makes the verdict
/// inconclusive rather than wrong.
pub const DEFAULT_MAX_TERM_SIZE: u64 = 2_000;

fn dedup(ts: impl IntoIterator<Item = Term>) -> Vec<Term> {
    let mut out: Vec<Term> = Vec::new();
    for t in ts {
        if !out.contains(&t) {
            out.push(t);
        }
    }
    out
}

/// Every set `N` with `t →_G N`:
/// a nonterminal redex gives its instantiated body, `•⟨K…⟩` gives `{K…}`, and
/// `⊕⟨K…⟩` gives one singleton per child. Variables and partial applications
/// have no reductions.
pub fn reduce_candidates(g: &Grammar, t: &Term) -> Vec<Vec<Term>> {
    let (head, args) = t.spine();
    match head.kind() {
        TermKind::Nonterminal(x) => {
            let Some(rule) = g.rule(*x) else { return Vec::new() };
            if rule.params.len() != args.len() {
                return Vec::new();
            }
            let bindings: HashMap<_, _> = rule
                .params
                .iter()
                .map(|(y, _)| *y)
                .zip(args.into_iter().cloned())
                .collect();
            vec![vec![rule.body.substitute(&bindings)]]
        }
        TermKind::Node(ts) if args.is_empty() => vec![dedup(ts.iter().cloned())],
        TermKind::Choice(ts) if args.is_empty() => ts.iter().map(|k| vec![k.clone()]).collect(),
        _ => Vec::new(),
    }
}

/// Plain reduction over one grammar.
pub struct PlainSystem<'g> {
    pub grammar: &'g Grammar,
    pub max_term_size: u64,
}

impl ReductionSystem for PlainSystem<'_> {
    type State = Term;

    fn candidates(&self, t: &Term) -> Vec<Vec<Term>> {
        reduce_candidates(self.grammar, t)
    }

    fn within_limits(&self, t: &Term) -> bool {
        t.size() <= self.max_term_size
    }
}

pub fn evaluate_convergence<'g>(
    g: &'g Grammar,
    t: &Term,
    budget: usize,
) -> Evaluation<PlainSystem<'g>> {
    let sys = PlainSystem { grammar: g, max_term_size: DEFAULT_MAX_TERM_SIZE };
    Evaluation::run(&sys, t.clone(), budget)
}

/// Whether `t` is `G`-convergent, found by tabled least-fixpoint search over
/// at most `budget` distinct terms.
pub fn decide_convergence(g: &Grammar, t: &Term, budget: usize) -> Verdict {
    evaluate_convergence(g, t, budget).verdict()
}

/// [`decide_convergence`] from the start symbol.
pub fn decide_grammar(g: &Grammar, budget: usize) -> Verdict {
    decide_convergence(g, &Term::nonterminal(g.start()), budget)
}
