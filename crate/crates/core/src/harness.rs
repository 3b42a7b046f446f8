//! Seeded generation of well-typed grammars, and differential testing of the
//! pipeline against the reduction oracle.

use std::fmt;

use indexmap::{IndexMap, IndexSet};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::grammar::{Grammar, Rule, VarTypes};
use crate::pipeline::solve;
use crate::semantics::decide_grammar;
use crate::symbol::Symbol;
use crate::term::Term;
use crate::textio::{parse_grammar, print_grammar};
use crate::transform::{dagger_grammar, dagger_type};
use crate::types::SimpleType;

#[derive(Clone, Debug, PartialEq)]
pub struct GenParams {
    pub max_order: usize,
    pub max_arity: usize,
    pub max_nonterminals: usize,
    pub max_body_size: usize,
    /// Probability that a ground hole with room for it becomes a choice.
    pub choice_bias: f64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            max_order: 2,
            max_arity: 2,
            max_nonterminals: 5,
            max_body_size: 10,
            choice_bias: 0.3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no grammar within the limits after {attempts} attempts")]
pub struct GenerationExhausted {
    pub attempts: usize,
}

const TYPE_ATTEMPTS: usize = 200;

/// Type sets whose repeatedly transformed types exceed this arity are
/// resampled. The transformation is doubly exponential in nested ground
/// arity, and larger grammars cannot be solved in memory.
pub const MAX_DERIVED_ARITY: usize = 8;

/// Largest subtype arity met while transforming `types` down to order 0.
fn derived_arity(types: &[SimpleType]) -> usize {
    let mut cur: Vec<SimpleType> = types.to_vec();
    let mut worst = cur.iter().map(SimpleType::max_subtype_arity).max().unwrap_or(0);
    while cur.iter().any(|t| t.order() > 0) {
        if worst > MAX_DERIVED_ARITY {
            break;
        }
        cur = cur.iter().map(dagger_type).collect();
        worst = worst.max(cur.iter().map(SimpleType::max_subtype_arity).max().unwrap_or(0));
    }
    worst
}

/// Number of trailing ground arguments: 0 with probability 1/2, 1 with 1/4, …
fn geometric<R: Rng + ?Sized>(rng: &mut R, cap: usize) -> usize {
    let mut n = 0;
    while n < cap && rng.gen_bool(0.5) {
        n += 1;
    }
    n
}

/// A type of order at most `order` whose subtypes have arity at most `arity`.
/// With `nonground` set (and `order ≥ 1`) the type is a function type.
fn sample_type<R: Rng + ?Sized>(rng: &mut R, order: usize, arity: usize, nonground: bool) -> SimpleType {
    if order == 0 || arity == 0 {
        return SimpleType::Ground;
    }
    let mut ell = geometric(rng, arity);
    let k = if order >= 2 { rng.gen_range(0..=arity - ell) } else { 0 };
    if nonground && k == 0 && ell == 0 {
        ell = 1;
    }
    let prefix: Vec<SimpleType> =
        (0..k).map(|i| sample_type(rng, order - 1, arity, i + 1 == k)).collect();
    SimpleType::recompose(&prefix, ell)
}

/// Every non-ground type that occurs as an argument type inside `t`.
fn argument_types(t: &SimpleType, out: &mut IndexSet<SimpleType>) {
    for a in t.args() {
        if !a.is_ground() && out.insert(a.clone()) {
            argument_types(a, out);
        }
    }
}

/// Nonterminal types with the start first. Every non-ground argument type
/// also has a nonterminal of exactly that type, so every hole can be filled.
fn sample_nonterminal_types<R: Rng + ?Sized>(
    rng: &mut R,
    p: &GenParams,
) -> Result<Vec<SimpleType>, GenerationExhausted> {
    let cap = p.max_nonterminals.max(1);
    for _ in 0..TYPE_ATTEMPTS {
        let k = rng.gen_range(cap.min(2)..=cap);
        let mut types = IndexSet::new();
        let mut all = vec![SimpleType::Ground];
        for _ in 1..k {
            let order = if rng.gen_bool(0.5) { p.max_order } else { rng.gen_range(0..=p.max_order) };
            all.push(sample_type(rng, order, p.max_arity, true));
        }
        for t in &all {
            types.insert(t.clone());
        }
        let mut needed = IndexSet::new();
        for t in &all {
            argument_types(t, &mut needed);
        }
        for t in needed {
            if !types.contains(&t) {
                all.push(t);
            }
        }
        if all.len() <= cap && derived_arity(&all) <= MAX_DERIVED_ARITY.max(p.max_arity) {
            return Ok(all);
        }
    }
    Err(GenerationExhausted { attempts: TYPE_ATTEMPTS })
}

struct Filler<'r, R: ?Sized> {
    heads: Vec<(Term, SimpleType, u32)>,
    choice_bias: f64,
    rng: &'r mut R,
}

impl<R: Rng + ?Sized> Filler<'_, R> {
    /// A term of type `ty` and size at most `budget` (≥ 1).
    fn fill(&mut self, ty: &SimpleType, budget: usize) -> Option<Term> {
        if ty.is_ground() && budget >= 2 {
            if self.rng.gen_bool(self.choice_bias) {
                let n = self.rng.gen_range(1..=(budget - 1).min(3));
                return self.children(n, budget - 1).map(Term::choice);
            }
            if self.rng.gen_bool(0.2) {
                let n = self.rng.gen_range(1..=(budget - 1).min(2));
                return self.children(n, budget - 1).map(Term::node);
            }
        }
        // (head, argument types, weight)
        let mut options: Vec<(Term, Vec<SimpleType>, u32)> = Vec::new();
        for (h, t, w) in &self.heads {
            let Some(m) = t.arity().checked_sub(ty.arity()) else { continue };
            if 2 * m + 1 > budget || t.drop_args(m) != Some(ty) {
                continue;
            }
            let args: Vec<SimpleType> = t.args()[..m].iter().map(|a| (*a).clone()).collect();
            let w = if m > 0 { w * 3 } else { *w };
            options.push((h.clone(), args, w));
        }
        if ty.is_ground() {
            options.push((Term::leaf(), Vec::new(), 2));
            options.push((Term::omega(), Vec::new(), 1));
        }
        let (head, args, _) = options.choose_weighted(self.rng, |o| o.2).ok()?.clone();
        if args.is_empty() {
            return Some(head);
        }
        let mut rest = budget - 1 - 2 * args.len();
        let mut out = head;
        for (i, a) in args.iter().enumerate() {
            let extra = if i + 1 == args.len() { rest } else { self.rng.gen_range(0..=rest) };
            rest -= extra;
            let arg = self.fill(a, 1 + extra)?;
            out = Term::apply(out, arg);
        }
        Some(out)
    }

    fn children(&mut self, n: usize, budget: usize) -> Option<Vec<Term>> {
        let mut rest = budget - n;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let extra = if i + 1 == n { rest } else { self.rng.gen_range(0..=rest) };
            rest -= extra;
            out.push(self.fill(&SimpleType::Ground, 1 + extra)?);
        }
        Some(out)
    }
}

/// A random term of type `ty` and size at most `budget` over the nonterminals
/// of `g` and the variables in `vars`. `None` if some non-ground hole has no
/// symbol to fill it.
pub fn gen_term<R: Rng + ?Sized>(
    g: &Grammar,
    vars: &VarTypes,
    ty: &SimpleType,
    budget: usize,
    choice_bias: f64,
    rng: &mut R,
) -> Option<Term> {
    let mut heads: Vec<(Term, SimpleType, u32)> =
        g.nonterminals().iter().map(|(x, t)| (Term::nonterminal(*x), t.clone(), 1)).collect();
    let mut vs: Vec<_> = vars.iter().collect();
    vs.sort_by_key(|(v, _)| **v);
    heads.extend(vs.into_iter().map(|(v, t)| (Term::var(*v), t.clone(), 2)));
    Filler { heads, choice_bias, rng }.fill(ty, budget.max(1))
}

/// A well-typed grammar drawn from `p`, fully determined by it.
pub fn gen_grammar(p: &GenParams) -> Result<Grammar, GenerationExhausted> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let types = sample_nonterminal_types(&mut rng, p)?;
    let names: Vec<Symbol> = (0..types.len())
        .map(|i| if i == 0 { Symbol::intern("S") } else { Symbol::intern(&format!("N{i}")) })
        .collect();
    let nonterminals: IndexMap<Symbol, SimpleType> =
        names.iter().copied().zip(types.iter().cloned()).collect();
    let skeleton = Grammar::from_parts(names[0], nonterminals.clone(), IndexMap::new());
    let mut rules = IndexMap::new();
    for (x, ty) in &nonterminals {
        let params: Vec<(Symbol, SimpleType)> = ty
            .args()
            .into_iter()
            .enumerate()
            .map(|(i, a)| (Symbol::intern(&format!("x{}", i + 1)), a.clone()))
            .collect();
        let vars: VarTypes = params.iter().cloned().collect();
        let budget = rng.gen_range(1..=p.max_body_size.max(1));
        let body = gen_term(&skeleton, &vars, &SimpleType::Ground, budget, p.choice_bias, &mut rng)
            .expect("argument types are closed under nonterminals");
        rules.insert(*x, Rule { head: *x, params, body });
    }
    let g = Grammar::from_parts(names[0], nonterminals, rules);
    debug_assert!(g.well_typed().is_ok(), "{}", print_grammar(&g));
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    /// The oracle was inconclusive.
    Unknown,
    Fail {
        solve: bool,
        oracle: bool,
        /// Oracle verdict on the transformed grammar, when that disagreed.
        dagger_oracle: Option<bool>,
    },
    /// The parameters admit no grammar.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Case {
    pub seed: u64,
    pub outcome: Outcome,
    /// Canonical text, kept for failures.
    pub grammar: Option<String>,
}

/// Compares `solve` with the oracle on `g`, and the oracle on `g` with the
/// oracle on one transformation step of `g`.
pub fn check_grammar(g: &Grammar, budget: usize) -> Outcome {
    let solved = solve(g).expect("checked grammars are well typed").convergent;
    let Some(oracle) = decide_grammar(g, budget).exact() else { return Outcome::Unknown };
    let dagger_oracle = decide_grammar(&dagger_grammar(g), budget).exact();
    let step_mismatch = dagger_oracle.is_some_and(|d| d != oracle);
    if solved != oracle || step_mismatch {
        Outcome::Fail { solve: solved, oracle, dagger_oracle: dagger_oracle.filter(|_| step_mismatch) }
    } else {
        Outcome::Pass
    }
}

/// Re-runs a failure from its serialized grammar.
pub fn replay(text: &str, budget: usize) -> Option<Outcome> {
    parse_grammar(text).ok().map(|g| check_grammar(&g, budget))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub cases: Vec<Case>,
}

impl Report {
    pub fn passed(&self) -> usize {
        self.count(|o| *o == Outcome::Pass)
    }

    pub fn failed(&self) -> usize {
        self.count(|o| matches!(o, Outcome::Fail { .. }))
    }

    pub fn inconclusive(&self) -> usize {
        self.count(|o| *o == Outcome::Unknown)
    }

    fn count(&self, f: impl Fn(&Outcome) -> bool) -> usize {
        self.cases.iter().filter(|c| f(&c.outcome)).count()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.cases {
            match &c.outcome {
                Outcome::Pass => writeln!(f, "PASS seed={}", c.seed)?,
                Outcome::Unknown => writeln!(f, "UNKNOWN seed={}", c.seed)?,
                Outcome::Skipped => writeln!(f, "SKIPPED seed={}", c.seed)?,
                Outcome::Fail { solve, oracle, dagger_oracle } => {
                    write!(f, "FAIL seed={} solve={solve} oracle={oracle}", c.seed)?;
                    if let Some(d) = dagger_oracle {
                        write!(f, " dagger_oracle={d}")?;
                    }
                    writeln!(f)?;
                    for line in c.grammar.as_deref().unwrap_or("").lines() {
                        writeln!(f, "  {line}")?;
                    }
                }
            }
        }
        writeln!(
            f,
            "passed={} failed={} inconclusive={}",
            self.passed(),
            self.failed(),
            self.inconclusive()
        )
    }
}

/// Seed of the `i`-th case derived from `p.seed`.
pub fn case_seed(p: &GenParams, i: usize) -> u64 {
    p.seed.wrapping_add(i as u64)
}

/// Runs `count` generated cases in parallel.
pub fn differential_test(p: &GenParams, count: usize, budget: usize) -> Report {
    let mut cases: Vec<Case> = (0..count)
        .into_par_iter()
        .map(|i| {
            let seed = case_seed(p, i);
            let params = GenParams { seed, ..p.clone() };
            match gen_grammar(&params) {
                Err(_) => Case { seed, outcome: Outcome::Skipped, grammar: None },
                Ok(g) => {
                    let outcome = check_grammar(&g, budget);
                    let grammar = matches!(outcome, Outcome::Fail { .. }).then(|| print_grammar(&g));
                    Case { seed, outcome, grammar }
                }
            }
        })
        .collect();
    cases.sort_by_key(|c| c.seed);
    Report { cases }
}
