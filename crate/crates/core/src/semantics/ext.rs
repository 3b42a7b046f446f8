//! Extended terms: ground terms under a stack of explicit substitutions
//! `E⟨L/z⟩` of ground terms for ground variables, with ext-reduction, which
//! postpones substituting trailing ground arguments.

use std::collections::{HashMap, HashSet};

use super::fixpoint::{Evaluation, ReductionSystem, Verdict};
use super::{dedup, DEFAULT_MAX_TERM_SIZE};
use crate::grammar::{Grammar, VarTypes};
use crate::symbol::Symbol;
use crate::term::{Term, TermKind};
use crate::transform::{Assignment, GroundValuation, TransformError, Transformer};
use crate::types::SimpleType;

/// `body⟨L₁/z₁⟩…⟨L_d/z_d⟩`, stored innermost substitution first. Each
/// replacement `Lᵢ` lives in the scope of the substitutions outside it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExtTerm {
    body: Term,
    substs: Vec<(Symbol, Term)>,
}

impl ExtTerm {
    pub fn plain(t: Term) -> ExtTerm {
        ExtTerm { body: t, substs: Vec::new() }
    }

    /// Wraps `self` in an outermost `⟨replacement/bound⟩`.
    pub fn subst(mut self, bound: impl Into<Symbol>, replacement: Term) -> ExtTerm {
        self.substs.push((bound.into(), replacement));
        self
    }

    /// The innermost non-extended term.
    pub fn body(&self) -> &Term {
        &self.body
    }

    /// Explicit substitutions, innermost first.
    pub fn substitutions(&self) -> &[(Symbol, Term)] {
        &self.substs
    }

    pub fn is_plain(&self) -> bool {
        self.substs.is_empty()
    }

    /// Performs the explicit substitutions, innermost first.
    pub fn expand(&self) -> Term {
        self.substs
            .iter()
            .fold(self.body.clone(), |acc, (z, l)| acc.substitute_one(*z, l))
    }

    pub fn size(&self) -> u64 {
        self.substs
            .iter()
            .fold(self.body.size(), |acc, (_, l)| acc.saturating_add(l.size()).saturating_add(1))
    }

    /// Names of all variables occurring anywhere, bound or free.
    fn names_in_use(&self) -> HashSet<Symbol> {
        let mut used: HashSet<Symbol> = self.body.free_variables().into_iter().collect();
        for (z, l) in &self.substs {
            used.insert(*z);
            used.extend(l.free_variables());
        }
        used
    }

    /// Renames bound variables to `z'@<depth>`, counting the outermost
    /// substitution as depth 1. Fresh variables introduced by ext-reduction
    /// follow the same scheme, so alpha-equivalent terms meet in the memo table.
    pub fn canonical(&self) -> ExtTerm {
        let d = self.substs.len();
        let mut body = self.body.clone();
        let mut substs = self.substs.clone();
        // Innermost first to unique temporaries, so shadowing resolves correctly.
        for i in 0..d {
            let tmp = Term::var(Symbol::intern(&format!("#{i}")));
            let z = substs[i].0;
            body = body.substitute_one(z, &tmp);
            for s in substs.iter_mut().take(i) {
                s.1 = s.1.substitute_one(z, &tmp);
            }
        }
        for i in 0..d {
            let tmp = Symbol::intern(&format!("#{i}"));
            let name = fresh_name(d - i);
            let canon = Term::var(name);
            body = body.substitute_one(tmp, &canon);
            for s in substs.iter_mut().take(i) {
                s.1 = s.1.substitute_one(tmp, &canon);
            }
            substs[i].0 = name;
        }
        ExtTerm { body, substs }
    }
}

fn fresh_name(k: usize) -> Symbol {
    Symbol::intern(&format!("z'@{k}"))
}

/// Simplified: the innermost term is not a bare variable.
pub fn is_simplified(e: &ExtTerm) -> bool {
    e.body.as_variable().is_none()
}

/// Every set `F` with `e ⇝_G F`.
pub fn ext_reduce_candidates(g: &Grammar, e: &ExtTerm) -> Vec<Vec<ExtTerm>> {
    let outer = &e.substs;
    if let Some(v) = e.body.as_variable() {
        let Some(((z, l), rest)) = outer.split_first() else { return Vec::new() };
        let body = if v == *z { l.clone() } else { e.body.clone() };
        return vec![vec![ExtTerm { body, substs: rest.to_vec() }]];
    }
    let lift = |inner: ExtTerm| {
        let mut substs = inner.substs;
        substs.extend(outer.iter().cloned());
        ExtTerm { body: inner.body, substs }
    };
    let (head, args) = e.body.spine();
    match head.kind() {
        TermKind::Nonterminal(x) => {
            let (Some(rule), Some(ty)) = (g.rule(*x), g.type_of(*x)) else { return Vec::new() };
            if rule.params.len() != args.len() {
                return Vec::new();
            }
            let ell = ty.gar();
            let k = args.len() - ell;
            let used = e.names_in_use();
            let mut counter = outer.len() + 1;
            // Outermost new substitution first: it binds the last argument.
            let mut fresh = vec![Symbol::intern(""); ell];
            for j in (0..ell).rev() {
                let mut name = fresh_name(counter);
                while used.contains(&name) {
                    counter += 1;
                    name = fresh_name(counter);
                }
                counter += 1;
                fresh[j] = name;
            }
            let mut bindings = HashMap::new();
            for (i, (y, _)) in rule.params.iter().enumerate() {
                let value = if i < k { args[i].clone() } else { Term::var(fresh[i - k]) };
                bindings.insert(*y, value);
            }
            let body = rule.body.substitute(&bindings);
            let substs = (0..ell).map(|j| (fresh[j], args[k + j].clone())).collect();
            vec![vec![lift(ExtTerm { body, substs })]]
        }
        TermKind::Node(ts) if args.is_empty() => {
            vec![dedup(ts.iter().cloned()).into_iter().map(|t| lift(ExtTerm::plain(t))).collect()]
        }
        TermKind::Choice(ts) if args.is_empty() => {
            ts.iter().map(|t| vec![lift(ExtTerm::plain(t.clone()))]).collect()
        }
        _ => Vec::new(),
    }
}

pub struct ExtSystem<'g> {
    pub grammar: &'g Grammar,
    pub max_term_size: u64,
}

impl ReductionSystem for ExtSystem<'_> {
    type State = ExtTerm;

    fn candidates(&self, e: &ExtTerm) -> Vec<Vec<ExtTerm>> {
        ext_reduce_candidates(self.grammar, e)
    }

    fn within_limits(&self, e: &ExtTerm) -> bool {
        e.size() <= self.max_term_size
    }
}

pub fn evaluate_ext_convergence<'g>(
    g: &'g Grammar,
    e: &ExtTerm,
    budget: usize,
) -> Evaluation<ExtSystem<'g>> {
    let sys = ExtSystem { grammar: g, max_term_size: DEFAULT_MAX_TERM_SIZE };
    Evaluation::run(&sys, e.canonical(), budget)
}

/// Whether a closed extended term is `G`-ext-convergent.
pub fn decide_ext_convergence(g: &Grammar, e: &ExtTerm, budget: usize) -> Verdict {
    evaluate_ext_convergence(g, e, budget).verdict()
}

/// `tr(∅, Z, e)`: the outermost substitution `E⟨L/z⟩` becomes
/// `⊕⟨tr(∅, Z[z↦0], E), •⟨tr(∅, Z[z↦1], E), tr(∅, Z, L)⟩⟩`, and the innermost
/// term is transformed as an ordinary term. Variable copies are named as in
/// the transformed grammar.
pub fn tr_ext(g: &Grammar, z: &GroundValuation, e: &ExtTerm) -> Result<Term, TransformError> {
    let tf = Transformer::new(g);
    let ground: VarTypes = e
        .names_in_use()
        .into_iter()
        .chain(z.keys())
        .map(|v| (v, SimpleType::Ground))
        .collect();
    let scope = tf.scope(&ground);
    tr_ext_level(&tf, &scope, z, &e.body, &e.substs)
}

fn tr_ext_level(
    tf: &Transformer<'_>,
    scope: &crate::transform::Scope,
    z: &GroundValuation,
    body: &Term,
    substs: &[(Symbol, Term)],
) -> Result<Term, TransformError> {
    let Some(((bound, l), inner)) = substs.split_last() else {
        return tf.tr(scope, Assignment::EMPTY, z, body);
    };
    let unused = tr_ext_level(tf, scope, &z.with(*bound, false), body, inner)?;
    let used = tr_ext_level(tf, scope, &z.with(*bound, true), body, inner)?;
    let arg = tf.tr(scope, Assignment::EMPTY, z, l)?;
    Ok(Term::choice(vec![unused, Term::node(vec![used, arg])]))
}
