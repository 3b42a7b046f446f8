//! Conversion to simple form: every rule body has application depth at most 2.
//!
//! Bodies are processed bottom-up. Whenever an argument of a compound
//! application has depth 2 it is moved into a fresh nonterminal
//! `H@k y₁ … y_k x@1 … x@s = K x@1 … x@s` (the `y`s are all parameters of the
//! enclosing rule) and the occurrence becomes `H@k y₁ … y_k`.

use std::collections::HashSet;

use indexmap::IndexMap;

use crate::grammar::{Grammar, Rule, VarTypes};
use crate::symbol::Symbol;
use crate::term::{Term, TermKind};
use crate::types::SimpleType;

struct Fresh<'a> {
    taken: HashSet<Symbol>,
    counter: usize,
    grammar: &'a Grammar,
    new_decls: Vec<(Symbol, SimpleType)>,
    new_rules: Vec<Rule>,
}

impl Fresh<'_> {
    fn name(&mut self) -> Symbol {
        loop {
            let s = Symbol::intern(&format!("H@{}", self.counter));
            self.counter += 1;
            if self.taken.insert(s) {
                return s;
            }
        }
    }

    fn simplify(&mut self, enclosing: &Rule, vars: &VarTypes, t: &Term) -> Term {
        match t.kind() {
            TermKind::Nonterminal(_) | TermKind::Variable(_) => t.clone(),
            TermKind::Node(ts) => {
                Term::node(ts.iter().map(|c| self.simplify(enclosing, vars, c)).collect())
            }
            TermKind::Choice(ts) => {
                Term::choice(ts.iter().map(|c| self.simplify(enclosing, vars, c)).collect())
            }
            TermKind::Apply(..) => {
                let (head, args) = t.spine();
                let args: Vec<Term> = args
                    .into_iter()
                    .map(|a| {
                        let a = self.simplify(enclosing, vars, a);
                        if a.app_depth() >= 2 {
                            self.extract(enclosing, vars, a)
                        } else {
                            a
                        }
                    })
                    .collect();
                Term::apply_all(head.clone(), args)
            }
        }
    }

    fn extract(&mut self, enclosing: &Rule, vars: &VarTypes, k: Term) -> Term {
        let k_ty = self
            .grammar
            .spine_type(vars, &k)
            .expect("well-typed input has typed subterms");
        let pad_tys: Vec<SimpleType> = k_ty.args().into_iter().cloned().collect();
        let used: HashSet<Symbol> = enclosing.param_names().into_iter().collect();
        let mut pads = Vec::new();
        let mut j = 1;
        while pads.len() < pad_tys.len() {
            let s = Symbol::intern(&format!("x@{j}"));
            j += 1;
            if !used.contains(&s) && !self.grammar.nonterminals().contains_key(&s) {
                pads.push(s);
            }
        }
        let name = self.name();
        let mut params = enclosing.params.clone();
        params.extend(pads.iter().copied().zip(pad_tys.iter().cloned()));
        let ty = SimpleType::function(params.iter().map(|(_, t)| t.clone()).collect::<Vec<_>>());
        let body = Term::apply_all(k, pads.iter().map(|&x| Term::var(x)));
        self.new_decls.push((name, ty));
        self.new_rules.push(Rule { head: name, params, body });
        Term::apply_all(
            Term::nonterminal(name),
            enclosing.params.iter().map(|(y, _)| Term::var(*y)),
        )
    }
}

/// Rewrites `g` into simple form. Rules already in simple form are unchanged.
pub fn to_simple_form(g: &Grammar) -> Grammar {
    let mut fresh = Fresh {
        taken: g.nonterminals().keys().copied().collect(),
        counter: 1,
        grammar: g,
        new_decls: Vec::new(),
        new_rules: Vec::new(),
    };
    let mut rules = IndexMap::new();
    for (x, rule) in g.rules() {
        let body = if rule.body.app_depth() <= 2 {
            rule.body.clone()
        } else {
            fresh.simplify(rule, &rule.param_types(), &rule.body)
        };
        rules.insert(*x, Rule { body, ..rule.clone() });
    }
    // Extracted bodies have depth exactly 2 by construction.
    let mut nonterminals = g.nonterminals().clone();
    nonterminals.extend(fresh.new_decls);
    rules.extend(fresh.new_rules.into_iter().map(|r| (r.head, r)));
    Grammar::from_parts(g.start(), nonterminals, rules)
}
