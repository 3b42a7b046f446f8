//! The order-reducing transformation.
//!
//! Each nonterminal `X` with ground arity `ℓ` is split into `2^ℓ` copies
//! `X_A`, one per assignment `A` saying which trailing ground arguments may be
//! used. Inside a copy, a used ground parameter becomes `•` and an unused one
//! `Ω`; an application to a ground argument becomes a choice between ignoring
//! the argument and requiring it. Higher-order parameters are duplicated once
//! per assignment of their own trailing ground arguments.
//!
//! Names: `X_A` prints as `X` when `ℓ = 0` and as `X@b₁…b_ℓ` otherwise, where
//! `bᵢ = A(ℓ+1−i)`, so bits read left to right follow the trailing parameters
//! left to right. Variable copies use the same scheme.

use std::collections::{HashMap, HashSet};
use std::fmt;

use indexmap::IndexMap;
use rayon::prelude::*;
use thiserror::Error;

use crate::grammar::{Grammar, Rule, VarTypes};
use crate::symbol::Symbol;
use crate::term::{Term, TermKind};
use crate::types::SimpleType;

/// A 0/1 valuation of trailing ground-argument positions, indexed from the
/// right starting at 1. Bit `i-1` of `bits` holds `A(i)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    len: u32,
    bits: u64,
}

impl Assignment {
    pub const EMPTY: Assignment = Assignment { len: 0, bits: 0 };

    /// Builds from `[A(1), …, A(ℓ)]`.
    pub fn from_bits(bits: &[bool]) -> Assignment {
        assert!(bits.len() < 64, "assignment too long");
        let value = bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i));
        Assignment { len: bits.len() as u32, bits: value }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `A(i)` for `1 ≤ i ≤ ℓ`.
    pub fn get(&self, i: usize) -> bool {
        assert!((1..=self.len()).contains(&i), "assignment index {i} out of range");
        self.bits >> (i - 1) & 1 == 1
    }

    /// `A[ℓ+1 ↦ b]`.
    pub fn extend(&self, b: bool) -> Assignment {
        assert!(self.len < 63, "assignment too long");
        Assignment { len: self.len + 1, bits: self.bits | (u64::from(b) << self.len) }
    }

    /// `Σ A(i)·2^(i−1)`; the enumeration order.
    pub fn value(&self) -> u64 {
        self.bits
    }

    pub fn to_vec(&self) -> Vec<bool> {
        (1..=self.len()).map(|i| self.get(i)).collect()
    }

    /// The printed suffix `b₁…b_ℓ` with `bᵢ = A(ℓ+1−i)`.
    pub fn suffix(&self) -> String {
        (1..=self.len())
            .map(|i| if self.get(self.len() + 1 - i) { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.to_vec().iter().map(|&b| u8::from(b)).collect::<Vec<_>>())
    }
}

/// All `2^ℓ` assignments ordered by [`Assignment::value`].
pub fn enumerate_assignments(ell: usize) -> Vec<Assignment> {
    assert!(ell < 32, "2^{ell} assignments is not enumerable");
    (0..1u64 << ell).map(|bits| Assignment { len: ell as u32, bits }).collect()
}

/// Partial 0/1 valuation of ground variables: `false` maps to `Ω`, `true` to `•`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundValuation(HashMap<Symbol, bool>);

impl GroundValuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(&self, v: Symbol, b: bool) -> Self {
        let mut m = self.0.clone();
        m.insert(v, b);
        GroundValuation(m)
    }

    pub fn get(&self, v: Symbol) -> Option<bool> {
        self.0.get(&v).copied()
    }

    pub fn keys(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.0.keys().copied()
    }
}

impl FromIterator<(Symbol, bool)> for GroundValuation {
    fn from_iter<I: IntoIterator<Item = (Symbol, bool)>>(iter: I) -> Self {
        GroundValuation(iter.into_iter().collect())
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TransformError {
    #[error("assignment has length {found}, but the term has ground arity {expected}")]
    AssignmentLengthMismatch { expected: usize, found: usize },
    #[error("valuation key `{0}` is not a ground variable")]
    NonGroundValuationKey(Symbol),
    #[error("cannot type subterm `{0}`")]
    Untyped(Term),
    #[error("no name for variable `{0}` in scope")]
    UnknownVariable(Symbol),
}

/// `α†`: trailing ground arguments are dropped; every other argument is
/// transformed and repeated `2^gar` times.
pub fn dagger_type(t: &SimpleType) -> SimpleType {
    let (prefix, _) = t.decompose();
    let mut args = Vec::new();
    for a in &prefix {
        let copies = 1usize << a.gar();
        let at = dagger_type(a);
        args.extend(std::iter::repeat_n(at, copies));
    }
    SimpleType::function(args)
}

fn copy_name(base: Symbol, a: Assignment) -> String {
    if a.is_empty() {
        base.as_str().to_owned()
    } else {
        format!("{base}@{}", a.suffix())
    }
}

/// Picks `want`, or `want'`, `want''`, … if taken.
fn claim(taken: &mut HashSet<Symbol>, want: String) -> Symbol {
    let mut name = want;
    loop {
        let s = Symbol::intern(&name);
        if taken.insert(s) {
            return s;
        }
        name.push('\'');
    }
}

/// Variables in scope, with the names of their transformed copies.
#[derive(Clone, Debug)]
pub struct Scope {
    types: VarTypes,
    names: HashMap<(Symbol, Assignment), Symbol>,
}

impl Scope {
    /// Names copies in parameter order, avoiding `avoid` and each other.
    pub fn for_params(params: &[(Symbol, SimpleType)], avoid: &HashSet<Symbol>) -> Scope {
        let mut taken = avoid.clone();
        let mut names = HashMap::new();
        for (y, ty) in params {
            for b in enumerate_assignments(ty.gar()) {
                names.insert((*y, b), claim(&mut taken, copy_name(*y, b)));
            }
        }
        Scope { types: params.iter().cloned().collect(), names }
    }

    /// Like [`Scope::for_params`], taking variables in name order.
    pub fn new(types: &VarTypes, avoid: &HashSet<Symbol>) -> Scope {
        let mut params: Vec<(Symbol, SimpleType)> =
            types.iter().map(|(k, v)| (*k, v.clone())).collect();
        params.sort_by_key(|p| p.0);
        Scope::for_params(&params, avoid)
    }

    pub fn types(&self) -> &VarTypes {
        &self.types
    }

    /// The name of `y_B`.
    pub fn copy(&self, y: Symbol, b: Assignment) -> Option<Symbol> {
        self.names.get(&(y, b)).copied()
    }
}

/// Holds the names of transformed nonterminals for one grammar.
pub struct Transformer<'g> {
    grammar: &'g Grammar,
    names: HashMap<(Symbol, Assignment), Symbol>,
    taken: HashSet<Symbol>,
}

impl<'g> Transformer<'g> {
    pub fn new(grammar: &'g Grammar) -> Self {
        let mut taken = HashSet::new();
        let mut names = HashMap::new();
        for (x, ty) in grammar.nonterminals() {
            for a in enumerate_assignments(ty.gar()) {
                names.insert((*x, a), claim(&mut taken, copy_name(*x, a)));
            }
        }
        Transformer { grammar, names, taken }
    }

    pub fn grammar(&self) -> &'g Grammar {
        self.grammar
    }

    /// The name of `X_A`.
    pub fn nonterminal(&self, x: Symbol, a: Assignment) -> Option<Symbol> {
        self.names.get(&(x, a)).copied()
    }

    /// Names of all transformed nonterminals; variable copies avoid these.
    pub fn reserved(&self) -> &HashSet<Symbol> {
        &self.taken
    }

    pub fn scope(&self, types: &VarTypes) -> Scope {
        Scope::new(types, &self.taken)
    }

    /// `tr(A, Z, t)`.
    pub fn tr(
        &self,
        scope: &Scope,
        a: Assignment,
        z: &GroundValuation,
        t: &Term,
    ) -> Result<Term, TransformError> {
        for v in z.keys() {
            if scope.types.get(&v).is_some_and(|ty| !ty.is_ground()) {
                return Err(TransformError::NonGroundValuationKey(v));
            }
        }
        let vars = self.valuation_types(scope, z);
        let ty = self
            .grammar
            .spine_type(&vars, t)
            .ok_or_else(|| TransformError::Untyped(t.clone()))?;
        if ty.gar() != a.len() {
            return Err(TransformError::AssignmentLengthMismatch { expected: ty.gar(), found: a.len() });
        }
        self.go(scope, &vars, a, z, t)
    }

    /// Scope types plus every valuation key typed `o`.
    fn valuation_types(&self, scope: &Scope, z: &GroundValuation) -> VarTypes {
        let mut vars = scope.types.clone();
        for v in z.keys() {
            vars.entry(v).or_insert(SimpleType::Ground);
        }
        vars
    }

    fn go(
        &self,
        scope: &Scope,
        vars: &VarTypes,
        a: Assignment,
        z: &GroundValuation,
        t: &Term,
    ) -> Result<Term, TransformError> {
        Ok(match t.kind() {
            TermKind::Nonterminal(x) => Term::nonterminal(
                self.nonterminal(*x, a).ok_or_else(|| TransformError::Untyped(t.clone()))?,
            ),
            TermKind::Variable(y) => match z.get(*y) {
                Some(true) => Term::leaf(),
                Some(false) => Term::omega(),
                None => Term::var(scope.copy(*y, a).ok_or(TransformError::UnknownVariable(*y))?),
            },
            TermKind::Node(ts) => Term::node(
                ts.iter()
                    .map(|k| self.go(scope, vars, Assignment::EMPTY, z, k))
                    .collect::<Result<_, _>>()?,
            ),
            TermKind::Choice(ts) => Term::choice(
                ts.iter()
                    .map(|k| self.go(scope, vars, Assignment::EMPTY, z, k))
                    .collect::<Result<_, _>>()?,
            ),
            TermKind::Apply(k, l) => {
                let k_ty = self
                    .grammar
                    .spine_type(vars, k)
                    .ok_or_else(|| TransformError::Untyped(k.clone()))?;
                let (prefix, _) = k_ty.decompose();
                if prefix.is_empty() {
                    // K : o^{ℓ+1} → o
                    let unused = self.go(scope, vars, a.extend(false), z, k)?;
                    let used = self.go(scope, vars, a.extend(true), z, k)?;
                    let arg = self.go(scope, vars, Assignment::EMPTY, z, l)?;
                    Term::choice(vec![unused, Term::node(vec![used, arg])])
                } else {
                    let head = self.go(scope, vars, a, z, k)?;
                    let copies = enumerate_assignments(prefix[0].gar())
                        .into_iter()
                        .map(|b| self.go(scope, vars, b, z, l))
                        .collect::<Result<Vec<_>, _>>()?;
                    Term::apply_all(head, copies)
                }
            }
        })
    }

    /// All rules `X_A` generated from one source rule, in assignment order.
    pub fn transform_rule(&self, rule: &Rule) -> Vec<(Symbol, SimpleType, Rule)> {
        let ty = &self.grammar.nonterminals()[&rule.head];
        let ell = ty.gar();
        let k = rule.params.len() - ell;
        let (kept, trailing) = rule.params.split_at(k);
        let scope = Scope::for_params(kept, &self.taken);
        let new_ty = dagger_type(ty);
        let mut params = Vec::new();
        for (y, yty) in kept {
            let yty_new = dagger_type(yty);
            for b in enumerate_assignments(yty.gar()) {
                params.push((scope.copy(*y, b).expect("named in scope"), yty_new.clone()));
            }
        }
        enumerate_assignments(ell)
            .into_iter()
            .map(|a| {
                let z: GroundValuation = trailing
                    .iter()
                    .enumerate()
                    .map(|(i, (zi, _))| (*zi, a.get(ell - i)))
                    .collect();
                let vars = self.valuation_types(&scope, &z);
                let body = self
                    .go(&scope, &vars, Assignment::EMPTY, &z, &rule.body)
                    .expect("well-typed rule body");
                let head = self.nonterminal(rule.head, a).expect("named");
                (head, new_ty.clone(), Rule { head, params: params.clone(), body })
            })
            .collect()
    }
}

/// `tr(A, Z, t)` over the nonterminals of `g`, with `scope` typing the free
/// variables of `t`.
pub fn tr(
    g: &Grammar,
    scope: &Scope,
    a: Assignment,
    z: &GroundValuation,
    t: &Term,
) -> Result<Term, TransformError> {
    Transformer::new(g).tr(scope, a, z, t)
}

/// `G†`. Rules are transformed independently and in parallel.
pub fn dagger_grammar(g: &Grammar) -> Grammar {
    let tf = Transformer::new(g);
    let rules: Vec<&Rule> = g.rules().values().collect();
    let produced: Vec<Vec<(Symbol, SimpleType, Rule)>> =
        rules.par_iter().map(|r| tf.transform_rule(r)).collect();
    let mut nonterminals = IndexMap::new();
    let mut new_rules = IndexMap::new();
    for (x, ty, r) in produced.into_iter().flatten() {
        nonterminals.insert(x, ty);
        new_rules.insert(x, r);
    }
    let start = tf.nonterminal(g.start(), Assignment::EMPTY).expect("start is ground");
    Grammar::from_parts(start, nonterminals, new_rules)
}
