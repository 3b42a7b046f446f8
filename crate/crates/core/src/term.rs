//! Applicative terms with tree-node and choice constructors.
//!
//! Terms are immutable and reference counted. Each node caches its structural
//! hash and tree size so terms can serve as memo-table keys without rehashing.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::symbol::Symbol;

#[derive(Clone)]
pub struct Term(Arc<TermNode>);

struct TermNode {
    kind: TermKind,
    hash: u64,
    size: u64,
}

#[derive(Clone, PartialEq, Eq)]
pub enum TermKind {
    Nonterminal(Symbol),
    Variable(Symbol),
    /// `•⟨…⟩`; with no children this is the leaf `•`.
    Node(Vec<Term>),
    /// `⊕⟨…⟩`; with no children this is `Ω`.
    Choice(Vec<Term>),
    Apply(Term, Term),
}

impl Term {
    fn build(kind: TermKind) -> Term {
        let mut h = DefaultHasher::new();
        let size = match &kind {
            TermKind::Nonterminal(s) => {
                0u8.hash(&mut h);
                s.hash(&mut h);
                1
            }
            TermKind::Variable(s) => {
                1u8.hash(&mut h);
                s.hash(&mut h);
                1
            }
            TermKind::Node(ts) | TermKind::Choice(ts) => {
                let tag = if matches!(kind, TermKind::Node(_)) { 2u8 } else { 3u8 };
                tag.hash(&mut h);
                ts.len().hash(&mut h);
                let mut size = 1u64;
                for t in ts {
                    t.0.hash.hash(&mut h);
                    size = size.saturating_add(t.0.size);
                }
                size
            }
            TermKind::Apply(f, a) => {
                4u8.hash(&mut h);
                f.0.hash.hash(&mut h);
                a.0.hash.hash(&mut h);
                1u64.saturating_add(f.0.size).saturating_add(a.0.size)
            }
        };
        Term(Arc::new(TermNode { kind, hash: h.finish(), size }))
    }

    pub fn nonterminal(name: impl Into<Symbol>) -> Term {
        Term::build(TermKind::Nonterminal(name.into()))
    }

    pub fn var(name: impl Into<Symbol>) -> Term {
        Term::build(TermKind::Variable(name.into()))
    }

    pub fn node(children: Vec<Term>) -> Term {
        Term::build(TermKind::Node(children))
    }

    pub fn choice(children: Vec<Term>) -> Term {
        Term::build(TermKind::Choice(children))
    }

    pub fn leaf() -> Term {
        Term::node(Vec::new())
    }

    pub fn omega() -> Term {
        Term::choice(Vec::new())
    }

    pub fn apply(fun: Term, arg: Term) -> Term {
        Term::build(TermKind::Apply(fun, arg))
    }

    /// `head args[0] … args[n-1]`, left-associated.
    pub fn apply_all(head: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(head, Term::apply)
    }

    pub fn kind(&self) -> &TermKind {
        &self.0.kind
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind(), TermKind::Node(ts) if ts.is_empty())
    }

    pub fn is_omega(&self) -> bool {
        matches!(self.kind(), TermKind::Choice(ts) if ts.is_empty())
    }

    pub fn as_variable(&self) -> Option<Symbol> {
        match self.kind() {
            TermKind::Variable(v) => Some(*v),
            _ => None,
        }
    }

    /// Views `f K₁ … K_k` as `(f, [K₁ … K_k])`. Non-applications have no arguments.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut cur = self;
        while let TermKind::Apply(f, a) = cur.kind() {
            args.push(a);
            cur = f;
        }
        args.reverse();
        (cur, args)
    }

    /// Structural size: symbols count 1, each application and each
    /// node/choice constructor adds 1. Saturates on overflow.
    pub fn size(&self) -> u64 {
        self.0.size
    }

    /// Maximal number of compound applications on one branch.
    pub fn app_depth(&self) -> usize {
        match self.kind() {
            TermKind::Node(ts) | TermKind::Choice(ts) => {
                ts.iter().map(Term::app_depth).max().unwrap_or(0)
            }
            TermKind::Apply(..) => {
                let (head, args) = self.spine();
                let below = args.iter().map(|a| a.app_depth() + 1).max().unwrap_or(0);
                // Heads are symbols in well-formed terms; count anything else too.
                below.max(head.app_depth())
            }
            TermKind::Nonterminal(_) | TermKind::Variable(_) => 0,
        }
    }

    pub fn occurrences(&self, var: Symbol) -> usize {
        match self.kind() {
            TermKind::Variable(v) => usize::from(*v == var),
            TermKind::Nonterminal(_) => 0,
            TermKind::Node(ts) | TermKind::Choice(ts) => {
                ts.iter().map(|t| t.occurrences(var)).sum()
            }
            TermKind::Apply(f, a) => f.occurrences(var) + a.occurrences(var),
        }
    }

    pub fn free_variables(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Symbol>) {
        match self.kind() {
            TermKind::Variable(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            TermKind::Nonterminal(_) => {}
            TermKind::Node(ts) | TermKind::Choice(ts) => {
                ts.iter().for_each(|t| t.collect_vars(out))
            }
            TermKind::Apply(f, a) => {
                f.collect_vars(out);
                a.collect_vars(out);
            }
        }
    }

    /// Simultaneous substitution of terms for variables. Unbound variables are
    /// left untouched; unchanged subterms are shared with the input.
    pub fn substitute(&self, bindings: &HashMap<Symbol, Term>) -> Term {
        if bindings.is_empty() {
            return self.clone();
        }
        self.subst_with(&|v| bindings.get(&v).cloned())
    }

    pub fn substitute_one(&self, var: Symbol, replacement: &Term) -> Term {
        self.subst_with(&|v| (v == var).then(|| replacement.clone()))
    }

    pub(crate) fn subst_with(&self, lookup: &dyn Fn(Symbol) -> Option<Term>) -> Term {
        match self.kind() {
            TermKind::Variable(v) => lookup(*v).unwrap_or_else(|| self.clone()),
            TermKind::Nonterminal(_) => self.clone(),
            TermKind::Node(ts) | TermKind::Choice(ts) => {
                let new: Vec<Term> = ts.iter().map(|t| t.subst_with(lookup)).collect();
                if new.iter().zip(ts).all(|(a, b)| Arc::ptr_eq(&a.0, &b.0)) {
                    return self.clone();
                }
                match self.kind() {
                    TermKind::Node(_) => Term::node(new),
                    _ => Term::choice(new),
                }
            }
            TermKind::Apply(f, a) => {
                let nf = f.subst_with(lookup);
                let na = a.subst_with(lookup);
                if Arc::ptr_eq(&nf.0, &f.0) && Arc::ptr_eq(&na.0, &a.0) {
                    self.clone()
                } else {
                    Term::apply(nf, na)
                }
            }
        }
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.hash == other.0.hash
                && self.0.size == other.0.size
                && self.0.kind == other.0.kind)
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl Drop for TermNode {
    // Long right spines (deep argument nesting) would otherwise recurse once per
    // level when the last reference goes away.
    fn drop(&mut self) {
        let mut stack: Vec<Term> = Vec::new();
        take_children(&mut self.kind, &mut stack);
        while let Some(t) = stack.pop() {
            if let Ok(mut node) = Arc::try_unwrap(t.0) {
                take_children(&mut node.kind, &mut stack);
            }
        }
    }
}

fn take_children(kind: &mut TermKind, stack: &mut Vec<Term>) {
    match kind {
        TermKind::Node(ts) | TermKind::Choice(ts) => stack.append(ts),
        TermKind::Apply(f, a) => {
            let leaf = || {
                LEAF_SENTINEL
                    .try_with(|l| Term(l.clone()))
                    .unwrap_or_else(|_| Term::leaf())
            };
            stack.push(std::mem::replace(f, leaf()));
            stack.push(std::mem::replace(a, leaf()));
        }
        TermKind::Nonterminal(_) | TermKind::Variable(_) => {}
    }
}

thread_local! {
    static LEAF_SENTINEL: Arc<TermNode> = Arc::new(TermNode {
        kind: TermKind::Node(Vec::new()),
        hash: 0,
        size: 1,
    });
}

/// Printed in the surface syntax: `br(…)`, `or(…)`, `leaf`, `omega`, with
/// application left-associative and minimal parentheses.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            TermKind::Nonterminal(s) | TermKind::Variable(s) => write!(f, "{s}"),
            TermKind::Node(ts) if ts.is_empty() => f.write_str("leaf"),
            TermKind::Choice(ts) if ts.is_empty() => f.write_str("omega"),
            TermKind::Node(ts) | TermKind::Choice(ts) => {
                let name = if matches!(self.kind(), TermKind::Node(_)) { "br" } else { "or" };
                write!(f, "{name}(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
            TermKind::Apply(fun, arg) => {
                write!(f, "{fun} ")?;
                if matches!(arg.kind(), TermKind::Apply(..)) {
                    write!(f, "({arg})")
                } else {
                    write!(f, "{arg}")
                }
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
