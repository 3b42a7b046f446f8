//! Grammars, their structural metrics, and type checking.

use std::collections::{HashMap, HashSet};
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::symbol::Symbol;
use crate::term::{Term, TermKind};
use crate::types::SimpleType;

/// Types of variables in scope.
pub type VarTypes = HashMap<Symbol, SimpleType>;

/// `head params… = body`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub head: Symbol,
    pub params: Vec<(Symbol, SimpleType)>,
    pub body: Term,
}

impl Rule {
    pub fn param_types(&self) -> VarTypes {
        self.params.iter().cloned().collect()
    }

    pub fn param_names(&self) -> Vec<Symbol> {
        self.params.iter().map(|(s, _)| *s).collect()
    }
}

/// Position of a subterm: child indices from the root. For an application
/// `0` is the function and `1` the argument.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TermPath(pub Vec<u32>);

impl TermPath {
    pub fn child(&self, i: u32) -> TermPath {
        let mut v = self.0.clone();
        v.push(i);
        TermPath(v)
    }
}

impl fmt::Display for TermPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("root");
        }
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join("."))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expected {
    Exactly(SimpleType),
    /// Any arrow type (the subterm is applied to an argument).
    Function,
}

impl fmt::Display for Expected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expected::Exactly(t) => write!(f, "{t}"),
            Expected::Function => f.write_str("a function type"),
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum GrammarError {
    #[error("rule {rule}: undeclared symbol `{name}` at {path}")]
    UndeclaredSymbol { rule: Symbol, name: Symbol, path: TermPath },
    #[error("rule {rule}: type mismatch at {path}: expected {expected}, found {found}")]
    TypeMismatch { rule: Symbol, path: TermPath, expected: Expected, found: SimpleType },
    #[error("start symbol `{start}` has type {found}, expected o")]
    StartNotGround { start: Symbol, found: SimpleType },
    #[error("start symbol `{start}` is not declared")]
    UndeclaredStart { start: Symbol },
    #[error("nonterminal `{nonterminal}` has no rule")]
    MissingRule { nonterminal: Symbol },
    #[error("nonterminal `{nonterminal}` has more than one rule")]
    DuplicateRule { nonterminal: Symbol },
    #[error("nonterminal `{nonterminal}` is declared more than once")]
    DuplicateDeclaration { nonterminal: Symbol },
    #[error("rule for undeclared nonterminal `{rule}`")]
    RuleForUndeclared { rule: Symbol },
    #[error("rule {rule}: expected {expected} parameters for its type, found {found}")]
    ParamCount { rule: Symbol, expected: usize, found: usize },
    #[error("rule {rule}: parameter `{param}` has type {found}, expected {expected}")]
    ParamType { rule: Symbol, param: Symbol, expected: SimpleType, found: SimpleType },
    #[error("rule {rule}: parameter `{param}` appears more than once")]
    DuplicateParam { rule: Symbol, param: Symbol },
    #[error("rule {rule}: parameter `{param}` has the name of a nonterminal")]
    ParamShadowsNonterminal { rule: Symbol, param: Symbol },
    #[error("grammar declares no nonterminals")]
    Empty,
}

impl GrammarError {
    /// The rule the diagnostic refers to, if any.
    pub fn rule(&self) -> Option<Symbol> {
        use GrammarError::*;
        match self {
            UndeclaredSymbol { rule, .. }
            | TypeMismatch { rule, .. }
            | RuleForUndeclared { rule }
            | ParamCount { rule, .. }
            | ParamType { rule, .. }
            | DuplicateParam { rule, .. }
            | ParamShadowsNonterminal { rule, .. } => Some(*rule),
            MissingRule { nonterminal } | DuplicateRule { nonterminal } => Some(*nonterminal),
            _ => None,
        }
    }

    pub fn path(&self) -> Option<&TermPath> {
        match self {
            GrammarError::UndeclaredSymbol { path, .. } | GrammarError::TypeMismatch { path, .. } => {
                Some(path)
            }
            _ => None,
        }
    }
}

/// A higher-order grammar: typed nonterminals, one rule each, and a start
/// symbol of ground type. Declaration order is preserved for printing;
/// equality ignores it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grammar {
    nonterminals: IndexMap<Symbol, SimpleType>,
    start: Symbol,
    rules: IndexMap<Symbol, Rule>,
}

impl Grammar {
    /// Assembles a grammar without checking it. See [`Grammar::well_typed`].
    pub fn from_parts(
        start: Symbol,
        nonterminals: IndexMap<Symbol, SimpleType>,
        rules: IndexMap<Symbol, Rule>,
    ) -> Grammar {
        Grammar { nonterminals, start, rules }
    }

    /// Assembles and type checks.
    pub fn new(
        start: Symbol,
        nonterminals: IndexMap<Symbol, SimpleType>,
        rules: IndexMap<Symbol, Rule>,
    ) -> Result<Grammar, Vec<GrammarError>> {
        let g = Grammar::from_parts(start, nonterminals, rules);
        g.well_typed()?;
        Ok(g)
    }

    pub fn start(&self) -> Symbol {
        self.start
    }

    pub fn nonterminals(&self) -> &IndexMap<Symbol, SimpleType> {
        &self.nonterminals
    }

    pub fn rules(&self) -> &IndexMap<Symbol, Rule> {
        &self.rules
    }

    pub fn rule(&self, x: Symbol) -> Option<&Rule> {
        self.rules.get(&x)
    }

    pub fn type_of(&self, x: Symbol) -> Option<&SimpleType> {
        self.nonterminals.get(&x)
    }

    pub fn order(&self) -> usize {
        self.nonterminals.values().map(SimpleType::order).max().unwrap_or(0)
    }

    /// Sum of `|body| + #params` over all rules.
    pub fn size(&self) -> u64 {
        self.rules
            .values()
            .map(|r| r.body.size().saturating_add(r.params.len() as u64))
            .fold(0u64, u64::saturating_add)
    }

    /// `A_G`: the largest arity of any subtype of a nonterminal type.
    pub fn max_arity(&self) -> usize {
        self.nonterminals
            .values()
            .map(SimpleType::max_subtype_arity)
            .max()
            .unwrap_or(0)
    }

    pub fn max_app_depth(&self) -> usize {
        self.rules.values().map(|r| r.body.app_depth()).max().unwrap_or(0)
    }

    /// Every rule body has application depth at most 2.
    pub fn is_simple_form(&self) -> bool {
        self.max_app_depth() <= 2
    }

    /// Type of a term whose head is a symbol (or a node/choice constructor),
    /// read off the head's type and the number of arguments. Does not check
    /// the arguments; returns `None` when the head is unknown or over-applied.
    pub fn spine_type(&self, vars: &VarTypes, t: &Term) -> Option<SimpleType> {
        let (head, args) = t.spine();
        let head_ty = match head.kind() {
            TermKind::Nonterminal(x) => self.nonterminals.get(x)?.clone(),
            TermKind::Variable(v) => vars.get(v)?.clone(),
            TermKind::Node(_) | TermKind::Choice(_) => SimpleType::Ground,
            TermKind::Apply(..) => unreachable!("spine head is never an application"),
        };
        head_ty.drop_args(args.len()).cloned()
    }

    /// Full type inference for a term in the given variable scope.
    pub fn infer(&self, rule: Symbol, vars: &VarTypes, t: &Term) -> Result<SimpleType, GrammarError> {
        self.infer_at(rule, vars, t, &TermPath::default())
    }

    fn infer_at(
        &self,
        rule: Symbol,
        vars: &VarTypes,
        t: &Term,
        path: &TermPath,
    ) -> Result<SimpleType, GrammarError> {
        match t.kind() {
            TermKind::Nonterminal(x) => self.nonterminals.get(x).cloned().ok_or_else(|| {
                GrammarError::UndeclaredSymbol { rule, name: *x, path: path.clone() }
            }),
            TermKind::Variable(v) => vars.get(v).cloned().ok_or_else(|| {
                GrammarError::UndeclaredSymbol { rule, name: *v, path: path.clone() }
            }),
            TermKind::Node(ts) | TermKind::Choice(ts) => {
                for (i, c) in ts.iter().enumerate() {
                    let p = path.child(i as u32);
                    let ty = self.infer_at(rule, vars, c, &p)?;
                    if !ty.is_ground() {
                        return Err(GrammarError::TypeMismatch {
                            rule,
                            path: p,
                            expected: Expected::Exactly(SimpleType::Ground),
                            found: ty,
                        });
                    }
                }
                Ok(SimpleType::Ground)
            }
            TermKind::Apply(f, a) => {
                let fp = path.child(0);
                let fty = self.infer_at(rule, vars, f, &fp)?;
                let SimpleType::Arrow(dom, cod) = &fty else {
                    return Err(GrammarError::TypeMismatch {
                        rule,
                        path: fp,
                        expected: Expected::Function,
                        found: fty,
                    });
                };
                let ap = path.child(1);
                let aty = self.infer_at(rule, vars, a, &ap)?;
                if aty != **dom {
                    return Err(GrammarError::TypeMismatch {
                        rule,
                        path: ap,
                        expected: Expected::Exactly((**dom).clone()),
                        found: aty,
                    });
                }
                Ok((**cod).clone())
            }
        }
    }

    /// Checks every grammar invariant, collecting all diagnostics.
    pub fn well_typed(&self) -> Result<(), Vec<GrammarError>> {
        let mut errs = Vec::new();
        if self.nonterminals.is_empty() {
            errs.push(GrammarError::Empty);
        }
        match self.nonterminals.get(&self.start) {
            None => errs.push(GrammarError::UndeclaredStart { start: self.start }),
            Some(t) if !t.is_ground() => errs.push(GrammarError::StartNotGround {
                start: self.start,
                found: t.clone(),
            }),
            Some(_) => {}
        }
        for x in self.nonterminals.keys() {
            if !self.rules.contains_key(x) {
                errs.push(GrammarError::MissingRule { nonterminal: *x });
            }
        }
        for (key, rule) in &self.rules {
            if *key != rule.head {
                errs.push(GrammarError::RuleForUndeclared { rule: rule.head });
                continue;
            }
            let Some(ty) = self.nonterminals.get(&rule.head) else {
                errs.push(GrammarError::RuleForUndeclared { rule: rule.head });
                continue;
            };
            errs.extend(self.check_rule(ty, rule));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    fn check_rule(&self, ty: &SimpleType, rule: &Rule) -> Vec<GrammarError> {
        let mut errs = Vec::new();
        let head = rule.head;
        let expected = ty.args();
        if expected.len() != rule.params.len() {
            errs.push(GrammarError::ParamCount {
                rule: head,
                expected: expected.len(),
                found: rule.params.len(),
            });
            return errs;
        }
        let mut seen = HashSet::new();
        for ((p, pty), want) in rule.params.iter().zip(expected) {
            if !seen.insert(*p) {
                errs.push(GrammarError::DuplicateParam { rule: head, param: *p });
            }
            if self.nonterminals.contains_key(p) {
                errs.push(GrammarError::ParamShadowsNonterminal { rule: head, param: *p });
            }
            if pty != want {
                errs.push(GrammarError::ParamType {
                    rule: head,
                    param: *p,
                    expected: want.clone(),
                    found: pty.clone(),
                });
            }
        }
        if !errs.is_empty() {
            return errs;
        }
        match self.infer(head, &rule.param_types(), &rule.body) {
            Ok(t) if t.is_ground() => {}
            Ok(t) => errs.push(GrammarError::TypeMismatch {
                rule: head,
                path: TermPath::default(),
                expected: Expected::Exactly(SimpleType::Ground),
                found: t,
            }),
            Err(e) => errs.push(e),
        }
        errs
    }

    /// Substitution with each binding checked against the variable's type.
    pub fn substitute(
        &self,
        vars: &VarTypes,
        t: &Term,
        bindings: &HashMap<Symbol, Term>,
    ) -> Result<Term, GrammarError> {
        for (v, k) in bindings {
            let rule = Symbol::intern("<substitution>");
            let found = self.infer(rule, vars, k)?;
            if let Some(want) = vars.get(v) {
                if *want != found {
                    return Err(GrammarError::TypeMismatch {
                        rule,
                        path: TermPath::default(),
                        expected: Expected::Exactly(want.clone()),
                        found,
                    });
                }
            }
        }
        Ok(t.substitute(bindings))
    }
}

/// Incremental construction with duplicate detection.
#[derive(Default)]
pub struct GrammarBuilder {
    start: Option<Symbol>,
    nonterminals: IndexMap<Symbol, SimpleType>,
    rules: IndexMap<Symbol, (Vec<Symbol>, Term)>,
    errors: Vec<GrammarError>,
}

impl GrammarBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn start(mut self, x: impl Into<Symbol>) -> Self {
        self.start = Some(x.into());
        self
    }

    pub fn declare(mut self, x: impl Into<Symbol>, ty: SimpleType) -> Self {
        let x = x.into();
        if self.nonterminals.insert(x, ty).is_some() {
            self.errors.push(GrammarError::DuplicateDeclaration { nonterminal: x });
        }
        self
    }

    pub fn rule<P, S>(mut self, head: impl Into<Symbol>, params: P, body: Term) -> Self
    where
        P: IntoIterator<Item = S>,
        S: Into<Symbol>,
    {
        let head = head.into();
        let params = params.into_iter().map(Into::into).collect();
        if self.rules.insert(head, (params, body)).is_some() {
            self.errors.push(GrammarError::DuplicateRule { nonterminal: head });
        }
        self
    }

    /// Builds without type checking (parameter types are still derived from
    /// the head's declared type).
    pub fn build_unchecked(self) -> Result<Grammar, Vec<GrammarError>> {
        let mut errors = self.errors;
        let Some(start) = self.start.or_else(|| self.nonterminals.keys().next().copied()) else {
            errors.push(GrammarError::Empty);
            return Err(errors);
        };
        let mut rules = IndexMap::new();
        for (head, (params, body)) in self.rules {
            let Some(ty) = self.nonterminals.get(&head) else {
                errors.push(GrammarError::RuleForUndeclared { rule: head });
                continue;
            };
            let arg_tys = ty.args();
            if arg_tys.len() != params.len() {
                errors.push(GrammarError::ParamCount {
                    rule: head,
                    expected: arg_tys.len(),
                    found: params.len(),
                });
                continue;
            }
            let params = params.into_iter().zip(arg_tys.into_iter().cloned()).collect();
            rules.insert(head, Rule { head, params, body });
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        // Keep rule order aligned with declaration order.
        let mut ordered = IndexMap::new();
        for x in self.nonterminals.keys() {
            if let Some(r) = rules.swap_remove(x) {
                ordered.insert(*x, r);
            }
        }
        ordered.extend(rules);
        Ok(Grammar::from_parts(start, self.nonterminals, ordered))
    }

    pub fn build(self) -> Result<Grammar, Vec<GrammarError>> {
        let g = self.build_unchecked()?;
        g.well_typed()?;
        Ok(g)
    }
}
