//! The `.hog` text format.
//!
//! ```text
//! # comment
//! start X;
//! X : o;
//! X = Y Z;
//! Y : o -> o;
//! Y x = or(leaf, x);
//! Z : o;
//! Z = leaf;
//! ```
//!
//! Every statement ends with `;`. `br(` and `or(` are single tokens, so the
//! keyword must touch its parenthesis. Type checking runs after parsing and
//! its diagnostics are mapped back to source spans.

use std::collections::HashMap;
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::grammar::{Grammar, GrammarError, Rule, TermPath};
use crate::symbol::Symbol;
use crate::term::Term;
use crate::types::SimpleType;

/// 1-based position of a token in the source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DiagnosticKind {
    #[error("syntax error: expected {expected}, found {found}")]
    Syntax { expected: String, found: String },
    #[error("`start` given more than once")]
    DuplicateStart,
    #[error(transparent)]
    Grammar(GrammarError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub span: SourceSpan,
    pub kind: DiagnosticKind,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.kind)
    }
}

impl std::error::Error for Diagnostic {}

const KEYWORDS: [&str; 6] = ["start", "br", "or", "leaf", "omega", "o"];

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(is_ident_continue)
        && !KEYWORDS.contains(&s)
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '\'' | '@')
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Start,
    Ground,
    Leaf,
    Omega,
    BrOpen,
    OrOpen,
    LParen,
    RParen,
    Comma,
    Semi,
    Colon,
    Arrow,
    Equals,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Start => f.write_str("`start`"),
            Tok::Ground => f.write_str("`o`"),
            Tok::Leaf => f.write_str("`leaf`"),
            Tok::Omega => f.write_str("`omega`"),
            Tok::BrOpen => f.write_str("`br(`"),
            Tok::OrOpen => f.write_str("`or(`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Equals => f.write_str("`=`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, SourceSpan)>, Vec<Diagnostic>> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut errs = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let span = |len: usize| SourceSpan { line, column: col, length: len.max(1) };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let begin = i;
            while i < chars.len() && is_ident_continue(chars[i]) {
                i += 1;
            }
            let word: String = chars[begin..i].iter().collect();
            let mut len = i - begin;
            let tok = match word.as_str() {
                "br" | "or" if chars.get(i) == Some(&'(') => {
                    i += 1;
                    len += 1;
                    if word == "br" { Tok::BrOpen } else { Tok::OrOpen }
                }
                "br" | "or" => {
                    errs.push(Diagnostic {
                        span: span(len),
                        kind: DiagnosticKind::Syntax {
                            expected: format!("`{word}(`"),
                            found: format!("`{word}`"),
                        },
                    });
                    col += len;
                    continue;
                }
                "start" => Tok::Start,
                "o" => Tok::Ground,
                "leaf" => Tok::Leaf,
                "omega" => Tok::Omega,
                _ => Tok::Ident(word),
            };
            toks.push((tok, span(len)));
            col += len;
            continue;
        }
        let (tok, len) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            ',' => (Tok::Comma, 1),
            ';' => (Tok::Semi, 1),
            ':' => (Tok::Colon, 1),
            '=' => (Tok::Equals, 1),
            '-' if chars.get(i + 1) == Some(&'>') => (Tok::Arrow, 2),
            _ => {
                errs.push(Diagnostic {
                    span: span(1),
                    kind: DiagnosticKind::Syntax {
                        expected: "a token".into(),
                        found: format!("character {c:?}"),
                    },
                });
                i += 1;
                col += 1;
                continue;
            }
        };
        toks.push((tok, span(len)));
        i += len;
        col += len;
    }
    toks.push((Tok::Eof, SourceSpan { line, column: col, length: 1 }));
    if errs.is_empty() {
        Ok(toks)
    } else {
        Err(errs)
    }
}

#[derive(Debug)]
enum SynKind {
    Name(String),
    Node(Vec<SynTerm>),
    Choice(Vec<SynTerm>),
    Apply(Box<SynTerm>, Box<SynTerm>),
}

#[derive(Debug)]
struct SynTerm {
    kind: SynKind,
    span: SourceSpan,
}

struct SynRule {
    head: (String, SourceSpan),
    params: Vec<String>,
    body: SynTerm,
    span: SourceSpan,
}

struct Parser {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, SourceSpan) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> Diagnostic {
        Diagnostic {
            span: self.span(),
            kind: DiagnosticKind::Syntax {
                expected: expected.to_owned(),
                found: self.peek().to_string(),
            },
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<SourceSpan> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            Err(self.error(&tok.to_string()))
        }
    }

    fn ident(&mut self) -> PResult<(String, SourceSpan)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let sp = self.bump().1;
                Ok((s, sp))
            }
            _ => Err(self.error("an identifier")),
        }
    }

    fn recover(&mut self) {
        while !matches!(self.peek(), Tok::Semi | Tok::Eof) {
            self.bump();
        }
        if *self.peek() == Tok::Semi {
            self.bump();
        }
    }

    fn ty(&mut self) -> PResult<SimpleType> {
        let dom = match self.peek() {
            Tok::Ground => {
                self.bump();
                SimpleType::Ground
            }
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                t
            }
            _ => return Err(self.error("a type")),
        };
        if *self.peek() == Tok::Arrow {
            self.bump();
            Ok(SimpleType::arrow(dom, self.ty()?))
        } else {
            Ok(dom)
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Ident(_) | Tok::Leaf | Tok::Omega | Tok::BrOpen | Tok::OrOpen | Tok::LParen
        )
    }

    fn term(&mut self) -> PResult<SynTerm> {
        if !self.starts_atom() {
            return Err(self.error("a term"));
        }
        let mut t = self.atom()?;
        while self.starts_atom() {
            let arg = self.atom()?;
            let span = t.span;
            t = SynTerm { kind: SynKind::Apply(Box::new(t), Box::new(arg)), span };
        }
        Ok(t)
    }

    fn atom(&mut self) -> PResult<SynTerm> {
        let span = self.span();
        let kind = match self.bump().0 {
            Tok::Ident(s) => SynKind::Name(s),
            Tok::Leaf => SynKind::Node(Vec::new()),
            Tok::Omega => SynKind::Choice(Vec::new()),
            Tok::BrOpen => SynKind::Node(self.term_list()?),
            Tok::OrOpen => SynKind::Choice(self.term_list()?),
            Tok::LParen => {
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                return Ok(t);
            }
            _ => unreachable!("checked by starts_atom"),
        };
        Ok(SynTerm { kind, span })
    }

    fn term_list(&mut self) -> PResult<Vec<SynTerm>> {
        let mut out = Vec::new();
        if *self.peek() == Tok::RParen {
            self.bump();
            return Ok(out);
        }
        loop {
            out.push(self.term()?);
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RParen => {
                    self.bump();
                    return Ok(out);
                }
                _ => return Err(self.error("`,` or `)`")),
            }
        }
    }
}

enum Stmt {
    Start(String, SourceSpan),
    Decl(String, SimpleType, SourceSpan),
    Rule(SynRule),
}

fn statement(p: &mut Parser) -> PResult<Stmt> {
    let span = p.span();
    if *p.peek() == Tok::Start {
        p.bump();
        let (name, _) = p.ident()?;
        p.expect(Tok::Semi)?;
        return Ok(Stmt::Start(name, span));
    }
    let (name, name_span) = p.ident()?;
    if *p.peek() == Tok::Colon {
        p.bump();
        let ty = p.ty()?;
        p.expect(Tok::Semi)?;
        return Ok(Stmt::Decl(name, ty, span));
    }
    let mut params = Vec::new();
    while let Tok::Ident(s) = p.peek().clone() {
        p.bump();
        params.push(s);
    }
    if *p.peek() != Tok::Equals {
        return Err(p.error(if params.is_empty() { "`:`, `=` or a parameter" } else { "`=` or a parameter" }));
    }
    p.bump();
    let body = p.term()?;
    p.expect(Tok::Semi)?;
    Ok(Stmt::Rule(SynRule { head: (name, name_span), params, body, span }))
}

/// Where each part of the grammar came from, for mapping type errors back.
#[derive(Default)]
struct SpanTable {
    start: Option<SourceSpan>,
    decls: HashMap<Symbol, SourceSpan>,
    rules: HashMap<Symbol, SourceSpan>,
    subterms: HashMap<(Symbol, TermPath), SourceSpan>,
}

fn lower(
    t: &SynTerm,
    params: &[Symbol],
    rule: Symbol,
    path: TermPath,
    spans: &mut SpanTable,
) -> Term {
    spans.subterms.insert((rule, path.clone()), t.span);
    match &t.kind {
        SynKind::Name(s) => {
            let sym = Symbol::intern(s);
            if params.contains(&sym) {
                Term::var(sym)
            } else {
                Term::nonterminal(sym)
            }
        }
        SynKind::Node(ts) | SynKind::Choice(ts) => {
            let children = ts
                .iter()
                .enumerate()
                .map(|(i, c)| lower(c, params, rule, path.child(i as u32), spans))
                .collect();
            if matches!(t.kind, SynKind::Node(_)) {
                Term::node(children)
            } else {
                Term::choice(children)
            }
        }
        SynKind::Apply(f, a) => Term::apply(
            lower(f, params, rule, path.child(0), spans),
            lower(a, params, rule, path.child(1), spans),
        ),
    }
}

impl SpanTable {
    fn locate(&self, e: &GrammarError) -> SourceSpan {
        let fallback = SourceSpan { line: 1, column: 1, length: 1 };
        if let (Some(rule), Some(path)) = (e.rule(), e.path()) {
            if let Some(sp) = self.subterms.get(&(rule, path.clone())) {
                return *sp;
            }
        }
        match e {
            GrammarError::MissingRule { nonterminal } | GrammarError::DuplicateDeclaration { nonterminal } => {
                self.decls.get(nonterminal).copied().unwrap_or(fallback)
            }
            GrammarError::StartNotGround { start, .. } | GrammarError::UndeclaredStart { start } => self
                .start
                .or_else(|| self.decls.get(start).copied())
                .unwrap_or(fallback),
            _ => e
                .rule()
                .and_then(|r| self.rules.get(&r).or_else(|| self.decls.get(&r)).copied())
                .unwrap_or(fallback),
        }
    }
}

/// Parses and type checks a grammar.
pub fn parse_grammar(text: &str) -> Result<Grammar, Vec<Diagnostic>> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let mut diags = Vec::new();
    let mut stmts = Vec::new();
    while *p.peek() != Tok::Eof {
        match statement(&mut p) {
            Ok(s) => stmts.push(s),
            Err(d) => {
                diags.push(d);
                p.recover();
            }
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }

    let mut spans = SpanTable::default();
    let mut start = None;
    let mut nonterminals = IndexMap::new();
    let mut syn_rules: IndexMap<Symbol, SynRule> = IndexMap::new();
    let grammar_diag = |span: SourceSpan, e: GrammarError| Diagnostic {
        span,
        kind: DiagnosticKind::Grammar(e),
    };
    for s in stmts {
        match s {
            Stmt::Start(name, span) => {
                if start.is_some() {
                    diags.push(Diagnostic { span, kind: DiagnosticKind::DuplicateStart });
                }
                start = Some(Symbol::intern(&name));
                spans.start = Some(span);
            }
            Stmt::Decl(name, ty, span) => {
                let x = Symbol::intern(&name);
                if nonterminals.insert(x, ty).is_some() {
                    diags.push(grammar_diag(span, GrammarError::DuplicateDeclaration { nonterminal: x }));
                } else {
                    spans.decls.insert(x, span);
                }
            }
            Stmt::Rule(r) => {
                let x = Symbol::intern(&r.head.0);
                if syn_rules.contains_key(&x) {
                    diags.push(grammar_diag(r.span, GrammarError::DuplicateRule { nonterminal: x }));
                } else {
                    spans.rules.insert(x, r.span);
                    syn_rules.insert(x, r);
                }
            }
        }
    }
    let Some(start) = start.or_else(|| nonterminals.keys().next().copied()) else {
        diags.push(Diagnostic {
            span: p.span(),
            kind: DiagnosticKind::Grammar(GrammarError::Empty),
        });
        return Err(diags);
    };

    let mut rules = IndexMap::new();
    for (x, r) in &syn_rules {
        let Some(ty) = nonterminals.get(x) else {
            diags.push(grammar_diag(r.head.1, GrammarError::RuleForUndeclared { rule: *x }));
            continue;
        };
        let arg_tys = ty.args();
        if arg_tys.len() != r.params.len() {
            diags.push(grammar_diag(
                r.span,
                GrammarError::ParamCount { rule: *x, expected: arg_tys.len(), found: r.params.len() },
            ));
            continue;
        }
        let names: Vec<Symbol> = r.params.iter().map(|s| Symbol::intern(s)).collect();
        let body = lower(&r.body, &names, *x, TermPath::default(), &mut spans);
        let params = names.into_iter().zip(arg_tys.into_iter().cloned()).collect();
        rules.insert(*x, Rule { head: *x, params, body });
    }
    // Rules follow declaration order.
    let mut ordered = IndexMap::new();
    for x in nonterminals.keys() {
        if let Some(r) = rules.swap_remove(x) {
            ordered.insert(*x, r);
        }
    }
    ordered.extend(rules);

    let g = Grammar::from_parts(start, nonterminals, ordered);
    if let Err(errs) = g.well_typed() {
        for e in errs {
            // Rules that failed to lower were already reported.
            if matches!(e, GrammarError::MissingRule { nonterminal } if syn_rules.contains_key(&nonterminal)) {
                continue;
            }
            diags.push(Diagnostic { span: spans.locate(&e), kind: DiagnosticKind::Grammar(e) });
        }
    }
    if diags.is_empty() {
        Ok(g)
    } else {
        diags.sort_by_key(|d| (d.span.line, d.span.column));
        Err(diags)
    }
}

/// Canonical text: `start` first, then each declaration followed by its rule.
pub fn print_grammar(g: &Grammar) -> String {
    let mut out = format!("start {};\n", g.start());
    for (x, ty) in g.nonterminals() {
        out.push_str(&format!("{x} : {ty};\n"));
        if let Some(r) = g.rule(*x) {
            out.push_str(&print_rule(r));
            out.push('\n');
        }
    }
    for (x, r) in g.rules() {
        if !g.nonterminals().contains_key(x) {
            out.push_str(&print_rule(r));
            out.push('\n');
        }
    }
    out
}

pub fn print_rule(r: &Rule) -> String {
    let mut s = r.head.to_string();
    for (p, _) in &r.params {
        s.push(' ');
        s.push_str(p.as_str());
    }
    format!("{s} = {};", r.body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::tests::{example1, example2};
    use crate::grammar::Expected;

    const EXAMPLE1: &str = "start X; X : o; X = Y Z; Y : o -> o; Y x = or(leaf, x); Z : o; Z = leaf;";

    #[test]
    fn parses_example1() {
        assert_eq!(parse_grammar(EXAMPLE1).unwrap(), example1());
    }

    #[test]
    fn start_defaults_to_first_declaration() {
        let g = parse_grammar("X : o; X = omega;").unwrap();
        assert_eq!(g.start(), Symbol::intern("X"));
        assert!(g.rule(g.start()).unwrap().body.is_omega());
    }

    #[test]
    fn applying_leaf_is_a_type_error() {
        let errs = parse_grammar("X : o; X = br(leaf leaf);").unwrap_err();
        assert_eq!(errs.len(), 1);
        let d = &errs[0];
        assert!(matches!(
            &d.kind,
            DiagnosticKind::Grammar(GrammarError::TypeMismatch { expected: Expected::Function, .. })
        ));
        assert_eq!((d.span.line, d.span.column), (1, 15));
    }

    #[test]
    fn prints_example1_canonically() {
        let text = print_grammar(&example1());
        assert_eq!(
            text,
            "start X;\nX : o;\nX = Y Z;\nY : o -> o;\nY x = or(leaf, x);\nZ : o;\nZ = leaf;\n"
        );
        assert_eq!(text.replace('\n', " ").trim_end(), EXAMPLE1);
    }

    #[test]
    fn prints_parenthesized_types_and_omega() {
        let text = print_grammar(&example2());
        assert!(text.contains("T : (o -> o) -> o;\n"));
        assert!(text.contains("T y = y (y leaf);\n"));
        let g = parse_grammar("X : o; X = omega;").unwrap();
        assert!(print_grammar(&g).contains("X = omega;"));
    }

    #[test]
    fn comments_and_whitespace() {
        let g = parse_grammar("# header\nstart X;   # trailing\nX:o;X=br(leaf,\n omega);").unwrap();
        assert_eq!(g.rule("X".into()).unwrap().body.to_string(), "br(leaf, omega)");
    }

    #[test]
    fn syntax_errors_carry_spans() {
        let errs = parse_grammar("X : o;\nX = br(leaf,);").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert!(matches!(errs[0].kind, DiagnosticKind::Syntax { .. }));
        assert_eq!((errs[0].span.line, errs[0].span.column), (2, 13));
    }

    #[test]
    fn missing_final_semicolon_is_an_error() {
        assert!(parse_grammar("X : o; X = leaf").is_err());
    }

    #[test]
    fn keyword_must_touch_parenthesis() {
        assert!(parse_grammar("X : o; X = br (leaf);").is_err());
        assert!(parse_grammar("X : o; X = br(leaf);").is_ok());
    }

    #[test]
    fn duplicates_are_errors() {
        let errs = parse_grammar("X : o; X : o; X = leaf;").unwrap_err();
        assert!(matches!(
            errs[0].kind,
            DiagnosticKind::Grammar(GrammarError::DuplicateDeclaration { .. })
        ));
        let errs = parse_grammar("X : o; X = leaf; X = omega;").unwrap_err();
        assert!(matches!(errs[0].kind, DiagnosticKind::Grammar(GrammarError::DuplicateRule { .. })));
        let errs = parse_grammar("start X; start X; X : o; X = leaf;").unwrap_err();
        assert_eq!(errs[0].kind, DiagnosticKind::DuplicateStart);
    }

    #[test]
    fn transformed_names_are_identifiers() {
        let g = parse_grammar("start X; X : o; X = Y@0; Y@0 : o; Y@0 = or(leaf, omega); z'@1 : o; z'@1 = leaf;")
            .unwrap();
        assert_eq!(g.nonterminals().len(), 3);
        assert!(is_identifier("x@1"));
        assert!(!is_identifier("leaf"));
        assert!(!is_identifier("1x"));
    }

    #[test]
    fn start_not_ground_is_reported() {
        let errs = parse_grammar("start F; F : o -> o; F x = x;").unwrap_err();
        assert!(matches!(
            errs[0].kind,
            DiagnosticKind::Grammar(GrammarError::StartNotGround { .. })
        ));
    }

    #[test]
    fn param_count_mismatch() {
        let errs = parse_grammar("Y : o; Y = leaf; X : o -> o; X = leaf;").unwrap_err();
        assert!(matches!(errs[0].kind, DiagnosticKind::Grammar(GrammarError::ParamCount { .. })));
    }
}
