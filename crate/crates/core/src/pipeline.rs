//! End-to-end decision procedure: normalize, apply the order-reducing
//! transformation until order 0, then solve the order-0 grammar.

use std::fmt;

use crate::grammar::{Grammar, GrammarError};
use crate::normalize::to_simple_form;
use crate::symbol::Symbol;
use crate::term::{Term, TermKind};
use crate::transform::dagger_grammar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stats {
    pub order: usize,
    pub size: u64,
    pub max_arity: usize,
    pub max_app_depth: usize,
    pub nonterminals: usize,
}

pub fn stats(g: &Grammar) -> Stats {
    Stats {
        order: g.order(),
        size: g.size(),
        max_arity: g.max_arity(),
        max_app_depth: g.max_app_depth(),
        nonterminals: g.nonterminals().len(),
    }
}

impl fmt::Display for Stats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "order={} size={} arity={} app_depth={} nonterminals={}",
            self.order, self.size, self.max_arity, self.max_app_depth, self.nonterminals
        )
    }
}

/// One line of a `solve` trace. Step 0 is the normalized input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepStats {
    pub step: usize,
    pub order: usize,
    pub size: u64,
    pub arity: usize,
}

impl fmt::Display for StepStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step={} order={} size={} arity={}", self.step, self.order, self.size, self.arity)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("nonterminal `{nonterminal}` is not an order-0 rule")]
pub struct NotOrderZero {
    pub nonterminal: Symbol,
}

/// Convergence of an order-0 grammar, in time linear in its size.
///
/// Every subterm of every body becomes a gate: `br` is a conjunction over its
/// occurrences (duplicates included), `or` a disjunction, and a nonterminal
/// occurrence copies the mark of its nonterminal. Marks only ever go from
/// false to true, so the worklist computes the least fixpoint.
pub fn solve_order0(g: &Grammar) -> Result<bool, NotOrderZero> {
    const NONE: u32 = u32::MAX;
    enum Gate {
        And,
        Or,
        Ref,
    }
    let index: std::collections::HashMap<Symbol, u32> =
        g.nonterminals().keys().enumerate().map(|(i, x)| (*x, i as u32)).collect();
    let n = index.len();
    let mut kind: Vec<Gate> = Vec::new();
    let mut parent: Vec<u32> = Vec::new();
    let mut pending: Vec<u32> = Vec::new();
    // Gate whose truth marks the nonterminal, per body root.
    let mut root_of: Vec<u32> = Vec::new();
    let mut uses: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut marked_gate: Vec<bool> = Vec::new();
    let mut work: Vec<u32> = Vec::new();

    for (x, ty) in g.nonterminals() {
        let rule = match g.rule(*x) {
            Some(r) if ty.is_ground() && r.params.is_empty() => r,
            _ => return Err(NotOrderZero { nonterminal: *x }),
        };
        let mut stack: Vec<(&Term, u32)> = vec![(&rule.body, NONE)];
        while let Some((t, up)) = stack.pop() {
            let id = kind.len() as u32;
            if up == NONE {
                root_of.push(id);
            }
            parent.push(up);
            marked_gate.push(false);
            match t.kind() {
                TermKind::Node(ts) => {
                    kind.push(Gate::And);
                    pending.push(ts.len() as u32);
                    if ts.is_empty() {
                        work.push(id);
                    }
                    stack.extend(ts.iter().map(|c| (c, id)));
                }
                TermKind::Choice(ts) => {
                    kind.push(Gate::Or);
                    pending.push(1);
                    stack.extend(ts.iter().map(|c| (c, id)));
                }
                TermKind::Nonterminal(y) => {
                    let Some(&j) = index.get(y) else {
                        return Err(NotOrderZero { nonterminal: *x });
                    };
                    kind.push(Gate::Ref);
                    pending.push(1);
                    uses[j as usize].push(id);
                }
                TermKind::Variable(_) | TermKind::Apply(..) => {
                    return Err(NotOrderZero { nonterminal: *x });
                }
            }
        }
    }
    // Inverse of root_of.
    let mut owner = vec![NONE; kind.len()];
    for (x, &r) in root_of.iter().enumerate() {
        owner[r as usize] = x as u32;
    }
    let mut marked = vec![false; n];
    while let Some(id) = work.pop() {
        let i = id as usize;
        if marked_gate[i] {
            continue;
        }
        marked_gate[i] = true;
        let x = owner[i];
        if x != NONE && !marked[x as usize] {
            marked[x as usize] = true;
            work.extend(uses[x as usize].iter().copied());
        }
        let p = parent[i];
        if p != NONE {
            let p = p as usize;
            if !marked_gate[p] {
                match kind[p] {
                    Gate::Or | Gate::Ref => work.push(p as u32),
                    Gate::And => {
                        pending[p] -= 1;
                        if pending[p] == 0 {
                            work.push(p as u32);
                        }
                    }
                }
            }
        }
    }
    let start = index.get(&g.start()).ok_or(NotOrderZero { nonterminal: g.start() })?;
    Ok(marked[*start as usize])
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub convergent: bool,
    pub trace: Vec<StepStats>,
}

fn step_stats(step: usize, g: &Grammar) -> StepStats {
    StepStats { step, order: g.order(), size: g.size(), arity: g.max_arity() }
}

/// Decides convergence of a well-typed grammar.
pub fn solve(g: &Grammar) -> Result<Solution, Vec<GrammarError>> {
    g.well_typed()?;
    let mut current = to_simple_form(g);
    let steps = current.order();
    let mut trace = vec![step_stats(0, &current)];
    for k in 1..=steps {
        current = dagger_grammar(&current);
        trace.push(step_stats(k, &current));
    }
    let convergent =
        solve_order0(&current).expect("the transformation reaches order 0 after ord(G) steps");
    Ok(Solution { convergent, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::tests::{example1, example2};
    use crate::textio::parse_grammar;

    fn parse(s: &str) -> Grammar {
        parse_grammar(s).unwrap()
    }

    #[test]
    fn order0_examples() {
        assert_eq!(solve_order0(&parse("X : o; X = omega;")), Ok(false));
        assert_eq!(solve_order0(&parse("X : o; X = leaf;")), Ok(true));
        let g = parse("X : o; X = br(Y, Z); Y : o; Y = leaf; Z : o; Z = or(Z);");
        assert_eq!(solve_order0(&g), Ok(false));
        let g = parse("X : o; X = br(Y, Y, or(X, Y)); Y : o; Y = or(X, br());");
        assert_eq!(solve_order0(&g), Ok(true));
        assert_eq!(solve_order0(&dagger_grammar(&example1())), Ok(true));
    }

    #[test]
    fn order0_rejects_higher_order() {
        let e = solve_order0(&example1()).unwrap_err();
        assert_eq!(e.nonterminal.as_str(), "X");
    }

    #[test]
    fn solve_examples() {
        let s = solve(&example1()).unwrap();
        assert!(s.convergent);
        assert_eq!(s.trace.len(), 2);
        assert_eq!(s.trace[0].to_string(), "step=0 order=1 size=8 arity=1");
        assert_eq!(s.trace[1].order, 0);
        let s = solve(&example2()).unwrap();
        assert!(s.convergent);
        assert_eq!(s.trace.iter().map(|t| t.order).collect::<Vec<_>>(), vec![2, 1, 0]);
    }

    #[test]
    fn solve_replacement_variants() {
        let z_omega = "X : o; X = Y Z; Y : o -> o; Y x = or(leaf, x); Z : o; Z = omega;";
        let y_id = "X : o; X = Y Z; Y : o -> o; Y x = x; Z : o; Z = leaf;";
        let both = "X : o; X = Y Z; Y : o -> o; Y x = x; Z : o; Z = omega;";
        assert!(solve(&parse(z_omega)).unwrap().convergent);
        assert!(solve(&parse(y_id)).unwrap().convergent);
        assert!(!solve(&parse(both)).unwrap().convergent);
    }

    #[test]
    fn stats_examples() {
        let s = stats(&example1());
        assert_eq!((s.order, s.size, s.max_arity), (1, 8, 1));
        let s = stats(&parse("X : o; X = leaf;"));
        assert_eq!((s.order, s.size, s.max_arity, s.nonterminals), (0, 1, 0, 1));
        let s = stats(&example2());
        assert_eq!((s.order, s.max_arity), (2, 1));
    }

    #[test]
    fn long_chains_are_linear() {
        let mut text = String::new();
        let n = 20_000;
        for i in 0..n {
            text.push_str(&format!("N{i} : o; N{i} = br(N{});\n", i + 1));
        }
        text.push_str(&format!("N{n} : o; N{n} = leaf;\n"));
        assert_eq!(solve_order0(&parse(&text)), Ok(true));
    }
}
