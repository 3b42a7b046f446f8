//! Least-fixpoint evaluation of AND–OR reduction graphs.
//!
//! A state is convergent iff one of its candidate sets consists only of
//! convergent states. States are discovered breadth first and memoized; each
//! candidate set is a clause with a counter of members not yet known to be
//! convergent, so the fixpoint is maintained incrementally as the graph grows.

use std::collections::VecDeque;
use std::fmt;
use std::hash::Hash;

use indexmap::IndexSet;

/// A (possibly infinite) system of states, each reducing to sets of states.
pub trait ReductionSystem {
    type State: Clone + Eq + Hash;

    /// Every set `N` with `s → N`, in a fixed order.
    fn candidates(&self, s: &Self::State) -> Vec<Vec<Self::State>>;

    /// States failing this check are not expanded and make the search
    /// inconclusive if it cannot finish without them.
    fn within_limits(&self, _s: &Self::State) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Convergent, with the step count of the derivation that was found.
    Convergent(u64),
    /// The whole reachable state space was explored without a derivation.
    Divergent,
    /// The search stopped after this many distinct states.
    BoundExceeded(usize),
}

impl Verdict {
    pub fn is_convergent(&self) -> bool {
        matches!(self, Verdict::Convergent(_))
    }

    /// `Some(truth)` unless the search was inconclusive.
    pub fn exact(&self) -> Option<bool> {
        match self {
            Verdict::Convergent(_) => Some(true),
            Verdict::Divergent => Some(false),
            Verdict::BoundExceeded(_) => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Convergent(n) => write!(f, "CONVERGENT {n}"),
            Verdict::Divergent => f.write_str("DIVERGENT"),
            Verdict::BoundExceeded(n) => write!(f, "UNKNOWN({n})"),
        }
    }
}

/// Placeholder member for states that did not fit in the table.
const OVERFLOW: usize = usize::MAX;

struct Clause {
    owner: usize,
    members: Vec<usize>,
    remaining: usize,
}

/// The explored part of a reduction graph together with its least fixpoint.
pub struct Evaluation<R: ReductionSystem> {
    states: IndexSet<R::State>,
    steps: Vec<Option<u64>>,
    chosen: Vec<Option<usize>>,
    watchers: Vec<Vec<usize>>,
    clauses: Vec<Clause>,
    verdict: Verdict,
}

impl<R: ReductionSystem> Evaluation<R> {
    /// Explores from `root` until it is shown convergent, the reachable graph
    /// is exhausted, or `budget` distinct states have been recorded.
    pub fn run(system: &R, root: R::State, budget: usize) -> Self {
        let mut ev: Self = Evaluation {
            states: IndexSet::new(),
            steps: Vec::new(),
            chosen: Vec::new(),
            watchers: Vec::new(),
            clauses: Vec::new(),
            verdict: Verdict::Divergent,
        };
        let mut incomplete = false;
        let mut queue = VecDeque::new();
        let budget = budget.max(1);
        let root_id = ev.intern(root, budget).expect("budget admits the root");
        queue.push_back(root_id);
        while let Some(id) = queue.pop_front() {
            if ev.steps[0].is_some() {
                break;
            }
            let state = ev.states.get_index(id).expect("interned").clone();
            if !system.within_limits(&state) {
                incomplete = true;
                continue;
            }
            for set in system.candidates(&state) {
                let mut members = Vec::with_capacity(set.len());
                for s in set {
                    let before = ev.states.len();
                    let m = match ev.intern(s, budget) {
                        Some(m) => m,
                        None => {
                            incomplete = true;
                            OVERFLOW
                        }
                    };
                    if m != OVERFLOW && m == before {
                        queue.push_back(m);
                    }
                    if !members.contains(&m) {
                        members.push(m);
                    }
                }
                ev.add_clause(id, members);
            }
        }
        ev.verdict = match ev.steps[0] {
            Some(n) => Verdict::Convergent(n),
            None if incomplete => Verdict::BoundExceeded(ev.states.len()),
            None => Verdict::Divergent,
        };
        ev
    }

    fn intern(&mut self, s: R::State, budget: usize) -> Option<usize> {
        if let Some(i) = self.states.get_index_of(&s) {
            return Some(i);
        }
        if self.states.len() >= budget {
            return None;
        }
        let (i, _) = self.states.insert_full(s);
        self.steps.push(None);
        self.chosen.push(None);
        self.watchers.push(Vec::new());
        Some(i)
    }

    fn add_clause(&mut self, owner: usize, members: Vec<usize>) {
        let c = self.clauses.len();
        let mut remaining = 0;
        for &m in &members {
            if m == OVERFLOW {
                remaining += 1;
            } else if self.steps[m].is_none() {
                remaining += 1;
                self.watchers[m].push(c);
            }
        }
        self.clauses.push(Clause { owner, members, remaining });
        if remaining == 0 {
            self.fire(c);
        }
    }

    fn fire(&mut self, first: usize) {
        let mut pending = vec![first];
        while let Some(c) = pending.pop() {
            let owner = self.clauses[c].owner;
            if self.steps[owner].is_some() {
                continue;
            }
            let n = self.clauses[c]
                .members
                .iter()
                .map(|&m| self.steps[m].expect("all members marked"))
                .fold(1u64, u64::saturating_add);
            self.steps[owner] = Some(n);
            self.chosen[owner] = Some(c);
            for w in std::mem::take(&mut self.watchers[owner]) {
                let clause = &mut self.clauses[w];
                clause.remaining -= 1;
                if clause.remaining == 0 {
                    pending.push(w);
                }
            }
        }
    }

    pub fn verdict(&self) -> Verdict {
        self.verdict
    }

    /// Number of distinct states recorded.
    pub fn visited(&self) -> usize {
        self.states.len()
    }

    /// For a state shown convergent: its step count and the candidate set the
    /// derivation uses.
    pub fn derivation(&self, s: &R::State) -> Option<(u64, Vec<R::State>)> {
        let id = self.states.get_index_of(s)?;
        let steps = self.steps[id]?;
        let clause = &self.clauses[self.chosen[id]?];
        let set = clause.members.iter().map(|&m| self.states.get_index(m).expect("interned").clone()).collect();
        Some((steps, set))
    }
}
