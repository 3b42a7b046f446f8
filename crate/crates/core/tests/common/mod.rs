#![allow(dead_code)]

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stepdown::harness::{gen_grammar, gen_term, GenParams};
use stepdown::semantics::{
    decide_convergence, decide_ext_convergence, ext_reduce_candidates, is_simplified,
    reduce_candidates, tr_ext, ExtTerm,
};
use stepdown::textio::parse_grammar;
use stepdown::transform::{dagger_grammar, enumerate_assignments, Assignment, GroundValuation, Transformer};
use stepdown::{Grammar, SimpleType, Symbol, Term, VarTypes};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap()
}

pub fn fixture(name: &str) -> Grammar {
    parse_grammar(&fixture_text(name)).unwrap()
}

/// Parameters of the large differential run.
pub fn differential_params() -> GenParams {
    GenParams {
        max_order: 3,
        max_arity: 3,
        max_nonterminals: 6,
        max_body_size: 12,
        choice_bias: 0.3,
        seed: 20_000,
    }
}

/// Small grammars for the lemma suites.
fn lemma_params(seed: u64) -> GenParams {
    GenParams { max_order: 2, max_arity: 2, max_nonterminals: 4, max_body_size: 8, choice_bias: 0.3, seed }
}

pub const LEMMA_BUDGET: usize = 20_000;
pub const LEMMA_INSTANCES: usize = 200;
const MAX_ATTEMPTS: usize = 20_000;

#[derive(Debug, Default)]
pub struct SuiteResult {
    /// Instances on which the property was actually decided.
    pub checked: usize,
    pub failures: Vec<String>,
}

impl SuiteResult {
    pub fn ok(&self) -> bool {
        self.failures.is_empty() && self.checked >= LEMMA_INSTANCES
    }

    fn fail(&mut self, msg: String) {
        if self.failures.len() < 5 {
            self.failures.push(msg);
        }
    }
}

fn ground(vars: &[Symbol]) -> VarTypes {
    vars.iter().map(|v| (*v, SimpleType::Ground)).collect()
}

fn names(prefix: &str, n: usize) -> Vec<Symbol> {
    (1..=n).map(|i| Symbol::intern(&format!("{prefix}{i}"))).collect()
}

/// An extended term whose free variables are among `free`. Bound variables are
/// named `b1…`, with `b1` outermost.
pub fn gen_ext<R: Rng>(g: &Grammar, free: &[Symbol], rng: &mut R) -> ExtTerm {
    let depth = rng.gen_range(0..=3);
    let bound = names("b", depth);
    let mut in_scope: Vec<Symbol> = free.to_vec();
    // Replacements, outermost first; each sees only what is bound outside it.
    let mut reps = Vec::new();
    for b in &bound {
        let size = rng.gen_range(1..=5);
        reps.push(gen_term(g, &ground(&in_scope), &SimpleType::Ground, size, 0.3, rng).unwrap());
        in_scope.push(*b);
    }
    let body = if !in_scope.is_empty() && rng.gen_bool(0.25) {
        Term::var(in_scope[rng.gen_range(0..in_scope.len())])
    } else {
        let size = rng.gen_range(1..=8);
        gen_term(g, &ground(&in_scope), &SimpleType::Ground, size, 0.3, rng).unwrap()
    };
    let mut e = ExtTerm::plain(body);
    for (b, l) in bound.iter().zip(reps).rev() {
        e = e.subst(*b, l);
    }
    e
}

fn grammar_for(attempt: usize) -> Grammar {
    gen_grammar(&lemma_params(attempt as u64)).unwrap()
}

/// Types that can be filled in `g`: nonterminal types and their arguments.
fn fillable_types(g: &Grammar) -> Vec<SimpleType> {
    let mut out: Vec<SimpleType> = Vec::new();
    for t in g.nonterminals().values() {
        for c in std::iter::once(t).chain(t.args()) {
            if !out.contains(c) {
                out.push(c.clone());
            }
        }
    }
    out
}

/// `tr(A, Z, R[K/y]) = tr(A, Z, R)[tr(B, Z, K_i) / y_{i,B}]`.
pub fn suite_subst_commutation(seed: u64) -> SuiteResult {
    let mut res = SuiteResult::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..MAX_ATTEMPTS {
        if res.checked >= LEMMA_INSTANCES {
            break;
        }
        let g = grammar_for(attempt);
        let types = fillable_types(&g);
        let zs = names("z", rng.gen_range(0..=2));
        let ys = names("y", rng.gen_range(1..=3));
        let y_types: Vec<SimpleType> = ys.iter().map(|_| types[rng.gen_range(0..types.len())].clone()).collect();
        let mut r_vars = ground(&zs);
        r_vars.extend(ys.iter().copied().zip(y_types.iter().cloned()));
        let r_type = types[rng.gen_range(0..types.len())].clone();
        let Some(r) = gen_term(&g, &r_vars, &r_type, rng.gen_range(1..=10), 0.3, &mut rng) else { continue };
        let ks: Option<Vec<Term>> = y_types
            .iter()
            .map(|t| gen_term(&g, &ground(&zs), t, rng.gen_range(1..=6), 0.3, &mut rng))
            .collect();
        let Some(ks) = ks else { continue };
        let z: GroundValuation = zs.iter().map(|v| (*v, rng.gen_bool(0.5))).collect();
        let bits: Vec<bool> = (0..r_type.gar()).map(|_| rng.gen_bool(0.5)).collect();
        let a = Assignment::from_bits(&bits);

        let tf = Transformer::new(&g);
        let r_scope = tf.scope(&r_vars);
        let k_scope = tf.scope(&ground(&zs));
        let bindings: HashMap<Symbol, Term> = ys.iter().copied().zip(ks.iter().cloned()).collect();
        let lhs = tf.tr(&r_scope, a, &z, &r.substitute(&bindings)).unwrap();
        let mut copies = HashMap::new();
        for ((y, t), k) in ys.iter().zip(&y_types).zip(&ks) {
            for b in enumerate_assignments(t.gar()) {
                let name = r_scope.copy(*y, b).unwrap();
                copies.insert(name, tf.tr(&k_scope, b, &z, k).unwrap());
            }
        }
        let rhs = tf.tr(&r_scope, a, &z, &r).unwrap().substitute(&copies);
        res.checked += 1;
        if lhs != rhs {
            res.fail(format!("R = {r}, K = {ks:?}: {lhs} vs {rhs}"));
        }
    }
    res
}

/// If `tr(∅, Z[v↦0], E)` converges in the transformed grammar, so does
/// `tr(∅, Z[v↦1], E)`. Instances count when both verdicts are exact.
pub fn suite_monotonicity(seed: u64) -> SuiteResult {
    let mut res = SuiteResult::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut premise = 0;
    for attempt in 0..MAX_ATTEMPTS {
        if res.checked >= LEMMA_INSTANCES && premise > 0 {
            break;
        }
        let g = grammar_for(attempt);
        let gd = dagger_grammar(&g);
        let free = names("v", rng.gen_range(1..=2));
        let e = gen_ext(&g, &free, &mut rng);
        let v = free[0];
        let z: GroundValuation = free[1..].iter().map(|w| (*w, rng.gen_bool(0.5))).collect();
        let t0 = tr_ext(&g, &z.with(v, false), &e).unwrap();
        let t1 = tr_ext(&g, &z.with(v, true), &e).unwrap();
        let (Some(c0), Some(c1)) = (
            decide_convergence(&gd, &t0, LEMMA_BUDGET).exact(),
            decide_convergence(&gd, &t1, LEMMA_BUDGET).exact(),
        ) else {
            continue;
        };
        res.checked += 1;
        premise += usize::from(c0);
        if c0 && !c1 {
            res.fail(format!("E = {e:?}"));
        }
    }
    res
}

/// `E` is ext-convergent iff `exp(E)` is convergent.
pub fn suite_ext_equivalence(seed: u64) -> SuiteResult {
    let mut res = SuiteResult::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..MAX_ATTEMPTS {
        if res.checked >= LEMMA_INSTANCES {
            break;
        }
        let g = grammar_for(attempt);
        let e = gen_ext(&g, &[], &mut rng);
        let (Some(a), Some(b)) = (
            decide_ext_convergence(&g, &e, LEMMA_BUDGET).exact(),
            decide_convergence(&g, &e.expand(), LEMMA_BUDGET).exact(),
        ) else {
            continue;
        };
        res.checked += 1;
        if a != b {
            res.fail(format!("E = {e:?}: ext {a}, expanded {b}"));
        }
    }
    res
}

/// `E` is ext-convergent iff `tr(∅, ∅, E)` converges in the transformed grammar.
pub fn suite_transformed_equivalence(seed: u64) -> SuiteResult {
    let mut res = SuiteResult::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..MAX_ATTEMPTS {
        if res.checked >= LEMMA_INSTANCES {
            break;
        }
        let g = grammar_for(attempt);
        let gd = dagger_grammar(&g);
        let e = gen_ext(&g, &[], &mut rng);
        let t = tr_ext(&g, &GroundValuation::new(), &e).unwrap();
        let (Some(a), Some(b)) = (
            decide_ext_convergence(&g, &e, LEMMA_BUDGET).exact(),
            decide_convergence(&gd, &t, LEMMA_BUDGET).exact(),
        ) else {
            continue;
        };
        res.checked += 1;
        if a != b {
            res.fail(format!("E = {e:?}: ext {a}, transformed {b}"));
        }
    }
    res
}

fn as_set(ts: impl IntoIterator<Item = Term>) -> Vec<Term> {
    let mut out: Vec<Term> = Vec::new();
    for t in ts {
        if !out.contains(&t) {
            out.push(t);
        }
    }
    out
}

fn same_set(a: &[Term], b: &[Term]) -> bool {
    a.len() == b.len() && a.iter().all(|t| b.contains(t))
}

/// For every `E ⇝ F`: `exp(E) → exp(F)` or `exp(F) = {exp(E)}`. For
/// simplified `E`, conversely every reduction of `exp(E)` is matched by some
/// ext-reduction. Checked along random ext-reduction walks.
pub fn suite_transfer(seed: u64) -> SuiteResult {
    let mut res = SuiteResult::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..MAX_ATTEMPTS {
        if res.checked >= LEMMA_INSTANCES {
            break;
        }
        let g = grammar_for(attempt);
        let mut e = gen_ext(&g, &[], &mut rng);
        let mut seen = HashSet::new();
        for _ in 0..12 {
            if !seen.insert(e.clone()) || e.size() > 200 {
                break;
            }
            let exp = e.expand();
            let plain: Vec<Vec<Term>> =
                reduce_candidates(&g, &exp).into_iter().map(as_set).collect();
            let cands = ext_reduce_candidates(&g, &e);
            let expanded: Vec<Vec<Term>> =
                cands.iter().map(|f| as_set(f.iter().map(ExtTerm::expand))).collect();
            for f in &expanded {
                let reduces = plain.iter().any(|n| same_set(n, f));
                let unchanged = same_set(f, std::slice::from_ref(&exp));
                if !reduces && !unchanged {
                    res.fail(format!("E = {e:?}: candidate {f:?} not matched"));
                }
            }
            if is_simplified(&e) {
                for n in &plain {
                    if !expanded.iter().any(|f| same_set(f, n)) {
                        res.fail(format!("E = {e:?}: reduction {n:?} has no ext counterpart"));
                    }
                }
            }
            res.checked += 1;
            let next: Vec<&ExtTerm> = cands.iter().flatten().collect();
            if next.is_empty() {
                break;
            }
            e = next[rng.gen_range(0..next.len())].clone();
        }
    }
    res
}
