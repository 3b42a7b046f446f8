//! One line per acceptance criterion. Exits non-zero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use rayon::prelude::*;

use common::*;
use stepdown::harness::{case_seed, differential_test, gen_grammar, GenParams};
use stepdown::normalize::to_simple_form;
use stepdown::pipeline::{solve, solve_order0};
use stepdown::semantics::{decide_grammar, DEFAULT_BUDGET};
use stepdown::textio::{parse_grammar, print_grammar};
use stepdown::transform::dagger_grammar;
use stepdown::{Grammar, Rule, SimpleType, Symbol, Term};

type Outcome = Result<String, String>;
type Suite = (&'static str, fn(u64) -> SuiteResult);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:?}, limit {limit:?}"))?;
    Ok(t)
}

fn golden(input: &str, expected: &str) -> Outcome {
    let start = Instant::now();
    let g = fixture(input);
    let printed = print_grammar(&dagger_grammar(&g));
    ensure(printed == fixture_text(expected), || format!("transformed grammar differs:\n{printed}"))?;
    let s = solve(&g).map_err(|e| format!("{e:?}"))?;
    ensure(s.convergent, || "solve says DIVERGENT".into())?;
    let t = within(Duration::from_secs(1), start)?;
    Ok(format!("transformed grammar matches, CONVERGENT, {t:?}"))
}

fn triptych() -> Outcome {
    let mut parts = Vec::new();
    for (name, want) in [
        ("example1_z_omega.hog", true),
        ("example1_y_identity.hog", true),
        ("example1_both_replaced.hog", false),
    ] {
        let g = fixture(name);
        let solved = solve(&g).map_err(|e| format!("{e:?}"))?.convergent;
        let oracle = decide_grammar(&g, DEFAULT_BUDGET);
        ensure(solved == want && oracle.exact() == Some(want), || {
            format!("{name}: solve={solved} oracle={oracle}, expected {want}")
        })?;
        parts.push(format!("{name}={}", if want { "CONVERGENT" } else { "DIVERGENT" }));
    }
    Ok(parts.join(" "))
}

const CASES: usize = 500;

fn differential() -> Outcome {
    let start = Instant::now();
    let report = differential_test(&differential_params(), CASES, DEFAULT_BUDGET);
    let t = start.elapsed();
    let (failed, unknown) = (report.failed(), report.inconclusive());
    let rate = unknown as f64 / CASES as f64;
    let detail = format!(
        "passed={} failed={failed} inconclusive={unknown} ({:.1}%), {t:?}",
        report.passed(),
        rate * 100.0
    );
    ensure(report.cases.len() == CASES, || format!("only {} cases generated", report.cases.len()))?;
    ensure(failed == 0, || format!("{detail}\n{report}"))?;
    ensure(rate <= 0.10, || detail.clone())?;
    within(Duration::from_secs(300), start)?;
    Ok(detail)
}

struct Shape {
    order_ok: bool,
    simple_ok: bool,
    /// Worst ratios of measured size to the fixed envelopes.
    normalize_ratio: f64,
    dagger_ratio: f64,
    steps: usize,
}

fn shape(g: &Grammar) -> Shape {
    let n = to_simple_form(g);
    let a = g.max_arity() as f64;
    let normalize_ratio = n.size() as f64 / (16.0 * a * g.size() as f64 + 16.0);
    let mut s = Shape {
        order_ok: n.order() == g.order(),
        simple_ok: n.rules().values().all(|r| r.body.app_depth() <= 2),
        normalize_ratio,
        dagger_ratio: 0.0,
        steps: 0,
    };
    let mut cur = n;
    while cur.order() > 0 {
        let next = dagger_grammar(&cur);
        let a = cur.max_arity() as i32;
        let bound = 16.0 * cur.size() as f64 * 2f64.powi(5 * a) + 16.0;
        s.dagger_ratio = s.dagger_ratio.max(next.size() as f64 / bound);
        s.order_ok &= next.order() == cur.order() - 1;
        s.simple_ok &= next.rules().values().all(|r| r.body.app_depth() <= 2);
        s.steps += 1;
        cur = next;
    }
    s
}

fn shapes() -> Vec<(u64, Shape)> {
    let p = differential_params();
    (0..CASES)
        .into_par_iter()
        .map(|i| {
            let seed = case_seed(&p, i);
            let g = gen_grammar(&GenParams { seed, ..p.clone() }).expect("generation succeeds");
            (seed, shape(&g))
        })
        .collect()
}

fn order_drop(shapes: &[(u64, Shape)]) -> Outcome {
    let bad: Vec<u64> = shapes.iter().filter(|(_, s)| !s.order_ok || !s.simple_ok).map(|(k, _)| *k).collect();
    ensure(bad.is_empty(), || format!("violations at seeds {bad:?}"))?;
    let steps: usize = shapes.iter().map(|(_, s)| s.steps).sum();
    Ok(format!("{} grammars, {steps} transformation steps, all bodies app_depth <= 2", shapes.len()))
}

fn complexity(shapes: &[(u64, Shape)]) -> Outcome {
    let worst_n = shapes.iter().map(|(_, s)| s.normalize_ratio).fold(0.0, f64::max);
    let worst_d = shapes.iter().map(|(_, s)| s.dagger_ratio).fold(0.0, f64::max);
    ensure(worst_n <= 1.0 && worst_d <= 1.0, || {
        format!("envelope exceeded: normalize {worst_n:.3}, transform {worst_d:.3}")
    })?;
    Ok(format!("max size/envelope: normalize {worst_n:.3}, transform {worst_d:.2e}"))
}

fn lemma_suites() -> Outcome {
    let suites: [Suite; 5] = [
        ("a:subst-commutation", suite_subst_commutation),
        ("b:monotonicity", suite_monotonicity),
        ("c:ext-vs-expand", suite_ext_equivalence),
        ("d:ext-vs-transformed", suite_transformed_equivalence),
        ("e:transfer", suite_transfer),
    ];
    let results: Vec<(&str, SuiteResult)> =
        suites.par_iter().enumerate().map(|(i, (name, f))| (*name, f(100 + i as u64))).collect();
    let summary: Vec<String> = results.iter().map(|(n, r)| format!("{n}={}", r.checked)).collect();
    for (name, r) in &results {
        ensure(r.ok(), || format!("{name}: {} checked, failures {:#?}", r.checked, r.failures))?;
    }
    Ok(summary.join(" "))
}

fn chain(n: usize, end: Term) -> Grammar {
    let names: Vec<Symbol> = (0..=n).map(|i| Symbol::intern(&format!("N{i}"))).collect();
    let nonterminals: IndexMap<Symbol, SimpleType> = names.iter().map(|x| (*x, SimpleType::Ground)).collect();
    let rules = names
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let body = if i == n { end.clone() } else { Term::node(vec![Term::nonterminal(names[i + 1])]) };
            (*x, Rule { head: *x, params: Vec::new(), body })
        })
        .collect();
    Grammar::from_parts(names[0], nonterminals, rules)
}

fn linear_order0() -> Outcome {
    let mut parts = Vec::new();
    for (end, want) in [(Term::leaf(), true), (Term::omega(), false)] {
        let g = chain(100_000, end);
        let start = Instant::now();
        let got = solve_order0(&g).map_err(|e| e.to_string())?;
        let t = within(Duration::from_secs(2), start)?;
        ensure(got == want, || format!("expected {want}, got {got}"))?;
        parts.push(format!("{want} in {t:?}"));
    }
    Ok(parts.join(", "))
}

fn round_trip() -> Outcome {
    for i in 0..1000u64 {
        let p = GenParams {
            max_order: (i % 4) as usize,
            max_arity: 1 + (i % 3) as usize,
            max_nonterminals: 6,
            max_body_size: 12,
            choice_bias: 0.3,
            seed: 90_000 + i,
        };
        let g = gen_grammar(&p).map_err(|e| e.to_string())?;
        let text = print_grammar(&g);
        let back = parse_grammar(&text).map_err(|d| format!("seed {}: {d:?}", p.seed))?;
        ensure(back == g, || format!("seed {} differs after reparsing:\n{text}", p.seed))?;
    }
    Ok("1000 grammars".into())
}

fn report(n: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
    match outcome {
        Ok(detail) => {
            println!("PASS {n} {name}: {detail}");
            true
        }
        Err(detail) => {
            println!("FAIL {n} {name}: {detail}");
            false
        }
    }
}

fn main() {
    let shapes = shapes();
    let results = [
        report(1, "golden example 1", || golden("example1.hog", "example1_dagger.hog")),
        report(2, "golden example 2", || golden("example2.hog", "example2_dagger.hog")),
        report(3, "replacement variants", triptych),
        report(4, "differential suite", differential),
        report(5, "order drop and simple form", || order_drop(&shapes)),
        report(6, "size envelopes", || complexity(&shapes)),
        report(7, "lemma suites", lemma_suites),
        report(8, "linear order-0 solver", linear_order0),
        report(9, "round trip", round_trip),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
