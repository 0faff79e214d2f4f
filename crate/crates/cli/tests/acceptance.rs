//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use haem_cli::corpus::{self, CorpusEntry};
use haem_core::extract::{extract_witness, hyp_context};
use haem_core::lang::{Atom, Formula, Registry};
use haem_core::oracle::Oracle;
use haem_core::post::{validate_post, PostRule, PostVerdict};
use haem_core::reduce::{Normalization, Redex, Reducer, RuleId, Strategy, DEFAULT_WITNESS_BOUND};
use haem_core::syntax::{parse_term, read_one, term_from_str};
use haem_core::term::{Path, System, Term, WfError};
use haem_core::translate::{erase, simulate_step};
use haem_core::typing::{Checker, Context, Signature, TypingRule};

use common::Gen;

const SEED: u64 = 0x4841_454d;

fn t(s: &str) -> Term {
    term_from_str(s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

fn path(s: &str) -> Path {
    Path(
        s.split('/')
            .filter(|p| !p.is_empty())
            .map(|p| p.parse().unwrap())
            .collect(),
    )
}

fn entries() -> Vec<CorpusEntry> {
    corpus::load(&corpus::default_root()).expect("corpus loads")
}

fn entry<'a>(all: &'a [CorpusEntry], name: &str) -> &'a CorpusEntry {
    all.iter()
        .find(|e| e.name == name)
        .unwrap_or_else(|| panic!("no corpus entry {name}"))
}

fn reducer(system: System) -> Reducer {
    Reducer::new(Registry::standard(), system)
}

/// One rule instance: a corpus term, optionally erased and advanced by
/// canonical steps, the redex, and the whole reduct written out by hand
/// from the rule's schema.
struct Row {
    entry: &'static str,
    erased: bool,
    after: usize,
    path: &'static str,
    rule: RuleId,
    param: Option<u64>,
    reduct: &'static str,
}

const fn row(
    entry: &'static str,
    after: usize,
    path: &'static str,
    rule: RuleId,
    param: Option<u64>,
    reduct: &'static str,
) -> Row {
    Row {
        entry,
        erased: false,
        after,
        path,
        rule,
        param,
        reduct,
    }
}

const fn nem(
    entry: &'static str,
    path: &'static str,
    rule: RuleId,
    param: Option<u64>,
    reduct: &'static str,
) -> Row {
    Row {
        entry,
        erased: true,
        after: 0,
        path,
        rule,
        param,
        reduct,
    }
}

/// EM₁ rules, instantiated on corpus terms.
const EM1_ROWS: &[Row] = &[
    row("beta", 0, "/", RuleId::Beta, None, "true"),
    row("beta_arith", 0, "/", RuleId::BetaArith, None, "(lam x (eq 3 3) x)"),
    row("proj", 0, "/", RuleId::Proj, None, "true"),
    row("case_inj", 0, "/", RuleId::CaseInj, None, "true"),
    row("dest_pair", 0, "/", RuleId::DestPair, None, "(wpair 2 true)"),
    row(
        "rec",
        0,
        "/",
        RuleId::RecSucc,
        None,
        "(app (aapp (alam n (lam x (eq 0 0) x)) 1) (rec true (alam n (lam x (eq 0 0) x)) 1 (all n (eq 0 0))))",
    ),
    row("rec", 6, "/", RuleId::RecZero, None, "true"),
    row(
        "perm_app",
        0,
        "/",
        RuleId::PermApp,
        None,
        "(em a (app (lam y (eq 0 0) (wpair 0 (post bot-elim (post contra (aapp (hyp a (not_eq x 3) x) 3) true)) (ex b (eq b 3)))) true) (app (lam z (eq 0 0) (wit a (not_eq x 3) x)) true))",
    ),
    row(
        "perm_aapp",
        0,
        "/",
        RuleId::PermAApp,
        None,
        "(em a (aapp (alam n (lam y (eq n n) y)) 4) (aapp (alam m (lam z (eq m m) z)) 4))",
    ),
    row(
        "perm_proj",
        0,
        "/",
        RuleId::PermProj,
        None,
        "(em a (proj0 (pair (wpair 0 (post bot-elim (post contra (aapp (hyp a (not_eq x 2) x) 2) true)) (ex b (eq b 2))) true)) (proj0 (pair (wit a (not_eq x 2) x) true)))",
    ),
    row(
        "case_em",
        0,
        "/",
        RuleId::PermCase,
        None,
        "(em a (case (inj0 (hyp a (not_eq x 3) x) (or (all x (not_eq x 3)) (ex x (eq x 3)))) u (wpair 0 (post bot-elim (post contra (aapp u 3) true))) v v) (case (inj1 (wit a (not_eq x 3) x) (or (all x (not_eq x 3)) (ex x (eq x 3)))) u (wpair 0 (post bot-elim (post contra (aapp u 3) true))) v v))",
    ),
    row(
        "perm_dest",
        0,
        "/",
        RuleId::PermDest,
        None,
        "(em a (dest (wpair 0 (post bot-elim (post contra (aapp (hyp a (not_eq x 5) x) 5) true)) (ex b (eq b 5))) k y (wpair k y)) (dest (wit a (not_eq x 5) x) k y (wpair k y)))",
    ),
    row(
        "hyp_check",
        0,
        "/0/0",
        RuleId::HypCheck,
        None,
        "(em a (wpair 0 true (ex b (eq b 0))) (wpair 0 true))",
    ),
    row("hyp_check", 1, "/", RuleId::EmDrop, None, "(wpair 0 true (ex b (eq b 0)))"),
    row("exc_eq_s0", 0, "/", RuleId::EmRaise, Some(1), "(wpair 1 true (ex x (eq x 1)))"),
];

/// Rules specific to NEM, on NEM entries and erased EM₁ entries. The
/// shared rules are also replayed on the erasures of the EM₁ rows.
const NEM_ROWS: &[Row] = &[
    nem("nem_hyp", "/0", RuleId::HypCheck, None, "(em true true)"),
    nem("nem_hyp", "/", RuleId::ChooseLeft, None, "(aapp (hyp (eq x 0) x) 0)"),
    nem("nem_hyp", "/", RuleId::ChooseRight, None, "true"),
    nem(
        "nem_perm",
        "/",
        RuleId::PermApp,
        None,
        "(em (app (lam y (eq 0 0) y) true) (app (lam z (eq 0 0) true) true))",
    ),
    nem("exc_eq_s0", "/1", RuleId::WitGuess, Some(4), "(em (wpair 0 (post bot-elim (post contra (aapp (hyp (not_eq x 1) x) 1) true))) (wpair 4 true (ex x (eq x 1))))"),
    nem("exc_eq_s0", "/1", RuleId::WitGuess, Some(0), "(em (wpair 0 (post bot-elim (post contra (aapp (hyp (not_eq x 1) x) 1) true))) (wpair 0 true (ex x (eq x 1))))"),
];

fn source(all: &[CorpusEntry], r: &Row, system: System) -> Term {
    let e = entry(all, r.entry);
    let mut term = if r.erased || system == System::Nem && e.judgment.system == System::Em1 {
        erase(&e.judgment.term)
    } else {
        e.judgment.term.clone()
    };
    if r.after > 0 {
        let red = reducer(system);
        let n = red.normalize(&term, Strategy::Canonical, r.after).unwrap();
        term = n.trace().last().clone();
    }
    term
}

fn fire(all: &[CorpusEntry], r: &Row, system: System, erase_expected: bool) -> Result<(), String> {
    let red = reducer(system);
    let src = source(all, r, system);
    let redex = Redex::new(path(r.path), r.rule, r.param);
    let listed = red.redexes(&src).map_err(|e| e.to_string())?;
    if !listed.contains(&redex) {
        return Err(format!(
            "{} [{system}]: {redex} not found in {src}",
            r.entry
        ));
    }
    let got = red.apply_step(&src, &redex).map_err(|e| e.to_string())?;
    let want = if erase_expected {
        erase(&t(r.reduct))
    } else {
        t(r.reduct)
    };
    if got != want {
        return Err(format!(
            "{} [{system}] {redex}: got {got}, want {want}",
            r.entry
        ));
    }
    Ok(())
}

fn criterion_1() -> Result<String, String> {
    let all = entries();
    let mut fired: BTreeSet<(System, RuleId)> = BTreeSet::new();
    for r in EM1_ROWS {
        fire(&all, r, System::Em1, false)?;
        fired.insert((System::Em1, r.rule));
        if RuleId::of_system(System::Nem).contains(&r.rule) {
            fire(&all, r, System::Nem, true)?;
            fired.insert((System::Nem, r.rule));
        }
    }
    for r in NEM_ROWS {
        fire(&all, r, System::Nem, false)?;
        fired.insert((System::Nem, r.rule));
    }
    for system in [System::Em1, System::Nem] {
        for rule in RuleId::of_system(system) {
            if !fired.contains(&(system, rule)) {
                return Err(format!("{rule} has no {system} instance"));
            }
        }
    }
    let mut groups = BTreeSet::new();
    for e in all.iter().filter(|e| e.is_typed()) {
        let j = &e.judgment;
        let sig = j.signature().map_err(|e| e.to_string())?;
        let d = Checker::new(&sig, j.system)
            .check(&j.context, &j.term, &j.formula)
            .map_err(|err| format!("{}: {err}", e.name))?;
        groups.extend(d.rules().into_iter().map(TypingRule::group));
    }
    let all_groups: BTreeSet<_> = TypingRule::ALL.iter().map(|r| r.group()).collect();
    if let Some(missing) = all_groups.difference(&groups).next() {
        return Err(format!(
            "typing rule group {missing} is not used by the corpus"
        ));
    }
    Ok(format!(
        "{} EM₁ rules, {} NEM rules, {} typing rule groups",
        RuleId::of_system(System::Em1).len(),
        RuleId::of_system(System::Nem).len(),
        groups.len()
    ))
}

fn simulate_all(red: &Reducer, v: &Term) -> Result<usize, String> {
    let mut n = 0;
    for r in red.redexes(v).map_err(|e| e.to_string())? {
        let p = simulate_step(red, v, &r).map_err(|e| format!("{v} {r}: {e}"))?;
        if p.steps.is_empty() {
            return Err(format!("{v} {r}: empty path"));
        }
        let w = red.apply_step(v, &r).map_err(|e| e.to_string())?;
        p.verify(red.registry(), red.witness_bound(), &erase(&w))
            .map_err(|e| format!("{v} {r}: {e}"))?;
        n += 1;
    }
    Ok(n)
}

fn criterion_2() -> Result<String, String> {
    let red = reducer(System::Em1);
    let mut steps = 0;
    for e in entries()
        .iter()
        .filter(|e| e.judgment.system == System::Em1 && e.expected("well-formed") == Some("ok"))
    {
        steps += simulate_all(&red, &e.judgment.term)?;
    }
    let sig = Signature::standard();
    let mut rules = BTreeSet::new();
    let generated = Gen::new(SEED).typed_em1_batch(&sig, 12, 500);
    for (v, _, _) in &generated {
        steps += simulate_all(&red, v)?;
        rules.extend(red.redexes(v).unwrap().into_iter().map(|r| r.rule));
    }
    Ok(format!(
        "{steps} simulated steps over the corpus and {} generated terms covering {} rules",
        generated.len(),
        rules.len()
    ))
}

/// Heights recomputed per edge, independently of the tree's own table.
fn check_heights(
    system: System,
    witness_bound: u64,
    term: &Term,
    node_budget: usize,
) -> Result<Option<(u64, usize)>, String> {
    let red = reducer(system).with_witness_bound(witness_bound);
    let tree = red
        .reduction_tree(term, node_budget)
        .map_err(|e| e.to_string())?;
    if !tree.is_complete() {
        return Ok(None);
    }
    let heights = tree.heights();
    let mut edges = 0;
    for (i, r, j) in tree.edges() {
        let (Some(hi), Some(hj)) = (heights[i], heights[j]) else {
            return Err(format!("missing height in a complete tree of {term}"));
        };
        if hi <= hj {
            return Err(format!(
                "{term}: height {hi} does not exceed {hj} along {r}"
            ));
        }
        edges += 1;
    }
    for (i, node) in tree.nodes.iter().enumerate() {
        let expect = node
            .children
            .iter()
            .map(|(_, j)| heights[*j].unwrap() + 1)
            .max()
            .unwrap_or(0);
        if heights[i] != Some(expect) {
            return Err(format!("{term}: inconsistent height at node {i}"));
        }
    }
    Ok(Some((tree.height().unwrap(), edges)))
}

fn criterion_3() -> Result<String, String> {
    let mut checked = 0;
    for e in entries().iter().filter(|e| e.is_typed()) {
        let j = &e.judgment;
        let red = reducer(j.system);
        let tree = red
            .reduction_tree(&j.term, 100_000)
            .map_err(|err| format!("{}: {err}", e.name))?;
        if !tree.is_complete() {
            return Err(format!("{}: tree cut at {} nodes", e.name, tree.len()));
        }
        let h = tree.height().unwrap().to_string();
        let golden = e
            .expected("height")
            .ok_or(format!("{}: no golden height", e.name))?;
        if h != golden {
            return Err(format!("{}: height {h}, golden {golden}", e.name));
        }
        let oracle = Oracle::new(Registry::standard(), j.system, red.witness_bound())
            .explore(&j.term, 100_000)
            .ok_or(format!("{}: oracle budget exhausted", e.name))?;
        if oracle.height.to_string() != golden
            || Some(oracle.nodes.to_string().as_str()) != e.expected("nodes")
        {
            return Err(format!("{}: oracle disagrees with the goldens", e.name));
        }
        checked += 1;
    }
    Ok(format!(
        "{checked} complete trees, heights equal to the goldens"
    ))
}

fn criterion_4() -> Result<String, String> {
    let mut trees = 0;
    let mut edges = 0;
    for e in entries().iter().filter(|e| e.is_typed()) {
        let (_, n) = check_heights(
            e.judgment.system,
            DEFAULT_WITNESS_BOUND,
            &e.judgment.term,
            100_000,
        )?
        .ok_or(format!("{}: incomplete tree", e.name))?;
        trees += 1;
        edges += n;
    }
    let sig = Signature::standard();
    let mut nem_trees = 0;
    for (v, _, _) in Gen::new(SEED ^ 4).typed_em1_batch(&sig, 8, 200) {
        let u = erase(&v);
        let (_, n) = check_heights(System::Nem, 3, &u, 100_000)?
            .ok_or(format!("{u}: incomplete NEM tree"))?;
        nem_trees += 1;
        edges += n;
    }
    Ok(format!(
        "{edges} edges over {trees} corpus trees and {nem_trees} NEM trees"
    ))
}

/// `ctx` extended by the universal hypotheses cited free in `u`.
fn with_free_hyps(ctx: &Context, u: &Term) -> Result<Context, String> {
    let extra = hyp_context(u).map_err(|e| format!("{u}: {e}"))?;
    let mut decls = ctx.decls().to_vec();
    decls.extend(extra.decls().iter().cloned());
    Context::from_decls(decls).map_err(|e| e.to_string())
}

fn criterion_5() -> Result<String, String> {
    let mut reducts = 0;
    let mut erased = 0;
    for e in entries().iter().filter(|e| e.is_typed()) {
        let j = &e.judgment;
        let sig = j.signature().map_err(|e| e.to_string())?;
        let checker = Checker::new(&sig, j.system);
        let red = reducer(j.system);
        let tree = red
            .reduction_tree(&j.term, 100_000)
            .map_err(|e| e.to_string())?;
        for (i, r, k) in tree.edges() {
            let u = &tree.nodes[k].term;
            let ctx = with_free_hyps(&j.context, u)?;
            checker.check(&ctx, u, &j.formula).map_err(|err| {
                format!(
                    "{}: reduct {u} of {} by {r}: {err}",
                    e.name, tree.nodes[i].term
                )
            })?;
            reducts += 1;
        }
        if j.system == System::Em1 {
            let u = erase(&j.term);
            Checker::new(&sig, System::Nem)
                .check(&j.context, &u, &j.formula)
                .map_err(|err| format!("{}: erasure {u}: {err}", e.name))?;
            erased += 1;
        }
    }
    Ok(format!(
        "{reducts} reducts re-checked, {erased} erasures checked in NEM"
    ))
}

/// Witnesses of the `∃β P` pairs of a normal form.
fn leaf_witnesses(t: &Term, out: &mut Vec<u64>) {
    match t {
        Term::WPair { witness, .. } => out.extend(witness.as_numeral()),
        Term::Em { left, right, .. } => {
            leaf_witnesses(left, out);
            leaf_witnesses(right, out);
        }
        _ => {}
    }
}

fn criterion_6() -> Result<String, String> {
    let all = entries();
    let sig = Signature::standard();
    let mut verified = Vec::new();
    for e in all
        .iter()
        .filter(|e| e.is_typed() && e.expected("witness").is_some())
    {
        let j = &e.judgment;
        let x = extract_witness(&sig, &j.term, &j.formula, 10_000)
            .map_err(|err| format!("{}: {err}", e.name))?;
        let Formula::Ex(beta, body) = &j.formula else {
            return Err(format!("{}: goal is not existential", e.name));
        };
        let p = body.as_atom().unwrap();
        let n = haem_core::lang::ArithTerm::numeral(x.witness);
        if !sig
            .registry
            .eval_atom(&p.subst(beta, &n))
            .map_err(|e| e.to_string())?
        {
            return Err(format!(
                "{}: extracted witness {} is refuted",
                e.name, x.witness
            ));
        }
        if e.expected("witness") != Some(x.witness.to_string().as_str()) {
            return Err(format!(
                "{}: witness {} differs from the golden",
                e.name, x.witness
            ));
        }
        let tree = Oracle::new(sig.registry.clone(), System::Em1, 8)
            .explore(&j.term, 100_000)
            .ok_or(format!("{}: oracle budget exhausted", e.name))?;
        let mut found = BTreeSet::new();
        for leaf in &tree.leaves {
            let mut ws = Vec::new();
            leaf_witnesses(leaf, &mut ws);
            let good: Vec<u64> = ws
                .into_iter()
                .filter(|w| {
                    sig.registry
                        .eval_atom(&p.subst(beta, &haem_core::lang::ArithTerm::numeral(*w)))
                        == Ok(true)
                })
                .collect();
            if good.is_empty() {
                return Err(format!(
                    "{}: normal form {leaf} carries no valid witness",
                    e.name
                ));
            }
            found.extend(good);
        }
        if !found.contains(&x.witness) {
            return Err(format!(
                "{}: witness {} not reachable in the oracle tree",
                e.name, x.witness
            ));
        }
        verified.push((e.name.clone(), x.witness));
    }
    let s0 = verified.iter().find(|(n, _)| n == "exc_eq_s0");
    if s0.map(|(_, w)| *w) != Some(1) {
        return Err("the exception proof of ∃β eq(β, S0) does not extract S0".into());
    }
    if verified.len() < 3 {
        return Err(format!("only {} extraction examples", verified.len()));
    }
    let list: Vec<String> = verified.iter().map(|(n, w)| format!("{n}={w}")).collect();
    Ok(list.join(" "))
}

fn criterion_7() -> Result<String, String> {
    let mut compared = 0;
    let mut redexes = 0;
    for system in [System::Em1, System::Nem] {
        let red = reducer(system).with_witness_bound(3);
        let oracle = Oracle::new(Registry::standard(), system, 3);
        let mut gen = Gen::new(SEED ^ if system == System::Em1 { 7 } else { 11 });
        let mut n = 0;
        while n < 1000 {
            let src = gen.untyped(system, 4);
            let sexp = read_one(&src).map_err(|e| format!("{src}: {e}"))?;
            let term = parse_term(&sexp).map_err(|e| format!("{src}: {e}"))?;
            let Ok(mine) = red.redexes(&term) else {
                continue;
            };
            let theirs = oracle.redexes(&term);
            let a: BTreeSet<_> = mine.iter().collect();
            let b: BTreeSet<_> = theirs.iter().collect();
            if a != b {
                return Err(format!(
                    "[{system}] {term}: production {mine:?}, oracle {theirs:?}"
                ));
            }
            for r in &mine {
                let x = red.apply_step(&term, r).map_err(|e| e.to_string())?;
                let y = oracle
                    .contract(&term, r)
                    .ok_or(format!("{term}: oracle cannot contract {r}"))?;
                if !x.alpha_eq(&y) {
                    return Err(format!("[{system}] {term} {r}: {x} vs {y}"));
                }
            }
            redexes += mine.len();
            n += 1;
        }
        compared += n;
    }
    Ok(format!(
        "{compared} terms, {redexes} redexes, no discrepancy"
    ))
}

fn criterion_8() -> Result<String, String> {
    let all = entries();
    let looping = &entry(&all, "looping").judgment;
    match reducer(System::Em1).normalize(&looping.term, Strategy::Canonical, 10_000) {
        Ok(Normalization::BudgetExhausted { trace }) if trace.len() == 10_000 => {}
        other => return Err(format!("looping term: {other:?}")),
    }
    let mixed = &entry(&all, "mixed").judgment;
    if mixed.term.check_well_formed(System::Em1) != Err(WfError::MixedLabels)
        || mixed.term.check_well_formed(System::Nem) != Err(WfError::MixedLabels)
    {
        return Err("mixed-label term is accepted".into());
    }
    let rule = PostRule::schema("bad", vec![], Atom::new("eq", vec![t_arith(0), t_arith(1)]));
    match validate_post(&Registry::standard(), &rule, 6) {
        Ok(PostVerdict::RefutedAt(_)) => {}
        other => return Err(format!("⊢ eq(0, S0) is not refuted: {other:?}")),
    }
    if Signature::standard().add_rule(rule, 6).is_ok() {
        return Err("refuted rule was added to the signature".into());
    }
    Ok("budget exhausted, mixed labels rejected, eq(0, S0) refuted".into())
}

fn t_arith(n: u64) -> haem_core::lang::ArithTerm {
    haem_core::lang::ArithTerm::numeral(n)
}

type Check = fn() -> Result<String, String>;

fn main() {
    let criteria: [(Check, Option<Duration>); 8] = [
        (criterion_1, Some(Duration::from_secs(5))),
        (criterion_2, Some(Duration::from_secs(60))),
        (criterion_3, None),
        (criterion_4, None),
        (criterion_5, None),
        (criterion_6, Some(Duration::from_secs(10))),
        (criterion_7, None),
        (criterion_8, None),
    ];
    let mut failed = 0;
    for (i, (check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(l)) if elapsed > *l => Err(format!("took {elapsed:.2?}, limit {l:?}")),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("criterion {}: PASS ({detail}; {elapsed:.2?})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL ({detail})", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
