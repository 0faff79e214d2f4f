//! Seeded term generators for the acceptance checks.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use haem_core::extract::hyp_context;
use haem_core::lang::Formula;
use haem_core::reduce::Reducer;
use haem_core::syntax::{formula_from_str, term_from_str};
use haem_core::term::{System, Term};
use haem_core::typing::{Checker, Context, Signature};

/// Goal formulas of the typed generator. Atoms are `eq(m, k)`.
#[derive(Debug, Clone, PartialEq)]
enum Goal {
    Eq(u64, u64),
    And(Box<Goal>, Box<Goal>),
    Imp(Box<Goal>, Box<Goal>),
    Or(Box<Goal>, Box<Goal>),
    /// `∃b eq(b, c)`.
    ExEq(u64),
}

impl Goal {
    fn render(&self) -> String {
        match self {
            Goal::Eq(m, k) => format!("(eq {m} {k})"),
            Goal::And(a, b) => format!("(and {} {})", a.render(), b.render()),
            Goal::Imp(a, b) => format!("(-> {} {})", a.render(), b.render()),
            Goal::Or(a, b) => format!("(or {} {})", a.render(), b.render()),
            Goal::ExEq(c) => format!("(ex b (eq b {c}))"),
        }
    }
}

/// An EM hypothesis in scope: label and predicate `eq(x,c)` or `¬eq(x,c)`.
#[derive(Debug, Clone, Copy)]
struct Hyp {
    label: usize,
    negated: bool,
    c: u64,
}

impl Hyp {
    fn pred(&self) -> String {
        let rel = if self.negated { "not_eq" } else { "eq" };
        format!("({rel} x {})", self.c)
    }

    /// Truth of the predicate at `m`.
    fn holds(&self, m: u64) -> bool {
        (m == self.c) != self.negated
    }
}

#[derive(Debug, Clone, Default)]
struct Scope {
    vars: Vec<(String, Goal)>,
    hyps: Vec<Hyp>,
    wits: Vec<Hyp>,
    /// The proof must be inferable, not only checkable.
    infer: bool,
}

impl Scope {
    fn checked(&self) -> Scope {
        Scope {
            infer: false,
            ..self.clone()
        }
    }
}

pub struct Gen {
    rng: ChaCha8Rng,
    fresh: usize,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            fresh: 0,
        }
    }

    fn next(&mut self) -> usize {
        self.fresh += 1;
        self.fresh
    }

    fn num(&mut self) -> u64 {
        self.rng.gen_range(0..3)
    }

    fn small_goal(&mut self, depth: u32) -> Goal {
        let n = self.num();
        if depth == 0 {
            return Goal::Eq(n, n);
        }
        match self.rng.gen_range(0..6) {
            0 => Goal::And(
                Box::new(self.small_goal(depth - 1)),
                Box::new(self.small_goal(depth - 1)),
            ),
            1 => Goal::Imp(
                Box::new(self.small_goal(depth - 1)),
                Box::new(self.small_goal(depth - 1)),
            ),
            2 => Goal::Or(
                Box::new(self.small_goal(depth - 1)),
                Box::new(self.small_goal(depth - 1)),
            ),
            3 => Goal::ExEq(n),
            _ => Goal::Eq(n, n),
        }
    }

    /// A proof of `eq(m, k)` by an exception trigger, when some hypothesis
    /// in scope has a false instance.
    fn trigger(&mut self, sc: &Scope) -> Option<String> {
        let h = *sc.hyps.choose(&mut self.rng)?;
        let m = (0..4)
            .find(|&m| !h.holds(m) && self.rng.gen_bool(0.7))
            .or((0..4).find(|&m| !h.holds(m)))?;
        Some(format!(
            "(post bot-elim (post contra (aapp (hyp a{} {} x) {m}) true))",
            h.label,
            h.pred()
        ))
    }

    /// Either a redex whose reducts prove `g`, or `None`.
    fn redex(&mut self, g: &Goal, sc: &Scope, fuel: u32) -> Option<String> {
        let f = fuel - 1;
        match self.rng.gen_range(0..13) {
            0 => {
                let a = self.small_goal(0);
                let x = format!("v{}", self.next());
                let mut inner = sc.clone();
                inner.vars.push((x.clone(), a.clone()));
                let body = self.proof(g, &inner, f / 2)?;
                let arg = self.proof(&a, sc, f / 2)?;
                Some(format!("(app (lam {x} {} {body}) {arg})", a.render()))
            }
            1 => {
                let a = self.small_goal(0);
                let u = self.proof(g, sc, f / 2)?;
                let v = self.proof(&a, sc, f / 2)?;
                Some(if self.rng.gen_bool(0.5) {
                    format!("(proj0 (pair {u} {v}))")
                } else {
                    format!("(proj1 (pair {v} {u}))")
                })
            }
            2 => {
                let (a, b) = (self.small_goal(0), self.small_goal(0));
                let (x, y) = (format!("v{}", self.next()), format!("v{}", self.next()));
                let left = self.rng.gen_bool(0.5);
                let t = self.proof(if left { &a } else { &b }, sc, f / 3)?;
                let mut sl = sc.clone();
                sl.vars.push((x.clone(), a.clone()));
                let mut sr = sc.clone();
                sr.vars.push((y.clone(), b.clone()));
                let l = self.proof(g, &sl, f / 3)?;
                let r = self.proof(g, &sr, f / 3)?;
                let side = if left { 0 } else { 1 };
                let or = Goal::Or(Box::new(a), Box::new(b)).render();
                Some(format!("(case (inj{side} {t} {or}) {x} {l} {y} {r})"))
            }
            3 => {
                let c = self.num();
                let t = self.proof(&Goal::ExEq(c), sc, f / 2)?;
                let (k, y) = (format!("k{}", self.next()), format!("v{}", self.next()));
                let body = self.proof(g, sc, f / 2)?;
                Some(format!("(dest {t} {k} {y} {body})"))
            }
            4 => {
                let m = self.num();
                let base = self.proof(g, sc, f)?;
                let x = format!("v{}", self.next());
                Some(format!(
                    "(rec {base} (alam n (lam {x} {} {x})) {m})",
                    g.render()
                ))
            }
            5 => match g {
                Goal::Eq(m, k) if m == k => {
                    let x = format!("v{}", self.next());
                    Some(format!(
                        "(app (aapp (alam n (lam {x} (eq n n) {x})) {m}) true)"
                    ))
                }
                _ => None,
            },
            6..=9 => {
                // an elimination applied to an EM node
                let a = match g {
                    Goal::Eq(..) if self.rng.gen_bool(0.5) => g.clone(),
                    _ => self.small_goal(0),
                };
                match self.rng.gen_range(0..4) {
                    0 => {
                        let e = self.em_inf(&Goal::And(Box::new(g.clone()), Box::new(a)), sc, f)?;
                        Some(format!("(proj0 {e})"))
                    }
                    1 => {
                        let arg = self.proof(&a, sc, f / 3)?;
                        let e = self.em_inf(&Goal::Imp(Box::new(a), Box::new(g.clone())), sc, f)?;
                        Some(format!("(app {e} {arg})"))
                    }
                    2 => {
                        let b = self.small_goal(0);
                        let (x, y) = (format!("v{}", self.next()), format!("v{}", self.next()));
                        let mut sl = sc.clone();
                        sl.vars.push((x.clone(), a.clone()));
                        let mut sr = sc.clone();
                        sr.vars.push((y.clone(), b.clone()));
                        let l = self.proof(g, &sl, f / 4)?;
                        let r = self.proof(g, &sr, f / 4)?;
                        let e = self.em_inf(&Goal::Or(Box::new(a), Box::new(b)), sc, f / 2)?;
                        Some(format!("(case {e} {x} {l} {y} {r})"))
                    }
                    _ => {
                        let c = self.num();
                        let e = self.em_inf(&Goal::ExEq(c), sc, f / 2)?;
                        let (k, y) = (format!("k{}", self.next()), format!("v{}", self.next()));
                        let body = self.proof(g, sc, f / 2)?;
                        Some(format!("(dest {e} {k} {y} {body})"))
                    }
                }
            }
            _ => self.em(g, sc, f),
        }
    }

    /// An inferable EM node proving `g`.
    fn em_inf(&mut self, g: &Goal, sc: &Scope, fuel: u32) -> Option<String> {
        let mut sc = sc.clone();
        sc.infer = true;
        self.em(g, &sc, fuel)
    }

    /// An EM node proving `g`.
    fn em(&mut self, g: &Goal, sc: &Scope, fuel: u32) -> Option<String> {
        let h = Hyp {
            label: self.next(),
            negated: self.rng.gen_bool(0.5),
            c: self.num(),
        };
        let mut sl = sc.clone();
        sl.hyps.push(h);
        let mut sr = sc.clone();
        sr.wits.push(h);
        let l = self.proof(g, &sl, fuel / 2)?;
        let r = self.proof(g, &sr, fuel / 2)?;
        Some(format!("(em a{} {l} {r})", h.label))
    }

    fn proof(&mut self, g: &Goal, sc: &Scope, fuel: u32) -> Option<String> {
        if fuel > 1 && !sc.infer && self.rng.gen_bool(0.5) {
            if let Some(t) = self.redex(g, sc, fuel) {
                return Some(t);
            }
        }
        let vars: Vec<&String> = sc
            .vars
            .iter()
            .filter(|(_, a)| a == g)
            .map(|(x, _)| x)
            .collect();
        if let Some(x) = vars.choose(&mut self.rng) {
            if sc.infer || self.rng.gen_bool(0.5) {
                return Some((*x).clone());
            }
        }
        let f = fuel.saturating_sub(1);
        match g {
            Goal::Eq(m, k) => {
                let hyp = sc
                    .hyps
                    .iter()
                    .filter(|h| m == k && h.holds(*m) && !h.negated)
                    .copied()
                    .collect::<Vec<_>>();
                if let Some(h) = hyp.choose(&mut self.rng) {
                    if self.rng.gen_bool(0.5) {
                        return Some(format!("(aapp (hyp a{} {} x) {m})", h.label, h.pred()));
                    }
                }
                if let (true, Some(h)) = (sc.infer, hyp.first()) {
                    return Some(format!("(aapp (hyp a{} {} x) {m})", h.label, h.pred()));
                }
                if m != k {
                    return if sc.infer { None } else { self.trigger(sc) };
                }
                if sc.infer {
                    let x = format!("v{}", self.next());
                    return Some(format!("(app (lam {x} {} {x}) true)", g.render()));
                }
                if !sc.hyps.is_empty() && self.rng.gen_bool(0.5) {
                    return self.trigger(sc);
                }
                Some("true".into())
            }
            Goal::And(a, b) => Some(format!(
                "(pair {} {})",
                self.proof(a, sc, f / 2)?,
                self.proof(b, sc, f / 2)?
            )),
            Goal::Imp(a, b) => {
                let x = format!("v{}", self.next());
                let mut inner = sc.clone();
                inner.vars.push((x.clone(), (**a).clone()));
                Some(format!(
                    "(lam {x} {} {})",
                    a.render(),
                    self.proof(b, &inner, f)?
                ))
            }
            Goal::Or(a, b) => {
                let side = self.rng.gen_range(0..2);
                let t = self.proof(if side == 0 { a } else { b }, &sc.checked(), f)?;
                Some(format!("(inj{side} {t} {})", g.render()))
            }
            Goal::ExEq(c) => {
                let wits: Vec<Hyp> = sc
                    .wits
                    .iter()
                    .filter(|h| h.negated && h.c == *c)
                    .copied()
                    .collect();
                if let Some(h) = wits.choose(&mut self.rng) {
                    return Some(format!("(wit a{} {} x)", h.label, h.pred()));
                }
                let m = if sc.hyps.is_empty() { *c } else { self.num() };
                let t = self.proof(&Goal::Eq(m, *c), &sc.checked(), f)?;
                Some(format!("(wpair {m} {t} {})", g.render()))
            }
        }
    }

    /// A well-typed quasi-closed EM₁ term of at most `max_size` nodes, with
    /// its goal and hypothesis context.
    pub fn typed_em1(&mut self, sig: &Signature, max_size: usize) -> (Term, Formula, Context) {
        loop {
            let goal = self.small_goal(1);
            let fuel = self.rng.gen_range(2..10);
            let Some(src) = self.proof(&goal, &Scope::default(), fuel) else {
                continue;
            };
            let Ok(t) = term_from_str(&src) else {
                panic!("generator produced unparsable term {src}");
            };
            if t.size() > max_size {
                continue;
            }
            let f = formula_from_str(&goal.render()).unwrap();
            let Ok(ctx) = hyp_context(&t) else {
                continue;
            };
            if Checker::new(sig, System::Em1).check(&ctx, &t, &f).is_ok() {
                return (t, f, ctx);
            }
        }
    }

    /// `count` distinct typed EM₁ terms, each with at least one redex.
    pub fn typed_em1_batch(
        &mut self,
        sig: &Signature,
        max_size: usize,
        count: usize,
    ) -> Vec<(Term, Formula, Context)> {
        let red = Reducer::new(sig.registry.clone(), System::Em1);
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        while out.len() < count {
            let (t, f, ctx) = self.typed_em1(sig, max_size);
            if red.redexes(&t).is_ok_and(|r| !r.is_empty()) && seen.insert(t.to_string()) {
                out.push((t, f, ctx));
            }
        }
        out
    }

    fn arith(&mut self) -> String {
        match self.rng.gen_range(0..6) {
            0 => "n".into(),
            1 => "(S n)".into(),
            k => (k - 2).to_string(),
        }
    }

    fn pred_for(label: &str) -> &'static str {
        match label {
            "a" => "(eq x 1)",
            "b" => "(not_eq x 0)",
            _ => unreachable!(),
        }
    }

    /// An arbitrary term, not necessarily typed or well-formed.
    pub fn untyped(&mut self, system: System, depth: u32) -> String {
        let leaf = depth == 0 || self.rng.gen_bool(0.2);
        let label = if self.rng.gen_bool(0.5) { "a" } else { "b" };
        let cite = |kind: &str| match system {
            System::Em1 => format!("({kind} {label} {} x)", Gen::pred_for(label)),
            System::Nem => format!("({kind} {} x)", Gen::pred_for(label)),
        };
        if leaf {
            return match self.rng.gen_range(0..5) {
                0 => "true".into(),
                1 => "y".into(),
                2 => cite("wit"),
                _ => {
                    let m = self.arith();
                    format!("(aapp {} {m})", cite("hyp"))
                }
            };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..14) {
            0 => format!(
                "(app (lam y {}) {})",
                self.untyped(system, d),
                self.untyped(system, d)
            ),
            1 => format!(
                "(app {} {})",
                self.untyped(system, d),
                self.untyped(system, d)
            ),
            2 => format!(
                "(aapp (alam n {}) {})",
                self.untyped(system, d),
                self.arith()
            ),
            3 => format!("(aapp {} {})", self.untyped(system, d), self.arith()),
            4 => format!(
                "(pair {} {})",
                self.untyped(system, d),
                self.untyped(system, d)
            ),
            5 => format!(
                "(proj{} {})",
                self.rng.gen_range(0..2),
                self.untyped(system, d)
            ),
            6 => format!(
                "(case {} y {} z {})",
                self.untyped(system, d),
                self.untyped(system, d),
                self.untyped(system, d)
            ),
            7 => format!(
                "(inj{} {})",
                self.rng.gen_range(0..2),
                self.untyped(system, d)
            ),
            8 => format!("(wpair {} {})", self.arith(), self.untyped(system, d)),
            9 => format!(
                "(dest {} k y {})",
                self.untyped(system, d),
                self.untyped(system, d)
            ),
            10 => format!(
                "(rec {} (alam n (lam y y)) {})",
                self.untyped(system, d),
                self.arith()
            ),
            11 => format!("(lam y {})", self.untyped(system, d)),
            _ => {
                let (l, r) = (self.untyped(system, d), self.untyped(system, d));
                match system {
                    System::Em1 => format!("(em {label} {l} {r})"),
                    System::Nem => format!("(em {l} {r})"),
                }
            }
        }
    }
}
