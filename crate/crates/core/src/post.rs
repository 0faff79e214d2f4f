//! Post rules: inferences between atomic formulas that are sound under
//! every closed substitution of their schematic variables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::lang::{ArithTerm, Atom, Ident, LangError, Registry, BOT, EQ};

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PostShape {
    /// Premise and conclusion schemas over their free variables.
    Schema {
        premises: Vec<Atom>,
        conclusion: Atom,
    },
    /// `⊥ ⊢ P` for any atom `P`.
    BotElim,
    /// `P[t1/α], eq(t1, t2) ⊢ P[t2/α]` for any atom `P`.
    EqSubst,
    /// `R, ¬R ⊢ ⊥` for any atom `R`.
    Contradiction,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PostRule {
    pub name: Ident,
    pub shape: PostShape,
}

impl PostRule {
    pub fn schema(name: &str, premises: Vec<Atom>, conclusion: Atom) -> Self {
        PostRule {
            name: Ident::new(name),
            shape: PostShape::Schema {
                premises,
                conclusion,
            },
        }
    }

    pub fn premise_count(&self) -> usize {
        match &self.shape {
            PostShape::Schema { premises, .. } => premises.len(),
            PostShape::BotElim => 1,
            PostShape::EqSubst | PostShape::Contradiction => 2,
        }
    }
}

impl fmt::Display for PostRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            PostShape::Schema {
                premises,
                conclusion,
            } => {
                write!(f, "{}: ", self.name)?;
                for (i, p) in premises.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, " ⊢ {conclusion}")
            }
            PostShape::BotElim => write!(f, "{}: (bot) ⊢ P", self.name),
            PostShape::EqSubst => write!(f, "{}: P[t1], (eq t1 t2) ⊢ P[t2]", self.name),
            PostShape::Contradiction => write!(f, "{}: R, ¬R ⊢ (bot)", self.name),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PostVerdict {
    Trusted,
    TestedUpTo(u64),
    RefutedAt(BTreeMap<Ident, u64>),
}

impl fmt::Display for PostVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PostVerdict::Trusted => f.write_str("trusted"),
            PostVerdict::TestedUpTo(b) => write!(f, "tested below {b}"),
            PostVerdict::RefutedAt(s) => {
                f.write_str("refuted at [")?;
                for (i, (k, v)) in s.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k}:={v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PostError {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error("test bound must be at least 1")]
    ZeroBound,
    #[error("only schema rules can be validated by testing")]
    NotASchema,
}

fn v(name: &str) -> ArithTerm {
    ArithTerm::var(name)
}

fn s(t: ArithTerm) -> ArithTerm {
    ArithTerm::succ(t)
}

fn eq(a: ArithTerm, b: ArithTerm) -> Atom {
    Atom::new(EQ, vec![a, b])
}

/// The built-in rules: Peano, equality, `⊥`-elimination, the defining
/// rules of addition and multiplication, and the complement rule.
pub fn catalogue() -> Vec<PostRule> {
    let add = |a, b, c| Atom::new("add", vec![a, b, c]);
    let mult = |a, b, c| Atom::new("mult", vec![a, b, c]);
    vec![
        PostRule::schema(
            "peano-succ-inj",
            vec![eq(s(v("t1")), s(v("t2")))],
            eq(v("t1"), v("t2")),
        ),
        PostRule::schema(
            "peano-zero-succ",
            vec![eq(ArithTerm::Zero, s(v("t")))],
            Atom::bot(),
        ),
        PostRule::schema("eq-refl", vec![], eq(v("t"), v("t"))),
        PostRule::schema(
            "eq-trans",
            vec![eq(v("t1"), v("t2")), eq(v("t2"), v("t3"))],
            eq(v("t1"), v("t3")),
        ),
        PostRule {
            name: Ident::new("eq-subst"),
            shape: PostShape::EqSubst,
        },
        PostRule {
            name: Ident::new("bot-elim"),
            shape: PostShape::BotElim,
        },
        PostRule::schema("add-zero", vec![], add(v("t"), ArithTerm::Zero, v("t"))),
        PostRule::schema(
            "add-succ",
            vec![add(v("t1"), v("t2"), v("t3"))],
            add(v("t1"), s(v("t2")), s(v("t3"))),
        ),
        PostRule::schema(
            "mult-zero",
            vec![],
            mult(v("t"), ArithTerm::Zero, ArithTerm::Zero),
        ),
        PostRule::schema(
            "mult-succ",
            vec![
                mult(v("t1"), v("t2"), v("t3")),
                add(v("t3"), v("t1"), v("t4")),
            ],
            mult(v("t1"), s(v("t2")), v("t4")),
        ),
        PostRule {
            name: Ident::new("contra"),
            shape: PostShape::Contradiction,
        },
    ]
}

pub type Subst = BTreeMap<Ident, ArithTerm>;

/// Matches `pat` against `actual`, binding the variables of `metas`.
pub fn match_arith(
    pat: &ArithTerm,
    actual: &ArithTerm,
    metas: &BTreeSet<Ident>,
    sigma: &mut Subst,
) -> bool {
    match (pat, actual) {
        (ArithTerm::Var(x), _) if metas.contains(x) => match sigma.get(x) {
            Some(bound) => bound == actual,
            None => {
                sigma.insert(x.clone(), actual.clone());
                true
            }
        },
        (ArithTerm::Var(x), ArithTerm::Var(y)) => x == y,
        (ArithTerm::Zero, ArithTerm::Zero) => true,
        (ArithTerm::Succ(p), ArithTerm::Succ(a)) => match_arith(p, a, metas, sigma),
        _ => false,
    }
}

pub fn match_atom(pat: &Atom, actual: &Atom, metas: &BTreeSet<Ident>, sigma: &mut Subst) -> bool {
    pat.rel == actual.rel
        && pat.args.len() == actual.args.len()
        && pat
            .args
            .iter()
            .zip(&actual.args)
            .all(|(p, a)| match_arith(p, a, metas, sigma))
}

pub fn apply_subst_arith(t: &ArithTerm, sigma: &Subst) -> ArithTerm {
    match t {
        ArithTerm::Var(x) => sigma.get(x).cloned().unwrap_or_else(|| t.clone()),
        ArithTerm::Zero => ArithTerm::Zero,
        ArithTerm::Succ(a) => ArithTerm::succ(apply_subst_arith(a, sigma)),
    }
}

pub fn apply_subst(atom: &Atom, sigma: &Subst) -> Atom {
    Atom {
        rel: atom.rel.clone(),
        args: atom
            .args
            .iter()
            .map(|a| apply_subst_arith(a, sigma))
            .collect(),
    }
}

/// Free variables of a schema's atoms.
pub fn schema_vars(premises: &[Atom], conclusion: &Atom) -> BTreeSet<Ident> {
    let mut out = BTreeSet::new();
    for p in premises {
        p.free_vars_into(&mut out);
    }
    conclusion.free_vars_into(&mut out);
    out
}

/// `k` with `t = S^k(base)`, if any.
fn succ_depth_over(t: &ArithTerm, base: &ArithTerm) -> Option<usize> {
    let mut cur = t;
    let mut k = 0;
    loop {
        if cur == base {
            return Some(k);
        }
        match cur {
            ArithTerm::Succ(inner) => {
                cur = inner;
                k += 1;
            }
            _ => return None,
        }
    }
}

fn succ_n(mut t: ArithTerm, k: usize) -> ArithTerm {
    for _ in 0..k {
        t = ArithTerm::succ(t);
    }
    t
}

/// Candidate argument values `p[to/α]` over all patterns `p` with
/// `p[from/α] = arg`. The depth `k` with `arg = S^k(from)` is unique.
fn rewrite_candidates(arg: &ArithTerm, from: &ArithTerm, to: &ArithTerm) -> Vec<ArithTerm> {
    let mut out = vec![arg.clone()];
    if let Some(k) = succ_depth_over(arg, from) {
        let rebuilt = succ_n(to.clone(), k);
        if rebuilt != *arg {
            out.push(rebuilt);
        }
    }
    out
}

/// Is there an atom `P` with a fresh variable `α` such that
/// `P[t1/α] = before` and `P[t2/α] = after`?
pub fn eq_subst_related(before: &Atom, t1: &ArithTerm, t2: &ArithTerm, after: &Atom) -> bool {
    before.rel == after.rel
        && before.args.len() == after.args.len()
        && before
            .args
            .iter()
            .zip(&after.args)
            .all(|(b, a)| rewrite_candidates(b, t1, t2).contains(a))
}

/// The conclusion obtained by rewriting every argument of the form
/// `S^k(t1)` to `S^k(t2)`.
pub fn eq_subst_full(before: &Atom, t1: &ArithTerm, t2: &ArithTerm) -> Atom {
    Atom {
        rel: before.rel.clone(),
        args: before
            .args
            .iter()
            .map(|a| match succ_depth_over(a, t1) {
                Some(k) => succ_n(t2.clone(), k),
                None => a.clone(),
            })
            .collect(),
    }
}

/// All premise atoms `P[t1/α]` for which some `P` gives `P[t2/α] = after`.
pub fn eq_subst_premise_candidates(after: &Atom, t1: &ArithTerm, t2: &ArithTerm) -> Vec<Atom> {
    let per_arg: Vec<Vec<ArithTerm>> = after
        .args
        .iter()
        .map(|a| rewrite_candidates(a, t2, t1))
        .collect();
    let mut out = vec![Vec::new()];
    for choices in per_arg {
        let mut next = Vec::new();
        for prefix in &out {
            for c in &choices {
                let mut p: Vec<ArithTerm> = prefix.clone();
                p.push(c.clone());
                next.push(p);
            }
        }
        out = next;
    }
    out.into_iter()
        .map(|args| Atom {
            rel: after.rel.clone(),
            args,
        })
        .collect()
}

/// Whether a user schema is a substitution instance of a catalogue rule.
pub fn is_catalogue_instance(premises: &[Atom], conclusion: &Atom) -> bool {
    catalogue().iter().any(|rule| match &rule.shape {
        PostShape::Schema {
            premises: cp,
            conclusion: cc,
        } => {
            if cp.len() != premises.len() {
                return false;
            }
            let metas = schema_vars(cp, cc);
            let mut sigma = Subst::new();
            match_atom(cc, conclusion, &metas, &mut sigma)
                && cp
                    .iter()
                    .zip(premises)
                    .all(|(p, a)| match_atom(p, a, &metas, &mut sigma))
        }
        PostShape::BotElim => premises.len() == 1 && premises[0] == Atom::bot(),
        PostShape::Contradiction => {
            premises.len() == 2
                && premises[1] == premises[0].negated()
                && *conclusion == Atom::bot()
        }
        PostShape::EqSubst => match premises {
            [before, e] if e.rel.as_str() == EQ && e.args.len() == 2 => {
                eq_subst_related(before, &e.args[0], &e.args[1], conclusion)
            }
            _ => false,
        },
    })
}

/// Two-tier soundness check: catalogue instances are trusted, other
/// schemas are tested on every substitution with values below `bound`.
pub fn validate_post(
    registry: &Registry,
    rule: &PostRule,
    bound: u64,
) -> Result<PostVerdict, PostError> {
    if bound == 0 {
        return Err(PostError::ZeroBound);
    }
    let PostShape::Schema {
        premises,
        conclusion,
    } = &rule.shape
    else {
        return if catalogue().contains(rule) {
            Ok(PostVerdict::Trusted)
        } else {
            Err(PostError::NotASchema)
        };
    };
    for a in premises.iter().chain(std::iter::once(conclusion)) {
        registry.check_atom(a)?;
    }
    if is_catalogue_instance(premises, conclusion) {
        return Ok(PostVerdict::Trusted);
    }
    let vars: Vec<Ident> = schema_vars(premises, conclusion).into_iter().collect();
    let mut values = vec![0u64; vars.len()];
    loop {
        let sigma: Subst = vars
            .iter()
            .zip(&values)
            .map(|(x, n)| (x.clone(), ArithTerm::numeral(*n)))
            .collect();
        let mut holds = true;
        for p in premises {
            if !registry.eval_atom(&apply_subst(p, &sigma))? {
                holds = false;
                break;
            }
        }
        if holds && !registry.eval_atom(&apply_subst(conclusion, &sigma))? {
            return Ok(PostVerdict::RefutedAt(
                vars.iter().cloned().zip(values.iter().copied()).collect(),
            ));
        }
        // odometer over values < bound
        let mut i = 0;
        loop {
            if i == values.len() {
                return Ok(PostVerdict::TestedUpTo(bound));
            }
            values[i] += 1;
            if values[i] < bound {
                break;
            }
            values[i] = 0;
            i += 1;
        }
    }
}

pub(crate) fn is_bot(a: &Atom) -> bool {
    a.rel.as_str() == BOT && a.args.is_empty()
}
