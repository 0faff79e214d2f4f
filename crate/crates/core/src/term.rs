//! Untyped proof terms shared by both calculi.
//!
//! An EM node or citation with a hypothesis label belongs to the
//! exception calculus; the same node without a label belongs to the
//! non-deterministic one. Binders are named and every substitution is
//! capture-avoiding.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::lang::{ArithTerm, Atom, Formula, Ident, Renaming, EQ};

/// The two calculi sharing this syntax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum System {
    /// Exception-based excluded middle: labeled EM nodes and citations.
    Em1,
    /// Non-deterministic choice and witness guessing: unlabeled nodes.
    Nem,
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            System::Em1 => "em1",
            System::Nem => "nem",
        })
    }
}

impl FromStr for System {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "em1" => Ok(System::Em1),
            "nem" => Ok(System::Nem),
            other => Err(format!("unknown system `{other}` (expected em1 or nem)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn index(self) -> u8 {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }

    pub fn pick<T>(self, left: T, right: T) -> T {
        match self {
            Side::Left => left,
            Side::Right => right,
        }
    }
}

/// An atomic predicate with one distinguished bound variable, `λα. P`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Pred {
    pub binder: Ident,
    pub atom: Atom,
}

impl Pred {
    pub fn new(binder: &str, atom: Atom) -> Self {
        Pred {
            binder: Ident::new(binder),
            atom,
        }
    }

    /// Used for an EM node whose label never occurs and which has no annotation.
    pub fn unconstrained() -> Self {
        Pred::new(
            "x",
            Atom::new(EQ, vec![ArithTerm::var("x"), ArithTerm::var("x")]),
        )
    }

    pub fn instantiate(&self, m: &ArithTerm) -> Atom {
        self.atom.subst(&self.binder, m)
    }

    /// `∀α P`
    pub fn universal(&self) -> Formula {
        Formula::All(
            self.binder.clone(),
            Box::new(Formula::Atom(self.atom.clone())),
        )
    }

    /// `∃α ¬P`
    pub fn counterexample(&self) -> Formula {
        Formula::Ex(
            self.binder.clone(),
            Box::new(Formula::Atom(self.atom.negated())),
        )
    }

    pub fn free_vars_into(&self, out: &mut BTreeSet<Ident>) {
        let mut inner = self.atom.free_vars();
        inner.remove(&self.binder);
        out.extend(inner);
    }

    pub fn is_free(&self, v: &Ident) -> bool {
        &self.binder != v && self.atom.mentions(v)
    }

    pub fn subst(&self, v: &Ident, m: &ArithTerm) -> Pred {
        if &self.binder == v || !self.atom.mentions(v) {
            return self.clone();
        }
        if m.mentions(&self.binder) {
            let fresh = self
                .binder
                .fresh(|c| m.mentions(c) || self.atom.mentions(c) || c == v);
            let renamed = self
                .atom
                .subst(&self.binder, &ArithTerm::Var(fresh.clone()));
            Pred {
                binder: fresh,
                atom: renamed.subst(v, m),
            }
        } else {
            Pred {
                binder: self.binder.clone(),
                atom: self.atom.subst(v, m),
            }
        }
    }

    pub fn alpha_eq(&self, other: &Pred) -> bool {
        self.alpha_eq_in(other, &mut Renaming::default())
    }

    pub(crate) fn alpha_eq_in(&self, other: &Pred, env: &mut Renaming) -> bool {
        env.push(&self.binder, &other.binder);
        let eq = self.atom.alpha_eq_in(&other.atom, env);
        env.pop();
        eq
    }
}

impl fmt::Debug for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "λ{}.{}", self.binder, self.atom)
    }
}

/// The induction motive `A(α)` of a recursor.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Motive {
    pub binder: Ident,
    pub body: Formula,
}

impl Motive {
    pub fn new(binder: &str, body: Formula) -> Self {
        Motive {
            binder: Ident::new(binder),
            body,
        }
    }

    pub fn at(&self, m: &ArithTerm) -> Formula {
        self.body.subst(&self.binder, m)
    }

    /// `∀α. A(α) → A(S α)`
    pub fn step_formula(&self) -> Formula {
        let succ = ArithTerm::succ(ArithTerm::Var(self.binder.clone()));
        Formula::All(
            self.binder.clone(),
            Box::new(Formula::imp(self.body.clone(), self.at(&succ))),
        )
    }

    pub fn free_vars_into(&self, out: &mut BTreeSet<Ident>) {
        let mut inner = self.body.free_vars();
        inner.remove(&self.binder);
        out.extend(inner);
    }

    pub fn is_free(&self, v: &Ident) -> bool {
        &self.binder != v && self.body.is_free(v)
    }

    pub fn subst(&self, v: &Ident, m: &ArithTerm) -> Motive {
        match Formula::All(self.binder.clone(), Box::new(self.body.clone())).subst(v, m) {
            Formula::All(binder, body) => Motive {
                binder,
                body: *body,
            },
            _ => unreachable!(),
        }
    }

    fn alpha_eq_in(&self, other: &Motive, env: &mut Renaming) -> bool {
        env.push(&self.binder, &other.binder);
        let eq = self.body.alpha_eq_in(&other.body, env);
        env.pop();
        eq
    }
}

impl fmt::Debug for Motive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "λ{}.{}", self.binder, self.body)
    }
}

/// A `Hyp` or `Wit` citation of an EM hypothesis.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Citation {
    pub label: Option<Ident>,
    pub pred: Pred,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CitationKind {
    Hyp,
    Wit,
}

/// A position in a term: the sequence of child indices from the root.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Path(pub Vec<u8>);

impl Path {
    pub fn root() -> Self {
        Path(Vec::new())
    }

    pub fn child(&self, i: u8) -> Path {
        let mut v = self.0.clone();
        v.push(i);
        Path(v)
    }

    pub fn join(&self, other: &Path) -> Path {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Path(v)
    }

    pub fn is_prefix_of(&self, other: &Path) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("/");
        }
        for i in &self.0 {
            write!(f, "/{i}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Path {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let rest = s
            .strip_prefix('/')
            .ok_or_else(|| format!("path `{s}` must start with `/`"))?;
        if rest.is_empty() {
            return Ok(Path::root());
        }
        rest.split('/')
            .map(|p| p.parse::<u8>().map_err(|e| format!("bad path `{s}`: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(Path)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Ident),
    App(Box<Term>, Box<Term>),
    /// Application of a proof to an arithmetic term.
    AApp(Box<Term>, ArithTerm),
    Lam {
        var: Ident,
        domain: Option<Formula>,
        body: Box<Term>,
    },
    ALam {
        var: Ident,
        body: Box<Term>,
    },
    Pair(Box<Term>, Box<Term>),
    Proj(Side, Box<Term>),
    Inj {
        side: Side,
        body: Box<Term>,
        ann: Option<Formula>,
    },
    Case {
        scrutinee: Box<Term>,
        left_var: Ident,
        left: Box<Term>,
        right_var: Ident,
        right: Box<Term>,
    },
    /// Existential introduction `(m, u)`.
    WPair {
        witness: ArithTerm,
        body: Box<Term>,
        ann: Option<Formula>,
    },
    /// Existential elimination `u[(α, x). v]`.
    Dest {
        scrutinee: Box<Term>,
        avar: Ident,
        pvar: Ident,
        body: Box<Term>,
    },
    Em {
        label: Option<Ident>,
        pred: Option<Pred>,
        left: Box<Term>,
        right: Box<Term>,
    },
    Hyp(Citation),
    Wit(Citation),
    True,
    Rec {
        base: Box<Term>,
        step: Box<Term>,
        arg: ArithTerm,
        motive: Option<Motive>,
    },
    Post {
        rule: Ident,
        args: Vec<Term>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WfError {
    #[error("term mixes labeled and unlabeled EM syntax")]
    MixedLabels,
    #[error("term uses {found} syntax where {expected} syntax is required")]
    SystemMismatch { expected: System, found: System },
    #[error(
        "hypothesis `{label}` is cited with two different predicates {first:?} and {second:?}"
    )]
    DistinctPredicates {
        label: Ident,
        first: Pred,
        second: Pred,
    },
    #[error("hypothesis `{label}` occurs as {kind:?} in the {branch} branch of its EM node")]
    WrongCitationKind {
        label: Ident,
        kind: CitationKind,
        branch: &'static str,
    },
    #[error("expected a labeled EM node")]
    NotLabeledEm,
}

impl WfError {
    /// A stable name for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            WfError::MixedLabels => "mixed-labels",
            WfError::SystemMismatch { .. } => "system-mismatch",
            WfError::DistinctPredicates { .. } => "distinct-predicates",
            WfError::WrongCitationKind { .. } => "wrong-citation-kind",
            WfError::NotLabeledEm => "not-labeled-em",
        }
    }
}

/// Free variables of a proof term, split by variable class.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FreeVarReport {
    pub proofs: BTreeSet<Ident>,
    pub hyps: BTreeMap<Ident, BTreeSet<CitationKind>>,
    pub ariths: BTreeSet<Ident>,
}

impl FreeVarReport {
    pub fn is_empty(&self) -> bool {
        self.proofs.is_empty() && self.hyps.is_empty() && self.ariths.is_empty()
    }

    pub fn has_hyp(&self, a: &Ident) -> bool {
        self.hyps.contains_key(a)
    }
}

#[derive(Default)]
struct Scope {
    proofs: Vec<Ident>,
    ariths: Vec<Ident>,
    hyps: Vec<Ident>,
}

fn contains(stack: &[Ident], v: &Ident) -> bool {
    stack.iter().any(|w| w == v)
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Ident::new(name))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn aapp(f: Term, m: ArithTerm) -> Term {
        Term::AApp(Box::new(f), m)
    }

    pub fn lam(var: &str, domain: Formula, body: Term) -> Term {
        Term::Lam {
            var: Ident::new(var),
            domain: Some(domain),
            body: Box::new(body),
        }
    }

    pub fn lam_bare(var: &str, body: Term) -> Term {
        Term::Lam {
            var: Ident::new(var),
            domain: None,
            body: Box::new(body),
        }
    }

    pub fn alam(var: &str, body: Term) -> Term {
        Term::ALam {
            var: Ident::new(var),
            body: Box::new(body),
        }
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::Pair(Box::new(a), Box::new(b))
    }

    pub fn proj(side: Side, t: Term) -> Term {
        Term::Proj(side, Box::new(t))
    }

    pub fn inj(side: Side, body: Term, ann: Option<Formula>) -> Term {
        Term::Inj {
            side,
            body: Box::new(body),
            ann,
        }
    }

    pub fn case(scrutinee: Term, x: &str, left: Term, y: &str, right: Term) -> Term {
        Term::Case {
            scrutinee: Box::new(scrutinee),
            left_var: Ident::new(x),
            left: Box::new(left),
            right_var: Ident::new(y),
            right: Box::new(right),
        }
    }

    pub fn wpair(witness: ArithTerm, body: Term, ann: Option<Formula>) -> Term {
        Term::WPair {
            witness,
            body: Box::new(body),
            ann,
        }
    }

    pub fn dest(scrutinee: Term, avar: &str, pvar: &str, body: Term) -> Term {
        Term::Dest {
            scrutinee: Box::new(scrutinee),
            avar: Ident::new(avar),
            pvar: Ident::new(pvar),
            body: Box::new(body),
        }
    }

    pub fn em(label: &str, left: Term, right: Term) -> Term {
        Term::Em {
            label: Some(Ident::new(label)),
            pred: None,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn choice(left: Term, right: Term) -> Term {
        Term::Em {
            label: None,
            pred: None,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn hyp(label: Option<&str>, pred: Pred) -> Term {
        Term::Hyp(Citation {
            label: label.map(Ident::new),
            pred,
        })
    }

    pub fn wit(label: Option<&str>, pred: Pred) -> Term {
        Term::Wit(Citation {
            label: label.map(Ident::new),
            pred,
        })
    }

    pub fn rec(base: Term, step: Term, arg: ArithTerm, motive: Option<Motive>) -> Term {
        Term::Rec {
            base: Box::new(base),
            step: Box::new(step),
            arg,
            motive,
        }
    }

    pub fn post(rule: &str, args: Vec<Term>) -> Term {
        Term::Post {
            rule: Ident::new(rule),
            args,
        }
    }

    /// Immediate subterms in position order.
    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Var(_) | Term::Hyp(_) | Term::Wit(_) | Term::True => vec![],
            Term::App(f, a) | Term::Pair(f, a) => vec![f, a],
            Term::AApp(f, _) | Term::Proj(_, f) => vec![f],
            Term::Lam { body, .. }
            | Term::ALam { body, .. }
            | Term::Inj { body, .. }
            | Term::WPair { body, .. } => vec![body],
            Term::Case {
                scrutinee,
                left,
                right,
                ..
            } => vec![scrutinee, left, right],
            Term::Dest {
                scrutinee, body, ..
            } => vec![scrutinee, body],
            Term::Em { left, right, .. } => vec![left, right],
            Term::Rec { base, step, .. } => vec![base, step],
            Term::Post { args, .. } => args.iter().collect(),
        }
    }

    fn children_mut(&mut self) -> Vec<&mut Term> {
        match self {
            Term::Var(_) | Term::Hyp(_) | Term::Wit(_) | Term::True => vec![],
            Term::App(f, a) | Term::Pair(f, a) => vec![f, a],
            Term::AApp(f, _) | Term::Proj(_, f) => vec![f],
            Term::Lam { body, .. }
            | Term::ALam { body, .. }
            | Term::Inj { body, .. }
            | Term::WPair { body, .. } => vec![body],
            Term::Case {
                scrutinee,
                left,
                right,
                ..
            } => vec![scrutinee, left, right],
            Term::Dest {
                scrutinee, body, ..
            } => vec![scrutinee, body],
            Term::Em { left, right, .. } => vec![left, right],
            Term::Rec { base, step, .. } => vec![base, step],
            Term::Post { args, .. } => args.iter_mut().collect(),
        }
    }

    /// Replaces every immediate child `c` by `f(c)`.
    pub fn map_children(&mut self, mut f: impl FnMut(&Term) -> Term) {
        for c in self.children_mut() {
            *c = f(c);
        }
    }

    pub fn subterm(&self, path: &Path) -> Option<&Term> {
        let mut t = self;
        for &i in &path.0 {
            t = t.children().into_iter().nth(i as usize)?;
        }
        Some(t)
    }

    /// Replaces the subterm at `path` with `f(subterm)`.
    pub fn replace_at<E>(
        &self,
        path: &Path,
        f: impl FnOnce(&Term) -> Result<Term, E>,
    ) -> Option<Result<Term, E>> {
        let mut out = self.clone();
        let mut slot = &mut out;
        for &i in &path.0 {
            slot = slot.children_mut().into_iter().nth(i as usize)?;
        }
        match f(slot) {
            Ok(new) => {
                *slot = new;
                Some(Ok(out))
            }
            Err(e) => Some(Err(e)),
        }
    }

    /// Number of proof-term nodes.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// All positions in preorder.
    pub fn positions(&self) -> Vec<Path> {
        fn go(t: &Term, here: Path, out: &mut Vec<Path>) {
            out.push(here.clone());
            for (i, c) in t.children().into_iter().enumerate() {
                go(c, here.child(i as u8), out);
            }
        }
        let mut out = Vec::new();
        go(self, Path::root(), &mut out);
        out
    }

    pub fn free_vars(&self) -> FreeVarReport {
        let mut report = FreeVarReport::default();
        self.collect_free(&mut Scope::default(), &mut report);
        report
    }

    fn collect_free(&self, scope: &mut Scope, out: &mut FreeVarReport) {
        let arith = |vars: BTreeSet<Ident>, scope: &Scope, out: &mut FreeVarReport| {
            for v in vars {
                if !contains(&scope.ariths, &v) {
                    out.ariths.insert(v);
                }
            }
        };
        match self {
            Term::Var(x) => {
                if !contains(&scope.proofs, x) {
                    out.proofs.insert(x.clone());
                }
            }
            Term::App(f, a) | Term::Pair(f, a) => {
                f.collect_free(scope, out);
                a.collect_free(scope, out);
            }
            Term::AApp(f, m) => {
                f.collect_free(scope, out);
                let mut vs = BTreeSet::new();
                m.free_vars_into(&mut vs);
                arith(vs, scope, out);
            }
            Term::Lam { var, domain, body } => {
                if let Some(d) = domain {
                    arith(d.free_vars(), scope, out);
                }
                scope.proofs.push(var.clone());
                body.collect_free(scope, out);
                scope.proofs.pop();
            }
            Term::ALam { var, body } => {
                scope.ariths.push(var.clone());
                body.collect_free(scope, out);
                scope.ariths.pop();
            }
            Term::Proj(_, u) => u.collect_free(scope, out),
            Term::Inj { body, ann, .. } => {
                if let Some(a) = ann {
                    arith(a.free_vars(), scope, out);
                }
                body.collect_free(scope, out);
            }
            Term::Case {
                scrutinee,
                left_var,
                left,
                right_var,
                right,
            } => {
                scrutinee.collect_free(scope, out);
                scope.proofs.push(left_var.clone());
                left.collect_free(scope, out);
                scope.proofs.pop();
                scope.proofs.push(right_var.clone());
                right.collect_free(scope, out);
                scope.proofs.pop();
            }
            Term::WPair { witness, body, ann } => {
                let mut vs = BTreeSet::new();
                witness.free_vars_into(&mut vs);
                if let Some(a) = ann {
                    a.free_vars_into(&mut vs);
                }
                arith(vs, scope, out);
                body.collect_free(scope, out);
            }
            Term::Dest {
                scrutinee,
                avar,
                pvar,
                body,
            } => {
                scrutinee.collect_free(scope, out);
                scope.ariths.push(avar.clone());
                scope.proofs.push(pvar.clone());
                body.collect_free(scope, out);
                scope.proofs.pop();
                scope.ariths.pop();
            }
            Term::Em {
                label,
                pred,
                left,
                right,
            } => {
                if let Some(p) = pred {
                    let mut vs = BTreeSet::new();
                    p.free_vars_into(&mut vs);
                    arith(vs, scope, out);
                }
                if let Some(a) = label {
                    scope.hyps.push(a.clone());
                }
                left.collect_free(scope, out);
                right.collect_free(scope, out);
                if label.is_some() {
                    scope.hyps.pop();
                }
            }
            Term::Hyp(c) | Term::Wit(c) => {
                let kind = match self {
                    Term::Hyp(_) => CitationKind::Hyp,
                    _ => CitationKind::Wit,
                };
                if let Some(a) = &c.label {
                    if !contains(&scope.hyps, a) {
                        out.hyps.entry(a.clone()).or_default().insert(kind);
                    }
                }
                let mut vs = BTreeSet::new();
                c.pred.free_vars_into(&mut vs);
                arith(vs, scope, out);
            }
            Term::True => {}
            Term::Rec {
                base,
                step,
                arg,
                motive,
            } => {
                base.collect_free(scope, out);
                step.collect_free(scope, out);
                let mut vs = BTreeSet::new();
                arg.free_vars_into(&mut vs);
                if let Some(m) = motive {
                    m.free_vars_into(&mut vs);
                }
                arith(vs, scope, out);
            }
            Term::Post { args, .. } => {
                for a in args {
                    a.collect_free(scope, out);
                }
            }
        }
    }

    /// Only hypothesis variables are free, and only inside `Hyp` citations.
    pub fn is_quasi_closed(&self) -> bool {
        let fv = self.free_vars();
        fv.proofs.is_empty()
            && fv.ariths.is_empty()
            && fv
                .hyps
                .values()
                .all(|kinds| kinds.iter().all(|k| *k == CitationKind::Hyp))
    }

    pub fn has_free_proof(&self, x: &Ident) -> bool {
        match self {
            Term::Var(y) => y == x,
            Term::Lam { var, body, .. } => var != x && body.has_free_proof(x),
            Term::Case {
                scrutinee,
                left_var,
                left,
                right_var,
                right,
            } => {
                scrutinee.has_free_proof(x)
                    || (left_var != x && left.has_free_proof(x))
                    || (right_var != x && right.has_free_proof(x))
            }
            Term::Dest {
                scrutinee,
                pvar,
                body,
                ..
            } => scrutinee.has_free_proof(x) || (pvar != x && body.has_free_proof(x)),
            _ => self.children().iter().any(|c| c.has_free_proof(x)),
        }
    }

    pub fn has_free_hyp(&self, a: &Ident) -> bool {
        match self {
            Term::Hyp(c) | Term::Wit(c) => c.label.as_ref() == Some(a),
            Term::Em {
                label, left, right, ..
            } => label.as_ref() != Some(a) && (left.has_free_hyp(a) || right.has_free_hyp(a)),
            _ => self.children().iter().any(|c| c.has_free_hyp(a)),
        }
    }

    pub fn has_free_arith(&self, v: &Ident) -> bool {
        match self {
            Term::Var(_) | Term::True => false,
            Term::AApp(f, m) => m.mentions(v) || f.has_free_arith(v),
            Term::Lam { domain, body, .. } => {
                domain.as_ref().is_some_and(|d| d.is_free(v)) || body.has_free_arith(v)
            }
            Term::ALam { var, body } => var != v && body.has_free_arith(v),
            Term::Inj { body, ann, .. } => {
                ann.as_ref().is_some_and(|a| a.is_free(v)) || body.has_free_arith(v)
            }
            Term::WPair { witness, body, ann } => {
                witness.mentions(v)
                    || ann.as_ref().is_some_and(|a| a.is_free(v))
                    || body.has_free_arith(v)
            }
            Term::Dest {
                scrutinee,
                avar,
                body,
                ..
            } => scrutinee.has_free_arith(v) || (avar != v && body.has_free_arith(v)),
            Term::Em {
                pred, left, right, ..
            } => {
                pred.as_ref().is_some_and(|p| p.is_free(v))
                    || left.has_free_arith(v)
                    || right.has_free_arith(v)
            }
            Term::Hyp(c) | Term::Wit(c) => c.pred.is_free(v),
            Term::Rec {
                base,
                step,
                arg,
                motive,
            } => {
                arg.mentions(v)
                    || motive.as_ref().is_some_and(|m| m.is_free(v))
                    || base.has_free_arith(v)
                    || step.has_free_arith(v)
            }
            _ => self.children().iter().any(|c| c.has_free_arith(v)),
        }
    }

    /// Capture-avoiding substitution `self[t/x]`.
    pub fn subst_proof(&self, x: &Ident, t: &Term) -> Term {
        let fv = t.free_vars();
        self.subst_proof_with(x, t, &fv)
    }

    fn subst_proof_with(&self, x: &Ident, t: &Term, fv: &FreeVarReport) -> Term {
        if !self.has_free_proof(x) {
            return self.clone();
        }
        let go = |u: &Term| u.subst_proof_with(x, t, fv);
        match self {
            Term::Var(y) => {
                if y == x {
                    t.clone()
                } else {
                    self.clone()
                }
            }
            Term::App(f, a) => Term::app(go(f), go(a)),
            Term::AApp(f, m) => Term::aapp(go(f), m.clone()),
            Term::Lam { var, domain, body } => {
                let (var, body) = proof_binder(var, body, x, t, fv);
                Term::Lam {
                    var,
                    domain: domain.clone(),
                    body: Box::new(body),
                }
            }
            Term::ALam { var, body } => {
                let (var, body) = arith_binder_for_proof_subst(var, body, fv);
                Term::ALam {
                    var,
                    body: Box::new(body.subst_proof_with(x, t, fv)),
                }
            }
            Term::Pair(a, b) => Term::pair(go(a), go(b)),
            Term::Proj(s, u) => Term::proj(*s, go(u)),
            Term::Inj { side, body, ann } => Term::inj(*side, go(body), ann.clone()),
            Term::Case {
                scrutinee,
                left_var,
                left,
                right_var,
                right,
            } => {
                let (left_var, left) = proof_binder(left_var, left, x, t, fv);
                let (right_var, right) = proof_binder(right_var, right, x, t, fv);
                Term::Case {
                    scrutinee: Box::new(go(scrutinee)),
                    left_var,
                    left: Box::new(left),
                    right_var,
                    right: Box::new(right),
                }
            }
            Term::WPair { witness, body, ann } => {
                Term::wpair(witness.clone(), go(body), ann.clone())
            }
            Term::Dest {
                scrutinee,
                avar,
                pvar,
                body,
            } => {
                let (avar, body) = arith_binder_for_proof_subst(avar, body, fv);
                let (pvar, body) = proof_binder(pvar, &body, x, t, fv);
                Term::Dest {
                    scrutinee: Box::new(go(scrutinee)),
                    avar,
                    pvar,
                    body: Box::new(body),
                }
            }
            Term::Em {
                label,
                pred,
                left,
                right,
            } => {
                let (label, left, right) = match label {
                    Some(a) if fv.has_hyp(a) => {
                        let fresh = a.fresh(|c| {
                            fv.has_hyp(c) || left.has_free_hyp(c) || right.has_free_hyp(c)
                        });
                        (
                            Some(fresh.clone()),
                            left.subst_label(a, &fresh),
                            right.subst_label(a, &fresh),
                        )
                    }
                    _ => (label.clone(), (**left).clone(), (**right).clone()),
                };
                Term::Em {
                    label,
                    pred: pred.clone(),
                    left: Box::new(go(&left)),
                    right: Box::new(go(&right)),
                }
            }
            Term::Hyp(_) | Term::Wit(_) | Term::True => self.clone(),
            Term::Rec {
                base,
                step,
                arg,
                motive,
            } => Term::rec(go(base), go(step), arg.clone(), motive.clone()),
            Term::Post { rule, args } => Term::Post {
                rule: rule.clone(),
                args: args.iter().map(go).collect(),
            },
        }
    }

    pub fn rename_proof(&self, from: &Ident, to: &Ident) -> Term {
        self.subst_proof(from, &Term::Var(to.clone()))
    }

    /// Capture-avoiding substitution `self[m/α]`, including all formula
    /// annotations and citation predicates.
    pub fn subst_arith(&self, v: &Ident, m: &ArithTerm) -> Term {
        if !self.has_free_arith(v) {
            return self.clone();
        }
        let go = |u: &Term| u.subst_arith(v, m);
        match self {
            Term::Var(_) | Term::True => self.clone(),
            Term::App(f, a) => Term::app(go(f), go(a)),
            Term::AApp(f, n) => Term::aapp(go(f), n.subst(v, m)),
            Term::Lam { var, domain, body } => Term::Lam {
                var: var.clone(),
                domain: domain.as_ref().map(|d| d.subst(v, m)),
                body: Box::new(go(body)),
            },
            Term::ALam { var, body } => {
                let (var, body) = arith_binder(var, body, v, m);
                Term::ALam {
                    var,
                    body: Box::new(body),
                }
            }
            Term::Pair(a, b) => Term::pair(go(a), go(b)),
            Term::Proj(s, u) => Term::proj(*s, go(u)),
            Term::Inj { side, body, ann } => {
                Term::inj(*side, go(body), ann.as_ref().map(|a| a.subst(v, m)))
            }
            Term::Case {
                scrutinee,
                left_var,
                left,
                right_var,
                right,
            } => Term::Case {
                scrutinee: Box::new(go(scrutinee)),
                left_var: left_var.clone(),
                left: Box::new(go(left)),
                right_var: right_var.clone(),
                right: Box::new(go(right)),
            },
            Term::WPair { witness, body, ann } => Term::wpair(
                witness.subst(v, m),
                go(body),
                ann.as_ref().map(|a| a.subst(v, m)),
            ),
            Term::Dest {
                scrutinee,
                avar,
                pvar,
                body,
            } => {
                let (avar, body) = arith_binder(avar, body, v, m);
                Term::Dest {
                    scrutinee: Box::new(go(scrutinee)),
                    avar,
                    pvar: pvar.clone(),
                    body: Box::new(body),
                }
            }
            Term::Em {
                label,
                pred,
                left,
                right,
            } => Term::Em {
                label: label.clone(),
                pred: pred.as_ref().map(|p| p.subst(v, m)),
                left: Box::new(go(left)),
                right: Box::new(go(right)),
            },
            Term::Hyp(c) => Term::Hyp(Citation {
                label: c.label.clone(),
                pred: c.pred.subst(v, m),
            }),
            Term::Wit(c) => Term::Wit(Citation {
                label: c.label.clone(),
                pred: c.pred.subst(v, m),
            }),
            Term::Rec {
                base,
                step,
                arg,
                motive,
            } => Term::rec(
                go(base),
                go(step),
                arg.subst(v, m),
                motive.as_ref().map(|mo| mo.subst(v, m)),
            ),
            Term::Post { rule, args } => Term::Post {
                rule: rule.clone(),
                args: args.iter().map(go).collect(),
            },
        }
    }

    /// Renames the free hypothesis label `from` to `to`, renaming inner
    /// EM labels that would capture it.
    pub fn subst_label(&self, from: &Ident, to: &Ident) -> Term {
        if !self.has_free_hyp(from) {
            return self.clone();
        }
        match self {
            Term::Hyp(c) => Term::Hyp(Citation {
                label: Some(to.clone()),
                pred: c.pred.clone(),
            }),
            Term::Wit(c) => Term::Wit(Citation {
                label: Some(to.clone()),
                pred: c.pred.clone(),
            }),
            Term::Em {
                label: Some(b),
                pred,
                left,
                right,
            } if b == to => {
                let fresh = b.fresh(|c| c == from || left.has_free_hyp(c) || right.has_free_hyp(c));
                Term::Em {
                    label: Some(fresh.clone()),
                    pred: pred.clone(),
                    left: Box::new(left.subst_label(b, &fresh).subst_label(from, to)),
                    right: Box::new(right.subst_label(b, &fresh).subst_label(from, to)),
                }
            }
            _ => {
                let mut out = self.clone();
                for c in out.children_mut() {
                    *c = c.subst_label(from, to);
                }
                out
            }
        }
    }

    /// Exception raising `self[a:=n]`: every `Wit` citation of the free
    /// hypothesis `a` becomes the pair `(n, True)`.
    pub fn raise_subst(&self, a: &Ident, n: &ArithTerm) -> Term {
        match self {
            Term::Wit(c) if c.label.as_ref() == Some(a) => {
                Term::wpair(n.clone(), Term::True, Some(c.pred.counterexample()))
            }
            Term::Em { label: Some(b), .. } if b == a => self.clone(),
            _ if !self.has_free_hyp(a) => self.clone(),
            _ => {
                let mut out = self.clone();
                for c in out.children_mut() {
                    *c = c.raise_subst(a, n);
                }
                out
            }
        }
    }

    /// Positions of the citations of kind `kind` whose label `label` is free.
    pub fn citation_positions(&self, kind: CitationKind, label: Option<&Ident>) -> Vec<Path> {
        fn go(
            t: &Term,
            kind: CitationKind,
            label: Option<&Ident>,
            here: Path,
            out: &mut Vec<Path>,
        ) {
            match t {
                Term::Hyp(c) if kind == CitationKind::Hyp && c.label.as_ref() == label => {
                    out.push(here)
                }
                Term::Wit(c) if kind == CitationKind::Wit && c.label.as_ref() == label => {
                    out.push(here)
                }
                Term::Em { label: Some(b), .. } if Some(b) == label => {}
                _ => {
                    for (i, c) in t.children().into_iter().enumerate() {
                        go(c, kind, label, here.child(i as u8), out);
                    }
                }
            }
        }
        let mut out = Vec::new();
        go(self, kind, label, Path::root(), &mut out);
        out
    }

    /// Citations of the free label `label`, with their kinds.
    fn free_citations<'t>(&'t self, label: &Ident, out: &mut Vec<(CitationKind, &'t Pred)>) {
        match self {
            Term::Hyp(c) if c.label.as_ref() == Some(label) => {
                out.push((CitationKind::Hyp, &c.pred))
            }
            Term::Wit(c) if c.label.as_ref() == Some(label) => {
                out.push((CitationKind::Wit, &c.pred))
            }
            Term::Em { label: Some(b), .. } if b == label => {}
            _ => {
                for c in self.children() {
                    c.free_citations(label, out);
                }
            }
        }
    }

    /// The predicate shared by all citations bound by a labeled EM node,
    /// or `None` when its label never occurs.
    pub fn em_predicate_of(&self) -> Result<Option<Pred>, WfError> {
        let Term::Em {
            label: Some(a),
            pred,
            left,
            right,
        } = self
        else {
            return Err(WfError::NotLabeledEm);
        };
        let mut found: Option<Pred> = pred.clone();
        for (branch, sub, allowed) in [
            ("left", left, CitationKind::Hyp),
            ("right", right, CitationKind::Wit),
        ] {
            let mut cites = Vec::new();
            sub.free_citations(a, &mut cites);
            for (kind, p) in cites {
                if kind != allowed {
                    return Err(WfError::WrongCitationKind {
                        label: a.clone(),
                        kind,
                        branch,
                    });
                }
                match &found {
                    None => found = Some(p.clone()),
                    Some(q) if q.alpha_eq(p) => {}
                    Some(q) => {
                        return Err(WfError::DistinctPredicates {
                            label: a.clone(),
                            first: q.clone(),
                            second: p.clone(),
                        })
                    }
                }
            }
        }
        Ok(found)
    }

    /// Which calculus the EM syntax of this term belongs to; `None` when
    /// it contains no EM nodes or citations.
    pub fn labeling(&self) -> Result<Option<System>, WfError> {
        fn go(t: &Term, labeled: &mut bool, unlabeled: &mut bool) {
            let label = match t {
                Term::Em { label, .. } => Some(label.is_some()),
                Term::Hyp(c) | Term::Wit(c) => Some(c.label.is_some()),
                _ => None,
            };
            match label {
                Some(true) => *labeled = true,
                Some(false) => *unlabeled = true,
                None => {}
            }
            for c in t.children() {
                go(c, labeled, unlabeled);
            }
        }
        let (mut labeled, mut unlabeled) = (false, false);
        go(self, &mut labeled, &mut unlabeled);
        match (labeled, unlabeled) {
            (true, true) => Err(WfError::MixedLabels),
            (true, false) => Ok(Some(System::Em1)),
            (false, true) => Ok(Some(System::Nem)),
            (false, false) => Ok(None),
        }
    }

    /// Checks uniform labeling for `system` and the single-predicate
    /// constraint of every labeled EM node.
    pub fn check_well_formed(&self, system: System) -> Result<(), WfError> {
        if let Some(found) = self.labeling()? {
            if found != system {
                return Err(WfError::SystemMismatch {
                    expected: system,
                    found,
                });
            }
        }
        fn go(t: &Term) -> Result<(), WfError> {
            if let Term::Em { label: Some(_), .. } = t {
                t.em_predicate_of()?;
            }
            t.children().into_iter().try_for_each(go)
        }
        go(self)
    }

    pub fn alpha_eq(&self, other: &Term) -> bool {
        let mut env = AlphaEnv::default();
        self.alpha_eq_in(other, &mut env)
    }

    fn alpha_eq_in(&self, other: &Term, env: &mut AlphaEnv) -> bool {
        fn opt_formula(a: &Option<Formula>, b: &Option<Formula>, env: &mut AlphaEnv) -> bool {
            match (a, b) {
                (None, None) => true,
                (Some(a), Some(b)) => a.alpha_eq_in(b, &mut env.ariths),
                _ => false,
            }
        }
        fn label(a: &Option<Ident>, b: &Option<Ident>, env: &AlphaEnv) -> bool {
            match (a, b) {
                (None, None) => true,
                (Some(a), Some(b)) => env.hyps.same(a, b),
                _ => false,
            }
        }
        match (self, other) {
            (Term::Var(a), Term::Var(b)) => env.proofs.same(a, b),
            (Term::App(f1, a1), Term::App(f2, a2)) | (Term::Pair(f1, a1), Term::Pair(f2, a2)) => {
                f1.alpha_eq_in(f2, env) && a1.alpha_eq_in(a2, env)
            }
            (Term::AApp(f1, m1), Term::AApp(f2, m2)) => {
                f1.alpha_eq_in(f2, env) && arith_eq(m1, m2, env)
            }
            (
                Term::Lam {
                    var: x1,
                    domain: d1,
                    body: b1,
                },
                Term::Lam {
                    var: x2,
                    domain: d2,
                    body: b2,
                },
            ) => {
                if !opt_formula(d1, d2, env) {
                    return false;
                }
                env.proofs.push(x1, x2);
                let eq = b1.alpha_eq_in(b2, env);
                env.proofs.pop();
                eq
            }
            (Term::ALam { var: x1, body: b1 }, Term::ALam { var: x2, body: b2 }) => {
                env.ariths.push(x1, x2);
                let eq = b1.alpha_eq_in(b2, env);
                env.ariths.pop();
                eq
            }
            (Term::Proj(s1, u1), Term::Proj(s2, u2)) => s1 == s2 && u1.alpha_eq_in(u2, env),
            (
                Term::Inj {
                    side: s1,
                    body: b1,
                    ann: a1,
                },
                Term::Inj {
                    side: s2,
                    body: b2,
                    ann: a2,
                },
            ) => s1 == s2 && opt_formula(a1, a2, env) && b1.alpha_eq_in(b2, env),
            (
                Term::Case {
                    scrutinee: s1,
                    left_var: x1,
                    left: l1,
                    right_var: y1,
                    right: r1,
                },
                Term::Case {
                    scrutinee: s2,
                    left_var: x2,
                    left: l2,
                    right_var: y2,
                    right: r2,
                },
            ) => {
                if !s1.alpha_eq_in(s2, env) {
                    return false;
                }
                env.proofs.push(x1, x2);
                let left = l1.alpha_eq_in(l2, env);
                env.proofs.pop();
                env.proofs.push(y1, y2);
                let right = r1.alpha_eq_in(r2, env);
                env.proofs.pop();
                left && right
            }
            (
                Term::WPair {
                    witness: w1,
                    body: b1,
                    ann: a1,
                },
                Term::WPair {
                    witness: w2,
                    body: b2,
                    ann: a2,
                },
            ) => arith_eq(w1, w2, env) && opt_formula(a1, a2, env) && b1.alpha_eq_in(b2, env),
            (
                Term::Dest {
                    scrutinee: s1,
                    avar: v1,
                    pvar: x1,
                    body: b1,
                },
                Term::Dest {
                    scrutinee: s2,
                    avar: v2,
                    pvar: x2,
                    body: b2,
                },
            ) => {
                if !s1.alpha_eq_in(s2, env) {
                    return false;
                }
                env.ariths.push(v1, v2);
                env.proofs.push(x1, x2);
                let eq = b1.alpha_eq_in(b2, env);
                env.proofs.pop();
                env.ariths.pop();
                eq
            }
            (
                Term::Em {
                    label: a1,
                    pred: p1,
                    left: l1,
                    right: r1,
                },
                Term::Em {
                    label: a2,
                    pred: p2,
                    left: l2,
                    right: r2,
                },
            ) => {
                let preds = match (p1, p2) {
                    (None, None) => true,
                    (Some(p), Some(q)) => p.alpha_eq_in(q, &mut env.ariths),
                    _ => false,
                };
                if !preds {
                    return false;
                }
                match (a1, a2) {
                    (Some(a), Some(b)) => {
                        env.hyps.push(a, b);
                        let eq = l1.alpha_eq_in(l2, env) && r1.alpha_eq_in(r2, env);
                        env.hyps.pop();
                        eq
                    }
                    (None, None) => l1.alpha_eq_in(l2, env) && r1.alpha_eq_in(r2, env),
                    _ => false,
                }
            }
            (Term::Hyp(c1), Term::Hyp(c2)) | (Term::Wit(c1), Term::Wit(c2)) => {
                label(&c1.label, &c2.label, env) && c1.pred.alpha_eq_in(&c2.pred, &mut env.ariths)
            }
            (Term::True, Term::True) => true,
            (
                Term::Rec {
                    base: b1,
                    step: s1,
                    arg: m1,
                    motive: mo1,
                },
                Term::Rec {
                    base: b2,
                    step: s2,
                    arg: m2,
                    motive: mo2,
                },
            ) => {
                let motives = match (mo1, mo2) {
                    (None, None) => true,
                    (Some(p), Some(q)) => p.alpha_eq_in(q, &mut env.ariths),
                    _ => false,
                };
                motives
                    && arith_eq(m1, m2, env)
                    && b1.alpha_eq_in(b2, env)
                    && s1.alpha_eq_in(s2, env)
            }
            (Term::Post { rule: r1, args: a1 }, Term::Post { rule: r2, args: a2 }) => {
                r1 == r2
                    && a1.len() == a2.len()
                    && a1.iter().zip(a2).all(|(x, y)| x.alpha_eq_in(y, env))
            }
            _ => false,
        }
    }
}

fn arith_eq(a: &ArithTerm, b: &ArithTerm, env: &AlphaEnv) -> bool {
    a.alpha_eq_in(b, &env.ariths)
}

#[derive(Default)]
struct AlphaEnv {
    proofs: Renaming,
    ariths: Renaming,
    hyps: Renaming,
}

/// Moves the substitution `[t/x]` under a proof binder `y`.
fn proof_binder(y: &Ident, body: &Term, x: &Ident, t: &Term, fv: &FreeVarReport) -> (Ident, Term) {
    if y == x || !body.has_free_proof(x) {
        return (y.clone(), body.clone());
    }
    if fv.proofs.contains(y) {
        let fresh = y.fresh(|c| fv.proofs.contains(c) || body.has_free_proof(c) || c == x);
        let renamed = body.rename_proof(y, &fresh);
        (fresh, renamed.subst_proof_with(x, t, fv))
    } else {
        (y.clone(), body.subst_proof_with(x, t, fv))
    }
}

/// Renames an arithmetic binder that would capture a free variable of the
/// term being substituted for a proof variable.
fn arith_binder_for_proof_subst(var: &Ident, body: &Term, fv: &FreeVarReport) -> (Ident, Term) {
    if fv.ariths.contains(var) {
        let fresh = var.fresh(|c| fv.ariths.contains(c) || body.has_free_arith(c));
        let renamed = body.subst_arith(var, &ArithTerm::Var(fresh.clone()));
        (fresh, renamed)
    } else {
        (var.clone(), body.clone())
    }
}

/// Moves the substitution `[m/v]` under an arithmetic binder `var`.
fn arith_binder(var: &Ident, body: &Term, v: &Ident, m: &ArithTerm) -> (Ident, Term) {
    if var == v || !body.has_free_arith(v) {
        return (var.clone(), body.clone());
    }
    if m.mentions(var) {
        let fresh = var.fresh(|c| m.mentions(c) || body.has_free_arith(c) || c == v);
        let renamed = body.subst_arith(var, &ArithTerm::Var(fresh.clone()));
        (fresh, renamed.subst_arith(v, m))
    } else {
        (var.clone(), body.subst_arith(v, m))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(x) => write!(f, "{x}"),
            Term::App(a, b) => write!(f, "(app {a} {b})"),
            Term::AApp(a, m) => write!(f, "(aapp {a} {m})"),
            Term::Lam {
                var,
                domain: Some(d),
                body,
            } => write!(f, "(lam {var} {d} {body})"),
            Term::Lam {
                var,
                domain: None,
                body,
            } => write!(f, "(lam {var} {body})"),
            Term::ALam { var, body } => write!(f, "(alam {var} {body})"),
            Term::Pair(a, b) => write!(f, "(pair {a} {b})"),
            Term::Proj(s, u) => write!(f, "(proj{} {u})", s.index()),
            Term::Inj { side, body, ann } => {
                write!(f, "(inj{} {body}", side.index())?;
                if let Some(a) = ann {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
            Term::Case {
                scrutinee,
                left_var,
                left,
                right_var,
                right,
            } => write!(
                f,
                "(case {scrutinee} {left_var} {left} {right_var} {right})"
            ),
            Term::WPair { witness, body, ann } => {
                write!(f, "(wpair {witness} {body}")?;
                if let Some(a) = ann {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
            Term::Dest {
                scrutinee,
                avar,
                pvar,
                body,
            } => write!(f, "(dest {scrutinee} {avar} {pvar} {body})"),
            Term::Em {
                label,
                pred,
                left,
                right,
            } => {
                f.write_str("(em")?;
                if let Some(a) = label {
                    write!(f, " {a}")?;
                }
                if let Some(p) = pred {
                    write!(f, " {} {}", p.atom, p.binder)?;
                }
                write!(f, " {left} {right})")
            }
            Term::Hyp(c) | Term::Wit(c) => {
                let head = if matches!(self, Term::Hyp(_)) {
                    "hyp"
                } else {
                    "wit"
                };
                write!(f, "({head}")?;
                if let Some(a) = &c.label {
                    write!(f, " {a}")?;
                }
                write!(f, " {} {})", c.pred.atom, c.pred.binder)
            }
            Term::True => f.write_str("true"),
            Term::Rec {
                base,
                step,
                arg,
                motive,
            } => {
                write!(f, "(rec {base} {step} {arg}")?;
                if let Some(m) = motive {
                    write!(f, " (all {} {})", m.binder, m.body)?;
                }
                f.write_str(")")
            }
            Term::Post { rule, args } => {
                write!(f, "(post {rule}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{ArithTerm as A, NEGATION_PREFIX};

    fn p_eq(binder: &str, other: A) -> Pred {
        Pred::new(binder, Atom::new(EQ, vec![A::var(binder), other]))
    }

    #[test]
    fn proof_substitution() {
        let x = Ident::new("x");
        assert_eq!(Term::var("x").subst_proof(&x, &Term::True), Term::True);

        let id = Term::lam_bare("x", Term::var("x"));
        assert_eq!(id.subst_proof(&x, &Term::pair(Term::True, Term::True)), id);

        let t = Term::lam_bare("y", Term::app(Term::var("x"), Term::var("y")));
        let got = t.subst_proof(&x, &Term::var("y"));
        let expected = Term::lam_bare("y'", Term::app(Term::var("y"), Term::var("y'")));
        assert_eq!(got, expected);
    }

    #[test]
    fn arith_substitution() {
        let a = Ident::new("a");
        let t = Term::wpair(A::var("a"), Term::True, None);
        assert_eq!(
            t.subst_arith(&a, &A::Zero),
            Term::wpair(A::Zero, Term::True, None)
        );

        let bound = Term::alam("a", t.clone());
        assert_eq!(bound.subst_arith(&a, &A::Zero), bound);

        let b = Ident::new("b");
        let cite = Term::aapp(Term::hyp(Some("h"), p_eq("a", A::var("b"))), A::var("b"));
        let got = cite.subst_arith(&b, &A::numeral(1));
        let expected = Term::aapp(
            Term::hyp(Some("h"), p_eq("a", A::numeral(1))),
            A::numeral(1),
        );
        assert_eq!(got, expected);
    }

    #[test]
    fn arith_substitution_renames_citation_binder() {
        let b = Ident::new("b");
        let cite = Term::hyp(Some("h"), p_eq("a", A::var("b")));
        let got = cite.subst_arith(&b, &A::var("a"));
        let expected = Term::hyp(Some("h"), p_eq("a'", A::var("a")));
        assert_eq!(got, expected);
    }

    #[test]
    fn raising() {
        let a = Ident::new("a");
        let p = p_eq("x", A::Zero);
        let wit = Term::wit(Some("a"), p.clone());
        let got = wit.raise_subst(&a, &A::numeral(2));
        assert_eq!(
            got,
            Term::wpair(A::numeral(2), Term::True, Some(p.counterexample()))
        );
        assert_eq!(Term::True.raise_subst(&a, &A::Zero), Term::True);
        let inner = Term::em("a", Term::True, wit.clone());
        assert_eq!(inner.raise_subst(&a, &A::Zero), inner);
    }

    #[test]
    fn free_variables() {
        let cite = Term::hyp(Some("a"), p_eq("x", A::var("y")));
        let fv = cite.free_vars();
        assert_eq!(fv.ariths, [Ident::new("y")].into());
        assert_eq!(fv.hyps[&Ident::new("a")], [CitationKind::Hyp].into());
        assert!(fv.proofs.is_empty());

        assert!(Term::lam_bare("x", Term::var("x")).free_vars().is_empty());

        let p = p_eq("x", A::numeral(1));
        let closed = Term::em(
            "a",
            Term::aapp(Term::hyp(Some("a"), p.clone()), A::Zero),
            Term::wit(Some("a"), p),
        );
        assert!(closed.free_vars().is_empty());
    }

    #[test]
    fn quasi_closed() {
        let p = p_eq("x", A::Zero);
        assert!(Term::hyp(Some("a"), p.clone()).is_quasi_closed());
        assert!(!Term::var("x").is_quasi_closed());
        assert!(!Term::wit(Some("a"), p).is_quasi_closed());
    }

    #[test]
    fn em_predicate() {
        let p = p_eq("x", A::Zero);
        let q = p_eq("x", A::numeral(1));
        let disj = Term::em(
            "a",
            Term::inj(Side::Left, Term::hyp(Some("a"), p.clone()), None),
            Term::inj(Side::Right, Term::wit(Some("a"), p.clone()), None),
        );
        assert_eq!(disj.em_predicate_of().unwrap(), Some(p.clone()));
        assert_eq!(
            Term::em("a", Term::True, Term::True)
                .em_predicate_of()
                .unwrap(),
            None
        );
        let bad = Term::em(
            "a",
            Term::aapp(Term::hyp(Some("a"), p), A::Zero),
            Term::wit(Some("a"), q),
        );
        assert!(matches!(
            bad.em_predicate_of(),
            Err(WfError::DistinctPredicates { .. })
        ));
    }

    #[test]
    fn em_predicate_up_to_renaming() {
        let p = p_eq("x", A::Zero);
        let p2 = p_eq("z", A::Zero);
        let t = Term::em("a", Term::hyp(Some("a"), p), Term::wit(Some("a"), p2));
        assert!(t.em_predicate_of().unwrap().is_some());
    }

    #[test]
    fn wrong_kind_and_mixed_labels() {
        let p = p_eq("x", A::Zero);
        let t = Term::em("a", Term::wit(Some("a"), p.clone()), Term::True);
        assert!(matches!(
            t.check_well_formed(System::Em1),
            Err(WfError::WrongCitationKind { .. })
        ));
        let mixed = Term::em("a", Term::hyp(None, p.clone()), Term::True);
        assert_eq!(mixed.labeling(), Err(WfError::MixedLabels));
        let nem = Term::choice(Term::hyp(None, p), Term::True);
        assert!(matches!(
            nem.check_well_formed(System::Em1),
            Err(WfError::SystemMismatch { .. })
        ));
        assert!(nem.check_well_formed(System::Nem).is_ok());
    }

    #[test]
    fn alpha_equivalence() {
        let a = Term::lam_bare("x", Term::var("x"));
        let b = Term::lam_bare("y", Term::var("y"));
        let c = Term::lam_bare("y", Term::var("x"));
        assert!(a.alpha_eq(&b));
        assert!(!a.alpha_eq(&c));
        let p = p_eq("x", A::Zero);
        let e1 = Term::em("a", Term::hyp(Some("a"), p.clone()), Term::True);
        let e2 = Term::em("b", Term::hyp(Some("b"), p.clone()), Term::True);
        let e3 = Term::em("b", Term::hyp(Some("a"), p), Term::True);
        assert!(e1.alpha_eq(&e2));
        assert!(!e1.alpha_eq(&e3));
    }

    #[test]
    fn substitution_avoids_label_capture() {
        let p = p_eq("x", A::Zero);
        let t = Term::em("a", Term::var("z"), Term::True);
        let free_a = Term::hyp(Some("a"), p);
        let got = t.subst_proof(&Ident::new("z"), &free_a);
        match &got {
            Term::Em {
                label: Some(l),
                left,
                ..
            } => {
                assert_ne!(l.as_str(), "a");
                assert!(left.has_free_hyp(&Ident::new("a")));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn counterexample_uses_partner() {
        let p = p_eq("x", A::Zero);
        match p.counterexample() {
            Formula::Ex(_, body) => {
                assert!(body
                    .as_atom()
                    .unwrap()
                    .rel
                    .as_str()
                    .starts_with(NEGATION_PREFIX))
            }
            _ => panic!(),
        }
    }

    #[test]
    fn paths() {
        let t = Term::app(Term::lam_bare("x", Term::var("x")), Term::True);
        assert_eq!(t.subterm(&"/0/0".parse().unwrap()), Some(&Term::var("x")));
        assert_eq!(t.subterm(&"/1".parse().unwrap()), Some(&Term::True));
        assert_eq!(t.subterm(&"/2".parse().unwrap()), None);
        assert_eq!(t.positions().len(), 4);
        assert_eq!(Path(vec![0, 1]).to_string(), "/0/1");
        assert_eq!(t.size(), 4);
    }
}
