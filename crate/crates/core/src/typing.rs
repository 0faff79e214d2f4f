//! Bidirectional checking of natural-deduction judgments `Γ ⊢ t : A` for
//! both calculi.
//!
//! Introduction forms are checked against the goal and elimination heads
//! are inferred. A binder whose name clashes with the context, or whose
//! eigenvariable condition fails literally, is renamed to a fresh name
//! first; the check is up to α-equivalence.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::lang::{ArithTerm, Atom, Formula, Ident, LangError, Registry, TOP};
use crate::post::{
    apply_subst, catalogue, eq_subst_full, eq_subst_premise_candidates, eq_subst_related, is_bot,
    match_atom, schema_vars, validate_post, PostError, PostRule, PostShape, PostVerdict, Subst,
};
use crate::term::{Citation, CitationKind, Motive, Path, Pred, Side, System, Term, WfError};

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Decl {
    Proof {
        name: Ident,
        formula: Formula,
    },
    /// `a : ∀α P`
    Univ {
        name: Ident,
        pred: Pred,
    },
    /// `a : ∃α ¬P`
    Exist {
        name: Ident,
        pred: Pred,
    },
}

impl Decl {
    pub fn name(&self) -> &Ident {
        match self {
            Decl::Proof { name, .. } | Decl::Univ { name, .. } | Decl::Exist { name, .. } => name,
        }
    }

    pub fn formula(&self) -> Formula {
        match self {
            Decl::Proof { formula, .. } => formula.clone(),
            Decl::Univ { pred, .. } => pred.universal(),
            Decl::Exist { pred, .. } => pred.counterexample(),
        }
    }

    fn is_proof(&self) -> bool {
        matches!(self, Decl::Proof { .. })
    }
}

impl fmt::Display for Decl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.name(), self.formula())
    }
}

/// An ordered list of declarations with pairwise distinct names per class.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Context {
    decls: Vec<Decl>,
}

impl Context {
    pub fn new() -> Self {
        Context::default()
    }

    pub fn from_decls(decls: Vec<Decl>) -> Result<Self, TypeError> {
        let mut ctx = Context::new();
        for d in decls {
            ctx.push(d)?;
        }
        Ok(ctx)
    }

    pub fn decls(&self) -> &[Decl] {
        &self.decls
    }

    pub fn push(&mut self, d: Decl) -> Result<(), TypeError> {
        let clash = if d.is_proof() {
            self.has_proof(d.name())
        } else {
            self.has_hyp(d.name())
        };
        if clash {
            return Err(TypeError::DuplicateDeclaration(d.name().clone()));
        }
        self.decls.push(d);
        Ok(())
    }

    fn extended(&self, d: Decl) -> Context {
        let mut c = self.clone();
        c.decls.push(d);
        c
    }

    pub fn has_proof(&self, x: &Ident) -> bool {
        self.decls.iter().any(|d| d.is_proof() && d.name() == x)
    }

    pub fn has_hyp(&self, a: &Ident) -> bool {
        self.decls.iter().any(|d| !d.is_proof() && d.name() == a)
    }

    pub fn proof(&self, x: &Ident) -> Option<&Formula> {
        self.decls.iter().rev().find_map(|d| match d {
            Decl::Proof { name, formula } if name == x => Some(formula),
            _ => None,
        })
    }

    pub fn hyp(&self, a: &Ident) -> Option<&Decl> {
        self.decls
            .iter()
            .rev()
            .find(|d| !d.is_proof() && d.name() == a)
    }

    fn has_pred(&self, kind: CitationKind, p: &Pred) -> bool {
        self.decls.iter().any(|d| match (d, kind) {
            (Decl::Univ { pred, .. }, CitationKind::Hyp)
            | (Decl::Exist { pred, .. }, CitationKind::Wit) => pred.alpha_eq(p),
            _ => false,
        })
    }

    /// Arithmetic variables free in some declared formula.
    pub fn free_ariths(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        for d in &self.decls {
            match d {
                Decl::Proof { formula, .. } => formula.free_vars_into(&mut out),
                Decl::Univ { pred, .. } | Decl::Exist { pred, .. } => pred.free_vars_into(&mut out),
            }
        }
        out
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.decls.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypingRule {
    Axiom,
    HypAxiom,
    WitAxiom,
    AndIntro,
    AndElim(Side),
    ImpIntro,
    ImpElim,
    OrIntro(Side),
    OrElim,
    AllIntro,
    AllElim,
    ExIntro,
    ExElim,
    Induction,
    Post,
    Em1,
    Nem,
}

impl TypingRule {
    pub const ALL: [TypingRule; 19] = [
        TypingRule::Axiom,
        TypingRule::HypAxiom,
        TypingRule::WitAxiom,
        TypingRule::AndIntro,
        TypingRule::AndElim(Side::Left),
        TypingRule::AndElim(Side::Right),
        TypingRule::ImpIntro,
        TypingRule::ImpElim,
        TypingRule::OrIntro(Side::Left),
        TypingRule::OrIntro(Side::Right),
        TypingRule::OrElim,
        TypingRule::AllIntro,
        TypingRule::AllElim,
        TypingRule::ExIntro,
        TypingRule::ExElim,
        TypingRule::Induction,
        TypingRule::Post,
        TypingRule::Em1,
        TypingRule::Nem,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TypingRule::Axiom => "ax",
            TypingRule::HypAxiom => "ax-hyp",
            TypingRule::WitAxiom => "ax-wit",
            TypingRule::AndIntro => "and-i",
            TypingRule::AndElim(Side::Left) => "and-e0",
            TypingRule::AndElim(Side::Right) => "and-e1",
            TypingRule::ImpIntro => "imp-i",
            TypingRule::ImpElim => "imp-e",
            TypingRule::OrIntro(Side::Left) => "or-i0",
            TypingRule::OrIntro(Side::Right) => "or-i1",
            TypingRule::OrElim => "or-e",
            TypingRule::AllIntro => "all-i",
            TypingRule::AllElim => "all-e",
            TypingRule::ExIntro => "ex-i",
            TypingRule::ExElim => "ex-e",
            TypingRule::Induction => "ind",
            TypingRule::Post => "post",
            TypingRule::Em1 => "em1",
            TypingRule::Nem => "nem",
        }
    }

    /// The rule group this rule belongs to.
    pub fn group(self) -> &'static str {
        match self {
            TypingRule::Axiom | TypingRule::HypAxiom | TypingRule::WitAxiom => "axioms",
            TypingRule::AndIntro | TypingRule::AndElim(_) => "conjunction",
            TypingRule::ImpIntro | TypingRule::ImpElim => "implication",
            TypingRule::OrIntro(_) => "disjunction-intro",
            TypingRule::OrElim => "disjunction-elim",
            TypingRule::AllIntro | TypingRule::AllElim => "universal",
            TypingRule::ExIntro | TypingRule::ExElim => "existential",
            TypingRule::Induction => "induction",
            TypingRule::Post => "post",
            TypingRule::Em1 => "em1",
            TypingRule::Nem => "nem",
        }
    }
}

impl fmt::Display for TypingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A checked derivation tree.
#[derive(Clone, Debug)]
pub struct Derivation {
    pub rule: TypingRule,
    pub context: Context,
    pub term: Term,
    pub formula: Formula,
    pub premises: Vec<Derivation>,
    pub note: Option<String>,
}

impl Derivation {
    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(Derivation::size).sum::<usize>()
    }

    /// Every rule used, in preorder.
    pub fn rules(&self) -> Vec<TypingRule> {
        let mut out = vec![self.rule];
        for p in &self.premises {
            out.extend(p.rules());
        }
        out
    }

    fn render(&self, depth: usize, out: &mut String) {
        use std::fmt::Write;
        let _ = write!(
            out,
            "{:indent$}{} ⊢ {} : {}  [{}",
            "",
            self.context,
            self.term,
            self.formula,
            self.rule,
            indent = depth * 2
        );
        if let Some(n) = &self.note {
            let _ = write!(out, "; {n}");
        }
        out.push_str("]\n");
        for p in &self.premises {
            p.render(depth + 1, out);
        }
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.render(0, &mut s);
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypeError {
    #[error("at {path}: expected `{expected}`, found `{found}`")]
    TypeMismatch {
        path: Path,
        expected: Formula,
        found: Formula,
    },
    #[error("at {path}: expected {expected}, found `{found}`")]
    ShapeMismatch {
        path: Path,
        expected: &'static str,
        found: Formula,
    },
    #[error("at {path}: unbound {name}")]
    UnboundVariable { path: Path, name: String },
    #[error("at {path}: `{var}` violates the eigenvariable condition ({detail})")]
    FreshnessViolation {
        path: Path,
        var: Ident,
        detail: String,
    },
    #[error("at {path}: Post rule `{rule}`: {detail}")]
    PostRuleInvalid {
        path: Path,
        rule: Ident,
        detail: String,
    },
    #[error(transparent)]
    WellFormedness(#[from] WfError),
    #[error("at {path}: cannot infer a formula for {what}")]
    NotInferable { path: Path, what: String },
    #[error("at {path}: `true` does not prove `{formula}`")]
    Underivable { path: Path, formula: Formula },
    #[error("{0}")]
    Lang(#[from] LangError),
    #[error("duplicate declaration of `{0}`")]
    DuplicateDeclaration(Ident),
}

impl TypeError {
    /// A stable name for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            TypeError::TypeMismatch { .. } => "type-mismatch",
            TypeError::ShapeMismatch { .. } => "shape-mismatch",
            TypeError::UnboundVariable { .. } => "unbound-variable",
            TypeError::FreshnessViolation { .. } => "freshness-violation",
            TypeError::PostRuleInvalid { .. } => "post-rule-invalid",
            TypeError::WellFormedness(_) => "well-formedness",
            TypeError::NotInferable { .. } => "not-inferable",
            TypeError::Underivable { .. } => "underivable",
            TypeError::Lang(_) => "language",
            TypeError::DuplicateDeclaration(_) => "duplicate-declaration",
        }
    }

    fn is_not_inferable(&self) -> bool {
        matches!(self, TypeError::NotInferable { .. })
    }
}

/// The relation symbols and Post rules a judgment may use.
#[derive(Clone, Debug)]
pub struct Signature {
    pub registry: Registry,
    rules: BTreeMap<Ident, (PostRule, PostVerdict)>,
}

impl Signature {
    pub fn standard() -> Self {
        Signature::with_registry(Registry::standard())
    }

    pub fn with_registry(registry: Registry) -> Self {
        let rules = catalogue()
            .into_iter()
            .map(|r| (r.name.clone(), (r, PostVerdict::Trusted)))
            .collect();
        Signature { registry, rules }
    }

    /// Validates and adds a user rule; refuted rules are rejected.
    pub fn add_rule(&mut self, rule: PostRule, test_bound: u64) -> Result<PostVerdict, TypeError> {
        let invalid = |detail: String| TypeError::PostRuleInvalid {
            path: Path::root(),
            rule: rule.name.clone(),
            detail,
        };
        if self.rules.contains_key(&rule.name) {
            return Err(invalid("a rule with this name already exists".into()));
        }
        let verdict = validate_post(&self.registry, &rule, test_bound).map_err(|e| match e {
            PostError::Lang(l) => TypeError::Lang(l),
            other => invalid(other.to_string()),
        })?;
        if let PostVerdict::RefutedAt(_) = verdict {
            return Err(invalid(format!("unsound: {verdict}")));
        }
        self.rules
            .insert(rule.name.clone(), (rule, verdict.clone()));
        Ok(verdict)
    }

    pub fn rule(&self, name: &Ident) -> Option<&(PostRule, PostVerdict)> {
        self.rules.get(name)
    }

    pub fn rules(&self) -> impl Iterator<Item = &(PostRule, PostVerdict)> {
        self.rules.values()
    }
}

impl Default for Signature {
    fn default() -> Self {
        Signature::standard()
    }
}

pub struct Checker<'s> {
    sig: &'s Signature,
    system: System,
}

fn node(
    rule: TypingRule,
    ctx: &Context,
    t: &Term,
    formula: Formula,
    premises: Vec<Derivation>,
) -> Derivation {
    Derivation {
        rule,
        context: ctx.clone(),
        term: t.clone(),
        formula,
        premises,
        note: None,
    }
}

fn with_note(mut d: Derivation, note: impl Into<String>) -> Derivation {
    d.note = Some(note.into());
    d
}

fn expect(found: &Formula, goal: &Formula, path: &Path) -> Result<(), TypeError> {
    if found.alpha_eq(goal) {
        Ok(())
    } else {
        Err(TypeError::TypeMismatch {
            path: path.clone(),
            expected: goal.clone(),
            found: found.clone(),
        })
    }
}

fn shape(expected: &'static str, found: &Formula, path: &Path) -> TypeError {
    TypeError::ShapeMismatch {
        path: path.clone(),
        expected,
        found: found.clone(),
    }
}

/// Predicates cited by unlabeled citations of `kind` anywhere in `t`.
fn cited_preds(t: &Term, kind: CitationKind, out: &mut Vec<Pred>) {
    match t {
        Term::Hyp(c) if kind == CitationKind::Hyp && c.label.is_none() => {
            if !out.iter().any(|p| p.alpha_eq(&c.pred)) {
                out.push(c.pred.clone())
            }
        }
        Term::Wit(c) if kind == CitationKind::Wit && c.label.is_none() => {
            if !out.iter().any(|p| p.alpha_eq(&c.pred)) {
                out.push(c.pred.clone())
            }
        }
        _ => {
            for ch in t.children() {
                cited_preds(ch, kind, out);
            }
        }
    }
}

impl<'s> Checker<'s> {
    pub fn new(sig: &'s Signature, system: System) -> Self {
        Checker { sig, system }
    }

    pub fn system(&self) -> System {
        self.system
    }

    /// `Γ ⊢ t : goal`
    pub fn check(&self, ctx: &Context, t: &Term, goal: &Formula) -> Result<Derivation, TypeError> {
        self.preflight(ctx, t)?;
        self.sig.registry.check_formula(goal)?;
        self.chk(ctx, t, goal, &Path::root())
    }

    /// The formula of `t` under `Γ`, with its derivation.
    pub fn infer(&self, ctx: &Context, t: &Term) -> Result<Derivation, TypeError> {
        self.preflight(ctx, t)?;
        self.inf(ctx, t, &Path::root())
    }

    fn preflight(&self, ctx: &Context, t: &Term) -> Result<(), TypeError> {
        t.check_well_formed(self.system)?;
        for d in ctx.decls() {
            self.sig.registry.check_formula(&d.formula())?;
        }
        self.check_symbols(t)
    }

    fn check_symbols(&self, t: &Term) -> Result<(), TypeError> {
        let reg = &self.sig.registry;
        match t {
            Term::Lam {
                domain: Some(d), ..
            } => reg.check_formula(d)?,
            Term::Inj { ann: Some(a), .. } | Term::WPair { ann: Some(a), .. } => {
                reg.check_formula(a)?
            }
            Term::Em { pred: Some(p), .. } => reg.check_atom(&p.atom)?,
            Term::Hyp(c) | Term::Wit(c) => reg.check_atom(&c.pred.atom)?,
            Term::Rec {
                motive: Some(m), ..
            } => reg.check_formula(&m.body)?,
            _ => {}
        }
        t.children()
            .into_iter()
            .try_for_each(|c| self.check_symbols(c))
    }

    /// Renames a proof binder that clashes with the context.
    fn open_proof(&self, ctx: &Context, x: &Ident, body: &Term) -> (Ident, Term) {
        if !ctx.has_proof(x) {
            return (x.clone(), body.clone());
        }
        let fresh = x.fresh(|c| ctx.has_proof(c) || body.has_free_proof(c));
        let renamed = body.rename_proof(x, &fresh);
        (fresh, renamed)
    }

    /// Renames an EM label that clashes with the context.
    fn open_label(
        &self,
        ctx: &Context,
        a: &Ident,
        left: &Term,
        right: &Term,
    ) -> (Ident, Term, Term) {
        if !ctx.has_hyp(a) {
            return (a.clone(), left.clone(), right.clone());
        }
        let fresh = a.fresh(|c| ctx.has_hyp(c) || left.has_free_hyp(c) || right.has_free_hyp(c));
        (
            fresh.clone(),
            left.subst_label(a, &fresh),
            right.subst_label(a, &fresh),
        )
    }

    /// Returns the eigenvariable to use for binder `var` of `body`, and the
    /// renamed body, given the variables it must avoid.
    fn open_arith(&self, var: &Ident, body: &Term, avoid: &BTreeSet<Ident>) -> (Ident, Term, bool) {
        if !avoid.contains(var) {
            return (var.clone(), body.clone(), false);
        }
        let fresh = var.fresh(|c| avoid.contains(c) || body.has_free_arith(c));
        let renamed = body.subst_arith(var, &ArithTerm::Var(fresh.clone()));
        (fresh, renamed, true)
    }

    fn chk(
        &self,
        ctx: &Context,
        t: &Term,
        goal: &Formula,
        path: &Path,
    ) -> Result<Derivation, TypeError> {
        match t {
            Term::Lam { var, domain, body } => {
                let Formula::Imp(dom, cod) = goal else {
                    return Err(shape("an implication", goal, path));
                };
                if let Some(d) = domain {
                    if !d.alpha_eq(dom) {
                        return Err(TypeError::TypeMismatch {
                            path: path.clone(),
                            expected: goal.clone(),
                            found: Formula::Imp(Box::new(d.clone()), cod.clone()),
                        });
                    }
                }
                let (x, body) = self.open_proof(ctx, var, body);
                let inner = ctx.extended(Decl::Proof {
                    name: x,
                    formula: (**dom).clone(),
                });
                let p = self.chk(&inner, &body, cod, &path.child(0))?;
                Ok(node(TypingRule::ImpIntro, ctx, t, goal.clone(), vec![p]))
            }
            Term::ALam { var, body } => {
                let Formula::All(beta, inner_goal) = goal else {
                    return Err(shape("a universal formula", goal, path));
                };
                let mut avoid = ctx.free_ariths();
                avoid.extend(goal.free_vars());
                let (alpha, body, renamed) = self.open_arith(var, body, &avoid);
                let b = inner_goal.subst(beta, &ArithTerm::Var(alpha.clone()));
                match self.chk(ctx, &body, &b, &path.child(0)) {
                    Ok(p) => {
                        let d = node(TypingRule::AllIntro, ctx, t, goal.clone(), vec![p]);
                        Ok(if renamed {
                            with_note(d, format!("eigenvariable {var} renamed to {alpha}"))
                        } else {
                            d
                        })
                    }
                    Err(e) if renamed => Err(TypeError::FreshnessViolation {
                        path: path.clone(),
                        var: var.clone(),
                        detail: e.to_string(),
                    }),
                    Err(e) => Err(e),
                }
            }
            Term::Pair(a, b) => {
                let Formula::And(fa, fb) = goal else {
                    return Err(shape("a conjunction", goal, path));
                };
                let pa = self.chk(ctx, a, fa, &path.child(0))?;
                let pb = self.chk(ctx, b, fb, &path.child(1))?;
                Ok(node(
                    TypingRule::AndIntro,
                    ctx,
                    t,
                    goal.clone(),
                    vec![pa, pb],
                ))
            }
            Term::Inj { side, body, ann } => {
                let Formula::Or(fa, fb) = goal else {
                    return Err(shape("a disjunction", goal, path));
                };
                if let Some(a) = ann {
                    expect(a, goal, path)?;
                }
                let p = self.chk(ctx, body, side.pick(fa, fb), &path.child(0))?;
                Ok(node(
                    TypingRule::OrIntro(*side),
                    ctx,
                    t,
                    goal.clone(),
                    vec![p],
                ))
            }
            Term::WPair { witness, body, ann } => {
                let Formula::Ex(beta, inner) = goal else {
                    return Err(shape("an existential formula", goal, path));
                };
                if let Some(a) = ann {
                    expect(a, goal, path)?;
                }
                let p = self.chk(ctx, body, &inner.subst(beta, witness), &path.child(0))?;
                Ok(node(TypingRule::ExIntro, ctx, t, goal.clone(), vec![p]))
            }
            Term::Case {
                scrutinee,
                left_var,
                left,
                right_var,
                right,
            } => {
                let ps = self.inf(ctx, scrutinee, &path.child(0))?;
                let Formula::Or(fa, fb) = &ps.formula else {
                    return Err(shape("a disjunction", &ps.formula, &path.child(0)));
                };
                let (x, left) = self.open_proof(ctx, left_var, left);
                let (y, right) = self.open_proof(ctx, right_var, right);
                let cl = ctx.extended(Decl::Proof {
                    name: x,
                    formula: (**fa).clone(),
                });
                let cr = ctx.extended(Decl::Proof {
                    name: y,
                    formula: (**fb).clone(),
                });
                let pl = self.chk(&cl, &left, goal, &path.child(1))?;
                let pr = self.chk(&cr, &right, goal, &path.child(2))?;
                Ok(node(
                    TypingRule::OrElim,
                    ctx,
                    t,
                    goal.clone(),
                    vec![ps, pl, pr],
                ))
            }
            Term::Dest {
                scrutinee,
                avar,
                pvar,
                body,
            } => self.dest(ctx, t, scrutinee, avar, pvar, body, Some(goal), path),
            Term::Em { .. } => self.em(ctx, t, Some(goal), path),
            Term::Proj(side, inner) => match &**inner {
                Term::Pair(a, b) => {
                    // the projected component is checked, the other inferred
                    let (chosen, other, ci, oi) = match side {
                        Side::Left => (a, b, 0, 1),
                        Side::Right => (b, a, 1, 0),
                    };
                    let pc = self.chk(ctx, chosen, goal, &path.child(0).child(ci))?;
                    let po = self.inf(ctx, other, &path.child(0).child(oi))?;
                    let both = match side {
                        Side::Left => Formula::and(goal.clone(), po.formula.clone()),
                        Side::Right => Formula::and(po.formula.clone(), goal.clone()),
                    };
                    let prem = match side {
                        Side::Left => vec![pc, po],
                        Side::Right => vec![po, pc],
                    };
                    let pair = node(TypingRule::AndIntro, ctx, inner, both, prem);
                    Ok(node(
                        TypingRule::AndElim(*side),
                        ctx,
                        t,
                        goal.clone(),
                        vec![pair],
                    ))
                }
                _ => {
                    let d = self.inf(ctx, t, path)?;
                    expect(&d.formula, goal, path)?;
                    Ok(d)
                }
            },
            Term::App(f, a)
                if matches!(
                    &**f,
                    Term::Lam {
                        domain: Some(_),
                        ..
                    }
                ) =>
            {
                // a literal head is checked against the goal instead of inferred
                let Term::Lam {
                    domain: Some(d), ..
                } = &**f
                else {
                    unreachable!()
                };
                let pf = self.chk(
                    ctx,
                    f,
                    &Formula::imp(d.clone(), goal.clone()),
                    &path.child(0),
                )?;
                let pa = self.chk(ctx, a, d, &path.child(1))?;
                Ok(node(
                    TypingRule::ImpElim,
                    ctx,
                    t,
                    goal.clone(),
                    vec![pf, pa],
                ))
            }
            Term::App(f, a) => match self.inf(ctx, f, &path.child(0)) {
                Ok(pf) => {
                    let Formula::Imp(dom, cod) = &pf.formula else {
                        return Err(shape("an implication", &pf.formula, &path.child(0)));
                    };
                    let pa = self.chk(ctx, a, dom, &path.child(1))?;
                    expect(cod, goal, path)?;
                    Ok(node(
                        TypingRule::ImpElim,
                        ctx,
                        t,
                        goal.clone(),
                        vec![pf, pa],
                    ))
                }
                Err(e) if e.is_not_inferable() => {
                    // the argument determines the domain of an unannotated head
                    let pa = self.inf(ctx, a, &path.child(1)).map_err(|_| e)?;
                    let fty = Formula::imp(pa.formula.clone(), goal.clone());
                    let pf = self.chk(ctx, f, &fty, &path.child(0))?;
                    Ok(node(
                        TypingRule::ImpElim,
                        ctx,
                        t,
                        goal.clone(),
                        vec![pf, pa],
                    ))
                }
                Err(e) => Err(e),
            },
            Term::True => self.truth(ctx, t, goal, path),
            Term::Post { rule, args } => self.post(ctx, t, rule, args, Some(goal), path),
            _ => {
                let d = self.inf(ctx, t, path)?;
                expect(&d.formula, goal, path)?;
                Ok(d)
            }
        }
    }

    fn inf(&self, ctx: &Context, t: &Term, path: &Path) -> Result<Derivation, TypeError> {
        let not_inferable = |what: &str| TypeError::NotInferable {
            path: path.clone(),
            what: what.to_string(),
        };
        match t {
            Term::Var(x) => match ctx.proof(x) {
                Some(f) => Ok(node(TypingRule::Axiom, ctx, t, f.clone(), vec![])),
                None => Err(TypeError::UnboundVariable {
                    path: path.clone(),
                    name: format!("proof variable `{x}`"),
                }),
            },
            Term::Hyp(c) => self.citation(ctx, t, c, CitationKind::Hyp, path),
            Term::Wit(c) => self.citation(ctx, t, c, CitationKind::Wit, path),
            Term::App(f, a) => {
                let pf = self.inf(ctx, f, &path.child(0))?;
                let Formula::Imp(dom, cod) = &pf.formula else {
                    return Err(shape("an implication", &pf.formula, &path.child(0)));
                };
                let pa = self.chk(ctx, a, dom, &path.child(1))?;
                let cod = (**cod).clone();
                Ok(node(TypingRule::ImpElim, ctx, t, cod, vec![pf, pa]))
            }
            Term::AApp(f, m) => {
                let pf = self.inf(ctx, f, &path.child(0))?;
                let Formula::All(alpha, body) = &pf.formula else {
                    return Err(shape("a universal formula", &pf.formula, &path.child(0)));
                };
                let f = body.subst(alpha, m);
                Ok(node(TypingRule::AllElim, ctx, t, f, vec![pf]))
            }
            Term::Proj(side, u) => {
                let pu = self.inf(ctx, u, &path.child(0))?;
                let Formula::And(a, b) = &pu.formula else {
                    return Err(shape("a conjunction", &pu.formula, &path.child(0)));
                };
                let f = (**side.pick(a, b)).clone();
                Ok(node(TypingRule::AndElim(*side), ctx, t, f, vec![pu]))
            }
            Term::Lam {
                var,
                domain: Some(d),
                body,
            } => {
                let (x, body) = self.open_proof(ctx, var, body);
                let inner = ctx.extended(Decl::Proof {
                    name: x,
                    formula: d.clone(),
                });
                let pb = self.inf(&inner, &body, &path.child(0))?;
                let f = Formula::imp(d.clone(), pb.formula.clone());
                Ok(node(TypingRule::ImpIntro, ctx, t, f, vec![pb]))
            }
            Term::Lam { domain: None, .. } => Err(not_inferable("an unannotated abstraction")),
            Term::ALam { var, body } => {
                let avoid = ctx.free_ariths();
                let (alpha, body, _) = self.open_arith(var, body, &avoid);
                let pb = self.inf(ctx, &body, &path.child(0))?;
                let f = Formula::All(alpha, Box::new(pb.formula.clone()));
                Ok(node(TypingRule::AllIntro, ctx, t, f, vec![pb]))
            }
            Term::Pair(a, b) => {
                let pa = self.inf(ctx, a, &path.child(0))?;
                let pb = self.inf(ctx, b, &path.child(1))?;
                let f = Formula::and(pa.formula.clone(), pb.formula.clone());
                Ok(node(TypingRule::AndIntro, ctx, t, f, vec![pa, pb]))
            }
            Term::Inj { ann: Some(a), .. } | Term::WPair { ann: Some(a), .. } => {
                self.chk(ctx, t, a, path)
            }
            Term::Inj { ann: None, .. } => Err(not_inferable("an unannotated injection")),
            Term::WPair { ann: None, .. } => Err(not_inferable("an unannotated witness pair")),
            Term::Case {
                scrutinee,
                left_var,
                left,
                right_var,
                right,
            } => {
                let ps = self.inf(ctx, scrutinee, &path.child(0))?;
                let Formula::Or(fa, fb) = &ps.formula else {
                    return Err(shape("a disjunction", &ps.formula, &path.child(0)));
                };
                let (x, left) = self.open_proof(ctx, left_var, left);
                let (y, right) = self.open_proof(ctx, right_var, right);
                let cl = ctx.extended(Decl::Proof {
                    name: x,
                    formula: (**fa).clone(),
                });
                let cr = ctx.extended(Decl::Proof {
                    name: y,
                    formula: (**fb).clone(),
                });
                let pl = self.inf(&cl, &left, &path.child(1))?;
                let goal = pl.formula.clone();
                let pr = self.chk(&cr, &right, &goal, &path.child(2))?;
                Ok(node(TypingRule::OrElim, ctx, t, goal, vec![ps, pl, pr]))
            }
            Term::Dest {
                scrutinee,
                avar,
                pvar,
                body,
            } => self.dest(ctx, t, scrutinee, avar, pvar, body, None, path),
            Term::Em { .. } => self.em(ctx, t, None, path),
            // the least informative atom `true` proves
            Term::True => {
                let d = node(TypingRule::Post, ctx, t, Formula::atom(TOP, vec![]), vec![]);
                Ok(with_note(d, "closed true atom"))
            }
            Term::Rec {
                base,
                step,
                arg,
                motive,
            } => self.rec(ctx, t, base, step, arg, motive.as_ref(), path),
            Term::Post { rule, args } => self.post(ctx, t, rule, args, None, path),
        }
    }

    fn citation(
        &self,
        ctx: &Context,
        t: &Term,
        c: &Citation,
        kind: CitationKind,
        path: &Path,
    ) -> Result<Derivation, TypeError> {
        let (rule, formula) = match kind {
            CitationKind::Hyp => (TypingRule::HypAxiom, c.pred.universal()),
            CitationKind::Wit => (TypingRule::WitAxiom, c.pred.counterexample()),
        };
        match &c.label {
            Some(a) => {
                let Some(decl) = ctx.hyp(a) else {
                    return Err(TypeError::UnboundVariable {
                        path: path.clone(),
                        name: format!("hypothesis `{a}`"),
                    });
                };
                let declared = decl.formula();
                let kind_ok = matches!(
                    (decl, kind),
                    (Decl::Univ { .. }, CitationKind::Hyp)
                        | (Decl::Exist { .. }, CitationKind::Wit)
                );
                if !kind_ok || !declared.alpha_eq(&formula) {
                    return Err(TypeError::TypeMismatch {
                        path: path.clone(),
                        expected: declared,
                        found: formula,
                    });
                }
                Ok(node(rule, ctx, t, formula, vec![]))
            }
            None => {
                if ctx.has_pred(kind, &c.pred) {
                    Ok(node(rule, ctx, t, formula, vec![]))
                } else {
                    Err(TypeError::UnboundVariable {
                        path: path.clone(),
                        name: format!("hypothesis for `{formula}`"),
                    })
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn dest(
        &self,
        ctx: &Context,
        t: &Term,
        scrutinee: &Term,
        avar: &Ident,
        pvar: &Ident,
        body: &Term,
        goal: Option<&Formula>,
        path: &Path,
    ) -> Result<Derivation, TypeError> {
        let ps = self.inf(ctx, scrutinee, &path.child(0))?;
        let Formula::Ex(beta, inner) = &ps.formula else {
            return Err(shape("an existential formula", &ps.formula, &path.child(0)));
        };
        let mut avoid = ctx.free_ariths();
        avoid.extend(ps.formula.free_vars());
        if let Some(g) = goal {
            avoid.extend(g.free_vars());
        }
        let (alpha, body, renamed) = self.open_arith(avar, body, &avoid);
        let (x, body) = self.open_proof(ctx, pvar, &body);
        let hyp = inner.subst(beta, &ArithTerm::Var(alpha.clone()));
        let inner_ctx = ctx.extended(Decl::Proof {
            name: x,
            formula: hyp,
        });
        let result = match goal {
            Some(g) => self.chk(&inner_ctx, &body, g, &path.child(1)),
            None => self.inf(&inner_ctx, &body, &path.child(1)).and_then(|pb| {
                if pb.formula.is_free(&alpha) {
                    Err(TypeError::FreshnessViolation {
                        path: path.clone(),
                        var: alpha.clone(),
                        detail: format!("occurs free in the conclusion `{}`", pb.formula),
                    })
                } else {
                    Ok(pb)
                }
            }),
        };
        match result {
            Ok(pb) => {
                let f = pb.formula.clone();
                let d = node(TypingRule::ExElim, ctx, t, f, vec![ps, pb]);
                Ok(if renamed {
                    with_note(d, format!("eigenvariable {avar} renamed to {alpha}"))
                } else {
                    d
                })
            }
            Err(e) if renamed && !matches!(e, TypeError::FreshnessViolation { .. }) => {
                Err(TypeError::FreshnessViolation {
                    path: path.clone(),
                    var: avar.clone(),
                    detail: e.to_string(),
                })
            }
            Err(e) => Err(e),
        }
    }

    fn em(
        &self,
        ctx: &Context,
        t: &Term,
        goal: Option<&Formula>,
        path: &Path,
    ) -> Result<Derivation, TypeError> {
        let Term::Em {
            label,
            pred,
            left,
            right,
        } = t
        else {
            unreachable!()
        };
        let branches = |name: Ident,
                        p: &Pred,
                        left: &Term,
                        right: &Term|
         -> Result<(Derivation, Derivation), TypeError> {
            let cl = ctx.extended(Decl::Univ {
                name: name.clone(),
                pred: p.clone(),
            });
            let cr = ctx.extended(Decl::Exist {
                name,
                pred: p.clone(),
            });
            let pl = match goal {
                Some(g) => self.chk(&cl, left, g, &path.child(0))?,
                None => self.inf(&cl, left, &path.child(0))?,
            };
            let pr = self.chk(&cr, right, &pl.formula, &path.child(1))?;
            Ok((pl, pr))
        };
        match label {
            Some(a) => {
                let p = t.em_predicate_of()?.unwrap_or_else(Pred::unconstrained);
                let (a2, left, right) = self.open_label(ctx, a, left, right);
                let (pl, pr) = branches(a2, &p, &left, &right)?;
                let f = pl.formula.clone();
                let d = node(TypingRule::Em1, ctx, t, f, vec![pl, pr]);
                Ok(with_note(d, format!("P = {:?}", p)))
            }
            None => {
                let mut candidates = Vec::new();
                match pred {
                    Some(p) => candidates.push(p.clone()),
                    None => {
                        cited_preds(left, CitationKind::Hyp, &mut candidates);
                        cited_preds(right, CitationKind::Wit, &mut candidates);
                        candidates.retain(|p| {
                            !(ctx.has_pred(CitationKind::Hyp, p)
                                && ctx.has_pred(CitationKind::Wit, p))
                        });
                        candidates.push(Pred::unconstrained());
                    }
                }
                let name = Ident::new("h").fresh(|c| ctx.has_hyp(c));
                let mut first_err = None;
                for p in &candidates {
                    match branches(name.clone(), p, left, right) {
                        Ok((pl, pr)) => {
                            let f = pl.formula.clone();
                            let d = node(TypingRule::Nem, ctx, t, f, vec![pl, pr]);
                            return Ok(with_note(d, format!("P = {:?}", p)));
                        }
                        Err(e) => {
                            first_err.get_or_insert(e);
                        }
                    }
                }
                Err(first_err.expect("at least one candidate"))
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(
        &self,
        ctx: &Context,
        t: &Term,
        base: &Term,
        step: &Term,
        arg: &ArithTerm,
        motive: Option<&Motive>,
        path: &Path,
    ) -> Result<Derivation, TypeError> {
        let (motive, pstep) = match motive {
            Some(m) => {
                let ps = self.chk(ctx, step, &m.step_formula(), &path.child(1))?;
                (m.clone(), ps)
            }
            None => {
                let ps = self.inf(ctx, step, &path.child(1)).map_err(|e| {
                    if e.is_not_inferable() {
                        TypeError::NotInferable {
                            path: path.clone(),
                            what: "a recursor without a motive".into(),
                        }
                    } else {
                        e
                    }
                })?;
                let Formula::All(alpha, imp) = &ps.formula else {
                    return Err(shape(
                        "a step formula ∀α(A(α) → A(Sα))",
                        &ps.formula,
                        &path.child(1),
                    ));
                };
                let Formula::Imp(before, _) = &**imp else {
                    return Err(shape(
                        "a step formula ∀α(A(α) → A(Sα))",
                        &ps.formula,
                        &path.child(1),
                    ));
                };
                let m = Motive {
                    binder: alpha.clone(),
                    body: (**before).clone(),
                };
                expect(&ps.formula, &m.step_formula(), &path.child(1))?;
                (m, ps)
            }
        };
        let pbase = self.chk(ctx, base, &motive.at(&ArithTerm::Zero), &path.child(0))?;
        let f = motive.at(arg);
        Ok(node(TypingRule::Induction, ctx, t, f, vec![pbase, pstep]))
    }

    /// `true` proves an atom derivable by a premise-free Post rule.
    fn truth(
        &self,
        ctx: &Context,
        t: &Term,
        goal: &Formula,
        path: &Path,
    ) -> Result<Derivation, TypeError> {
        let Formula::Atom(atom) = goal else {
            return Err(TypeError::Underivable {
                path: path.clone(),
                formula: goal.clone(),
            });
        };
        for (rule, verdict) in self.sig.rules() {
            if let PostShape::Schema {
                premises,
                conclusion,
            } = &rule.shape
            {
                if premises.is_empty() {
                    let metas = schema_vars(premises, conclusion);
                    if match_atom(conclusion, atom, &metas, &mut Subst::new()) {
                        let d = node(TypingRule::Post, ctx, t, goal.clone(), vec![]);
                        return Ok(with_note(d, format!("{} ({verdict})", rule.name)));
                    }
                }
            }
        }
        if atom.is_closed() && self.sig.registry.eval_atom(atom)? {
            let d = node(TypingRule::Post, ctx, t, goal.clone(), vec![]);
            return Ok(with_note(d, "closed true atom"));
        }
        Err(TypeError::Underivable {
            path: path.clone(),
            formula: goal.clone(),
        })
    }

    fn post(
        &self,
        ctx: &Context,
        t: &Term,
        name: &Ident,
        args: &[Term],
        goal: Option<&Formula>,
        path: &Path,
    ) -> Result<Derivation, TypeError> {
        let invalid = |detail: String| TypeError::PostRuleInvalid {
            path: path.clone(),
            rule: name.clone(),
            detail,
        };
        let Some((rule, verdict)) = self.sig.rule(name) else {
            return Err(invalid("unknown rule".into()));
        };
        if args.len() != rule.premise_count() {
            return Err(invalid(format!(
                "expects {} premise(s), found {}",
                rule.premise_count(),
                args.len()
            )));
        }
        let goal_atom = match goal {
            Some(Formula::Atom(a)) => Some(a),
            Some(other) => return Err(shape("an atomic formula", other, path)),
            None => None,
        };
        let arg_path = |i: usize| path.child(i as u8);
        // `true` proves many atoms, so it never fixes a premise
        let inf_arg = |i: usize| match &args[i] {
            Term::True => Err(TypeError::NotInferable {
                path: arg_path(i),
                what: "`true`".into(),
            }),
            a => self.inf(ctx, a, &arg_path(i)),
        };
        let atom_of = |d: &Derivation, i: usize| -> Result<Atom, TypeError> {
            d.formula
                .as_atom()
                .cloned()
                .ok_or_else(|| shape("an atomic formula", &d.formula, &arg_path(i)))
        };
        let finish =
            |conclusion: Atom, premises: Vec<Derivation>| -> Result<Derivation, TypeError> {
                let f = Formula::Atom(conclusion);
                if let Some(g) = goal {
                    expect(&f, g, path)?;
                }
                let d = node(TypingRule::Post, ctx, t, f, premises);
                Ok(with_note(d, format!("{name} ({verdict})")))
            };
        match &rule.shape {
            PostShape::Schema {
                premises,
                conclusion,
            } => {
                let metas = schema_vars(premises, conclusion);
                let mut sigma = Subst::new();
                if let Some(g) = goal_atom {
                    if !match_atom(conclusion, g, &metas, &mut sigma) {
                        return Err(invalid(format!("conclusion does not match `{g}`")));
                    }
                }
                let mut done: Vec<Option<Derivation>> = vec![None; args.len()];
                loop {
                    let mut progress = false;
                    for (i, prem) in premises.iter().enumerate() {
                        if done[i].is_some() {
                            continue;
                        }
                        let determined = prem.free_vars().iter().all(|v| sigma.contains_key(v));
                        if determined {
                            let want = Formula::Atom(apply_subst(prem, &sigma));
                            done[i] = Some(self.chk(ctx, &args[i], &want, &arg_path(i))?);
                            progress = true;
                        } else {
                            match inf_arg(i) {
                                Ok(d) => {
                                    let a = atom_of(&d, i)?;
                                    if !match_atom(prem, &a, &metas, &mut sigma) {
                                        return Err(invalid(format!(
                                            "premise {i} `{a}` does not match `{prem}`"
                                        )));
                                    }
                                    done[i] = Some(d);
                                    progress = true;
                                }
                                Err(e) if e.is_not_inferable() => {}
                                Err(e) => return Err(e),
                            }
                        }
                    }
                    if done.iter().all(Option::is_some) {
                        break;
                    }
                    if !progress {
                        return Err(TypeError::NotInferable {
                            path: path.clone(),
                            what: format!("the premises of `{name}`"),
                        });
                    }
                }
                if !conclusion.free_vars().iter().all(|v| sigma.contains_key(v)) {
                    return Err(TypeError::NotInferable {
                        path: path.clone(),
                        what: format!("the conclusion of `{name}`"),
                    });
                }
                let prem = done.into_iter().map(Option::unwrap).collect();
                finish(apply_subst(conclusion, &sigma), prem)
            }
            PostShape::BotElim => {
                let Some(g) = goal_atom else {
                    return Err(TypeError::NotInferable {
                        path: path.clone(),
                        what: format!("the conclusion of `{name}`"),
                    });
                };
                let p = self.chk(ctx, &args[0], &Formula::Atom(Atom::bot()), &arg_path(0))?;
                finish(g.clone(), vec![p])
            }
            PostShape::Contradiction => {
                let (p0, p1) = match inf_arg(0) {
                    Ok(d0) => {
                        let r = atom_of(&d0, 0)?;
                        let d1 =
                            self.chk(ctx, &args[1], &Formula::Atom(r.negated()), &arg_path(1))?;
                        (d0, d1)
                    }
                    Err(e) if e.is_not_inferable() => {
                        let d1 = inf_arg(1)?;
                        let nr = atom_of(&d1, 1)?;
                        let d0 =
                            self.chk(ctx, &args[0], &Formula::Atom(nr.negated()), &arg_path(0))?;
                        (d0, d1)
                    }
                    Err(e) => return Err(e),
                };
                finish(Atom::bot(), vec![p0, p1])
            }
            PostShape::EqSubst => {
                let de = inf_arg(1)?;
                let e = atom_of(&de, 1)?;
                if e.rel.as_str() != crate::lang::EQ || e.args.len() != 2 {
                    return Err(invalid(format!("second premise `{e}` is not an equation")));
                }
                let (t1, t2) = (&e.args[0], &e.args[1]);
                match inf_arg(0) {
                    Ok(d0) => {
                        let before = atom_of(&d0, 0)?;
                        let after = match goal_atom {
                            Some(g) => {
                                if !eq_subst_related(&before, t1, t2, g) {
                                    return Err(invalid(format!(
                                        "`{g}` is not `{before}` rewritten by `{e}`"
                                    )));
                                }
                                g.clone()
                            }
                            None => eq_subst_full(&before, t1, t2),
                        };
                        finish(after, vec![d0, de])
                    }
                    Err(err) if err.is_not_inferable() => {
                        let Some(g) = goal_atom else {
                            return Err(err);
                        };
                        let mut first = None;
                        for cand in eq_subst_premise_candidates(g, t1, t2) {
                            let want = Formula::Atom(cand);
                            match self.chk(ctx, &args[0], &want, &arg_path(0)) {
                                Ok(d0) => return finish(g.clone(), vec![d0, de]),
                                Err(e) => {
                                    first.get_or_insert(e);
                                }
                            }
                        }
                        Err(first.unwrap_or(err))
                    }
                    Err(e) => Err(e),
                }
            }
        }
    }
}

/// The atom `P` is bottom.
pub fn is_bottom(f: &Formula) -> bool {
    f.as_atom().is_some_and(is_bot)
}
