//! One-step reduction for both calculi, normalization, and bounded
//! exploration of reduction trees.
//!
//! Redexes are listed in canonical order: position (preorder, so the
//! leftmost-outermost redex comes first), then rule, then parameter.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::lang::{ArithTerm, Ident, Registry};
use crate::term::{Path, Side, System, Term, WfError};

/// Default truncation of the infinitary witness-guessing rule.
pub const DEFAULT_WITNESS_BOUND: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleId {
    Beta,
    BetaArith,
    Proj,
    CaseInj,
    DestPair,
    RecZero,
    RecSucc,
    PermApp,
    PermAApp,
    PermProj,
    PermCase,
    PermDest,
    HypCheck,
    EmDrop,
    EmRaise,
    WitGuess,
    ChooseLeft,
    ChooseRight,
}

const HA_RULES: [RuleId; 7] = [
    RuleId::Beta,
    RuleId::BetaArith,
    RuleId::Proj,
    RuleId::CaseInj,
    RuleId::DestPair,
    RuleId::RecZero,
    RuleId::RecSucc,
];

const PERMUTATIONS: [RuleId; 5] = [
    RuleId::PermApp,
    RuleId::PermAApp,
    RuleId::PermProj,
    RuleId::PermCase,
    RuleId::PermDest,
];

impl RuleId {
    pub const ALL: [RuleId; 18] = [
        RuleId::Beta,
        RuleId::BetaArith,
        RuleId::Proj,
        RuleId::CaseInj,
        RuleId::DestPair,
        RuleId::RecZero,
        RuleId::RecSucc,
        RuleId::PermApp,
        RuleId::PermAApp,
        RuleId::PermProj,
        RuleId::PermCase,
        RuleId::PermDest,
        RuleId::HypCheck,
        RuleId::EmDrop,
        RuleId::EmRaise,
        RuleId::WitGuess,
        RuleId::ChooseLeft,
        RuleId::ChooseRight,
    ];

    /// The rules of `system`, in canonical order.
    pub fn of_system(system: System) -> Vec<RuleId> {
        let own: &[RuleId] = match system {
            System::Em1 => &[RuleId::HypCheck, RuleId::EmDrop, RuleId::EmRaise],
            System::Nem => &[
                RuleId::HypCheck,
                RuleId::WitGuess,
                RuleId::ChooseLeft,
                RuleId::ChooseRight,
            ],
        };
        HA_RULES
            .iter()
            .chain(PERMUTATIONS.iter())
            .chain(own)
            .copied()
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            RuleId::Beta => "beta",
            RuleId::BetaArith => "beta-arith",
            RuleId::Proj => "proj",
            RuleId::CaseInj => "case-inj",
            RuleId::DestPair => "dest-pair",
            RuleId::RecZero => "rec-zero",
            RuleId::RecSucc => "rec-succ",
            RuleId::PermApp => "perm-app",
            RuleId::PermAApp => "perm-aapp",
            RuleId::PermProj => "perm-proj",
            RuleId::PermCase => "perm-case",
            RuleId::PermDest => "perm-dest",
            RuleId::HypCheck => "hyp-check",
            RuleId::EmDrop => "em-drop",
            RuleId::EmRaise => "em-raise",
            RuleId::WitGuess => "wit-guess",
            RuleId::ChooseLeft => "choose-left",
            RuleId::ChooseRight => "choose-right",
        }
    }

    pub fn is_parametric(self) -> bool {
        matches!(self, RuleId::EmRaise | RuleId::WitGuess)
    }

    pub fn is_permutation(self) -> bool {
        PERMUTATIONS.contains(&self)
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        RuleId::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown rule `{s}`"))
    }
}

/// A rule instance at a position. Field order gives the canonical order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Redex {
    pub path: Path,
    pub rule: RuleId,
    pub param: Option<u64>,
}

impl Redex {
    pub fn new(path: Path, rule: RuleId, param: Option<u64>) -> Self {
        Redex { path, rule, param }
    }

    pub fn at(self, prefix: &Path) -> Redex {
        Redex {
            path: prefix.join(&self.path),
            ..self
        }
    }
}

impl fmt::Display for Redex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}", self.rule, self.path)?;
        if let Some(n) = self.param {
            write!(f, " n={n}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReduceError {
    #[error(transparent)]
    WellFormedness(#[from] WfError),
    #[error("no subterm at position {0}")]
    InvalidPosition(Path),
    #[error("stale redex: {0} does not apply")]
    StaleRedex(Redex),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Always contract the first redex in canonical order.
    #[default]
    Canonical,
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "canonical" => Ok(Strategy::Canonical),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

/// The steps taken from `start`; each entry is a redex and its reduct.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub start: Term,
    pub steps: Vec<(Redex, Term)>,
}

impl Trace {
    pub fn last(&self) -> &Term {
        self.steps.last().map(|(_, t)| t).unwrap_or(&self.start)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Normalization {
    NormalForm { term: Term, trace: Trace },
    BudgetExhausted { trace: Trace },
}

impl Normalization {
    pub fn trace(&self) -> &Trace {
        match self {
            Normalization::NormalForm { trace, .. } | Normalization::BudgetExhausted { trace } => {
                trace
            }
        }
    }

    pub fn normal_form(&self) -> Option<&Term> {
        match self {
            Normalization::NormalForm { term, .. } => Some(term),
            Normalization::BudgetExhausted { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    Complete,
    BudgetCut,
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub term: Term,
    pub status: NodeStatus,
    /// Redexes of `term` with the index of the reduct's node.
    pub children: Vec<(Redex, usize)>,
}

/// A reduction tree stored breadth-first: node 0 is the root and every
/// child has a larger index than its parent.
#[derive(Debug, Clone)]
pub struct ReductionTree {
    pub nodes: Vec<TreeNode>,
}

impl ReductionTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.nodes.iter().all(|n| n.status == NodeStatus::Complete)
    }

    /// Height of every subtree; `None` when the subtree reaches a cut node.
    pub fn heights(&self) -> Vec<Option<u64>> {
        let mut h: Vec<Option<u64>> = vec![Some(0); self.nodes.len()];
        for i in (0..self.nodes.len()).rev() {
            let node = &self.nodes[i];
            h[i] = match node.status {
                NodeStatus::BudgetCut => None,
                NodeStatus::Complete => node
                    .children
                    .iter()
                    .try_fold(0, |acc, &(_, c)| h[c].map(|hc| acc.max(hc + 1))),
            };
        }
        h
    }

    /// The height of the root, or `None` ("cut") if any node was cut.
    pub fn height(&self) -> Option<u64> {
        self.heights()[0]
    }

    /// Terms at the nodes without children.
    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes
            .iter()
            .filter(|n| n.status == NodeStatus::Complete && n.children.is_empty())
    }

    /// Every edge `(parent, redex, child)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, &Redex, usize)> {
        self.nodes
            .iter()
            .enumerate()
            .flat_map(|(i, n)| n.children.iter().map(move |(r, c)| (i, r, *c)))
    }
}

/// The reduction relation of one calculus.
#[derive(Clone, Debug)]
pub struct Reducer {
    registry: Registry,
    system: System,
    witness_bound: u64,
}

impl Reducer {
    pub fn new(registry: Registry, system: System) -> Self {
        Reducer {
            registry,
            system,
            witness_bound: DEFAULT_WITNESS_BOUND,
        }
    }

    pub fn with_witness_bound(mut self, bound: u64) -> Self {
        self.witness_bound = bound;
        self
    }

    pub fn system(&self) -> System {
        self.system
    }

    pub fn witness_bound(&self) -> u64 {
        self.witness_bound
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// All redexes of `t` in canonical order.
    pub fn redexes(&self, t: &Term) -> Result<Vec<Redex>, ReduceError> {
        t.check_well_formed(self.system)?;
        Ok(self.redexes_unchecked(t))
    }

    fn redexes_unchecked(&self, t: &Term) -> Vec<Redex> {
        let mut out = Vec::new();
        self.collect(t, &mut Path::root(), &mut out);
        out.sort();
        out
    }

    fn collect(&self, t: &Term, here: &mut Path, out: &mut Vec<Redex>) {
        for (rule, param) in self.local(t) {
            out.push(Redex::new(here.clone(), rule, param));
        }
        for (i, c) in t.children().into_iter().enumerate() {
            here.0.push(i as u8);
            self.collect(c, here, out);
            here.0.pop();
        }
    }

    fn is_own_em(&self, t: &Term) -> bool {
        match t {
            Term::Em { label, .. } => label.is_some() == (self.system == System::Em1),
            _ => false,
        }
    }

    /// Does `P[n]` evaluate to `want` at a numeral `n`?
    fn instance_is(&self, t: &Term, arg: &ArithTerm, want: bool) -> bool {
        let Term::Hyp(c) = t else { return false };
        if arg.as_numeral().is_none() {
            return false;
        }
        let atom = c.pred.instantiate(arg);
        atom.is_closed() && self.registry.eval_atom(&atom) == Ok(want)
    }

    /// Rules applicable at the root of `t`, with parameters.
    fn local(&self, t: &Term) -> Vec<(RuleId, Option<u64>)> {
        let mut out = Vec::new();
        match t {
            Term::App(f, _) => match &**f {
                Term::Lam { .. } => out.push((RuleId::Beta, None)),
                e if self.is_own_em(e) => out.push((RuleId::PermApp, None)),
                _ => {}
            },
            Term::AApp(f, m) => match &**f {
                Term::ALam { .. } => out.push((RuleId::BetaArith, None)),
                e if self.is_own_em(e) => out.push((RuleId::PermAApp, None)),
                h @ Term::Hyp(c)
                    if c.label.is_some() == (self.system == System::Em1)
                        && self.instance_is(h, m, true) =>
                {
                    out.push((RuleId::HypCheck, None))
                }
                _ => {}
            },
            Term::Proj(_, u) => match &**u {
                Term::Pair(..) => out.push((RuleId::Proj, None)),
                e if self.is_own_em(e) => out.push((RuleId::PermProj, None)),
                _ => {}
            },
            Term::Case { scrutinee, .. } => match &**scrutinee {
                Term::Inj { .. } => out.push((RuleId::CaseInj, None)),
                e if self.is_own_em(e) => out.push((RuleId::PermCase, None)),
                _ => {}
            },
            Term::Dest { scrutinee, .. } => match &**scrutinee {
                Term::WPair { witness, .. } if witness.as_numeral().is_some() => {
                    out.push((RuleId::DestPair, None))
                }
                e if self.is_own_em(e) => out.push((RuleId::PermDest, None)),
                _ => {}
            },
            Term::Rec { arg, .. } => match arg.as_numeral() {
                Some(0) => out.push((RuleId::RecZero, None)),
                Some(_) => out.push((RuleId::RecSucc, None)),
                None => {}
            },
            Term::Em {
                label: Some(a),
                left,
                ..
            } if self.system == System::Em1 => {
                if !left.has_free_hyp(a) {
                    out.push((RuleId::EmDrop, None));
                }
                for n in self.raise_params(left, a) {
                    out.push((RuleId::EmRaise, Some(n)));
                }
            }
            Term::Em { label: None, .. } if self.system == System::Nem => {
                out.push((RuleId::ChooseLeft, None));
                out.push((RuleId::ChooseRight, None));
            }
            Term::Wit(c) if c.label.is_none() && self.system == System::Nem => {
                for n in 0..=self.witness_bound {
                    out.push((RuleId::WitGuess, Some(n)));
                }
            }
            _ => {}
        }
        out
    }

    /// Numerals `n` such that `Hyp{a} n` occurs in `u` with `a` free and a
    /// false closed instance.
    fn raise_params(&self, u: &Term, a: &Ident) -> BTreeSet<u64> {
        let mut out = BTreeSet::new();
        self.raise_params_into(u, a, &mut out);
        out
    }

    fn raise_params_into(&self, u: &Term, a: &Ident, out: &mut BTreeSet<u64>) {
        match u {
            Term::Em { label: Some(b), .. } if b == a => return,
            Term::AApp(f, m) => {
                if let Term::Hyp(c) = &**f {
                    if c.label.as_ref() == Some(a) && self.instance_is(f, m, false) {
                        out.insert(m.as_numeral().expect("checked numeral"));
                    }
                }
            }
            _ => {}
        }
        for c in u.children() {
            self.raise_params_into(c, a, out);
        }
    }

    /// Contracts `r` in `t`.
    pub fn apply_step(&self, t: &Term, r: &Redex) -> Result<Term, ReduceError> {
        let sub = t
            .subterm(&r.path)
            .ok_or_else(|| ReduceError::InvalidPosition(r.path.clone()))?;
        if !self.local(sub).contains(&(r.rule, r.param)) {
            return Err(ReduceError::StaleRedex(r.clone()));
        }
        t.replace_at(&r.path, |s| {
            Ok::<_, ReduceError>(contract(s, r.rule, r.param))
        })
        .ok_or_else(|| ReduceError::InvalidPosition(r.path.clone()))?
    }

    pub fn is_normal(&self, t: &Term) -> Result<bool, ReduceError> {
        Ok(self.redexes(t)?.is_empty())
    }

    /// Applies the strategy's redex until a normal form or `step_budget`
    /// steps have been taken.
    pub fn normalize(
        &self,
        t: &Term,
        strategy: Strategy,
        step_budget: usize,
    ) -> Result<Normalization, ReduceError> {
        t.check_well_formed(self.system)?;
        let mut trace = Trace {
            start: t.clone(),
            steps: Vec::new(),
        };
        let mut current = t.clone();
        loop {
            let redexes = self.redexes_unchecked(&current);
            let Some(r) = (match strategy {
                Strategy::Canonical => redexes.into_iter().next(),
            }) else {
                return Ok(Normalization::NormalForm {
                    term: current,
                    trace,
                });
            };
            if trace.steps.len() >= step_budget {
                return Ok(Normalization::BudgetExhausted { trace });
            }
            current = self.apply_step(&current, &r)?;
            trace.steps.push((r, current.clone()));
        }
    }

    /// Breadth-first exploration of every reduction from `t`, with at most
    /// `node_budget` nodes. A node whose children would exceed the budget
    /// is left unexpanded and marked cut.
    pub fn reduction_tree(
        &self,
        t: &Term,
        node_budget: usize,
    ) -> Result<ReductionTree, ReduceError> {
        t.check_well_formed(self.system)?;
        let budget = node_budget.max(1);
        let mut nodes = vec![TreeNode {
            term: t.clone(),
            status: NodeStatus::Complete,
            children: Vec::new(),
        }];
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let redexes = self.redexes_unchecked(&nodes[i].term);
            if nodes.len() + redexes.len() > budget {
                nodes[i].status = NodeStatus::BudgetCut;
                continue;
            }
            let mut children = Vec::with_capacity(redexes.len());
            for r in redexes {
                let reduct = self.apply_step(&nodes[i].term, &r)?;
                let j = nodes.len();
                nodes.push(TreeNode {
                    term: reduct,
                    status: NodeStatus::Complete,
                    children: Vec::new(),
                });
                children.push((r, j));
                queue.push_back(j);
            }
            nodes[i].children = children;
        }
        Ok(ReductionTree { nodes })
    }
}

/// Moves the label binder of `em` out of the way of a term being pushed
/// into its branches.
fn open_em(em: &Term, moved: &[&Term]) -> (Option<Ident>, Term, Term) {
    let Term::Em {
        label, left, right, ..
    } = em
    else {
        unreachable!("permutation of a non-EM head")
    };
    match label {
        Some(a) if moved.iter().any(|w| w.has_free_hyp(a)) => {
            let fresh = a.fresh(|c| {
                moved.iter().any(|w| w.has_free_hyp(c))
                    || left.has_free_hyp(c)
                    || right.has_free_hyp(c)
            });
            (
                Some(fresh.clone()),
                left.subst_label(a, &fresh),
                right.subst_label(a, &fresh),
            )
        }
        _ => (label.clone(), (**left).clone(), (**right).clone()),
    }
}

/// Pushes the elimination `wrap` into both branches of the EM node `em`.
fn permute(em: &Term, moved: &[&Term], wrap: impl Fn(Term) -> Term) -> Term {
    let Term::Em { pred, .. } = em else {
        unreachable!("permutation of a non-EM head")
    };
    let (label, left, right) = open_em(em, moved);
    Term::Em {
        label,
        pred: pred.clone(),
        left: Box::new(wrap(left)),
        right: Box::new(wrap(right)),
    }
}

/// The contractum of `rule` at the root of `t`; the side conditions have
/// already been checked.
fn contract(t: &Term, rule: RuleId, param: Option<u64>) -> Term {
    match (rule, t) {
        (RuleId::Beta, Term::App(f, a)) => match &**f {
            Term::Lam { var, body, .. } => body.subst_proof(var, a),
            _ => unreachable!(),
        },
        (RuleId::BetaArith, Term::AApp(f, m)) => match &**f {
            Term::ALam { var, body } => body.subst_arith(var, m),
            _ => unreachable!(),
        },
        (RuleId::Proj, Term::Proj(side, u)) => match &**u {
            Term::Pair(a, b) => (**side.pick(a, b)).clone(),
            _ => unreachable!(),
        },
        (
            RuleId::CaseInj,
            Term::Case {
                scrutinee,
                left_var,
                left,
                right_var,
                right,
            },
        ) => match &**scrutinee {
            Term::Inj { side, body, .. } => match side {
                Side::Left => left.subst_proof(left_var, body),
                Side::Right => right.subst_proof(right_var, body),
            },
            _ => unreachable!(),
        },
        (
            RuleId::DestPair,
            Term::Dest {
                scrutinee,
                avar,
                pvar,
                body,
            },
        ) => match &**scrutinee {
            Term::WPair {
                witness, body: u, ..
            } => body.subst_arith(avar, witness).subst_proof(pvar, u),
            _ => unreachable!(),
        },
        (RuleId::RecZero, Term::Rec { base, .. }) => (**base).clone(),
        (
            RuleId::RecSucc,
            Term::Rec {
                base,
                step,
                arg,
                motive,
            },
        ) => {
            let ArithTerm::Succ(n) = arg else {
                unreachable!()
            };
            Term::app(
                Term::aapp((**step).clone(), (**n).clone()),
                Term::Rec {
                    base: base.clone(),
                    step: step.clone(),
                    arg: (**n).clone(),
                    motive: motive.clone(),
                },
            )
        }
        (RuleId::PermApp, Term::App(em, w)) => permute(em, &[w], |b| Term::app(b, (**w).clone())),
        (RuleId::PermAApp, Term::AApp(em, m)) => permute(em, &[], |b| Term::aapp(b, m.clone())),
        (RuleId::PermProj, Term::Proj(side, em)) => permute(em, &[], |b| Term::proj(*side, b)),
        (
            RuleId::PermCase,
            Term::Case {
                scrutinee,
                left_var,
                left,
                right_var,
                right,
            },
        ) => permute(scrutinee, &[left, right], |b| Term::Case {
            scrutinee: Box::new(b),
            left_var: left_var.clone(),
            left: left.clone(),
            right_var: right_var.clone(),
            right: right.clone(),
        }),
        (
            RuleId::PermDest,
            Term::Dest {
                scrutinee,
                avar,
                pvar,
                body,
            },
        ) => permute(scrutinee, &[body], |b| Term::Dest {
            scrutinee: Box::new(b),
            avar: avar.clone(),
            pvar: pvar.clone(),
            body: body.clone(),
        }),
        (RuleId::HypCheck, _) => Term::True,
        (RuleId::EmDrop | RuleId::ChooseLeft, Term::Em { left, .. }) => (**left).clone(),
        (RuleId::ChooseRight, Term::Em { right, .. }) => (**right).clone(),
        (
            RuleId::EmRaise,
            Term::Em {
                label: Some(a),
                right,
                ..
            },
        ) => right.raise_subst(a, &ArithTerm::numeral(param.expect("exception parameter"))),
        (RuleId::WitGuess, Term::Wit(c)) => Term::wpair(
            ArithTerm::numeral(param.expect("witness parameter")),
            Term::True,
            Some(c.pred.counterexample()),
        ),
        (rule, t) => unreachable!("{rule} does not match {t}"),
    }
}
