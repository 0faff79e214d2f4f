//! A deliberately naive second reduction engine, used to cross-check the
//! production one and to regenerate golden numbers.
//!
//! Every rule schema is tried at every position of the flattened term. The
//! only shared code is the substitution machinery of `term`.

use std::collections::BTreeSet;

use crate::lang::{ArithTerm, Ident, Registry};
use crate::reduce::{Redex, RuleId};
use crate::term::{CitationKind, Path, Side, System, Term};

pub struct Oracle {
    registry: Registry,
    system: System,
    witness_bound: u64,
}

/// Summary of an exhaustive depth-first exploration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exploration {
    pub height: u64,
    pub nodes: usize,
    /// Normal forms at the leaves, in depth-first order.
    pub leaves: Vec<Term>,
}

fn all_positions(t: &Term) -> Vec<(Path, &Term)> {
    let mut out = vec![(Path::root(), t)];
    let mut i = 0;
    while i < out.len() {
        let (p, s) = out[i].clone();
        for (k, c) in s.children().into_iter().enumerate() {
            out.push((p.child(k as u8), c));
        }
        i += 1;
    }
    out
}

fn numeral(m: &ArithTerm) -> Option<u64> {
    let mut n = 0;
    let mut cur = m;
    loop {
        match cur {
            ArithTerm::Zero => return Some(n),
            ArithTerm::Succ(inner) => {
                n += 1;
                cur = inner;
            }
            ArithTerm::Var(_) => return None,
        }
    }
}

impl Oracle {
    pub fn new(registry: Registry, system: System, witness_bound: u64) -> Self {
        Oracle {
            registry,
            system,
            witness_bound,
        }
    }

    fn labeled(&self) -> bool {
        self.system == System::Em1
    }

    fn em_head(&self, t: &Term) -> bool {
        matches!(t, Term::Em { label, .. } if label.is_some() == self.labeled())
    }

    fn hyp_value(&self, f: &Term, m: &ArithTerm) -> Option<bool> {
        let Term::Hyp(c) = f else { return None };
        if c.label.is_some() != self.labeled() {
            return None;
        }
        numeral(m)?;
        let atom = c.pred.atom.subst(&c.pred.binder, m);
        if !atom.free_vars().is_empty() {
            return None;
        }
        self.registry.eval_atom(&atom).ok()
    }

    /// Parameters with which `rule` matches at the root of `t`; empty if it
    /// does not match.
    fn matches(&self, rule: RuleId, t: &Term) -> Vec<Option<u64>> {
        let yes = vec![None];
        let no = vec![];
        match rule {
            RuleId::Beta => match t {
                Term::App(f, _) if matches!(**f, Term::Lam { .. }) => yes,
                _ => no,
            },
            RuleId::BetaArith => match t {
                Term::AApp(f, _) if matches!(**f, Term::ALam { .. }) => yes,
                _ => no,
            },
            RuleId::Proj => match t {
                Term::Proj(_, u) if matches!(**u, Term::Pair(..)) => yes,
                _ => no,
            },
            RuleId::CaseInj => match t {
                Term::Case { scrutinee, .. } if matches!(**scrutinee, Term::Inj { .. }) => yes,
                _ => no,
            },
            RuleId::DestPair => match t {
                Term::Dest { scrutinee, .. } => match &**scrutinee {
                    Term::WPair { witness, .. } if numeral(witness).is_some() => yes,
                    _ => no,
                },
                _ => no,
            },
            RuleId::RecZero => match t {
                Term::Rec { arg, .. } if numeral(arg) == Some(0) => yes,
                _ => no,
            },
            RuleId::RecSucc => match t {
                Term::Rec { arg, .. } if numeral(arg).is_some_and(|n| n > 0) => yes,
                _ => no,
            },
            RuleId::PermApp => match t {
                Term::App(f, _) if self.em_head(f) => yes,
                _ => no,
            },
            RuleId::PermAApp => match t {
                Term::AApp(f, _) if self.em_head(f) => yes,
                _ => no,
            },
            RuleId::PermProj => match t {
                Term::Proj(_, u) if self.em_head(u) => yes,
                _ => no,
            },
            RuleId::PermCase => match t {
                Term::Case { scrutinee, .. } if self.em_head(scrutinee) => yes,
                _ => no,
            },
            RuleId::PermDest => match t {
                Term::Dest { scrutinee, .. } if self.em_head(scrutinee) => yes,
                _ => no,
            },
            RuleId::HypCheck => match t {
                Term::AApp(f, m) if self.hyp_value(f, m) == Some(true) => yes,
                _ => no,
            },
            RuleId::EmDrop => match t {
                Term::Em {
                    label: Some(a),
                    left,
                    ..
                } if self.labeled() && !left.free_vars().has_hyp(a) => yes,
                _ => no,
            },
            RuleId::EmRaise => match t {
                Term::Em {
                    label: Some(a),
                    left,
                    ..
                } if self.labeled() => self.raise_params(left, a).into_iter().map(Some).collect(),
                _ => no,
            },
            RuleId::WitGuess => match t {
                Term::Wit(c) if c.label.is_none() && !self.labeled() => {
                    (0..=self.witness_bound).map(Some).collect()
                }
                _ => no,
            },
            RuleId::ChooseLeft | RuleId::ChooseRight => match t {
                Term::Em { label: None, .. } if !self.labeled() => yes,
                _ => no,
            },
        }
    }

    /// Numerals applied to a free `Hyp{a}` in `u` with a false instance.
    /// Freeness is decided by scanning the path for a rebinding node.
    fn raise_params(&self, u: &Term, a: &Ident) -> BTreeSet<u64> {
        let mut out = BTreeSet::new();
        for (p, s) in all_positions(u) {
            let Term::AApp(f, m) = s else { continue };
            let Term::Hyp(c) = &**f else { continue };
            if c.label.as_ref() != Some(a) {
                continue;
            }
            let rebound = (0..p.0.len()).any(|k| {
                matches!(
                    u.subterm(&Path(p.0[..k].to_vec())),
                    Some(Term::Em { label: Some(b), .. }) if b == a
                )
            });
            if !rebound && self.hyp_value(f, m) == Some(false) {
                out.insert(numeral(m).unwrap());
            }
        }
        out
    }

    /// Every redex of `t`, sorted canonically.
    pub fn redexes(&self, t: &Term) -> Vec<Redex> {
        let mut set = BTreeSet::new();
        for (p, s) in all_positions(t) {
            for rule in RuleId::of_system(self.system) {
                for param in self.matches(rule, s) {
                    set.insert(Redex::new(p.clone(), rule, param));
                }
            }
        }
        set.into_iter().collect()
    }

    /// The reduct of `t` at `r`, or `None` if `r` does not match.
    pub fn contract(&self, t: &Term, r: &Redex) -> Option<Term> {
        let s = t.subterm(&r.path)?;
        if !self.matches(r.rule, s).contains(&r.param) {
            return None;
        }
        let new = self.contractum(s, r)?;
        t.replace_at(&r.path, |_| Ok::<_, ()>(new))?.ok()
    }

    fn contractum(&self, s: &Term, r: &Redex) -> Option<Term> {
        let b = |t: Term| Box::new(t);
        Some(match s {
            Term::App(f, a) => match (r.rule, &**f) {
                (RuleId::Beta, Term::Lam { var, body, .. }) => body.subst_proof(var, a),
                (RuleId::PermApp, em) => self.push_in(em, &[a], |u| Term::App(b(u), a.clone()))?,
                _ => return None,
            },
            Term::AApp(f, m) => match (r.rule, &**f) {
                (RuleId::BetaArith, Term::ALam { var, body }) => body.subst_arith(var, m),
                (RuleId::PermAApp, em) => self.push_in(em, &[], |u| Term::AApp(b(u), m.clone()))?,
                (RuleId::HypCheck, _) => Term::True,
                _ => return None,
            },
            Term::Proj(side, u) => match (r.rule, &**u) {
                (RuleId::Proj, Term::Pair(l, rr)) => match side {
                    Side::Left => (**l).clone(),
                    Side::Right => (**rr).clone(),
                },
                (RuleId::PermProj, em) => self.push_in(em, &[], |u| Term::Proj(*side, b(u)))?,
                _ => return None,
            },
            Term::Case {
                scrutinee,
                left_var,
                left,
                right_var,
                right,
            } => match (r.rule, &**scrutinee) {
                (
                    RuleId::CaseInj,
                    Term::Inj {
                        side: Side::Left,
                        body,
                        ..
                    },
                ) => left.subst_proof(left_var, body),
                (
                    RuleId::CaseInj,
                    Term::Inj {
                        side: Side::Right,
                        body,
                        ..
                    },
                ) => right.subst_proof(right_var, body),
                (RuleId::PermCase, em) => self.push_in(em, &[left, right], |u| Term::Case {
                    scrutinee: b(u),
                    left_var: left_var.clone(),
                    left: left.clone(),
                    right_var: right_var.clone(),
                    right: right.clone(),
                })?,
                _ => return None,
            },
            Term::Dest {
                scrutinee,
                avar,
                pvar,
                body,
            } => match (r.rule, &**scrutinee) {
                (
                    RuleId::DestPair,
                    Term::WPair {
                        witness, body: u, ..
                    },
                ) => body.subst_arith(avar, witness).subst_proof(pvar, u),
                (RuleId::PermDest, em) => self.push_in(em, &[body], |u| Term::Dest {
                    scrutinee: b(u),
                    avar: avar.clone(),
                    pvar: pvar.clone(),
                    body: body.clone(),
                })?,
                _ => return None,
            },
            Term::Rec {
                base,
                step,
                arg,
                motive,
            } => match r.rule {
                RuleId::RecZero => (**base).clone(),
                RuleId::RecSucc => {
                    let pred = ArithTerm::numeral(numeral(arg)? - 1);
                    Term::App(
                        b(Term::AApp(step.clone(), pred.clone())),
                        b(Term::Rec {
                            base: base.clone(),
                            step: step.clone(),
                            arg: pred,
                            motive: motive.clone(),
                        }),
                    )
                }
                _ => return None,
            },
            Term::Em {
                label, left, right, ..
            } => match r.rule {
                RuleId::EmDrop | RuleId::ChooseLeft => (**left).clone(),
                RuleId::ChooseRight => (**right).clone(),
                RuleId::EmRaise => {
                    let a = label.as_ref()?;
                    let n = ArithTerm::numeral(r.param?);
                    let mut out = (**right).clone();
                    // replace from the deepest position so earlier paths stay valid
                    let mut spots = right.citation_positions(CitationKind::Wit, Some(a));
                    spots.reverse();
                    for p in spots {
                        out = out
                            .replace_at(&p, |w| match w {
                                Term::Wit(c) => Ok::<_, ()>(Term::WPair {
                                    witness: n.clone(),
                                    body: b(Term::True),
                                    ann: Some(c.pred.counterexample()),
                                }),
                                _ => Err(()),
                            })?
                            .ok()?;
                    }
                    out
                }
                _ => return None,
            },
            Term::Wit(c) if r.rule == RuleId::WitGuess => Term::WPair {
                witness: ArithTerm::numeral(r.param?),
                body: b(Term::True),
                ann: Some(c.pred.counterexample()),
            },
            _ => return None,
        })
    }

    fn push_in(&self, em: &Term, moved: &[&Term], wrap: impl Fn(Term) -> Term) -> Option<Term> {
        let Term::Em {
            label,
            pred,
            left,
            right,
        } = em
        else {
            return None;
        };
        let clash = |c: &Ident| moved.iter().any(|w| w.free_vars().has_hyp(c));
        let (label, left, right) = match label {
            Some(a) if clash(a) => {
                let mut k = 1;
                let fresh = loop {
                    let cand = Ident::new(&format!("{a}{}", "'".repeat(k)));
                    if !clash(&cand)
                        && !left.free_vars().has_hyp(&cand)
                        && !right.free_vars().has_hyp(&cand)
                    {
                        break cand;
                    }
                    k += 1;
                };
                (
                    Some(fresh.clone()),
                    left.subst_label(a, &fresh),
                    right.subst_label(a, &fresh),
                )
            }
            _ => (label.clone(), (**left).clone(), (**right).clone()),
        };
        Some(Term::Em {
            label,
            pred: pred.clone(),
            left: Box::new(wrap(left)),
            right: Box::new(wrap(right)),
        })
    }

    /// Follows the first redex until a normal form; `None` past the budget.
    pub fn normalize(&self, t: &Term, step_budget: usize) -> Option<(Term, usize)> {
        let steps = self.trace(t, step_budget)?;
        let n = steps.len();
        Some((
            steps.last().map_or_else(|| t.clone(), |(_, u)| u.clone()),
            n,
        ))
    }

    /// The steps taken by `normalize`, each with its reduct.
    pub fn trace(&self, t: &Term, step_budget: usize) -> Option<Vec<(Redex, Term)>> {
        let mut cur = t.clone();
        let mut steps = Vec::new();
        loop {
            let Some(r) = self.redexes(&cur).into_iter().next() else {
                return Some(steps);
            };
            if steps.len() >= step_budget {
                return None;
            }
            cur = self.contract(&cur, &r)?;
            steps.push((r, cur.clone()));
        }
    }

    /// Explores the whole tree depth-first; `None` once more than
    /// `node_budget` nodes have been visited.
    pub fn explore(&self, t: &Term, node_budget: usize) -> Option<Exploration> {
        let mut visited = 0;
        let mut leaves = Vec::new();
        let height = self.dfs(t, node_budget, &mut visited, &mut leaves)?;
        Some(Exploration {
            height,
            nodes: visited,
            leaves,
        })
    }

    fn dfs(
        &self,
        t: &Term,
        budget: usize,
        visited: &mut usize,
        leaves: &mut Vec<Term>,
    ) -> Option<u64> {
        *visited += 1;
        if *visited > budget {
            return None;
        }
        let rs = self.redexes(t);
        if rs.is_empty() {
            leaves.push(t.clone());
            return Some(0);
        }
        let mut h = 0;
        for r in &rs {
            let u = self.contract(t, r)?;
            h = h.max(self.dfs(&u, budget, visited, leaves)? + 1);
        }
        Some(h)
    }
}
