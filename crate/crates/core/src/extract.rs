//! Witness extraction from proofs of `∃β P` with `P` atomic.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::lang::{ArithTerm, Atom, Formula, Ident, LangError};
use crate::reduce::{Normalization, ReduceError, Reducer, Strategy};
use crate::term::{CitationKind, Pred, System, Term};
use crate::typing::{Checker, Context, Decl, Derivation, Signature, TypeError};

#[derive(Debug, Clone)]
pub struct Extraction {
    pub witness: u64,
    /// Proof of the instance `P[n/β]`.
    pub residual: Term,
    pub normal_form: Term,
    pub steps: usize,
    pub derivation: Derivation,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractError {
    #[error("goal `{0}` is not of the form ∃β P with P atomic")]
    NotSigma01(Formula),
    #[error("term is not quasi-closed")]
    NotQuasiClosed,
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
    #[error("no normal form within {0} steps")]
    BudgetExhausted(usize),
    #[error("normal form `{0}` does not end with an existential introduction")]
    ShapeViolation(Term),
    #[error("witness {witness} fails: `{instance}` is false")]
    WitnessRefuted { witness: u64, instance: Atom },
    #[error(transparent)]
    Lang(#[from] LangError),
}

/// Unlabeled `Hyp` citations outside the left branch of every unlabeled
/// EM node.
fn free_unlabeled_hyps(t: &Term, out: &mut Vec<Pred>) {
    match t {
        Term::Hyp(c) if c.label.is_none() => {
            if !out.iter().any(|p| p.alpha_eq(&c.pred)) {
                out.push(c.pred.clone());
            }
        }
        Term::Em {
            label: None, right, ..
        } => free_unlabeled_hyps(right, out),
        _ => {
            for c in t.children() {
                free_unlabeled_hyps(c, out);
            }
        }
    }
}

/// One universal hypothesis `a : ∀α P` per label cited free by `Hyp`, and
/// one per predicate of a free unlabeled `Hyp`.
pub fn hyp_context(t: &Term) -> Result<Context, ExtractError> {
    if !t.is_quasi_closed() {
        return Err(ExtractError::NotQuasiClosed);
    }
    let mut preds = BTreeMap::new();
    for (a, _) in t.free_vars().hyps {
        let p = t.citation_positions(CitationKind::Hyp, Some(&a));
        if let Some(Term::Hyp(c)) = p.first().and_then(|q| t.subterm(q)) {
            preds.insert(a, c.pred.clone());
        }
    }
    let mut unlabeled = Vec::new();
    free_unlabeled_hyps(t, &mut unlabeled);
    for pred in unlabeled {
        let name = Ident::new("h").fresh(|c| preds.contains_key(c));
        preds.insert(name, pred);
    }
    let decls = preds
        .into_iter()
        .map(|(name, pred)| Decl::Univ { name, pred })
        .collect();
    Ok(Context::from_decls(decls)?)
}

/// Existential pairs reachable by descending EM branches, left first.
fn pairs(t: &Term, out: &mut Vec<(ArithTerm, Term)>) {
    match t {
        Term::WPair { witness, body, .. } => out.push((witness.clone(), (**body).clone())),
        Term::Em { left, right, .. } => {
            pairs(left, out);
            pairs(right, out);
        }
        _ => {}
    }
}

/// Type-checks `t` against `goal`, normalizes it under the EM₁ relation with
/// the canonical strategy and reads the witness off the normal form.
pub fn extract_witness(
    sig: &Signature,
    t: &Term,
    goal: &Formula,
    step_budget: usize,
) -> Result<Extraction, ExtractError> {
    let Formula::Ex(beta, body) = goal else {
        return Err(ExtractError::NotSigma01(goal.clone()));
    };
    let Some(p) = body.as_atom() else {
        return Err(ExtractError::NotSigma01(goal.clone()));
    };
    let ctx = hyp_context(t)?;
    let derivation = Checker::new(sig, System::Em1).check(&ctx, t, goal)?;
    let reducer = Reducer::new(sig.registry.clone(), System::Em1);
    let (normal_form, steps) = match reducer.normalize(t, Strategy::Canonical, step_budget)? {
        Normalization::NormalForm { term, trace } => (term, trace.len()),
        Normalization::BudgetExhausted { .. } => {
            return Err(ExtractError::BudgetExhausted(step_budget))
        }
    };
    let mut found = Vec::new();
    pairs(&normal_form, &mut found);
    let mut refuted = None;
    for (witness, residual) in found {
        let Some(n) = witness.as_numeral() else {
            continue;
        };
        let instance = p.subst(beta, &witness);
        if sig.registry.eval_atom(&instance)? {
            return Ok(Extraction {
                witness: n,
                residual,
                normal_form,
                steps,
                derivation,
            });
        }
        refuted.get_or_insert(ExtractError::WitnessRefuted {
            witness: n,
            instance,
        });
    }
    Err(refuted.unwrap_or(ExtractError::ShapeViolation(normal_form)))
}
