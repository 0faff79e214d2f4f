//! Erasure of EM₁ terms into NEM terms, and the simulation of every EM₁
//! step by a nonempty path of NEM steps between the erasures.

use thiserror::Error;

use crate::lang::Registry;
use crate::reduce::{Redex, ReduceError, Reducer, RuleId};
use crate::term::{Citation, CitationKind, System, Term};

/// Strips every label. Explicit predicate annotations are kept and no node
/// moves, so positions in `t` are positions in the erasure.
pub fn erase(t: &Term) -> Term {
    let strip = |c: &Citation| Citation {
        label: None,
        pred: c.pred.clone(),
    };
    match t {
        Term::Hyp(c) => Term::Hyp(strip(c)),
        Term::Wit(c) => Term::Wit(strip(c)),
        Term::Em {
            pred, left, right, ..
        } => Term::Em {
            label: None,
            pred: pred.clone(),
            left: Box::new(erase(left)),
            right: Box::new(erase(right)),
        },
        _ => {
            let mut out = t.clone();
            out.map_children(erase);
            out
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TranslateError {
    #[error("invalid redex: {0}")]
    InvalidRedex(ReduceError),
    #[error("{0} is not an EM₁ rule")]
    NotEm1Rule(RuleId),
    #[error("replay failed at step {index}: {error}")]
    Replay { index: usize, error: ReduceError },
    #[error("path ends at `{found}`, expected `{expected}`")]
    EndpointMismatch { expected: Term, found: Term },
    #[error("empty simulation path")]
    Empty,
}

/// NEM steps leading from `source` to `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationPath {
    pub source: Term,
    pub steps: Vec<Redex>,
    pub target: Term,
}

impl SimulationPath {
    /// The witness bound needed to replay every step.
    pub fn witness_bound_needed(&self) -> u64 {
        self.steps.iter().filter_map(|r| r.param).max().unwrap_or(0)
    }

    /// Replays the steps from `source`, checking that each one is a redex
    /// of its intermediate term, and returns every intermediate term.
    pub fn replay(
        &self,
        registry: &Registry,
        witness_bound: u64,
    ) -> Result<Vec<Term>, TranslateError> {
        let nem = Reducer::new(registry.clone(), System::Nem)
            .with_witness_bound(witness_bound.max(self.witness_bound_needed()));
        let mut terms = vec![self.source.clone()];
        for (index, r) in self.steps.iter().enumerate() {
            let cur = terms.last().unwrap();
            let listed = nem
                .redexes(cur)
                .map_err(|error| TranslateError::Replay { index, error })?;
            if !listed.contains(r) {
                return Err(TranslateError::Replay {
                    index,
                    error: ReduceError::StaleRedex(r.clone()),
                });
            }
            let next = nem
                .apply_step(cur, r)
                .map_err(|error| TranslateError::Replay { index, error })?;
            terms.push(next);
        }
        Ok(terms)
    }

    /// Replays the path and checks that it is nonempty and ends at
    /// `target` and at `expected`, both up to α-equivalence.
    pub fn verify(
        &self,
        registry: &Registry,
        witness_bound: u64,
        expected: &Term,
    ) -> Result<(), TranslateError> {
        if self.steps.is_empty() {
            return Err(TranslateError::Empty);
        }
        let terms = self.replay(registry, witness_bound)?;
        let end = terms.last().unwrap();
        for want in [&self.target, expected] {
            if !end.alpha_eq(want) {
                return Err(TranslateError::EndpointMismatch {
                    expected: want.clone(),
                    found: end.clone(),
                });
            }
        }
        Ok(())
    }
}

/// The NEM path simulating the EM₁ step `r` of `v`, built from the shape
/// of the step rather than found by search. `em1` supplies the registry
/// used to validate `r`.
pub fn simulate_step(em1: &Reducer, v: &Term, r: &Redex) -> Result<SimulationPath, TranslateError> {
    let w = em1.apply_step(v, r).map_err(TranslateError::InvalidRedex)?;
    let same = |rule| Redex::new(r.path.clone(), rule, r.param);
    let steps = match r.rule {
        RuleId::EmDrop => vec![same(RuleId::ChooseLeft)],
        RuleId::EmRaise => {
            let Some(Term::Em {
                label: Some(a),
                right,
                ..
            }) = v.subterm(&r.path)
            else {
                return Err(TranslateError::InvalidRedex(ReduceError::StaleRedex(
                    r.clone(),
                )));
            };
            let mut steps = vec![Redex::new(r.path.clone(), RuleId::ChooseRight, None)];
            for q in right.citation_positions(CitationKind::Wit, Some(a)) {
                steps.push(Redex::new(r.path.join(&q), RuleId::WitGuess, r.param));
            }
            steps
        }
        RuleId::WitGuess | RuleId::ChooseLeft | RuleId::ChooseRight => {
            return Err(TranslateError::NotEm1Rule(r.rule))
        }
        _ => vec![same(r.rule)],
    };
    let source = erase(v);
    let nem = Reducer::new(em1.registry().clone(), System::Nem)
        .with_witness_bound(r.param.unwrap_or(0).max(em1.witness_bound()));
    let mut target = source.clone();
    for (index, s) in steps.iter().enumerate() {
        target = nem
            .apply_step(&target, s)
            .map_err(|error| TranslateError::Replay { index, error })?;
    }
    let path = SimulationPath {
        source,
        steps,
        target,
    };
    let expected = erase(&w);
    if !path.target.alpha_eq(&expected) {
        return Err(TranslateError::EndpointMismatch {
            expected,
            found: path.target,
        });
    }
    Ok(path)
}
