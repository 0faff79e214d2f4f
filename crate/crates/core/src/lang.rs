//! The first-order language: arithmetic terms over `0` and `S`, atomic
//! formulas built from primitive-recursive relation symbols, and the
//! connectives `and`, `or`, `->`, `all`, `ex`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// A variable or symbol name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ident(Arc<str>);

impl Ident {
    pub fn new(name: &str) -> Self {
        Ident(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The first of `name'`, `name''`, ... that `taken` rejects.
    pub fn fresh(&self, mut taken: impl FnMut(&Ident) -> bool) -> Ident {
        let mut candidate = format!("{}'", self.0);
        loop {
            let id = Ident::new(&candidate);
            if !taken(&id) {
                return id;
            }
            candidate.push('\'');
        }
    }
}

impl From<&str> for Ident {
    fn from(s: &str) -> Self {
        Ident::new(s)
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("unknown relation symbol `{0}`")]
    UnknownSymbol(Ident),
    #[error("relation `{symbol}` expects {expected} arguments, found {found}")]
    ArityMismatch {
        symbol: Ident,
        expected: usize,
        found: usize,
    },
    #[error("argument {index} of `{symbol}` is not a numeral")]
    NonNumeral { symbol: Ident, index: usize },
    #[error("relation symbol `{0}` is already registered")]
    DuplicateSymbol(Ident),
    #[error("`{0}` is reserved for generated negation partners")]
    ReservedName(Ident),
}

/// Terms of the arithmetic language. Closed terms are exactly numerals.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArithTerm {
    Var(Ident),
    Zero,
    Succ(Box<ArithTerm>),
}

impl ArithTerm {
    pub fn var(name: &str) -> Self {
        ArithTerm::Var(Ident::new(name))
    }

    pub fn succ(t: ArithTerm) -> Self {
        ArithTerm::Succ(Box::new(t))
    }

    pub fn numeral(n: u64) -> Self {
        let mut t = ArithTerm::Zero;
        for _ in 0..n {
            t = ArithTerm::succ(t);
        }
        t
    }

    /// The value of a numeral, `None` for terms containing a variable.
    pub fn as_numeral(&self) -> Option<u64> {
        let mut n = 0u64;
        let mut t = self;
        loop {
            match t {
                ArithTerm::Zero => return Some(n),
                ArithTerm::Succ(inner) => {
                    n += 1;
                    t = inner;
                }
                ArithTerm::Var(_) => return None,
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.as_numeral().is_some()
    }

    /// The variable at the bottom of the successor chain, if any.
    pub fn base_var(&self) -> Option<&Ident> {
        let mut t = self;
        loop {
            match t {
                ArithTerm::Zero => return None,
                ArithTerm::Succ(inner) => t = inner,
                ArithTerm::Var(v) => return Some(v),
            }
        }
    }

    pub fn mentions(&self, v: &Ident) -> bool {
        self.base_var() == Some(v)
    }

    pub fn free_vars_into(&self, out: &mut BTreeSet<Ident>) {
        if let Some(v) = self.base_var() {
            out.insert(v.clone());
        }
    }

    pub fn subst(&self, v: &Ident, m: &ArithTerm) -> ArithTerm {
        match self {
            ArithTerm::Var(w) if w == v => m.clone(),
            ArithTerm::Var(_) | ArithTerm::Zero => self.clone(),
            ArithTerm::Succ(inner) => ArithTerm::succ(inner.subst(v, m)),
        }
    }

    pub(crate) fn alpha_eq_in(&self, other: &ArithTerm, env: &Renaming) -> bool {
        match (self, other) {
            (ArithTerm::Zero, ArithTerm::Zero) => true,
            (ArithTerm::Succ(a), ArithTerm::Succ(b)) => a.alpha_eq_in(b, env),
            (ArithTerm::Var(a), ArithTerm::Var(b)) => env.same(a, b),
            _ => false,
        }
    }
}

impl fmt::Display for ArithTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = self.as_numeral() {
            return write!(f, "{n}");
        }
        match self {
            ArithTerm::Var(v) => write!(f, "{v}"),
            ArithTerm::Succ(inner) => write!(f, "(S {inner})"),
            ArithTerm::Zero => unreachable!(),
        }
    }
}

impl fmt::Debug for ArithTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Pairs of corresponding bound names, innermost last.
#[derive(Debug, Default, Clone)]
pub(crate) struct Renaming {
    pairs: Vec<(Ident, Ident)>,
}

impl Renaming {
    pub(crate) fn same(&self, a: &Ident, b: &Ident) -> bool {
        for (l, r) in self.pairs.iter().rev() {
            if l == a || r == b {
                return l == a && r == b;
            }
        }
        a == b
    }

    pub(crate) fn push(&mut self, a: &Ident, b: &Ident) {
        self.pairs.push((a.clone(), b.clone()));
    }

    pub(crate) fn pop(&mut self) {
        self.pairs.pop();
    }
}

/// Name of the negation partner of a relation symbol.
pub fn negated_name(name: &Ident) -> Ident {
    match name.as_str().strip_prefix(NEGATION_PREFIX) {
        Some(base) => Ident::new(base),
        None => Ident::new(&format!("{NEGATION_PREFIX}{name}")),
    }
}

pub const NEGATION_PREFIX: &str = "not_";

/// An atomic formula `P(t1, ..., tn)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub rel: Ident,
    pub args: Vec<ArithTerm>,
}

impl Atom {
    pub fn new(rel: &str, args: Vec<ArithTerm>) -> Self {
        Atom {
            rel: Ident::new(rel),
            args,
        }
    }

    pub fn bot() -> Self {
        Atom::new(BOT, vec![])
    }

    /// The atom over the boolean complement of this relation.
    pub fn negated(&self) -> Atom {
        Atom {
            rel: negated_name(&self.rel),
            args: self.args.clone(),
        }
    }

    pub fn is_closed(&self) -> bool {
        self.args.iter().all(ArithTerm::is_closed)
    }

    pub fn subst(&self, v: &Ident, m: &ArithTerm) -> Atom {
        Atom {
            rel: self.rel.clone(),
            args: self.args.iter().map(|a| a.subst(v, m)).collect(),
        }
    }

    pub fn free_vars_into(&self, out: &mut BTreeSet<Ident>) {
        for a in &self.args {
            a.free_vars_into(out);
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }

    pub fn mentions(&self, v: &Ident) -> bool {
        self.args.iter().any(|a| a.mentions(v))
    }

    pub(crate) fn alpha_eq_in(&self, other: &Atom, env: &Renaming) -> bool {
        self.rel == other.rel
            && self.args.len() == other.args.len()
            && self
                .args
                .iter()
                .zip(&other.args)
                .all(|(a, b)| a.alpha_eq_in(b, env))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.rel)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(Atom),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Imp(Box<Formula>, Box<Formula>),
    All(Ident, Box<Formula>),
    Ex(Ident, Box<Formula>),
}

impl Formula {
    pub fn atom(rel: &str, args: Vec<ArithTerm>) -> Self {
        Formula::Atom(Atom::new(rel, args))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn imp(a: Formula, b: Formula) -> Self {
        Formula::Imp(Box::new(a), Box::new(b))
    }

    pub fn all(v: &str, body: Formula) -> Self {
        Formula::All(Ident::new(v), Box::new(body))
    }

    pub fn ex(v: &str, body: Formula) -> Self {
        Formula::Ex(Ident::new(v), Box::new(body))
    }

    pub fn as_atom(&self) -> Option<&Atom> {
        match self {
            Formula::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn free_vars_into(&self, out: &mut BTreeSet<Ident>) {
        match self {
            Formula::Atom(a) => a.free_vars_into(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.free_vars_into(out);
                b.free_vars_into(out);
            }
            Formula::All(v, body) | Formula::Ex(v, body) => {
                let mut inner = BTreeSet::new();
                body.free_vars_into(&mut inner);
                inner.remove(v);
                out.extend(inner);
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }

    pub fn is_free(&self, v: &Ident) -> bool {
        match self {
            Formula::Atom(a) => a.mentions(v),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.is_free(v) || b.is_free(v)
            }
            Formula::All(w, body) | Formula::Ex(w, body) => w != v && body.is_free(v),
        }
    }

    /// Capture-avoiding substitution of `m` for the free occurrences of `v`.
    pub fn subst(&self, v: &Ident, m: &ArithTerm) -> Formula {
        match self {
            Formula::Atom(a) => Formula::Atom(a.subst(v, m)),
            Formula::And(a, b) => Formula::and(a.subst(v, m), b.subst(v, m)),
            Formula::Or(a, b) => Formula::or(a.subst(v, m), b.subst(v, m)),
            Formula::Imp(a, b) => Formula::imp(a.subst(v, m), b.subst(v, m)),
            Formula::All(w, body) | Formula::Ex(w, body) => {
                let (w, body) = if w == v || !body.is_free(v) {
                    (w.clone(), (**body).clone())
                } else if m.mentions(w) {
                    let fresh = w.fresh(|c| m.mentions(c) || body.is_free(c) || c == v);
                    let renamed = body.subst(w, &ArithTerm::Var(fresh.clone()));
                    (fresh, renamed.subst(v, m))
                } else {
                    (w.clone(), body.subst(v, m))
                };
                match self {
                    Formula::All(..) => Formula::All(w, Box::new(body)),
                    _ => Formula::Ex(w, Box::new(body)),
                }
            }
        }
    }

    pub fn alpha_eq(&self, other: &Formula) -> bool {
        self.alpha_eq_in(other, &mut Renaming::default())
    }

    pub(crate) fn alpha_eq_in(&self, other: &Formula, env: &mut Renaming) -> bool {
        match (self, other) {
            (Formula::Atom(a), Formula::Atom(b)) => a.alpha_eq_in(b, env),
            (Formula::And(a1, b1), Formula::And(a2, b2))
            | (Formula::Or(a1, b1), Formula::Or(a2, b2))
            | (Formula::Imp(a1, b1), Formula::Imp(a2, b2)) => {
                a1.alpha_eq_in(a2, env) && b1.alpha_eq_in(b2, env)
            }
            (Formula::All(v1, f1), Formula::All(v2, f2))
            | (Formula::Ex(v1, f1), Formula::Ex(v2, f2)) => {
                env.push(v1, v2);
                let eq = f1.alpha_eq_in(f2, env);
                env.pop();
                eq
            }
            _ => false,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::And(a, b) => write!(f, "(and {a} {b})"),
            Formula::Or(a, b) => write!(f, "(or {a} {b})"),
            Formula::Imp(a, b) => write!(f, "(-> {a} {b})"),
            Formula::All(v, body) => write!(f, "(all {v} {body})"),
            Formula::Ex(v, body) => write!(f, "(ex {v} {body})"),
        }
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub const EQ: &str = "eq";
pub const BOT: &str = "bot";
pub const TOP: &str = "top";
pub const ADD: &str = "add";
pub const MULT: &str = "mult";

pub type Evaluator = Arc<dyn Fn(&[u64]) -> bool + Send + Sync>;

/// A decidable relation on numerals together with the name of its complement.
#[derive(Clone)]
pub struct RelationSymbol {
    name: Ident,
    arity: usize,
    eval: Evaluator,
    negation: Ident,
}

impl RelationSymbol {
    pub fn name(&self) -> &Ident {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn negation(&self) -> &Ident {
        &self.negation
    }

    pub fn eval(&self, args: &[u64]) -> Result<bool, LangError> {
        if args.len() != self.arity {
            return Err(LangError::ArityMismatch {
                symbol: self.name.clone(),
                expected: self.arity,
                found: args.len(),
            });
        }
        Ok((self.eval)(args))
    }
}

impl fmt::Debug for RelationSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RelationSymbol")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("negation", &self.negation)
            .finish()
    }
}

/// The set of relation symbols in scope. Every registered symbol comes
/// with a generated `not_`-prefixed partner evaluating to its complement.
#[derive(Clone, Debug, Default)]
pub struct Registry {
    symbols: BTreeMap<Ident, RelationSymbol>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry::default()
    }

    /// `eq`, `bot`, `top`, and the graphs of addition and multiplication.
    pub fn standard() -> Self {
        let mut r = Registry::empty();
        r.register(EQ, 2, |a| a[0] == a[1]).unwrap();
        r.register(BOT, 0, |_| false).unwrap();
        r.register(TOP, 0, |_| true).unwrap();
        r.register(ADD, 3, |a| a[0].checked_add(a[1]) == Some(a[2]))
            .unwrap();
        r.register(MULT, 3, |a| a[0].checked_mul(a[1]) == Some(a[2]))
            .unwrap();
        r
    }

    /// Registers a total relation on numerals and its negation partner.
    pub fn register<F>(&mut self, name: &str, arity: usize, eval: F) -> Result<(), LangError>
    where
        F: Fn(&[u64]) -> bool + Send + Sync + 'static,
    {
        let name = Ident::new(name);
        if name.as_str().starts_with(NEGATION_PREFIX) {
            return Err(LangError::ReservedName(name));
        }
        let negation = negated_name(&name);
        if self.symbols.contains_key(&name) || self.symbols.contains_key(&negation) {
            return Err(LangError::DuplicateSymbol(name));
        }
        let eval: Evaluator = Arc::new(eval);
        let complement = {
            let eval = eval.clone();
            Arc::new(move |a: &[u64]| !eval(a)) as Evaluator
        };
        self.symbols.insert(
            name.clone(),
            RelationSymbol {
                name: name.clone(),
                arity,
                eval,
                negation: negation.clone(),
            },
        );
        self.symbols.insert(
            negation.clone(),
            RelationSymbol {
                name: negation,
                arity,
                eval: complement,
                negation: name,
            },
        );
        Ok(())
    }

    pub fn symbol(&self, name: &Ident) -> Result<&RelationSymbol, LangError> {
        self.symbols
            .get(name)
            .ok_or_else(|| LangError::UnknownSymbol(name.clone()))
    }

    pub fn symbols(&self) -> impl Iterator<Item = &RelationSymbol> {
        self.symbols.values()
    }

    pub fn negation_of(&self, name: &Ident) -> Result<&RelationSymbol, LangError> {
        let sym = self.symbol(name)?;
        self.symbol(&sym.negation)
    }

    /// Evaluates `p(args)`; every argument must be a numeral.
    pub fn eval_atomic(&self, p: &Ident, args: &[ArithTerm]) -> Result<bool, LangError> {
        let sym = self.symbol(p)?;
        if args.len() != sym.arity {
            return Err(LangError::ArityMismatch {
                symbol: p.clone(),
                expected: sym.arity,
                found: args.len(),
            });
        }
        let values = args
            .iter()
            .enumerate()
            .map(|(index, a)| {
                a.as_numeral().ok_or(LangError::NonNumeral {
                    symbol: p.clone(),
                    index,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        sym.eval(&values)
    }

    pub fn eval_atom(&self, atom: &Atom) -> Result<bool, LangError> {
        self.eval_atomic(&atom.rel, &atom.args)
    }

    pub fn check_atom(&self, atom: &Atom) -> Result<(), LangError> {
        let sym = self.symbol(&atom.rel)?;
        if sym.arity != atom.args.len() {
            return Err(LangError::ArityMismatch {
                symbol: atom.rel.clone(),
                expected: sym.arity,
                found: atom.args.len(),
            });
        }
        Ok(())
    }

    /// Every atom names a known symbol at its arity.
    pub fn check_formula(&self, f: &Formula) -> Result<(), LangError> {
        match f {
            Formula::Atom(a) => self.check_atom(a),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                self.check_formula(a)?;
                self.check_formula(b)
            }
            Formula::All(_, body) | Formula::Ex(_, body) => self.check_formula(body),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(k: u64) -> ArithTerm {
        ArithTerm::numeral(k)
    }

    #[test]
    fn eval_standard_relations() {
        let r = Registry::standard();
        assert!(r.eval_atomic(&EQ.into(), &[n(0), n(0)]).unwrap());
        assert!(!r.eval_atomic(&EQ.into(), &[n(1), n(0)]).unwrap());
        assert!(r.eval_atomic(&ADD.into(), &[n(1), n(1), n(2)]).unwrap());
        assert!(!r.eval_atomic(&BOT.into(), &[]).unwrap());
        assert!(r.eval_atomic(&TOP.into(), &[]).unwrap());
        assert!(r.eval_atomic(&MULT.into(), &[n(2), n(3), n(6)]).unwrap());
    }

    /// Closes the defining rules `add(t, 0, t)` and
    /// `add(t1, t2, t3) / add(t1, S t2, S t3)` under numerals up to a bound
    /// and compares the generated facts with the evaluator.
    #[test]
    fn add_agrees_with_its_defining_rules() {
        let bound = 6u64;
        let mut facts = BTreeSet::new();
        for t in 0..bound {
            facts.insert((t, 0, t));
        }
        loop {
            let next: Vec<_> = facts
                .iter()
                .map(|&(a, b, c)| (a, b + 1, c + 1))
                .filter(|&(_, b, c)| b < bound && c < 2 * bound)
                .filter(|f| !facts.contains(f))
                .collect();
            if next.is_empty() {
                break;
            }
            facts.extend(next);
        }
        assert!(facts.contains(&(1, 1, 2)));
        let r = Registry::standard();
        for a in 0..bound {
            for b in 0..bound {
                for c in 0..2 * bound {
                    let derived = facts.contains(&(a, b, c));
                    let evaluated = r.eval_atomic(&ADD.into(), &[n(a), n(b), n(c)]).unwrap();
                    assert_eq!(derived, evaluated, "add({a},{b},{c})");
                }
            }
        }
    }

    #[test]
    fn eval_errors() {
        let r = Registry::standard();
        assert!(matches!(
            r.eval_atomic(&EQ.into(), &[n(0)]),
            Err(LangError::ArityMismatch { .. })
        ));
        assert!(matches!(
            r.eval_atomic(&EQ.into(), &[ArithTerm::var("x"), n(0)]),
            Err(LangError::NonNumeral { index: 0, .. })
        ));
        assert!(matches!(
            r.eval_atomic(&"lt".into(), &[]),
            Err(LangError::UnknownSymbol(_))
        ));
    }

    #[test]
    fn negation_partners() {
        let r = Registry::standard();
        let not_eq = r.negation_of(&EQ.into()).unwrap();
        assert_eq!(not_eq.name().as_str(), "not_eq");
        assert!(not_eq.eval(&[0, 1]).unwrap());
        let back = r.negation_of(not_eq.name()).unwrap();
        assert!(back.eval(&[0, 0]).unwrap());
        let not_bot = r.negation_of(&BOT.into()).unwrap();
        assert!(not_bot.eval(&[]).unwrap());
        assert!(matches!(
            r.negation_of(&"nope".into()),
            Err(LangError::UnknownSymbol(_))
        ));
    }

    #[test]
    fn custom_symbol() {
        let mut r = Registry::standard();
        r.register("lt", 2, |a| a[0] < a[1]).unwrap();
        assert!(r.eval_atomic(&"lt".into(), &[n(1), n(2)]).unwrap());
        assert!(r.eval_atomic(&"not_lt".into(), &[n(2), n(2)]).unwrap());
        assert!(matches!(
            r.register("lt", 2, |_| true),
            Err(LangError::DuplicateSymbol(_))
        ));
        assert!(matches!(
            r.register("not_thing", 1, |_| true),
            Err(LangError::ReservedName(_))
        ));
    }

    #[test]
    fn formula_substitution() {
        let a = Ident::new("a");
        let f = Formula::atom(EQ, vec![ArithTerm::var("a"), n(0)]);
        assert_eq!(f.subst(&a, &n(1)), Formula::atom(EQ, vec![n(1), n(0)]));

        let bound = Formula::all(
            "a",
            Formula::atom(EQ, vec![ArithTerm::var("a"), ArithTerm::var("b")]),
        );
        assert_eq!(bound.subst(&a, &n(0)), bound);

        let capture = Formula::ex(
            "b",
            Formula::atom(EQ, vec![ArithTerm::var("a"), ArithTerm::var("b")]),
        );
        let got = capture.subst(&a, &ArithTerm::var("b"));
        let expected = Formula::ex(
            "b'",
            Formula::atom(EQ, vec![ArithTerm::var("b"), ArithTerm::var("b'")]),
        );
        assert_eq!(got, expected);
    }

    #[test]
    fn alpha_equivalence() {
        let f = Formula::all(
            "x",
            Formula::atom(EQ, vec![ArithTerm::var("x"), ArithTerm::var("y")]),
        );
        let g = Formula::all(
            "z",
            Formula::atom(EQ, vec![ArithTerm::var("z"), ArithTerm::var("y")]),
        );
        let h = Formula::all(
            "y",
            Formula::atom(EQ, vec![ArithTerm::var("y"), ArithTerm::var("y")]),
        );
        assert!(f.alpha_eq(&g));
        assert!(!f.alpha_eq(&h));
    }

    #[test]
    fn numerals() {
        assert_eq!(n(3).as_numeral(), Some(3));
        assert_eq!(ArithTerm::succ(ArithTerm::var("x")).as_numeral(), None);
        assert_eq!(n(2).to_string(), "2");
        assert_eq!(ArithTerm::succ(ArithTerm::var("x")).to_string(), "(S x)");
    }
}
