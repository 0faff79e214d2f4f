//! `.pf` judgment files: a header of declarations followed by `term : formula`.
//!
//! ```text
//! (system em1)                ; optional, otherwise inferred from the term
//! (var x (eq 0 0))            ; x : A
//! (hyp-var a (eq x 0) x)      ; a : ∀x eq(x,0)
//! (wit-var a (eq x 0) x)      ; a : ∃x ¬eq(x,0)
//! (rule sym ((eq a b)) (eq b a))
//! (app f x) : (eq 0 0)
//! ```

use std::fmt;

use haem_core::lang::{Atom, Formula};
use haem_core::post::{PostRule, PostShape};
use haem_core::syntax::{parse_atom, parse_formula, parse_term, read_sexps, ParseError, Pos, Sexp};
use haem_core::term::{Pred, System, Term};
use haem_core::typing::{Context, Decl, Signature, TypeError};

/// Values below this are tried when validating a user Post rule.
pub const RULE_TEST_BOUND: u64 = 6;

#[derive(Debug, Clone)]
pub struct Judgment {
    pub system: System,
    pub context: Context,
    pub rules: Vec<PostRule>,
    pub term: Term,
    pub formula: Formula,
}

#[derive(Debug, thiserror::Error)]
pub enum JudgmentError {
    #[error("syntax error at {0}")]
    Syntax(#[from] ParseError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

fn syntax<T>(pos: Pos, message: impl Into<String>) -> Result<T, JudgmentError> {
    Err(JudgmentError::Syntax(ParseError {
        pos,
        message: message.into(),
    }))
}

fn name(s: &Sexp) -> Result<&str, JudgmentError> {
    match s.as_symbol() {
        Some(n) => Ok(n),
        None => syntax(s.pos(), format!("expected a name, found `{s}`")),
    }
}

fn atoms(s: &Sexp) -> Result<Vec<Atom>, JudgmentError> {
    match s {
        Sexp::List(items, _) => Ok(items.iter().map(parse_atom).collect::<Result<_, _>>()?),
        Sexp::Symbol(_, pos) => syntax(*pos, "expected a list of premise atoms"),
    }
}

pub fn parse_judgment(text: &str) -> Result<Judgment, JudgmentError> {
    let items = read_sexps(text)?;
    let mut decls = Vec::new();
    let mut rules = Vec::new();
    let mut system = None;
    let mut i = 0;
    while let Some((head, args)) = items.get(i).and_then(Sexp::as_form) {
        let pos = items[i].pos();
        let arity = |n: usize| -> Result<(), JudgmentError> {
            if args.len() == n {
                Ok(())
            } else {
                syntax(pos, format!("`{head}` takes {n} argument(s)"))
            }
        };
        match head {
            "system" => {
                arity(1)?;
                let s = name(&args[0])?;
                system = Some(match s.parse::<System>() {
                    Ok(sys) => sys,
                    Err(e) => return syntax(args[0].pos(), e),
                });
            }
            "var" => {
                arity(2)?;
                decls.push(Decl::Proof {
                    name: name(&args[0])?.into(),
                    formula: parse_formula(&args[1])?,
                });
            }
            "hyp-var" | "wit-var" => {
                arity(3)?;
                let pred = Pred::new(name(&args[2])?, parse_atom(&args[1])?);
                let label = name(&args[0])?.into();
                decls.push(if head == "hyp-var" {
                    Decl::Univ { name: label, pred }
                } else {
                    Decl::Exist { name: label, pred }
                });
            }
            "rule" => {
                arity(3)?;
                rules.push(PostRule::schema(
                    name(&args[0])?,
                    atoms(&args[1])?,
                    parse_atom(&args[2])?,
                ));
            }
            _ => break,
        }
        i += 1;
    }
    let rest = &items[i..];
    let end = items.last().map(Sexp::pos).unwrap_or_default();
    let [term, colon, formula] = rest else {
        return syntax(
            rest.first().map(Sexp::pos).unwrap_or(end),
            "expected `term : formula` after the declarations",
        );
    };
    if colon.as_symbol() != Some(":") {
        return syntax(colon.pos(), format!("expected `:`, found `{colon}`"));
    }
    let term = parse_term(term)?;
    let formula = parse_formula(formula)?;
    let system = match system {
        Some(s) => s,
        // ill-formed labelings are reported by the checker
        None => term.labeling().ok().flatten().unwrap_or(System::Em1),
    };
    Ok(Judgment {
        system,
        context: Context::from_decls(decls)?,
        rules,
        term,
        formula,
    })
}

impl Judgment {
    /// The standard signature extended with the file's rules.
    pub fn signature(&self) -> Result<Signature, TypeError> {
        let mut sig = Signature::standard();
        for r in &self.rules {
            sig.add_rule(r.clone(), RULE_TEST_BOUND)?;
        }
        Ok(sig)
    }
}

impl fmt::Display for Judgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(system {})", self.system)?;
        for d in self.context.decls() {
            match d {
                Decl::Proof { name, formula } => writeln!(f, "(var {name} {formula})")?,
                Decl::Univ { name, pred } => {
                    writeln!(f, "(hyp-var {name} {} {})", pred.atom, pred.binder)?
                }
                Decl::Exist { name, pred } => {
                    writeln!(f, "(wit-var {name} {} {})", pred.atom, pred.binder)?
                }
            }
        }
        for r in &self.rules {
            if let PostShape::Schema {
                premises,
                conclusion,
            } = &r.shape
            {
                let ps: Vec<String> = premises.iter().map(|p| p.to_string()).collect();
                writeln!(f, "(rule {} ({}) {conclusion})", r.name, ps.join(" "))?;
            }
        }
        write!(f, "{} : {}", self.term, self.formula)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use haem_core::syntax::{formula_from_str, term_from_str};

    #[test]
    fn trivial_judgment() {
        let j = parse_judgment("true : (eq 0 0)").unwrap();
        assert!(j.context.decls().is_empty());
        assert_eq!(j.term, Term::True);
        assert_eq!(j.formula, formula_from_str("(eq 0 0)").unwrap());
    }

    #[test]
    fn identity_judgment() {
        let j = parse_judgment("(lam x (eq 0 0) x) : (-> (eq 0 0) (eq 0 0))").unwrap();
        assert_eq!(j.term, term_from_str("(lam x (eq 0 0) x)").unwrap());
    }

    #[test]
    fn header_and_round_trip() {
        let src = "; comment\n(var y (eq 1 1))\n(hyp-var a (eq x 0) x)\n(rule sym ((eq a b)) (eq b a))\n(post sym y) : (eq 1 1)";
        let j = parse_judgment(src).unwrap();
        assert_eq!(j.context.decls().len(), 2);
        assert_eq!(j.rules.len(), 1);
        let again = parse_judgment(&j.to_string()).unwrap();
        assert_eq!(again.to_string(), j.to_string());
        assert!(again.term.alpha_eq(&j.term));
    }

    #[test]
    fn system_detection() {
        let j = parse_judgment("(em true true) : (eq 0 0)").unwrap();
        assert_eq!(j.system, System::Nem);
        let j = parse_judgment("(system nem)\ntrue : (eq 0 0)").unwrap();
        assert_eq!(j.system, System::Nem);
    }

    #[test]
    fn errors_have_locations() {
        let e = parse_judgment("true (eq 0 0)").unwrap_err();
        assert!(matches!(e, JudgmentError::Syntax(_)));
        let e = parse_judgment("(var x)\ntrue : (eq 0 0)").unwrap_err();
        assert!(e.to_string().contains("1:1"), "{e}");
        let e = parse_judgment("true : (eq 0 0").unwrap_err();
        assert!(e.to_string().contains("1:8"), "{e}");
    }
}
