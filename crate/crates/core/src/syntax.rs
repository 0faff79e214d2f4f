//! S-expression concrete syntax for arithmetic terms, formulas and proof
//! terms. Printing is the `Display` impl of each type; parsing a printed
//! value yields an equal value.

use std::fmt;

use thiserror::Error;

use crate::lang::{ArithTerm, Atom, Formula, Ident};
use crate::term::{Citation, Motive, Pred, Side, Term};

/// Numerals above this are rejected to keep unary terms manageable.
pub const MAX_NUMERAL: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {message}")]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

fn err<T>(pos: Pos, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        pos,
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Symbol(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Symbol(_, p) | Sexp::List(_, p) => *p,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Sexp::Symbol(s, _) => Some(s),
            Sexp::List(..) => None,
        }
    }

    /// Head symbol and arguments of a non-empty list.
    pub fn as_form(&self) -> Option<(&str, &[Sexp])> {
        match self {
            Sexp::List(items, _) => match items.split_first() {
                Some((Sexp::Symbol(h, _), rest)) => Some((h, rest)),
                _ => None,
            },
            Sexp::Symbol(..) => None,
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Symbol(s, _) => f.write_str(s),
            Sexp::List(items, _) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Reads every s-expression in `src`. `;` starts a line comment.
pub fn read_sexps(src: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut stack: Vec<(Vec<Sexp>, Pos)> = Vec::new();
    let mut top = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1, 1);
    while let Some(&c) = chars.peek() {
        let here = Pos { line, col };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
                continue;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
                continue;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
                continue;
            }
            '(' => {
                chars.next();
                col += 1;
                stack.push((Vec::new(), here));
            }
            ')' => {
                chars.next();
                col += 1;
                let Some((items, start)) = stack.pop() else {
                    return err(here, "unbalanced `)`");
                };
                let list = Sexp::List(items, start);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => top.push(list),
                }
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                    col += 1;
                }
                let sym = Sexp::Symbol(s, here);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(sym),
                    None => top.push(sym),
                }
            }
        }
    }
    if let Some((_, start)) = stack.pop() {
        return err(start, "unclosed `(`");
    }
    Ok(top)
}

/// Reads exactly one s-expression.
pub fn read_one(src: &str) -> Result<Sexp, ParseError> {
    let mut all = read_sexps(src)?;
    match all.len() {
        1 => Ok(all.pop().unwrap()),
        0 => err(Pos { line: 1, col: 1 }, "empty input"),
        _ => err(all[1].pos(), "trailing input after the first expression"),
    }
}

const FORMULA_HEADS: &[&str] = &["and", "or", "->", "all", "ex"];

fn ident(s: &Sexp, what: &str) -> Result<Ident, ParseError> {
    match s {
        Sexp::Symbol(name, pos) => {
            if name.chars().all(|c| c.is_ascii_digit()) {
                return err(*pos, format!("expected {what}, found numeral `{name}`"));
            }
            Ok(Ident::new(name))
        }
        Sexp::List(_, pos) => err(*pos, format!("expected {what}, found `{s}`")),
    }
}

fn arity(head: &str, args: &[Sexp], pos: Pos, expected: &[usize]) -> Result<(), ParseError> {
    if expected.contains(&args.len()) {
        Ok(())
    } else {
        let want: Vec<String> = expected.iter().map(|n| n.to_string()).collect();
        err(
            pos,
            format!(
                "`{head}` takes {} argument(s), found {}",
                want.join(" or "),
                args.len()
            ),
        )
    }
}

pub fn parse_arith(s: &Sexp) -> Result<ArithTerm, ParseError> {
    match s {
        Sexp::Symbol(name, pos) => {
            if name.chars().all(|c| c.is_ascii_digit()) {
                let n: u64 = name
                    .parse()
                    .or_else(|_| err(*pos, format!("numeral `{name}` is too large")))?;
                if n > MAX_NUMERAL {
                    return err(*pos, format!("numeral {n} exceeds {MAX_NUMERAL}"));
                }
                Ok(ArithTerm::numeral(n))
            } else {
                Ok(ArithTerm::Var(Ident::new(name)))
            }
        }
        Sexp::List(_, pos) => match s.as_form() {
            Some(("S", [m])) => Ok(ArithTerm::succ(parse_arith(m)?)),
            _ => err(*pos, format!("expected an arithmetic term, found `{s}`")),
        },
    }
}

pub fn parse_atom(s: &Sexp) -> Result<Atom, ParseError> {
    match s {
        Sexp::Symbol(name, pos) => {
            if FORMULA_HEADS.contains(&name.as_str()) || name.chars().all(|c| c.is_ascii_digit()) {
                return err(*pos, format!("expected an atom, found `{name}`"));
            }
            Ok(Atom::new(name, vec![]))
        }
        Sexp::List(_, pos) => {
            let Some((head, args)) = s.as_form() else {
                return err(*pos, format!("expected an atom, found `{s}`"));
            };
            if FORMULA_HEADS.contains(&head) {
                return err(
                    *pos,
                    format!("expected an atom, found compound formula `{s}`"),
                );
            }
            let args = args.iter().map(parse_arith).collect::<Result<_, _>>()?;
            Ok(Atom {
                rel: Ident::new(head),
                args,
            })
        }
    }
}

pub fn parse_formula(s: &Sexp) -> Result<Formula, ParseError> {
    let pos = s.pos();
    match s.as_form() {
        Some((head @ ("and" | "or" | "->"), args)) => {
            arity(head, args, pos, &[2])?;
            let a = parse_formula(&args[0])?;
            let b = parse_formula(&args[1])?;
            Ok(match head {
                "and" => Formula::and(a, b),
                "or" => Formula::or(a, b),
                _ => Formula::imp(a, b),
            })
        }
        Some((head @ ("all" | "ex"), args)) => {
            arity(head, args, pos, &[2])?;
            let v = ident(&args[0], "a bound variable")?;
            let body = Box::new(parse_formula(&args[1])?);
            Ok(if head == "all" {
                Formula::All(v, body)
            } else {
                Formula::Ex(v, body)
            })
        }
        _ => parse_atom(s).map(Formula::Atom),
    }
}

fn parse_pred(atom: &Sexp, binder: &Sexp) -> Result<Pred, ParseError> {
    Ok(Pred {
        atom: parse_atom(atom)?,
        binder: ident(binder, "a predicate binder")?,
    })
}

fn parse_motive(s: &Sexp) -> Result<Motive, ParseError> {
    match parse_formula(s)? {
        Formula::All(binder, body) => Ok(Motive {
            binder,
            body: *body,
        }),
        _ => err(s.pos(), "a recursor motive is written `(all x B)`"),
    }
}

pub fn parse_term(s: &Sexp) -> Result<Term, ParseError> {
    let pos = s.pos();
    let Sexp::List(..) = s else {
        return match s.as_symbol() {
            Some("true") => Ok(Term::True),
            _ => Ok(Term::Var(ident(s, "a proof term")?)),
        };
    };
    let Some((head, args)) = s.as_form() else {
        return err(pos, format!("expected a proof term, found `{s}`"));
    };
    let t = |i: usize| parse_term(&args[i]);
    let b = |i: usize| t(i).map(Box::new);
    let opt_formula = |i: usize| args.get(i).map(parse_formula).transpose();
    match head {
        "app" => {
            if args.len() < 2 {
                return arity(head, args, pos, &[2]).map(|_| unreachable!());
            }
            let mut acc = t(0)?;
            for a in &args[1..] {
                acc = Term::app(acc, parse_term(a)?);
            }
            Ok(acc)
        }
        "aapp" => {
            arity(head, args, pos, &[2])?;
            Ok(Term::AApp(b(0)?, parse_arith(&args[1])?))
        }
        "lam" => {
            arity(head, args, pos, &[2, 3])?;
            let var = ident(&args[0], "a proof variable")?;
            if args.len() == 2 {
                Ok(Term::Lam {
                    var,
                    domain: None,
                    body: b(1)?,
                })
            } else {
                Ok(Term::Lam {
                    var,
                    domain: Some(parse_formula(&args[1])?),
                    body: b(2)?,
                })
            }
        }
        "alam" => {
            arity(head, args, pos, &[2])?;
            Ok(Term::ALam {
                var: ident(&args[0], "an arithmetic variable")?,
                body: b(1)?,
            })
        }
        "pair" => {
            arity(head, args, pos, &[2])?;
            Ok(Term::Pair(b(0)?, b(1)?))
        }
        "proj0" | "proj1" => {
            arity(head, args, pos, &[1])?;
            let side = if head == "proj0" {
                Side::Left
            } else {
                Side::Right
            };
            Ok(Term::Proj(side, b(0)?))
        }
        "inj0" | "inj1" => {
            arity(head, args, pos, &[1, 2])?;
            let side = if head == "inj0" {
                Side::Left
            } else {
                Side::Right
            };
            Ok(Term::Inj {
                side,
                body: b(0)?,
                ann: opt_formula(1)?,
            })
        }
        "case" => {
            arity(head, args, pos, &[5])?;
            Ok(Term::Case {
                scrutinee: b(0)?,
                left_var: ident(&args[1], "a proof variable")?,
                left: b(2)?,
                right_var: ident(&args[3], "a proof variable")?,
                right: b(4)?,
            })
        }
        "wpair" => {
            arity(head, args, pos, &[2, 3])?;
            Ok(Term::WPair {
                witness: parse_arith(&args[0])?,
                body: b(1)?,
                ann: opt_formula(2)?,
            })
        }
        "dest" => {
            arity(head, args, pos, &[4])?;
            Ok(Term::Dest {
                scrutinee: b(0)?,
                avar: ident(&args[1], "an arithmetic variable")?,
                pvar: ident(&args[2], "a proof variable")?,
                body: b(3)?,
            })
        }
        "em" => {
            arity(head, args, pos, &[2, 3, 4, 5])?;
            let n = args.len();
            let label = if n % 2 == 1 {
                Some(ident(&args[0], "a hypothesis label")?)
            } else {
                None
            };
            let off = usize::from(label.is_some());
            let pred = if n >= 4 {
                Some(parse_pred(&args[off], &args[off + 1])?)
            } else {
                None
            };
            Ok(Term::Em {
                label,
                pred,
                left: b(n - 2)?,
                right: b(n - 1)?,
            })
        }
        "hyp" | "wit" => {
            arity(head, args, pos, &[2, 3])?;
            let label = if args.len() == 3 {
                Some(ident(&args[0], "a hypothesis label")?)
            } else {
                None
            };
            let off = usize::from(label.is_some());
            let c = Citation {
                label,
                pred: parse_pred(&args[off], &args[off + 1])?,
            };
            Ok(if head == "hyp" {
                Term::Hyp(c)
            } else {
                Term::Wit(c)
            })
        }
        "rec" => {
            arity(head, args, pos, &[3, 4])?;
            Ok(Term::Rec {
                base: b(0)?,
                step: b(1)?,
                arg: parse_arith(&args[2])?,
                motive: args.get(3).map(parse_motive).transpose()?,
            })
        }
        "post" => {
            if args.is_empty() {
                return err(pos, "`post` needs a rule name");
            }
            Ok(Term::Post {
                rule: ident(&args[0], "a rule name")?,
                args: args[1..].iter().map(parse_term).collect::<Result<_, _>>()?,
            })
        }
        other => err(pos, format!("unknown proof-term constructor `{other}`")),
    }
}

pub fn arith_from_str(src: &str) -> Result<ArithTerm, ParseError> {
    parse_arith(&read_one(src)?)
}

pub fn atom_from_str(src: &str) -> Result<Atom, ParseError> {
    parse_atom(&read_one(src)?)
}

pub fn formula_from_str(src: &str) -> Result<Formula, ParseError> {
    parse_formula(&read_one(src)?)
}

pub fn term_from_str(src: &str) -> Result<Term, ParseError> {
    parse_term(&read_one(src)?)
}
