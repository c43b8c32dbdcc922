//! Pratt parser for the surface syntax.
//!
//! Binding strength, loosest first: quantifiers, `<->`, `->`, `or`, `and`,
//! `not`, relational operators, `+ -`, `* / //`, `**`, predicate
//! applications. `and`/`or` chains flatten into one n-ary node; a
//! parenthesized operand stays nested. `->`, `<->` and `**` associate to the
//! right.

use super::ast::{ArithOp, Formula, NumExpr, PredicateAtom, Sort, Term};
use super::lexer::{tokenize, Spanned, Tok};
use super::ParseError;

const BP_IFF: u8 = 1;
const BP_IMPLIES: u8 = 2;
const BP_OR: u8 = 3;
const BP_AND: u8 = 4;
const BP_NOT_OPERAND: u8 = 6;
const BP_CMP: u8 = 6;

/// Parse one expression of the surface syntax into a [`Formula`].
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        bound: Vec::new(),
    };
    let start = p.peek_col();
    let e = p.expr(0)?;
    if p.peek() != &Tok::Eof {
        let col = p.peek_col();
        return Err(match p.peek() {
            Tok::RParen => ParseError::new(col, "unbalanced `)`"),
            Tok::Dot => ParseError::new(col, "unexpected `.`"),
            t => ParseError::new(col, format!("unexpected {} after complete expression", t.describe())),
        });
    }
    e.into_formula(start)
}

/// Fold trailing object arguments into the predicate name.
///
/// `P(a, b, c)` becomes `P_b_c(a)`. Atoms with at most one argument, or whose
/// trailing arguments include a variable, are returned unchanged.
pub fn canonicalize_atom(atom: &PredicateAtom) -> PredicateAtom {
    if atom.args.len() <= 1 || atom.args[1..].iter().any(Term::is_var) {
        return atom.clone();
    }
    let mut name = atom.name.clone();
    for t in &atom.args[1..] {
        name.push('_');
        name.push_str(t.name());
    }
    PredicateAtom {
        name,
        args: vec![atom.args[0].clone()],
        sort: atom.sort,
    }
}

/// Intermediate operand: an application is untyped until its context
/// decides whether it is a boolean predicate or a numeric term.
enum Operand {
    Formula(Formula),
    Num(NumExpr),
    App(PredicateAtom),
}

impl Operand {
    fn into_formula(self, col: usize) -> Result<Formula, ParseError> {
        match self {
            Operand::Formula(f) => Ok(f),
            Operand::App(mut a) => {
                a.sort = Sort::Boolean;
                Ok(Formula::Atom(a))
            }
            Operand::Num(NumExpr::Int(_)) => Err(ParseError::new(col, "integer literal used as a formula")),
            Operand::Num(_) => Err(ParseError::new(col, "arithmetic expression used as a formula")),
        }
    }

    fn into_num(self, col: usize) -> Result<NumExpr, ParseError> {
        match self {
            Operand::Num(n) => Ok(n),
            Operand::App(mut a) => {
                a.sort = Sort::Numeric;
                Ok(NumExpr::Atom(a))
            }
            Operand::Formula(_) => Err(ParseError::new(col, "formula used where a number is expected")),
        }
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    bound: Vec<String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_col(&self) -> usize {
        self.toks[self.pos].col
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(ParseError::new(
                self.peek_col(),
                format!("expected {what}, found {}", self.peek().describe()),
            ))
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Operand, ParseError> {
        let lhs_col = self.peek_col();
        let mut lhs = self.prefix()?;
        loop {
            let col = self.peek_col();
            match self.peek().clone() {
                Tok::Iff if BP_IFF >= min_bp => {
                    self.bump();
                    let l = lhs.into_formula(lhs_col)?;
                    let rc = self.peek_col();
                    let r = self.expr(BP_IFF)?.into_formula(rc)?;
                    lhs = Operand::Formula(Formula::Iff(Box::new(l), Box::new(r)));
                }
                Tok::Implies if BP_IMPLIES >= min_bp => {
                    self.bump();
                    let l = lhs.into_formula(lhs_col)?;
                    let rc = self.peek_col();
                    let r = self.expr(BP_IMPLIES)?.into_formula(rc)?;
                    lhs = Operand::Formula(Formula::Implies(Box::new(l), Box::new(r)));
                }
                Tok::Or if BP_OR >= min_bp => {
                    let mut items = vec![lhs.into_formula(lhs_col)?];
                    while *self.peek() == Tok::Or {
                        self.bump();
                        let rc = self.peek_col();
                        items.push(self.expr(BP_OR + 1)?.into_formula(rc)?);
                    }
                    lhs = Operand::Formula(Formula::Or(items));
                }
                Tok::And if BP_AND >= min_bp => {
                    let mut items = vec![lhs.into_formula(lhs_col)?];
                    while *self.peek() == Tok::And {
                        self.bump();
                        let rc = self.peek_col();
                        items.push(self.expr(BP_AND + 1)?.into_formula(rc)?);
                    }
                    lhs = Operand::Formula(Formula::And(items));
                }
                Tok::Cmp(op) if BP_CMP >= min_bp => {
                    self.bump();
                    let l = lhs.into_num(lhs_col)?;
                    let rc = self.peek_col();
                    let r = self.expr(BP_CMP + 1)?.into_num(rc)?;
                    if let Tok::Cmp(_) = self.peek() {
                        return Err(ParseError::new(self.peek_col(), "chained comparison"));
                    }
                    lhs = Operand::Formula(Formula::Compare(op, l, r));
                }
                Tok::Arith(op) if arith_bp(op) >= min_bp => {
                    self.bump();
                    let l = lhs.into_num(lhs_col)?;
                    let rbp = if op == ArithOp::Pow { arith_bp(op) } else { arith_bp(op) + 1 };
                    let rc = self.peek_col();
                    let r = self.expr(rbp)?.into_num(rc)?;
                    if matches!(op, ArithOp::Div | ArithOp::FloorDiv) && r == NumExpr::Int(0) {
                        return Err(ParseError::new(rc, "division by zero"));
                    }
                    lhs = Operand::Num(NumExpr::Arith(op, Box::new(l), Box::new(r)));
                }
                Tok::Iff | Tok::Implies | Tok::Or | Tok::And | Tok::Cmp(_) | Tok::Arith(_) => break,
                Tok::Eof | Tok::RParen | Tok::Comma => break,
                t => {
                    return Err(ParseError::new(col, format!("unexpected {}, expected an operator", t.describe())));
                }
            }
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Operand, ParseError> {
        let Spanned { tok, col } = self.bump();
        match tok {
            Tok::Not => {
                let c = self.peek_col();
                let inner = self.expr(BP_NOT_OPERAND)?.into_formula(c)?;
                Ok(Operand::Formula(Formula::Not(Box::new(inner))))
            }
            Tok::Forall | Tok::Exists => self.quantifier(tok == Tok::Forall, col),
            Tok::True => Ok(Operand::Formula(Formula::Bool(true))),
            Tok::False => Ok(Operand::Formula(Formula::Bool(false))),
            Tok::Int(v) => Ok(Operand::Num(NumExpr::Int(v))),
            Tok::Arith(ArithOp::Sub) => match self.peek().clone() {
                Tok::Int(v) => {
                    self.bump();
                    Ok(Operand::Num(NumExpr::Int(-v)))
                }
                t => Err(ParseError::new(self.peek_col(), format!("expected an integer after unary `-`, found {}", t.describe()))),
            },
            Tok::LParen => {
                if *self.peek() == Tok::RParen {
                    return Err(ParseError::new(self.peek_col(), "empty parentheses"));
                }
                let inner = self.expr(0)?;
                if *self.peek() != Tok::RParen {
                    return Err(ParseError::new(
                        self.peek_col(),
                        format!("unbalanced `(`: expected `)`, found {}", self.peek().describe()),
                    ));
                }
                self.bump();
                Ok(inner)
            }
            Tok::Ident(name) => self.application(name, col),
            Tok::Eof => Err(ParseError::new(col, "unexpected end of input")),
            t => Err(ParseError::new(col, format!("unexpected {}", t.describe()))),
        }
    }

    fn quantifier(&mut self, universal: bool, col: usize) -> Result<Operand, ParseError> {
        let var = match self.peek().clone() {
            Tok::Ident(v) => {
                self.bump();
                v
            }
            t => {
                return Err(ParseError::new(
                    self.peek_col(),
                    format!("dangling quantifier: expected a variable, found {}", t.describe()),
                ))
            }
        };
        if self.bound.contains(&var) {
            return Err(ParseError::new(col, format!("variable `{var}` is already bound")));
        }
        if *self.peek() != Tok::Dot {
            return Err(ParseError::new(
                self.peek_col(),
                format!("dangling quantifier: expected `.` after `{var}`, found {}", self.peek().describe()),
            ));
        }
        self.bump();
        if matches!(self.peek(), Tok::Eof | Tok::RParen) {
            return Err(ParseError::new(self.peek_col(), "dangling quantifier: missing body"));
        }
        self.bound.push(var.clone());
        let bc = self.peek_col();
        let body = self.expr(0).and_then(|b| b.into_formula(bc));
        self.bound.pop();
        let body = body?;
        if !mentions_var(&body, &var) {
            return Err(ParseError::new(
                col,
                format!("dangling quantifier: `{var}` does not occur in its body"),
            ));
        }
        let body = Box::new(body);
        Ok(Operand::Formula(if universal {
            Formula::ForAll(var, body)
        } else {
            Formula::Exists(var, body)
        }))
    }

    fn application(&mut self, name: String, col: usize) -> Result<Operand, ParseError> {
        if *self.peek() != Tok::LParen {
            return Err(ParseError::new(
                self.peek_col(),
                format!("expected `(` after predicate name `{name}`, found {}", self.peek().describe()),
            ));
        }
        self.bump();
        if name.eq_ignore_ascii_case("boolval") {
            let v = match self.bump().tok {
                Tok::True => true,
                Tok::False => false,
                t => return Err(ParseError::new(col, format!("BoolVal expects True or False, found {}", t.describe()))),
            };
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Operand::Formula(Formula::Bool(v)));
        }
        let mut args = Vec::new();
        if *self.peek() == Tok::RParen {
            self.bump();
        } else {
            loop {
                match self.peek().clone() {
                    Tok::Ident(a) => {
                        self.bump();
                        let term = if self.bound.contains(&a) { Term::Var(a) } else { Term::Obj(a) };
                        args.push(term);
                    }
                    t => {
                        return Err(ParseError::new(
                            self.peek_col(),
                            format!("expected an object or variable, found {}", t.describe()),
                        ))
                    }
                }
                match self.peek() {
                    Tok::Comma => {
                        self.bump();
                    }
                    Tok::RParen => {
                        self.bump();
                        break;
                    }
                    t => {
                        return Err(ParseError::new(
                            self.peek_col(),
                            format!("unbalanced `(`: expected `,` or `)`, found {}", t.describe()),
                        ))
                    }
                }
            }
        }
        let atom = PredicateAtom::new(name, args, Sort::Boolean);
        Ok(Operand::App(canonicalize_atom(&atom)))
    }
}

fn arith_bp(op: ArithOp) -> u8 {
    match op {
        ArithOp::Add | ArithOp::Sub => 7,
        ArithOp::Mul | ArithOp::Div | ArithOp::FloorDiv => 8,
        ArithOp::Pow => 9,
    }
}

fn mentions_var(f: &Formula, var: &str) -> bool {
    let mut found = false;
    f.visit_atoms(&mut |a| {
        if a.args.iter().any(|t| matches!(t, Term::Var(v) if v == var)) {
            found = true;
        }
    });
    found
}
