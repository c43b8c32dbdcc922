//! The restricted first-order language: AST, parser and problem envelopes.

mod ast;
mod lexer;
mod parser;
mod problem;

pub use ast::{ArithOp, CmpOp, Formula, NumExpr, PredicateAtom, Sort, Term};
pub use parser::{canonicalize_atom, parse_formula};
pub use problem::{parse_problem, Fact, FactForm, Problem, QuerySpec, Schema, SortConflict};

use thiserror::Error;

/// A parse failure at a 1-based character column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("column {position}: {reason}")]
pub struct ParseError {
    pub position: usize,
    pub reason: String,
}

impl ParseError {
    pub fn new(position: usize, reason: impl Into<String>) -> Self {
        Self {
            position,
            reason: reason.into(),
        }
    }
}
