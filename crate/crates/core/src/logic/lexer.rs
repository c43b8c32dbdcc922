use super::ast::{ArithOp, CmpOp};
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    LParen,
    RParen,
    Comma,
    Dot,
    Not,
    And,
    Or,
    Implies,
    Iff,
    Forall,
    Exists,
    True,
    False,
    Cmp(CmpOp),
    Arith(ArithOp),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Not => "`not`".into(),
            Tok::And => "`and`".into(),
            Tok::Or => "`or`".into(),
            Tok::Implies => "`->`".into(),
            Tok::Iff => "`<->`".into(),
            Tok::Forall => "`forall`".into(),
            Tok::Exists => "`exists`".into(),
            Tok::True => "`True`".into(),
            Tok::False => "`False`".into(),
            Tok::Cmp(op) => format!("`{}`", op.symbol()),
            Tok::Arith(op) => format!("`{}`", op.symbol()),
            Tok::Eof => "end of input".into(),
        }
    }
}

/// A token with its 1-based character column.
#[derive(Debug, Clone)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub col: usize,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match word.to_ascii_lowercase().as_str() {
                "not" => Tok::Not,
                "and" => Tok::And,
                "or" => Tok::Or,
                "forall" => Tok::Forall,
                "exists" | "exist" => Tok::Exists,
                "true" => Tok::True,
                "false" => Tok::False,
                _ => Tok::Ident(word),
            };
            out.push(Spanned { tok, col });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            let v = digits.parse::<i64>().map_err(|_| ParseError::new(col, "integer literal out of range"))?;
            out.push(Spanned { tok: Tok::Int(v), col });
            continue;
        }
        let next = chars.get(i + 1).copied();
        let next2 = chars.get(i + 2).copied();
        let (tok, len) = match (c, next, next2) {
            ('<', Some('-'), Some('>')) | ('<', Some('='), Some('>')) => (Tok::Iff, 3),
            ('<', Some('='), _) => (Tok::Cmp(CmpOp::Le), 2),
            ('<', _, _) => (Tok::Cmp(CmpOp::Lt), 1),
            ('>', Some('='), _) => (Tok::Cmp(CmpOp::Ge), 2),
            ('>', _, _) => (Tok::Cmp(CmpOp::Gt), 1),
            ('-', Some('>'), _) => (Tok::Implies, 2),
            ('=', Some('>'), _) => (Tok::Implies, 2),
            ('=', Some('='), _) => (Tok::Cmp(CmpOp::Eq), 2),
            ('=', _, _) => (Tok::Cmp(CmpOp::Eq), 1),
            ('!', Some('='), _) => (Tok::Cmp(CmpOp::Ne), 2),
            ('!', _, _) | ('~', _, _) | ('¬', _, _) => (Tok::Not, 1),
            ('&', Some('&'), _) => (Tok::And, 2),
            ('&', _, _) | ('∧', _, _) => (Tok::And, 1),
            ('|', Some('|'), _) => (Tok::Or, 2),
            ('|', _, _) | ('∨', _, _) => (Tok::Or, 1),
            ('→', _, _) => (Tok::Implies, 1),
            ('↔', _, _) => (Tok::Iff, 1),
            ('∀', _, _) => (Tok::Forall, 1),
            ('∃', _, _) => (Tok::Exists, 1),
            ('≤', _, _) => (Tok::Cmp(CmpOp::Le), 1),
            ('≥', _, _) => (Tok::Cmp(CmpOp::Ge), 1),
            ('≠', _, _) => (Tok::Cmp(CmpOp::Ne), 1),
            ('*', Some('*'), _) => (Tok::Arith(ArithOp::Pow), 2),
            ('*', _, _) => (Tok::Arith(ArithOp::Mul), 1),
            ('/', Some('/'), _) => (Tok::Arith(ArithOp::FloorDiv), 2),
            ('/', _, _) => (Tok::Arith(ArithOp::Div), 1),
            ('+', _, _) => (Tok::Arith(ArithOp::Add), 1),
            ('-', _, _) => (Tok::Arith(ArithOp::Sub), 1),
            ('(', _, _) => (Tok::LParen, 1),
            (')', _, _) => (Tok::RParen, 1),
            (',', _, _) => (Tok::Comma, 1),
            ('.', _, _) => (Tok::Dot, 1),
            _ => return Err(ParseError::new(col, format!("unknown character `{c}`"))),
        };
        out.push(Spanned { tok, col });
        i += len;
    }
    out.push(Spanned {
        tok: Tok::Eof,
        col: chars.len() + 1,
    });
    Ok(out)
}
