//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | base ('^' ['-'] number)?
//! base   := number | ident | '(' expr ')' | func '(' expr ')'
//! func   := sin | cos | exp | log | sqrt | neg
//! ident  := 'x' digits          (1-based chart coordinate)
//! ```
//!
//! A leading `-` in front of a bare numeric literal folds into the literal;
//! in front of anything else it produces a `neg` node.

use std::fmt;

use thiserror::Error;

use super::{BinOp, Func, ScalarExpr};

#[derive(Clone, Debug, PartialEq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken {
        found: String,
        expected: &'static str,
    },
    UnexpectedEnd {
        expected: &'static str,
    },
    UnknownIdentifier(String),
    VariableOutOfRange {
        index: usize,
        dim: usize,
    },
    InvalidNumber(String),
    Empty,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::UnexpectedToken { found, expected } => {
                write!(f, "expected {expected}, found `{found}`")
            }
            ParseErrorKind::UnexpectedEnd { expected } => {
                write!(f, "unexpected end of input, expected {expected}")
            }
            ParseErrorKind::UnknownIdentifier(s) => write!(f, "unknown identifier `{s}`"),
            ParseErrorKind::VariableOutOfRange { index, dim } => {
                write!(
                    f,
                    "variable x{index} out of range for chart dimension {dim}"
                )
            }
            ParseErrorKind::InvalidNumber(s) => write!(f, "invalid number `{s}`"),
            ParseErrorKind::Empty => write!(f, "empty expression"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "{v}"),
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Op(c) => write!(f, "{c}"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut column) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, column);
        let err = |kind| ParseError {
            line: start_line,
            column: start_col,
            kind,
        };
        if c == '\n' {
            i += 1;
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_digit() || c == '.' {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let valid = s.chars().filter(|&c| c == '.').count() <= 1
                && s.chars()
                    .take_while(|c| *c != 'e' && *c != 'E')
                    .any(|c| c.is_ascii_digit());
            match s.parse::<f64>() {
                Ok(v) if valid && v.is_finite() => Tok::Num(v),
                _ => return Err(err(ParseErrorKind::InvalidNumber(s))),
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else {
            i += 1;
            match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                other => return Err(err(ParseErrorKind::UnexpectedChar(other))),
            }
        };
        column += i - start;
        out.push(Spanned {
            tok,
            line: start_line,
            column: start_col,
        });
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    dim: usize,
    end: (usize, usize),
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Spanned> {
        self.toks.get(self.pos)
    }

    fn error_here(&self, expected: &'static str) -> ParseError {
        match self.peek() {
            Some(s) => ParseError {
                line: s.line,
                column: s.column,
                kind: ParseErrorKind::UnexpectedToken {
                    found: s.tok.to_string(),
                    expected,
                },
            },
            None => ParseError {
                line: self.end.0,
                column: self.end.1,
                kind: ParseErrorKind::UnexpectedEnd { expected },
            },
        }
    }

    fn eat_op(&mut self, op: char) -> bool {
        if matches!(self.peek(), Some(Spanned { tok: Tok::Op(c), .. }) if *c == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, expected: &'static str) -> Result<(), ParseError> {
        match self.peek() {
            Some(s) if s.tok == tok => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error_here(expected)),
        }
    }

    fn expr(&mut self) -> Result<ScalarExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat_op('+') {
                BinOp::Add
            } else if self.eat_op('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = ScalarExpr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<ScalarExpr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = if self.eat_op('*') {
                BinOp::Mul
            } else if self.eat_op('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.factor()?;
            lhs = ScalarExpr::binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<ScalarExpr, ParseError> {
        if self.eat_op('-') {
            return Ok(match self.factor()? {
                ScalarExpr::Num(v) => ScalarExpr::Num(-v),
                other => ScalarExpr::call(Func::Neg, other),
            });
        }
        let base = self.base()?;
        if self.eat_op('^') {
            let negative = self.eat_op('-');
            match self.peek() {
                Some(Spanned {
                    tok: Tok::Num(v), ..
                }) => {
                    self.pos += 1;
                    let c = if negative { -*v } else { *v };
                    return Ok(ScalarExpr::pow(base, c));
                }
                _ => return Err(self.error_here("numeric exponent")),
            }
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<ScalarExpr, ParseError> {
        let Some(s) = self.peek() else {
            return Err(self.error_here("number, variable, function or '('"));
        };
        match &s.tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(ScalarExpr::Num(*v))
            }
            Tok::LParen => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if let Some(func) = Func::from_name(name) {
                    self.expect(Tok::LParen, "'(' after function name")?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "')'")?;
                    return Ok(ScalarExpr::call(func, arg));
                }
                let err = |kind| ParseError {
                    line: s.line,
                    column: s.column,
                    kind,
                };
                let digits = name
                    .strip_prefix('x')
                    .filter(|d| !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()));
                let Some(digits) = digits else {
                    return Err(err(ParseErrorKind::UnknownIdentifier(name.clone())));
                };
                let index: usize = digits
                    .parse()
                    .map_err(|_| err(ParseErrorKind::UnknownIdentifier(name.clone())))?;
                if index == 0 || index > self.dim {
                    return Err(err(ParseErrorKind::VariableOutOfRange {
                        index,
                        dim: self.dim,
                    }));
                }
                Ok(ScalarExpr::Var(index - 1))
            }
            _ => Err(self.error_here("number, variable, function or '('")),
        }
    }
}

/// Parses `text` against a chart of dimension `dim` (variables `x1..x{dim}`).
pub fn parse(text: &str, dim: usize) -> Result<ScalarExpr, ParseError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(ParseError {
            line: 1,
            column: 1,
            kind: ParseErrorKind::Empty,
        });
    }
    let end = text
        .lines()
        .enumerate()
        .last()
        .map_or((1, 1), |(i, l)| (i + 1, l.chars().count() + 1));
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        dim,
        end,
    };
    let e = p.expr()?;
    if p.pos < toks.len() {
        return Err(p.error_here("operator or end of input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pos(text: &str) -> (usize, usize) {
        let e = parse(text, 3).unwrap_err();
        (e.line, e.column)
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse("x1 - x2 - x3", 3).unwrap();
        assert_eq!(e.to_string(), "((x1 - x2) - x3)");
        let e = parse("x1 + x2 * x3^2", 3).unwrap();
        assert_eq!(e.to_string(), "(x1 + (x2 * x3^2.0))");
        let e = parse("-x1^2", 3).unwrap();
        assert_eq!(e.to_string(), "neg(x1^2.0)");
    }

    #[test]
    fn positions_are_reported() {
        assert_eq!(pos("x1 + "), (1, 6));
        assert_eq!(pos("x1 + $"), (1, 6));
        assert_eq!(pos("x1 +\n  y2"), (2, 3));
        assert_eq!(pos("sin x1"), (1, 5));
        assert_eq!(pos("(x1"), (1, 4));
    }

    #[test]
    fn scientific_literals() {
        assert_eq!(parse("1e-7", 1).unwrap(), ScalarExpr::Num(1e-7));
        assert_eq!(parse("2.5E+3", 1).unwrap(), ScalarExpr::Num(2500.0));
        assert_eq!(parse(".5", 1).unwrap(), ScalarExpr::Num(0.5));
        assert!(parse("1.2.3", 1).is_err());
    }

    #[test]
    fn unknown_identifiers() {
        for bad in ["y1", "tan(x1)", "pi", "x", "x0", "x1a"] {
            let e = parse(bad, 3).unwrap_err();
            assert!(
                matches!(
                    e.kind,
                    ParseErrorKind::UnknownIdentifier(_)
                        | ParseErrorKind::VariableOutOfRange { .. }
                ),
                "{bad}: {e}"
            );
        }
    }
}
