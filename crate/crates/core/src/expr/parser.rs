use thiserror::Error;

use super::ast::{BinOp, Expr, Func};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("unknown identifier `{name}` at column {column}")]
    UnknownIdentifier { name: String, column: usize },
    #[error("function `{name}` takes {expected} argument(s), got {found} (column {column})")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        column: usize,
    },
    #[error("invalid parameter name `{0}`")]
    InvalidParameterName(String),
}

impl ParseError {
    /// 1-based column of the offending token, when the error has one.
    pub fn column(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { column, .. }
            | ParseError::UnknownIdentifier { column, .. }
            | ParseError::Arity { column, .. } => Some(*column),
            ParseError::InvalidParameterName(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    column: usize,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(name) => format!("identifier `{name}`"),
        Tok::Op(c) => format!("`{c}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::End => "end of input".into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let literal: String = chars[start..i].iter().collect();
            let value = literal.parse::<f64>().map_err(|_| ParseError::Syntax {
                column,
                message: format!("malformed number `{literal}`"),
            })?;
            tokens.push(Token {
                tok: Tok::Num(value),
                column,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            tokens.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                column,
            });
            continue;
        }
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            other => {
                return Err(ParseError::Syntax {
                    column,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        tokens.push(Token { tok, column });
        i += 1;
    }
    tokens.push(Token {
        tok: Tok::End,
        column: chars.len() + 1,
    });
    Ok(tokens)
}

/// True for names usable as surface parameters.
pub fn is_valid_parameter_name(name: &str) -> bool {
    let mut chars = name.chars();
    let head_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
    head_ok && chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && name != "pi" && Func::from_name(name).is_none()
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    params: [&'a str; 2],
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let token = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        token
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let token = self.peek();
        ParseError::Syntax {
            column: token.column,
            message: format!("expected {expected}, found {}", describe(&token.tok)),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek().tok == Tok::Op('-') {
            self.bump();
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek().tok == Tok::Op('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let token = self.peek().clone();
        match token.tok {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                if self.peek().tok != Tok::RParen {
                    return Err(self.unexpected("`)`"));
                }
                self.bump();
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                if self.peek().tok == Tok::LParen {
                    self.bump();
                    return self.call(&name, token.column);
                }
                if let Some(index) = self.params.iter().position(|p| *p == name) {
                    Ok(Expr::Param(index))
                } else if name == "pi" {
                    Ok(Expr::Pi)
                } else {
                    Err(ParseError::UnknownIdentifier {
                        name,
                        column: token.column,
                    })
                }
            }
            _ => Err(self.unexpected("an operand")),
        }
    }

    fn call(&mut self, name: &str, column: usize) -> Result<Expr, ParseError> {
        let func = Func::from_name(name).ok_or_else(|| ParseError::UnknownIdentifier {
            name: name.to_string(),
            column,
        })?;
        let mut args = vec![self.expr()?];
        while self.peek().tok == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        if self.peek().tok != Tok::RParen {
            return Err(self.unexpected("`,` or `)`"));
        }
        self.bump();
        let found = args.len();
        Expr::call(func, args).ok_or_else(|| ParseError::Arity {
            name: name.to_string(),
            expected: func.arity(),
            found,
            column,
        })
    }
}

/// Parses `text` against the expression grammar with the two given
/// parameter names.
pub fn parse_expression(text: &str, params: [&str; 2]) -> Result<Expr, ParseError> {
    for name in params {
        if !is_valid_parameter_name(name) {
            return Err(ParseError::InvalidParameterName(name.to_string()));
        }
    }
    if params[0] == params[1] {
        return Err(ParseError::InvalidParameterName(params[1].to_string()));
    }
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, pos: 0, params };
    if parser.peek().tok == Tok::End {
        return Err(ParseError::Syntax {
            column: 1,
            message: "empty expression".into(),
        });
    }
    let expr = parser.expr()?;
    if parser.peek().tok != Tok::End {
        return Err(parser.unexpected("an operator or end of input"));
    }
    Ok(expr)
}
