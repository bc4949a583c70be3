//! A tiny arithmetic expression grammar for pointwise fields.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr       := additive (('<'|'<='|'>'|'>='|'=='|'!=') additive)?
//! additive   := term (('+'|'-') term)*
//! term       := unary (('*'|'/') unary)*
//! unary      := '-' unary | power
//! power      := atom ('^' unary)?
//! atom       := number | ident | ident '(' expr {',' expr} ')' | '(' expr ')'
//! ```
//!
//! Variables are `x`, `y` (coordinates) and `s` (the modulus argument of a
//! custom Young function). Comparisons evaluate to 1 or 0, so indicators can
//! be written as `(x > 0.3) * (x < 0.6)`. `if(cond, a, b)` evaluates lazily,
//! which keeps expressions like `if(x > 0, x^(-0.25), 0)` free of NaN on the
//! untaken branch. Functions: `exp`, `log`, `abs`, `sqrt`, `min`, `max`,
//! `pow`, `if`; constants: `pi`, `e`.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{message} at column {column}")]
pub struct ExprError {
    pub message: String,
    pub column: usize,
}

fn err<T>(message: impl Into<String>, column: usize) -> Result<T, ExprError> {
    Err(ExprError { message: message.into(), column })
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Var {
    X,
    Y,
    S,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

#[derive(Clone, Debug)]
enum Node {
    Const(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Exp(Box<Node>),
    Log(Box<Node>),
    Abs(Box<Node>),
    Sqrt(Box<Node>),
    Min(Box<Node>, Box<Node>),
    Max(Box<Node>, Box<Node>),
    If(Box<Node>, Box<Node>, Box<Node>),
}

/// Evaluation environment: coordinates and the scalar argument `s`.
#[derive(Clone, Copy, Debug, Default)]
pub struct EvalContext {
    pub x: f64,
    pub y: f64,
    pub s: f64,
}

/// A parsed expression, retaining its source text for display and reports.
#[derive(Clone, Debug)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr, ExprError> {
        let tokens = lex(source)?;
        let mut parser = Parser { tokens, pos: 0 };
        let root = parser.expression()?;
        match parser.peek() {
            Some(t) => err(format!("unexpected trailing token `{}`", t.text), t.column),
            None => Ok(Expr { source: source.trim().to_string(), root }),
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, ctx: &EvalContext) -> f64 {
        eval_node(&self.root, ctx)
    }

    /// Whether the expression reads the modulus variable `s`.
    pub fn uses_s(&self) -> bool {
        uses_s(&self.root)
    }
}

fn eval_node(n: &Node, ctx: &EvalContext) -> f64 {
    match n {
        Node::Const(c) => *c,
        Node::Var(Var::X) => ctx.x,
        Node::Var(Var::Y) => ctx.y,
        Node::Var(Var::S) => ctx.s,
        Node::Neg(a) => -eval_node(a, ctx),
        Node::Bin(op, a, b) => {
            let a = eval_node(a, ctx);
            let b = eval_node(b, ctx);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Pow => a.powf(b),
                BinOp::Lt => f64::from(a < b),
                BinOp::Le => f64::from(a <= b),
                BinOp::Gt => f64::from(a > b),
                BinOp::Ge => f64::from(a >= b),
                BinOp::Eq => f64::from(a == b),
                BinOp::Ne => f64::from(a != b),
            }
        }
        Node::Exp(a) => eval_node(a, ctx).exp(),
        Node::Log(a) => eval_node(a, ctx).ln(),
        Node::Abs(a) => eval_node(a, ctx).abs(),
        Node::Sqrt(a) => eval_node(a, ctx).sqrt(),
        Node::Min(a, b) => eval_node(a, ctx).min(eval_node(b, ctx)),
        Node::Max(a, b) => eval_node(a, ctx).max(eval_node(b, ctx)),
        Node::If(c, a, b) => {
            if eval_node(c, ctx) != 0.0 {
                eval_node(a, ctx)
            } else {
                eval_node(b, ctx)
            }
        }
    }
}

fn uses_s(n: &Node) -> bool {
    match n {
        Node::Const(_) => false,
        Node::Var(v) => *v == Var::S,
        Node::Neg(a) | Node::Exp(a) | Node::Log(a) | Node::Abs(a) | Node::Sqrt(a) => uses_s(a),
        Node::Bin(_, a, b) | Node::Min(a, b) | Node::Max(a, b) => uses_s(a) || uses_s(b),
        Node::If(c, a, b) => uses_s(c) || uses_s(a) || uses_s(b),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
}

#[derive(Clone, Debug)]
struct Token {
    kind: TokenKind,
    text: String,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let col = i + 1;
        let single = |kind: TokenKind| Token { kind, text: c.to_string(), column: col };
        match c {
            ' ' | '\t' | '\r' | '\n' => i += 1,
            '+' => {
                tokens.push(single(TokenKind::Plus));
                i += 1;
            }
            '-' => {
                tokens.push(single(TokenKind::Minus));
                i += 1;
            }
            '*' => {
                tokens.push(single(TokenKind::Star));
                i += 1;
            }
            '/' => {
                tokens.push(single(TokenKind::Slash));
                i += 1;
            }
            '^' => {
                tokens.push(single(TokenKind::Caret));
                i += 1;
            }
            '(' => {
                tokens.push(single(TokenKind::LParen));
                i += 1;
            }
            ')' => {
                tokens.push(single(TokenKind::RParen));
                i += 1;
            }
            ',' => {
                tokens.push(single(TokenKind::Comma));
                i += 1;
            }
            '<' | '>' | '=' | '!' => {
                let two = bytes.get(i + 1).map(|&b| b as char) == Some('=');
                let (kind, len) = match (c, two) {
                    ('<', true) => (TokenKind::Le, 2),
                    ('<', false) => (TokenKind::Lt, 1),
                    ('>', true) => (TokenKind::Ge, 2),
                    ('>', false) => (TokenKind::Gt, 1),
                    ('=', true) => (TokenKind::EqEq, 2),
                    ('!', true) => (TokenKind::Ne, 2),
                    _ => return err(format!("unexpected character `{c}`"), col),
                };
                tokens.push(Token { kind, text: src[i..i + len].to_string(), column: col });
                i += len;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && matches!(bytes[i] as char, '0'..='9' | '.') {
                    i += 1;
                }
                if i < bytes.len() && matches!(bytes[i] as char, 'e' | 'E') {
                    let saved = i;
                    i += 1;
                    if i < bytes.len() && matches!(bytes[i] as char, '+' | '-') {
                        i += 1;
                    }
                    if i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                        while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                    } else {
                        i = saved; // `e` was the Euler constant, not an exponent
                    }
                }
                let text = &src[start..i];
                match text.parse::<f64>() {
                    Ok(v) => tokens.push(Token {
                        kind: TokenKind::Num(v),
                        text: text.to_string(),
                        column: start + 1,
                    }),
                    Err(_) => return err(format!("malformed number `{text}`"), start + 1),
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] as char == '_')
                {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident,
                    text: src[start..i].to_string(),
                    column: start + 1,
                });
            }
            other => return err(format!("unexpected character `{other}`"), col),
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<(), ExprError> {
        match self.next() {
            Some(t) if t.kind == kind => Ok(()),
            Some(t) => err(format!("expected {what}, found `{}`", t.text), t.column),
            None => err(format!("expected {what}, found end of input"), self.end_column()),
        }
    }

    fn end_column(&self) -> usize {
        self.tokens.last().map(|t| t.column + t.text.len()).unwrap_or(1)
    }

    fn expression(&mut self) -> Result<Node, ExprError> {
        let lhs = self.additive()?;
        let op = match self.peek().map(|t| t.kind.clone()) {
            Some(TokenKind::Lt) => BinOp::Lt,
            Some(TokenKind::Le) => BinOp::Le,
            Some(TokenKind::Gt) => BinOp::Gt,
            Some(TokenKind::Ge) => BinOp::Ge,
            Some(TokenKind::EqEq) => BinOp::Eq,
            Some(TokenKind::Ne) => BinOp::Ne,
            _ => return Ok(lhs),
        };
        self.pos += 1;
        let rhs = self.additive()?;
        Ok(Node::Bin(op, Box::new(lhs), Box::new(rhs)))
    }

    fn additive(&mut self) -> Result<Node, ExprError> {
        let mut node = self.term()?;
        loop {
            if self.eat(&TokenKind::Plus) {
                node = Node::Bin(BinOp::Add, Box::new(node), Box::new(self.term()?));
            } else if self.eat(&TokenKind::Minus) {
                node = Node::Bin(BinOp::Sub, Box::new(node), Box::new(self.term()?));
            } else {
                return Ok(node);
            }
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut node = self.unary()?;
        loop {
            if self.eat(&TokenKind::Star) {
                node = Node::Bin(BinOp::Mul, Box::new(node), Box::new(self.unary()?));
            } else if self.eat(&TokenKind::Slash) {
                node = Node::Bin(BinOp::Div, Box::new(node), Box::new(self.unary()?));
            } else {
                return Ok(node);
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.eat(&TokenKind::Minus) {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.eat(&TokenKind::Caret) {
            let exp = self.unary()?;
            Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let t = match self.next() {
            Some(t) => t,
            None => return err("expected expression, found end of input", self.end_column()),
        };
        match t.kind {
            TokenKind::Num(v) => Ok(Node::Const(v)),
            TokenKind::LParen => {
                let inner = self.expression()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            TokenKind::Ident => {
                if self.eat(&TokenKind::LParen) {
                    let mut args = vec![self.expression()?];
                    while self.eat(&TokenKind::Comma) {
                        args.push(self.expression()?);
                    }
                    self.expect(TokenKind::RParen, "`)`")?;
                    self.call(&t, args)
                } else {
                    match t.text.as_str() {
                        "x" => Ok(Node::Var(Var::X)),
                        "y" => Ok(Node::Var(Var::Y)),
                        "s" => Ok(Node::Var(Var::S)),
                        "pi" => Ok(Node::Const(std::f64::consts::PI)),
                        "e" => Ok(Node::Const(std::f64::consts::E)),
                        other => err(format!("unknown identifier `{other}`"), t.column),
                    }
                }
            }
            _ => err(format!("unexpected token `{}`", t.text), t.column),
        }
    }

    fn call(&mut self, name: &Token, mut args: Vec<Node>) -> Result<Node, ExprError> {
        let arity = |n: usize| -> Result<(), ExprError> {
            if args.len() == n {
                Ok(())
            } else {
                err(
                    format!("`{}` takes {} argument(s), got {}", name.text, n, args.len()),
                    name.column,
                )
            }
        };
        let one = |args: &mut Vec<Node>| Box::new(args.remove(0));
        match name.text.as_str() {
            "exp" => {
                arity(1)?;
                Ok(Node::Exp(one(&mut args)))
            }
            "log" => {
                arity(1)?;
                Ok(Node::Log(one(&mut args)))
            }
            "abs" => {
                arity(1)?;
                Ok(Node::Abs(one(&mut args)))
            }
            "sqrt" => {
                arity(1)?;
                Ok(Node::Sqrt(one(&mut args)))
            }
            "min" => {
                arity(2)?;
                let a = one(&mut args);
                Ok(Node::Min(a, one(&mut args)))
            }
            "max" => {
                arity(2)?;
                let a = one(&mut args);
                Ok(Node::Max(a, one(&mut args)))
            }
            "pow" => {
                arity(2)?;
                let a = one(&mut args);
                Ok(Node::Bin(BinOp::Pow, a, one(&mut args)))
            }
            "if" => {
                arity(3)?;
                let c = one(&mut args);
                let a = one(&mut args);
                Ok(Node::If(c, a, one(&mut args)))
            }
            other => err(format!("unknown function `{other}`"), name.column),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(src: &str, x: f64, s: f64) -> f64 {
        Expr::parse(src).unwrap().eval(&EvalContext { x, y: 0.0, s })
    }

    #[test]
    fn precedence_and_power() {
        assert_eq!(at("2 + 3 * 4", 0.0, 0.0), 14.0);
        assert_eq!(at("2 ^ 3 ^ 2", 0.0, 0.0), 512.0); // right-associative
        assert_eq!(at("-2 ^ 2", 0.0, 0.0), -4.0);
        assert_eq!(at("x ^ (-1/4)", 16.0, 0.0), 0.5);
    }

    #[test]
    fn functions_and_constants() {
        assert!((at("exp(1) - e", 0.0, 0.0)).abs() < 1e-15);
        assert_eq!(at("min(3, max(1, 2))", 0.0, 0.0), 2.0);
        assert_eq!(at("sqrt(s)", 0.0, 9.0), 3.0);
        assert!((at("log(e)", 0.0, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn comparisons_build_indicators() {
        let chi = Expr::parse("(x > 0.3) * (x < 0.6)").unwrap();
        assert_eq!(chi.eval(&EvalContext { x: 0.5, ..Default::default() }), 1.0);
        assert_eq!(chi.eval(&EvalContext { x: 0.7, ..Default::default() }), 0.0);
    }

    #[test]
    fn if_is_lazy() {
        // The untaken branch would be NaN at x = -1.
        assert_eq!(at("if(x > 0, x^(-0.5), 0)", -1.0, 0.0), 0.0);
        assert_eq!(at("if(x > 0, x^(-0.5), 0)", 4.0, 0.0), 0.5);
    }

    #[test]
    fn errors_carry_columns() {
        let e = Expr::parse("2 + foo").unwrap_err();
        assert_eq!(e.column, 5);
        assert!(Expr::parse("min(1)").is_err());
        assert!(Expr::parse("2 +").is_err());
        assert!(Expr::parse("2 2").is_err());
    }

    #[test]
    fn uses_s_detection() {
        assert!(Expr::parse("s^2").unwrap().uses_s());
        assert!(!Expr::parse("2 + x").unwrap().uses_s());
    }

    #[test]
    fn scientific_notation_vs_euler() {
        assert_eq!(at("1e3", 0.0, 0.0), 1000.0);
        assert!(Expr::parse("2e").is_err()); // lexes as `2` then the constant `e`
        assert_eq!(at("1e-2", 0.0, 0.0), 0.01);
        assert_eq!(at("2*e", 0.0, 0.0), 2.0 * std::f64::consts::E);
    }
}
