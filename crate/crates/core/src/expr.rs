//! A minimal arithmetic expression language for manifest-defined fields.
//!
//! Grammar (precedence low to high): `+ -`, `* /`, unary `-`, `^` (right associative),
//! function calls `sin cos tan exp log sqrt`, the constants `pi` and `e`, numeric
//! literals and coordinate names.

use std::fmt;

use crate::error::{GeometryError, Result};

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Number(f64),
    Var(usize),
    Neg(Box<Node>),
    Binary(Op, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
        }
    }
}

/// A parsed expression bound to an ordered list of variable names.
#[derive(Clone, Debug)]
pub struct Expr {
    source: String,
    root: Node,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Expr {
    pub fn parse(source: &str, variables: &[String]) -> Result<Self> {
        let tokens = tokenize(source)?;
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            variables,
        };
        let root = parser.expression()?;
        if parser.pos != tokens.len() {
            return Err(GeometryError::Expression(format!(
                "unexpected trailing input in `{source}`"
            )));
        }
        Ok(Self {
            source: source.to_string(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, vars: &[f64]) -> f64 {
        eval(&self.root, vars)
    }

    /// True if the expression is the literal number zero.
    pub fn is_zero_literal(&self) -> bool {
        matches!(self.root, Node::Number(x) if x == 0.0)
    }
}

fn eval(node: &Node, vars: &[f64]) -> f64 {
    match node {
        Node::Number(x) => *x,
        Node::Var(i) => vars[*i],
        Node::Neg(a) => -eval(a, vars),
        Node::Binary(op, a, b) => {
            let (x, y) = (eval(a, vars), eval(b, vars));
            match op {
                Op::Add => x + y,
                Op::Sub => x - y,
                Op::Mul => x * y,
                Op::Div => x / y,
                Op::Pow => {
                    if y.fract() == 0.0 && y.abs() < 64.0 {
                        x.powi(y as i32)
                    } else {
                        x.powf(y)
                    }
                }
            }
        }
        Node::Call(f, a) => f.apply(eval(a, vars)),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Symbol(char),
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part: 1e-5, 2.5E3
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
            let text: String = chars[start..i].iter().collect();
            let value = text
                .parse::<f64>()
                .map_err(|_| GeometryError::Expression(format!("bad number `{text}`")))?;
            out.push(Token::Number(value));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Token::Symbol(c));
            i += 1;
        } else {
            return Err(GeometryError::Expression(format!(
                "unexpected character `{c}` in `{src}`"
            )));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    variables: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, sym: char) -> bool {
        if self.peek() == Some(&Token::Symbol(sym)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expression(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                Op::Add
            } else if self.eat('-') {
                Op::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                Op::Mul
            } else if self.eat('/') {
                Op::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat('^') {
            // right associative, and binds tighter than a leading minus on the base
            let exponent = self.unary()?;
            return Ok(Node::Binary(Op::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let token = self
            .peek()
            .cloned()
            .ok_or_else(|| GeometryError::Expression("unexpected end of expression".into()))?;
        self.pos += 1;
        match token {
            Token::Number(x) => Ok(Node::Number(x)),
            Token::Symbol('(') => {
                let inner = self.expression()?;
                if !self.eat(')') {
                    return Err(GeometryError::Expression("missing `)`".into()));
                }
                Ok(inner)
            }
            Token::Ident(name) => {
                if let Some(idx) = self.variables.iter().position(|v| *v == name) {
                    return Ok(Node::Var(idx));
                }
                match name.as_str() {
                    "pi" => return Ok(Node::Number(std::f64::consts::PI)),
                    "e" => return Ok(Node::Number(std::f64::consts::E)),
                    _ => {}
                }
                let func = Func::from_name(&name).ok_or_else(|| {
                    GeometryError::Expression(format!("unknown identifier `{name}`"))
                })?;
                if !self.eat('(') {
                    return Err(GeometryError::Expression(format!(
                        "function `{name}` needs an argument in parentheses"
                    )));
                }
                let arg = self.expression()?;
                if !self.eat(')') {
                    return Err(GeometryError::Expression("missing `)`".into()));
                }
                Ok(Node::Call(func, Box::new(arg)))
            }
            Token::Symbol(c) => Err(GeometryError::Expression(format!("unexpected `{c}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars() -> Vec<String> {
        vec!["x".into(), "y".into()]
    }

    fn ev(src: &str, x: f64, y: f64) -> f64 {
        Expr::parse(src, &vars()).unwrap().eval(&[x, y])
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", 0.0, 0.0), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", 0.0, 0.0), 512.0);
        assert_eq!(ev("-x^2", 3.0, 0.0), -9.0);
        assert_eq!(ev("(1 - 2) - 3", 0.0, 0.0), -4.0);
        assert_eq!(ev("8 / 4 / 2", 0.0, 0.0), 1.0);
        assert_eq!(ev("2e-1 * 10", 0.0, 0.0), 2.0);
    }

    #[test]
    fn functions_constants_and_coordinates() {
        let v = ev("1 + 0.3*sin(x)*sin(y)", 0.5, 1.5);
        assert!((v - (1.0 + 0.3 * 0.5_f64.sin() * 1.5_f64.sin())).abs() < 1e-15);
        assert!((ev("cos(pi)", 0.0, 0.0) + 1.0).abs() < 1e-15);
        assert!((ev("log(e)", 0.0, 0.0) - 1.0).abs() < 1e-15);
        assert!((ev("exp(x) * sqrt(y)", 1.0, 4.0) - 2.0 * 1f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in ["1 +", "sin x", "(x", "z + 1", "x $ y", "foo(1)"] {
            assert!(Expr::parse(bad, &vars()).is_err(), "{bad}");
        }
    }
}
