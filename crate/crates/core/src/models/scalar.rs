//! Scalar functions of time: constants, small expressions, tables, closures.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone)]
pub enum ScalarFn {
    Constant(f64),
    Expression(Expr),
    /// Piecewise-linear interpolation, constant beyond the ends.
    Table { times: Vec<f64>, values: Vec<f64> },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarFn::Constant(c) => write!(f, "Constant({c})"),
            ScalarFn::Expression(e) => write!(f, "Expression({})", e.source),
            ScalarFn::Table { times, .. } => write!(f, "Table({} points)", times.len()),
            ScalarFn::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl ScalarFn {
    pub fn constant(c: f64) -> Self {
        ScalarFn::Constant(c)
    }

    pub fn parse(source: &str) -> Result<Self> {
        Ok(ScalarFn::Expression(Expr::parse(source)?))
    }

    pub fn table(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::Parse("table needs matching, non-empty time and value lists".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parse("table times must be strictly increasing".into()));
        }
        Ok(ScalarFn::Table { times, values })
    }

    pub fn custom<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        ScalarFn::Custom(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ScalarFn::Constant(c) => *c,
            ScalarFn::Expression(e) => e.eval(t),
            ScalarFn::Table { times, values } => {
                let n = times.len();
                if t <= times[0] {
                    return values[0];
                }
                if t >= times[n - 1] {
                    return values[n - 1];
                }
                let k = times.partition_point(|&s| s <= t);
                let w = (t - times[k - 1]) / (times[k] - times[k - 1]);
                values[k - 1] * (1.0 - w) + values[k] * w
            }
            ScalarFn::Custom(f) => f(t),
        }
    }
}

/// JSON form: a number, an expression string, or a table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarFnJson {
    Number(f64),
    Expression(String),
    Table { t: Vec<f64>, values: Vec<f64> },
}

impl TryFrom<ScalarFnJson> for ScalarFn {
    type Error = Error;

    fn try_from(j: ScalarFnJson) -> Result<Self> {
        match j {
            ScalarFnJson::Number(c) => Ok(ScalarFn::Constant(c)),
            ScalarFnJson::Expression(s) => ScalarFn::parse(&s),
            ScalarFnJson::Table { t, values } => ScalarFn::table(t, values),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var,
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Exp,
    Ln,
    Sqrt,
}

/// Expression in `t` with `+ - * / ^`, unary minus, parentheses and the
/// functions `exp`, `ln` (alias `log`), `sqrt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        let tokens = tokenize(source)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.sum()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Parse(format!("unexpected {:?} in {source:?}", p.tokens[p.pos])));
        }
        Ok(Self { source: source.to_string(), root })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, t: f64) -> f64 {
        eval(&self.root, t)
    }
}

fn eval(n: &Node, t: f64) -> f64 {
    match n {
        Node::Num(c) => *c,
        Node::Var => t,
        Node::Neg(a) => -eval(a, t),
        Node::Bin(op, a, b) => {
            let (x, y) = (eval(a, t), eval(b, t));
            match op {
                '+' => x + y,
                '-' => x - y,
                '*' => x * y,
                '/' => x / y,
                _ => x.powf(y),
            }
        }
        Node::Call(f, a) => {
            let x = eval(a, t);
            match f {
                Func::Exp => x.exp(),
                Func::Ln => x.ln(),
                Func::Sqrt => x.sqrt(),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    Open,
    Close,
}

fn tokenize(s: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = s.chars().collect();
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
            let v = text.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {text:?}")))?;
            out.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else if c == '(' {
            out.push(Token::Open);
            i += 1;
        } else if c == ')' {
            out.push(Token::Close);
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character {c:?} in {s:?}")));
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("empty expression".into()));
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn sum(&mut self) -> Result<Node> {
        let mut lhs = self.product()?;
        while let Some(Token::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.product()?));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(Token::Op('-')) => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some(Token::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    // Right-associative; binds tighter than unary minus on its left.
    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Node::Bin('^', Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let tok = self.peek().cloned().ok_or_else(|| Error::Parse("unexpected end of expression".into()))?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Node::Num(v)),
            Token::Open => {
                let inner = self.sum()?;
                match self.peek() {
                    Some(Token::Close) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(Error::Parse("missing closing parenthesis".into())),
                }
            }
            Token::Ident(name) => {
                let func = match name.as_str() {
                    "t" => return Ok(Node::Var),
                    "pi" => return Ok(Node::Num(std::f64::consts::PI)),
                    "exp" => Func::Exp,
                    "ln" | "log" => Func::Ln,
                    "sqrt" => Func::Sqrt,
                    other => return Err(Error::Parse(format!("unknown identifier {other:?}"))),
                };
                match self.peek() {
                    Some(Token::Open) => {
                        self.pos += 1;
                        let arg = self.sum()?;
                        match self.peek() {
                            Some(Token::Close) => {
                                self.pos += 1;
                                Ok(Node::Call(func, Box::new(arg)))
                            }
                            _ => Err(Error::Parse(format!("missing ')' after {name}("))),
                        }
                    }
                    _ => Err(Error::Parse(format!("{name} needs a parenthesized argument"))),
                }
            }
            other => Err(Error::Parse(format!("unexpected {other:?}"))),
        }
    }
}
