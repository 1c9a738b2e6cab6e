//! Arithmetic expressions in `x1`, `x2`, `z` with second-order forward-mode
//! differentiation.
//!
//! Grammar (LL(1)):
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := ("-" | "+") unary | power
//! power   := primary ("^" unary)?
//! primary := NUMBER | VAR | FUNC "(" expr ")" | "(" expr ")"
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x1^2`
//! is `-(x1^2)`.

use std::fmt;

use crate::error::{Error, Result};

/// Independent variables: `x1`, `x2` and `z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X1 = 0,
    X2 = 1,
    Z = 2,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::X1 => "x1",
            Var::X2 => "x2",
            Var::Z => "z",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Tanh,
    Sqrt,
    Abs,
}

const FUNCS: [(&str, Func); 7] = [
    ("exp", Func::Exp),
    ("log", Func::Log),
    ("sin", Func::Sin),
    ("cos", Func::Cos),
    ("tanh", Func::Tanh),
    ("sqrt", Func::Sqrt),
    ("abs", Func::Abs),
];

impl Func {
    fn name(self) -> &'static str {
        FUNCS.iter().find(|(_, f)| *f == self).map(|(n, _)| *n).unwrap_or("?")
    }

    /// f, f′, f″ at `x`.
    fn eval3(self, x: f64) -> [f64; 3] {
        match self {
            Func::Exp => {
                let e = x.exp();
                [e, e, e]
            }
            Func::Log => [x.ln(), 1.0 / x, -1.0 / (x * x)],
            Func::Sin => {
                let (s, c) = x.sin_cos();
                [s, c, -s]
            }
            Func::Cos => {
                let (s, c) = x.sin_cos();
                [c, -s, -c]
            }
            Func::Tanh => {
                let t = x.tanh();
                let d = 1.0 - t * t;
                [t, d, -2.0 * t * d]
            }
            Func::Sqrt => {
                let r = x.sqrt();
                [r, 0.5 / r, -0.25 / (r * x)]
            }
            Func::Abs => [x.abs(), if x >= 0.0 { 1.0 } else { -1.0 }, 0.0],
        }
    }

    fn eval(self, x: f64) -> f64 {
        match self {
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tanh => x.tanh(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Const(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// Value, gradient and Hessian with respect to `(x1, x2, z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: [[f64; 3]; 3],
}

impl Jet {
    pub fn constant(value: f64) -> Self {
        Self { value, grad: [0.0; 3], hess: [[0.0; 3]; 3] }
    }

    pub fn variable(v: Var, value: f64) -> Self {
        let mut j = Self::constant(value);
        j.grad[v as usize] = 1.0;
        j
    }

    fn add(&self, o: &Jet, sign: f64) -> Jet {
        let mut r = *self;
        r.value += sign * o.value;
        for i in 0..3 {
            r.grad[i] += sign * o.grad[i];
            for j in 0..3 {
                r.hess[i][j] += sign * o.hess[i][j];
            }
        }
        r
    }

    fn mul(&self, o: &Jet) -> Jet {
        let mut r = Jet::constant(self.value * o.value);
        for i in 0..3 {
            r.grad[i] = self.grad[i] * o.value + o.grad[i] * self.value;
            for j in 0..3 {
                r.hess[i][j] = self.hess[i][j] * o.value
                    + o.hess[i][j] * self.value
                    + self.grad[i] * o.grad[j]
                    + o.grad[i] * self.grad[j];
            }
        }
        r
    }

    /// `f ∘ self` given `[f, f′, f″]` at `self.value`.
    fn chain(&self, f: [f64; 3]) -> Jet {
        let mut r = Jet::constant(f[0]);
        for i in 0..3 {
            r.grad[i] = f[1] * self.grad[i];
            for j in 0..3 {
                r.hess[i][j] = f[1] * self.hess[i][j] + f[2] * self.grad[i] * self.grad[j];
            }
        }
        r
    }

    fn recip(&self) -> Jet {
        let x = self.value;
        self.chain([1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)])
    }

    fn powc(&self, c: f64) -> Jet {
        let x = self.value;
        if c == c.round() && c.abs() < 1024.0 {
            let k = c as i32;
            let f0 = x.powi(k);
            let f1 = if k == 0 { 0.0 } else { c * x.powi(k - 1) };
            let f2 = if k == 0 || k == 1 { 0.0 } else { c * (c - 1.0) * x.powi(k - 2) };
            self.chain([f0, f1, f2])
        } else {
            self.chain([x.powf(c), c * x.powf(c - 1.0), c * (c - 1.0) * x.powf(c - 2.0)])
        }
    }
}

/// A parsed expression.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Expr {
    pub fn parse(text: &str) -> Result<Self> {
        let tokens = lex(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.expr()?;
        p.expect_end()?;
        Ok(Self { source: text.to_string(), root })
    }

    pub fn constant(c: f64) -> Self {
        Self { source: format!("{c}"), root: Node::Const(c) }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, x1: f64, x2: f64, z: f64) -> f64 {
        eval_node(&self.root, [x1, x2, z])
    }

    pub fn jet(&self, x1: f64, x2: f64, z: f64) -> Jet {
        jet_node(&self.root, [x1, x2, z])
    }

    pub fn depends_on(&self, v: Var) -> bool {
        fn walk(n: &Node, v: Var) -> bool {
            match n {
                Node::Const(_) => false,
                Node::Var(w) => *w == v,
                Node::Neg(a) | Node::Call(_, a) => walk(a, v),
                Node::Bin(_, a, b) => walk(a, v) || walk(b, v),
            }
        }
        walk(&self.root, v)
    }

    pub fn depends_on_x(&self) -> bool {
        self.depends_on(Var::X1) || self.depends_on(Var::X2)
    }

    /// `Some(c)` if the expression contains no variables.
    pub fn as_constant(&self) -> Option<f64> {
        if self.depends_on_x() || self.depends_on(Var::Z) {
            None
        } else {
            Some(self.eval(0.0, 0.0, 0.0))
        }
    }
}

fn eval_node(n: &Node, v: [f64; 3]) -> f64 {
    match n {
        Node::Const(c) => *c,
        Node::Var(w) => v[*w as usize],
        Node::Neg(a) => -eval_node(a, v),
        Node::Call(f, a) => f.eval(eval_node(a, v)),
        Node::Bin(op, a, b) => {
            let x = eval_node(a, v);
            let y = eval_node(b, v);
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => x / y,
                BinOp::Pow => match b.as_ref() {
                    Node::Const(c) if *c == c.round() && c.abs() < 1024.0 => x.powi(*c as i32),
                    _ => x.powf(y),
                },
            }
        }
    }
}

fn jet_node(n: &Node, v: [f64; 3]) -> Jet {
    match n {
        Node::Const(c) => Jet::constant(*c),
        Node::Var(w) => Jet::variable(*w, v[*w as usize]),
        Node::Neg(a) => Jet::constant(0.0).add(&jet_node(a, v), -1.0),
        Node::Call(f, a) => {
            let j = jet_node(a, v);
            j.chain(f.eval3(j.value))
        }
        Node::Bin(op, a, b) => {
            let x = jet_node(a, v);
            match op {
                BinOp::Pow => {
                    if let Node::Const(c) = b.as_ref() {
                        return x.powc(*c);
                    }
                    let y = jet_node(b, v);
                    // x^y = exp(y ln x)
                    let lx = x.chain(Func::Log.eval3(x.value));
                    let e = y.mul(&lx);
                    e.chain(Func::Exp.eval3(e.value))
                }
                _ => {
                    let y = jet_node(b, v);
                    match op {
                        BinOp::Add => x.add(&y, 1.0),
                        BinOp::Sub => x.add(&y, -1.0),
                        BinOp::Mul => x.mul(&y),
                        BinOp::Div => x.mul(&y.recip()),
                        BinOp::Pow => unreachable!(),
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' | '−' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            out.push((pos, t));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i].1 == 'e' || chars[i].1 == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j].1 == '+' || chars[j].1 == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].1.is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].1.is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit: String = chars[start..i].iter().map(|(_, c)| *c).collect();
            let v: f64 = lit.parse().map_err(|_| Error::Syntax {
                position: pos,
                expected: vec!["number".into()],
                found: format!("'{lit}'"),
            })?;
            out.push((pos, Tok::Num(v)));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            let name: String = chars[start..i].iter().map(|(_, c)| *c).collect();
            out.push((pos, Tok::Ident(name)));
            continue;
        }
        return Err(Error::Syntax {
            position: pos,
            expected: primary_start(),
            found: format!("'{c}'"),
        });
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

fn primary_start() -> Vec<String> {
    vec!["number".into(), "variable".into(), "function".into(), "'('".into(), "'-'".into()]
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].1
    }

    fn at(&self) -> usize {
        self.tokens[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].1.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: Vec<String>) -> Error {
        Error::Syntax {
            position: self.at(),
            expected,
            found: self.peek().describe(),
        }
    }

    fn expect_end(&self) -> Result<()> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            Err(self.error(vec!["operator".into(), "end of input".into()]))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exp = self.unary()?;
            let exp = match exp {
                Node::Neg(inner) => match *inner {
                    Node::Const(c) => Node::Const(-c),
                    other => Node::Neg(Box::new(other)),
                },
                other => other,
            };
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        let pos = self.at();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Node::Const(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error(vec!["')'".into(), "operator".into()]));
                }
                self.bump();
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                for v in [Var::X1, Var::X2, Var::Z] {
                    if name == v.name() {
                        return Ok(Node::Var(v));
                    }
                }
                if let Some((_, f)) = FUNCS.iter().find(|(n, _)| *n == name) {
                    if *self.peek() != Tok::LParen {
                        return Err(self.error(vec!["'('".into()]));
                    }
                    self.bump();
                    let arg = self.expr()?;
                    if *self.peek() != Tok::RParen {
                        return Err(self.error(vec!["')'".into(), "operator".into()]));
                    }
                    self.bump();
                    return Ok(Node::Call(*f, Box::new(arg)));
                }
                Err(Error::UnknownIdentifier { name, position: pos })
            }
            _ => Err(self.error(primary_start())),
        }
    }
}

impl fmt::Display for Func {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
