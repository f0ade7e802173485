//! A small arithmetic expression language used for user-defined metrics and
//! curve coordinates.
//!
//! Grammar (usual precedence, `^` is right associative and binds tighter than
//! unary minus):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers are the variables `r`, `phi`, `t`, the constants `pi` and `e`,
//! and the functions `sin cos tan sinh cosh tanh exp ln sqrt`.
//! Expressions can be differentiated symbolically, which is how charts and
//! curves obtain exact derivatives.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("unexpected character '{ch}' at offset {pos}")]
    UnexpectedChar { ch: char, pos: usize },
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("unexpected token '{token}' at offset {pos}")]
    UnexpectedToken { token: String, pos: usize },
    #[error("unknown identifier '{0}'")]
    UnknownIdent(String),
    #[error("variable '{var}' is not allowed here (allowed: {allowed})")]
    ForbiddenVar { var: String, allowed: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    R,
    Phi,
    T,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::R => "r",
            Var::Phi => "phi",
            Var::T => "t",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
            Func::Exp => x.exp(),
            Func::Ln => x.ln(),
            Func::Sqrt => x.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Variable bindings for evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Env {
    pub r: f64,
    pub phi: f64,
    pub t: f64,
}

impl Env {
    pub fn chart(r: f64, phi: f64) -> Self {
        Env { r, phi, t: 0.0 }
    }

    pub fn param(t: f64) -> Self {
        Env { r: 0.0, phi: 0.0, t }
    }
}

fn num(v: f64) -> Expr {
    Expr::Num(v)
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => num(x + y),
        (Expr::Num(x), _) if *x == 0.0 => b,
        (_, Expr::Num(y)) if *y == 0.0 => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => num(x - y),
        (_, Expr::Num(y)) if *y == 0.0 => a,
        (Expr::Num(x), _) if *x == 0.0 => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => num(x * y),
        (Expr::Num(x), _) | (_, Expr::Num(x)) if *x == 0.0 => num(0.0),
        (Expr::Num(x), _) if *x == 1.0 => b,
        (_, Expr::Num(y)) if *y == 1.0 => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), _) if *x == 0.0 => num(0.0),
        (_, Expr::Num(y)) if *y == 1.0 => a,
        (Expr::Num(x), Expr::Num(y)) => num(x / y),
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(x) => num(-x),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Expr::Num(y)) if *y == 0.0 => num(1.0),
        (_, Expr::Num(y)) if *y == 1.0 => a,
        (Expr::Num(x), Expr::Num(y)) => num(x.powf(*y)),
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    match a {
        Expr::Num(x) => num(f.apply(x)),
        other => Expr::Call(f, Box::new(other)),
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        let tokens = tokenize(src)?;
        let mut parser = Parser { tokens, pos: 0 };
        let expr = parser.expr()?;
        match parser.peek() {
            None => Ok(expr),
            Some((tok, pos)) => Err(ExprError::UnexpectedToken {
                token: tok.to_string(),
                pos: *pos,
            }),
        }
    }

    /// Parses and checks that only the listed variables occur.
    pub fn parse_with_vars(src: &str, allowed: &[Var]) -> Result<Expr, ExprError> {
        let e = Expr::parse(src)?;
        let mut bad = None;
        e.visit_vars(&mut |v| {
            if !allowed.contains(&v) && bad.is_none() {
                bad = Some(v);
            }
        });
        match bad {
            None => Ok(e),
            Some(v) => Err(ExprError::ForbiddenVar {
                var: v.name().to_string(),
                allowed: allowed
                    .iter()
                    .map(|v| v.name())
                    .collect::<Vec<_>>()
                    .join(", "),
            }),
        }
    }

    fn visit_vars(&self, f: &mut impl FnMut(Var)) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => f(*v),
            Expr::Neg(a) | Expr::Call(_, a) => a.visit_vars(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }

    pub fn depends_on(&self, var: Var) -> bool {
        let mut found = false;
        self.visit_vars(&mut |v| found |= v == var);
        found
    }

    pub fn eval(&self, env: &Env) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::R) => env.r,
            Expr::Var(Var::Phi) => env.phi,
            Expr::Var(Var::T) => env.t,
            Expr::Neg(a) => -a.eval(env),
            Expr::Add(a, b) => a.eval(env) + b.eval(env),
            Expr::Sub(a, b) => a.eval(env) - b.eval(env),
            Expr::Mul(a, b) => a.eval(env) * b.eval(env),
            Expr::Div(a, b) => a.eval(env) / b.eval(env),
            Expr::Pow(a, b) => {
                let base = a.eval(env);
                match **b {
                    Expr::Num(k) if k.fract() == 0.0 && k.abs() <= 64.0 => base.powi(k as i32),
                    _ => base.powf(b.eval(env)),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(env)),
        }
    }

    /// Symbolic derivative with light constant folding.
    pub fn diff(&self, var: Var) -> Expr {
        match self {
            Expr::Num(_) => num(0.0),
            Expr::Var(v) => num(if *v == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.diff(var)),
            Expr::Add(a, b) => add(a.diff(var), b.diff(var)),
            Expr::Sub(a, b) => sub(a.diff(var), b.diff(var)),
            Expr::Mul(a, b) => add(
                mul(a.diff(var), (**b).clone()),
                mul((**a).clone(), b.diff(var)),
            ),
            Expr::Div(a, b) => div(
                sub(
                    mul(a.diff(var), (**b).clone()),
                    mul((**a).clone(), b.diff(var)),
                ),
                pow((**b).clone(), num(2.0)),
            ),
            Expr::Pow(a, b) => {
                if !b.depends_on(var) {
                    // d(u^c) = c u^(c-1) u'
                    mul(
                        mul((**b).clone(), pow((**a).clone(), sub((**b).clone(), num(1.0)))),
                        a.diff(var),
                    )
                } else {
                    // d(u^v) = u^v (v' ln u + v u' / u)
                    mul(
                        self.clone(),
                        add(
                            mul(b.diff(var), call(Func::Ln, (**a).clone())),
                            div(mul((**b).clone(), a.diff(var)), (**a).clone()),
                        ),
                    )
                }
            }
            Expr::Call(f, a) => {
                let inner = (**a).clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, inner),
                    Func::Cos => neg(call(Func::Sin, inner)),
                    Func::Tan => div(num(1.0), pow(call(Func::Cos, inner), num(2.0))),
                    Func::Sinh => call(Func::Cosh, inner),
                    Func::Cosh => call(Func::Sinh, inner),
                    Func::Tanh => div(num(1.0), pow(call(Func::Cosh, inner), num(2.0))),
                    Func::Exp => call(Func::Exp, inner),
                    Func::Ln => div(num(1.0), inner),
                    Func::Sqrt => div(num(0.5), call(Func::Sqrt, inner)),
                };
                mul(outer, a.diff(var))
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(v) => write!(f, "{}", v.name()),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(v) => write!(f, "{v}"),
            Token::Ident(s) => write!(f, "{s}"),
            Token::Op(c) => write!(f, "{c}"),
            Token::LParen => write!(f, "("),
            Token::RParen => write!(f, ")"),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(Token, usize)>, ExprError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                i += 1;
            }
            // exponent part, e.g. 1e-3
            if i < chars.len() && (chars[i].1 == 'e' || chars[i].1 == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j].1 == '+' || chars[j].1 == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].1.is_ascii_digit() {
                    while j < chars.len() && chars[j].1.is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let end = if i < chars.len() { chars[i].0 } else { src.len() };
            let text = &src[chars[start].0..end];
            let v: f64 = text
                .parse()
                .map_err(|_| ExprError::UnexpectedChar { ch: c, pos })?;
            out.push((Token::Num(v), pos));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            let end = if i < chars.len() { chars[i].0 } else { src.len() };
            out.push((Token::Ident(src[chars[start].0..end].to_string()), pos));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Token::Op(c),
                // the minus sign U+2212 is accepted as a plain minus
                '\u{2212}' => Token::Op('-'),
                '(' => Token::LParen,
                ')' => Token::RParen,
                _ => return Err(ExprError::UnexpectedChar { ch: c, pos }),
            };
            out.push((tok, pos));
            i += 1;
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&(Token, usize)> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Result<(Token, usize), ExprError> {
        let t = self.tokens.get(self.pos).cloned().ok_or(ExprError::UnexpectedEnd)?;
        self.pos += 1;
        Ok(t)
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        if let Some((Token::Op(c), _)) = self.peek() {
            if ops.contains(c) {
                let c = *c;
                self.pos += 1;
                return Some(c);
            }
        }
        None
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Some(op) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat_op(&['-']).is_some() {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat_op(&['+']).is_some() {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat_op(&['^']).is_some() {
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let (tok, pos) = self.next()?;
        match tok {
            Token::Num(v) => Ok(Expr::Num(v)),
            Token::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Token::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    match self.next()? {
                        (Token::LParen, _) => {}
                        (t, p) => {
                            return Err(ExprError::UnexpectedToken {
                                token: t.to_string(),
                                pos: p,
                            })
                        }
                    }
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                match name.as_str() {
                    "r" => Ok(Expr::Var(Var::R)),
                    "phi" => Ok(Expr::Var(Var::Phi)),
                    "t" => Ok(Expr::Var(Var::T)),
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "e" => Ok(Expr::Num(std::f64::consts::E)),
                    _ => Err(ExprError::UnknownIdent(name)),
                }
            }
            other => Err(ExprError::UnexpectedToken {
                token: other.to_string(),
                pos,
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        match self.next()? {
            (Token::RParen, _) => Ok(()),
            (t, p) => Err(ExprError::UnexpectedToken {
                token: t.to_string(),
                pos: p,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, r: f64, phi: f64) -> f64 {
        Expr::parse(src).unwrap().eval(&Env::chart(r, phi))
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", 0.0, 0.0), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", 0.0, 0.0), 512.0);
        assert_eq!(ev("-2 ^ 2", 0.0, 0.0), -4.0);
        assert_eq!(ev("(1 - 4) / 3", 0.0, 0.0), -1.0);
        assert_eq!(ev("1e-3 * 1000", 0.0, 0.0), 1.0);
    }

    #[test]
    fn variables_and_functions() {
        let v = ev("sin(r)^2 + cos(phi)", 0.3, 0.7);
        assert!((v - (0.3f64.sin().powi(2) + 0.7f64.cos())).abs() < 1e-15);
        assert!((ev("sinh(r) * cosh(r)", 0.5, 0.0) - 0.5f64.sinh() * 0.5f64.cosh()).abs() < 1e-15);
    }

    #[test]
    fn errors_are_reported() {
        assert!(matches!(Expr::parse("foo(r)"), Err(ExprError::UnknownIdent(_))));
        assert!(matches!(Expr::parse("1 +"), Err(ExprError::UnexpectedEnd)));
        assert!(matches!(Expr::parse("1 $ 2"), Err(ExprError::UnexpectedChar { .. })));
        assert!(matches!(Expr::parse("(1 + 2"), Err(ExprError::UnexpectedEnd)));
        assert!(matches!(
            Expr::parse_with_vars("t + r", &[Var::T]),
            Err(ExprError::ForbiddenVar { .. })
        ));
    }

    #[test]
    fn symbolic_derivatives_match_finite_differences() {
        let cases = [
            "sin(r)^2",
            "sinh(r)^2 * (1 + 0.1 * cos(phi))",
            "r^2 / (1 + r*phi)",
            "sqrt(1 + r^2) * exp(-phi)",
            "r ^ phi",
            "tan(r) - ln(r) + tanh(phi)",
        ];
        let (r, phi) = (0.7, 0.4);
        let h = 1e-6;
        for src in cases {
            let e = Expr::parse(src).unwrap();
            for var in [Var::R, Var::Phi] {
                let d = e.diff(var).eval(&Env::chart(r, phi));
                let (rp, pp, rm, pm) = match var {
                    Var::R => (r + h, phi, r - h, phi),
                    _ => (r, phi + h, r, phi - h),
                };
                let fd = (e.eval(&Env::chart(rp, pp)) - e.eval(&Env::chart(rm, pm))) / (2.0 * h);
                assert!((d - fd).abs() < 1e-7 * (1.0 + fd.abs()), "{src} d/{var:?}: {d} vs {fd}");
            }
        }
    }
}
