//! A small arithmetic expression language for config-defined fields.
//!
//! Grammar: `+ - * / ^` with the usual precedence, parentheses, unary minus,
//! the variables `x1..x3`, the constants `pi` and `e`, and a fixed set of
//! functions (`abs sqrt exp log sin cos tan floor ceil sign`, two-argument
//! `min max pow`). Everything evaluates in `f64`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
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
    Comma,
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let mut toks = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '+' => { toks.push(Tok::Plus); i += 1; }
            '-' => { toks.push(Tok::Minus); i += 1; }
            '*' => { toks.push(Tok::Star); i += 1; }
            '/' => { toks.push(Tok::Slash); i += 1; }
            '^' => { toks.push(Tok::Caret); i += 1; }
            '(' => { toks.push(Tok::LParen); i += 1; }
            ')' => { toks.push(Tok::RParen); i += 1; }
            ',' => { toks.push(Tok::Comma); i += 1; }
            _ if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_digit() || d == '.' {
                        i += 1;
                    } else if (d == 'e' || d == 'E')
                        && i + 1 < bytes.len()
                        && ((bytes[i + 1] as char).is_ascii_digit()
                            || bytes[i + 1] == b'+'
                            || bytes[i + 1] == b'-')
                    {
                        i += 2;
                    } else {
                        break;
                    }
                }
                let text = &src[start..i];
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::Expr(format!("bad number `{text}` at {start}")))?;
                toks.push(Tok::Num(v));
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_alphanumeric() || d == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                toks.push(Tok::Ident(src[start..i].to_string()));
            }
            _ => return Err(Error::Expr(format!("unexpected character `{c}` at {i}"))),
        }
    }
    Ok(toks)
}

#[derive(Debug, Clone)]
enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Fn1(Fn1, Box<Node>),
    Fn2(Fn2, Box<Node>, Box<Node>),
}

#[derive(Debug, Clone, Copy)]
enum Fn1 {
    Abs,
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Floor,
    Ceil,
    Sign,
}

#[derive(Debug, Clone, Copy)]
enum Fn2 {
    Min,
    Max,
    Pow,
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.next() {
            Some(ref got) if *got == t => Ok(()),
            got => Err(Error::Expr(format!("expected {t:?}, got {got:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.next();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.next();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.next();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.next();
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.next();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.next();
            // right-associative
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Node::Const(v)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if matches!(self.peek(), Some(Tok::LParen)) {
                    self.next();
                    let mut args = vec![self.expr()?];
                    while matches!(self.peek(), Some(Tok::Comma)) {
                        self.next();
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen)?;
                    Self::call(&name, args)
                } else {
                    Self::symbol(&name)
                }
            }
            got => Err(Error::Expr(format!("unexpected token {got:?}"))),
        }
    }

    fn symbol(name: &str) -> Result<Node> {
        match name {
            "pi" => Ok(Node::Const(std::f64::consts::PI)),
            "e" => Ok(Node::Const(std::f64::consts::E)),
            _ if name.len() == 2 && name.starts_with('x') => {
                let d: usize = name[1..]
                    .parse()
                    .map_err(|_| Error::Expr(format!("unknown symbol `{name}`")))?;
                if d == 0 || d > 3 {
                    return Err(Error::Expr(format!("variable `{name}` out of range x1..x3")));
                }
                Ok(Node::Var(d - 1))
            }
            _ => Err(Error::Expr(format!("unknown symbol `{name}`"))),
        }
    }

    fn call(name: &str, mut args: Vec<Node>) -> Result<Node> {
        let one = |f: Fn1, mut a: Vec<Node>| -> Result<Node> {
            if a.len() != 1 {
                return Err(Error::Expr(format!("{name} takes 1 argument")));
            }
            Ok(Node::Fn1(f, Box::new(a.remove(0))))
        };
        match name {
            "abs" => one(Fn1::Abs, args),
            "sqrt" => one(Fn1::Sqrt, args),
            "exp" => one(Fn1::Exp, args),
            "log" | "ln" => one(Fn1::Log, args),
            "sin" => one(Fn1::Sin, args),
            "cos" => one(Fn1::Cos, args),
            "tan" => one(Fn1::Tan, args),
            "floor" => one(Fn1::Floor, args),
            "ceil" => one(Fn1::Ceil, args),
            "sign" => one(Fn1::Sign, args),
            "min" | "max" | "pow" => {
                if args.len() != 2 {
                    return Err(Error::Expr(format!("{name} takes 2 arguments")));
                }
                let b = Box::new(args.remove(1));
                let a = Box::new(args.remove(0));
                let f = match name {
                    "min" => Fn2::Min,
                    "max" => Fn2::Max,
                    _ => Fn2::Pow,
                };
                Ok(Node::Fn2(f, a, b))
            }
            _ => Err(Error::Expr(format!("unknown function `{name}`"))),
        }
    }
}

/// A parsed expression over the grid coordinates `x1..x3`.
#[derive(Debug, Clone)]
pub struct Expr {
    root: Node,
    source: String,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let toks = lex(src)?;
        let mut p = Parser { toks, pos: 0 };
        let root = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(Error::Expr(format!(
                "trailing input after expression in `{src}`"
            )));
        }
        Ok(Self { root, source: src.to_string() })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        fn go(n: &Node, x: &[f64]) -> f64 {
            match n {
                Node::Const(v) => *v,
                Node::Var(d) => x.get(*d).copied().unwrap_or(0.0),
                Node::Neg(a) => -go(a, x),
                Node::Add(a, b) => go(a, x) + go(b, x),
                Node::Sub(a, b) => go(a, x) - go(b, x),
                Node::Mul(a, b) => go(a, x) * go(b, x),
                Node::Div(a, b) => go(a, x) / go(b, x),
                Node::Pow(a, b) => go(a, x).powf(go(b, x)),
                Node::Fn1(f, a) => {
                    let v = go(a, x);
                    match f {
                        Fn1::Abs => v.abs(),
                        Fn1::Sqrt => v.sqrt(),
                        Fn1::Exp => v.exp(),
                        Fn1::Log => v.ln(),
                        Fn1::Sin => v.sin(),
                        Fn1::Cos => v.cos(),
                        Fn1::Tan => v.tan(),
                        Fn1::Floor => v.floor(),
                        Fn1::Ceil => v.ceil(),
                        Fn1::Sign => {
                            if v > 0.0 {
                                1.0
                            } else if v < 0.0 {
                                -1.0
                            } else {
                                0.0
                            }
                        }
                    }
                }
                Node::Fn2(f, a, b) => {
                    let u = go(a, x);
                    let v = go(b, x);
                    match f {
                        Fn2::Min => u.min(v),
                        Fn2::Max => u.max(v),
                        Fn2::Pow => u.powf(v),
                    }
                }
            }
        }
        go(&self.root, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, x: &[f64]) -> f64 {
        Expr::parse(src).unwrap().eval(x)
    }

    #[test]
    fn arithmetic_and_precedence() {
        assert_eq!(ev("1 + 2*3", &[]), 7.0);
        assert_eq!(ev("(1+2)*3", &[]), 9.0);
        assert_eq!(ev("2^3^2", &[]), 512.0); // right associative
        assert_eq!(ev("-2^2", &[]), -4.0); // unary minus binds outside the power
    }

    #[test]
    fn variables_and_functions() {
        assert_eq!(ev("x1 + 2*x2", &[1.0, 3.0]), 7.0);
        assert!((ev("max(0, 0.55 - 0.5*x1 - x2)", &[0.5, 0.1]) - 0.2).abs() < 1e-15);
        assert!((ev("sin(pi/2)", &[]) - 1.0).abs() < 1e-15);
        assert_eq!(ev("min(3, x1)", &[5.0]), 3.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Expr::parse("x4").is_err());
        assert!(Expr::parse("1 +").is_err());
        assert!(Expr::parse("foo(1)").is_err());
        assert!(Expr::parse("1 2").is_err());
    }
}
