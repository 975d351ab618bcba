//! Expression language for time-dependent Hamiltonians.
//!
//! Grammar (EBNF):
//! ```text
//! expr    = term , { ( "+" | "-" ) , term } ;
//! term    = factor , { ( "*" | "/" ) , factor } ;
//! factor  = unary , [ "^" , factor ] ;            (* right-associative *)
//! unary   = "-" , unary | primary ;
//! primary = number | ident | ident , "(" , expr , ")" | "(" , expr , ")" ;
//! ident   = letter , { letter | digit } ;
//! ```
//! Identifiers are chart coordinates (`x1..`, `y1..`, `z` on Darboux charts;
//! `xi1`, `xi2`, `eta` on the sphere), time `t`, and the function names
//! `sin cos tan exp log tanh bump sigmoid`.

use crate::dual::Dual;
use crate::error::{ContactError, Result};
use std::collections::HashMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Tanh,
    Bump,
    Sigmoid,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "tanh" => Func::Tanh,
            "bump" => Func::Bump,
            "sigmoid" => Func::Sigmoid,
            _ => return None,
        })
    }

    fn name(&self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Tanh => "tanh",
            Func::Bump => "bump",
            Func::Sigmoid => "sigmoid",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

// ---------------------------------------------------------------- tokenizer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == '.') {
                i += 1;
            }
            // exponent part
            if i < bytes.len() && (bytes[i] == 'e' || bytes[i] == 'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == '+' || bytes[j] == '-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = bytes[start..i].iter().collect();
            let v = s.parse::<f64>().map_err(|_| ContactError::Parse {
                pos: start,
                msg: format!("bad number literal `{s}`"),
            })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                i += 1;
            }
            out.push((start, Tok::Ident(bytes[start..i].iter().collect())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(ContactError::Parse {
                pos: i,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

// ------------------------------------------------------------------ parser

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect_op(&mut self, c: char) -> Result<()> {
        match self.bump() {
            Some(Tok::Op(o)) if o == c => Ok(()),
            _ => Err(ContactError::Parse {
                pos: self.here(),
                msg: format!("expected `{c}`"),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek() {
            let op = if *op == '+' { BinOp::Add } else { BinOp::Sub };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        while let Some(Tok::Op(op @ ('*' | '/'))) = self.peek() {
            let op = if *op == '*' { BinOp::Mul } else { BinOp::Div };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.unary()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.bump();
            let exponent = self.factor()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        let pos = self.here();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Const(v)),
            Some(Tok::Ident(name)) => {
                if let Some(Tok::Op('(')) = self.peek() {
                    let f = Func::from_name(&name).ok_or(ContactError::Parse {
                        pos,
                        msg: format!("unknown function `{name}`"),
                    })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_op(')')?;
                    Ok(Expr::Call(f, Box::new(arg)))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Some(Tok::Op('(')) => {
                let inner = self.expr()?;
                self.expect_op(')')?;
                Ok(inner)
            }
            _ => Err(ContactError::Parse {
                pos,
                msg: "expected number, identifier, or `(`".into(),
            }),
        }
    }
}

/// Parse an expression. Free variables are not validated here; use
/// [`Expr::free_vars`] against the manifold's coordinate names.
pub fn parse(text: &str) -> Result<Expr> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        end: text.len(),
    };
    let e = p.expr()?;
    if p.pos != toks.len() {
        return Err(ContactError::Parse {
            pos: p.here(),
            msg: "trailing input".into(),
        });
    }
    Ok(e)
}

impl Expr {
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(name) => out.push(name.clone()),
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Evaluate with dual-number propagation. `env` maps every free variable
    /// to a seeded dual; `nvars` is the gradient width.
    pub fn eval(&self, env: &HashMap<String, Dual>, nvars: usize) -> Result<Dual> {
        Ok(match self {
            Expr::Const(v) => Dual::constant(*v, nvars),
            Expr::Var(name) => env
                .get(name)
                .ok_or_else(|| ContactError::UnknownIdentifier(name.clone()))?
                .clone(),
            Expr::Neg(a) => a.eval(env, nvars)?.neg(),
            Expr::Bin(op, a, b) => {
                let a = a.eval(env, nvars)?;
                match (op, b.as_ref()) {
                    (BinOp::Pow, Expr::Const(k)) => a.powc(*k),
                    (BinOp::Pow, Expr::Neg(inner)) => {
                        if let Expr::Const(k) = inner.as_ref() {
                            a.powc(-k)
                        } else {
                            a.pow(&b.eval(env, nvars)?)
                        }
                    }
                    _ => {
                        let b = b.eval(env, nvars)?;
                        match op {
                            BinOp::Add => a.add(&b),
                            BinOp::Sub => a.sub(&b),
                            BinOp::Mul => a.mul(&b),
                            BinOp::Div => a.div(&b),
                            BinOp::Pow => a.pow(&b),
                        }
                    }
                }
            }
            Expr::Call(f, a) => {
                let a = a.eval(env, nvars)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Tan => a.tan(),
                    Func::Exp => a.exp(),
                    Func::Log => a.log(),
                    Func::Tanh => a.tanh(),
                    Func::Bump => a.bump(),
                    Func::Sigmoid => a.sigmoid(),
                }
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
            if e.precedence() < min_prec {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Var(name) => write!(f, "{name}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                child(f, a, 3)
            }
            Expr::Bin(op, a, b) => {
                let (sym, p) = match op {
                    BinOp::Add => ('+', 1),
                    BinOp::Sub => ('-', 1),
                    BinOp::Mul => ('*', 2),
                    BinOp::Div => ('/', 2),
                    BinOp::Pow => ('^', 4),
                };
                // left-assoc: right child needs strictly higher precedence,
                // pow is right-assoc so it is the other way around
                let (lp, rp) = if *op == BinOp::Pow {
                    (p + 1, p)
                } else {
                    (p, p + 1)
                };
                child(f, a, lp)?;
                write!(f, "{sym}")?;
                child(f, b, rp)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
