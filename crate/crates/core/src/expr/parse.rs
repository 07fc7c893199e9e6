//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = atom [ "^" unary ] ;
//! atom    = number | name | call | "(" expr ")" ;
//! call    = ("sin" | "cos") "(" expr ")"
//!         | ("max" | "min") "(" expr "," expr ")"
//!         | "ind" "(" name [ "," ("x" | "y" | "z") ] ")"
//!         | "ind" "(" name ";" expr { "," expr } ")" ;
//! ```
//!
//! Exponents and divisors must fold to constants.

use super::{Expr, ExprError, VarContext};

pub fn parse_expr<S: AsRef<str>>(text: &str, vars: &[S]) -> Result<Expr, ExprError> {
    parse_with(text, &VarContext::from_names(vars))
}

pub fn parse_with(text: &str, ctx: &VarContext) -> Result<Expr, ExprError> {
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        ctx,
        len: text.len(),
    };
    let e = p.expr()?;
    if p.pos < p.tokens.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn syntax(position: usize, message: impl Into<String>) -> ExprError {
    ExprError::SyntaxError {
        position,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit()
            || (c == '.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit))
        {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit = &text[start..i];
            let v: f64 = lit
                .parse()
                .map_err(|_| syntax(start, format!("bad number `{lit}`")))?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
        } else if "+-*/^(),;".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(syntax(i, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
    ctx: &'a VarContext,
    len: usize,
}

impl Parser<'_> {
    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.len, |t| t.0)
    }

    fn error(&self, msg: &str) -> ExprError {
        syntax(self.offset(), msg)
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.1)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = Expr::add(acc, self.term()?);
            } else if self.eat('-') {
                acc = Expr::sub(acc, self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = Expr::mul(acc, self.unary()?);
            } else if self.eat('/') {
                let at = self.offset();
                let d = self.unary()?;
                let Some(dv) = d.as_const() else {
                    return Err(syntax(at, "divisor must be constant"));
                };
                if dv == 0.0 {
                    return Err(syntax(at, "division by zero"));
                }
                acc = match acc {
                    Expr::Const(n) => Expr::Const(n / dv),
                    other => Expr::mul(Expr::Const(1.0 / dv), other),
                };
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(Expr::neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let at = self.offset();
        let exp = self.unary()?;
        let Some(k) = exp.as_const() else {
            return Err(syntax(at, "exponent must be constant"));
        };
        if k < 0.0 {
            return Err(ExprError::NegativeExponent);
        }
        if k.fract() != 0.0 || k > f64::from(u16::MAX) {
            return Err(syntax(at, "exponent must be an integer"));
        }
        Ok(Expr::pow(base, k as u32))
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let at = self.offset();
        match self.tokens.get(self.pos).map(|t| t.1.clone()) {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::Sym('(')) {
                    self.pos += 1;
                    return self.call(&name, at);
                }
                if let Some(i) = self.ctx.var_index(&name) {
                    Ok(Expr::Var(i))
                } else if let Some(v) = self.ctx.constants.get(&name) {
                    Ok(Expr::Const(*v))
                } else if name == "pi" {
                    Ok(Expr::Const(std::f64::consts::PI))
                } else {
                    Err(ExprError::UnknownVariable(name))
                }
            }
            Some(_) => Err(self.error("expected a value")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn call(&mut self, name: &str, at: usize) -> Result<Expr, ExprError> {
        let e = match name {
            "sin" | "cos" => {
                let a = self.expr()?;
                if name == "sin" {
                    Expr::sin(a)
                } else {
                    Expr::cos(a)
                }
            }
            "max" | "min" => {
                let a = self.expr()?;
                self.expect(',')?;
                let b = self.expr()?;
                if name == "max" {
                    Expr::max(a, b)
                } else {
                    Expr::min(a, b)
                }
            }
            "ind" => return self.indicator(),
            _ => return Err(syntax(at, format!("unknown function `{name}`"))),
        };
        self.expect(')')?;
        Ok(e)
    }

    fn indicator(&mut self) -> Result<Expr, ExprError> {
        let Some(Tok::Ident(region)) = self.peek().cloned() else {
            return Err(self.error("expected region name"));
        };
        self.pos += 1;
        let id = self
            .ctx
            .region_index(&region)
            .ok_or(ExprError::UnknownRegion(region))?;
        let n = self.ctx.block_dim;
        let block_args = |b: usize, ctx: &VarContext| -> Result<Vec<Expr>, ExprError> {
            let letter = ["x", "y", "z"][b];
            (1..=n)
                .map(|k| {
                    let v = format!("{letter}{k}");
                    ctx.var_index(&v)
                        .map(Expr::Var)
                        .ok_or(ExprError::UnknownVariable(v))
                })
                .collect()
        };
        let args = if self.eat(')') {
            return Ok(Expr::Indicator(id, block_args(0, self.ctx)?));
        } else if self.eat(',') {
            let b = match self.peek() {
                Some(Tok::Ident(s)) if s == "x" => 0,
                Some(Tok::Ident(s)) if s == "y" => 1,
                Some(Tok::Ident(s)) if s == "z" => 2,
                _ => return Err(self.error("expected block `x`, `y` or `z`")),
            };
            self.pos += 1;
            block_args(b, self.ctx)?
        } else if self.eat(';') {
            let mut args = vec![self.expr()?];
            while self.eat(',') {
                args.push(self.expr()?);
            }
            args
        } else {
            return Err(self.error("expected `)`, `,` or `;`"));
        };
        self.expect(')')?;
        Ok(Expr::Indicator(id, args))
    }
}
