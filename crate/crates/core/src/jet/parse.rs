//! Infix syntax: `+ - * / ^`, integer exponents, parentheses, the functions
//! `sqrt exp log sin cos norm(..)`, and variables `x1..xn`.

use std::collections::HashMap;

use super::expr::Expr;
use crate::error::{Error, Result};

/// Variable name table. `x<k>` (1-based) is always accepted; extra aliases
/// map further names to zero-based indices.
#[derive(Debug, Clone, Default)]
pub struct VarNames {
    aliases: HashMap<String, usize>,
    indexed: bool,
}

impl VarNames {
    /// Only `x1, x2, ...`.
    pub fn indexed() -> Self {
        VarNames {
            aliases: HashMap::new(),
            indexed: true,
        }
    }

    pub fn with_alias(mut self, name: &str, index: usize) -> Self {
        self.aliases.insert(name.to_string(), index);
        self
    }

    fn resolve(&self, name: &str) -> Option<usize> {
        if let Some(&i) = self.aliases.get(name) {
            return Some(i);
        }
        if self.indexed {
            let digits = name.strip_prefix('x')?;
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let k: usize = digits.parse().ok()?;
                return k.checked_sub(1);
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
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
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| Error::Parse {
                pos: start,
                msg: format!("malformed number '{text}'"),
            })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if "+-*/^(),".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(Error::Parse {
                pos: i,
                msg: format!("unexpected character '{c}'"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    names: &'a VarNames,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.offset(),
            msg: msg.into(),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{c}'"))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc + self.term()?;
            } else if self.eat('-') {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = acc * self.unary()?;
            } else if self.eat('/') {
                acc = acc / self.unary()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            let inner = self.unary()?;
            return Ok(match inner.as_const() {
                Some(c) => Expr::constant(-c),
                None => -inner,
            });
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn exponent(&mut self) -> Result<i32> {
        let negative = if self.eat('(') {
            let neg = self.eat('-');
            let k = self.integer()?;
            self.expect(')')?;
            return Ok(if neg { -k } else { k });
        } else {
            self.eat('-')
        };
        let k = self.integer()?;
        Ok(if negative { -k } else { k })
    }

    fn integer(&mut self) -> Result<i32> {
        match self.peek() {
            Some(Tok::Num(v)) if v.fract() == 0.0 && v.abs() <= f64::from(i32::MAX) => {
                let k = *v as i32;
                self.pos += 1;
                Ok(k)
            }
            _ => self.err("exponent must be an integer literal"),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            let n = self.exponent()?;
            Ok(base.powi(n))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let start = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::constant(v))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.eat('(') {
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    let unary = |f: fn(&Expr) -> Expr, args: Vec<Expr>| {
                        if args.len() == 1 {
                            Ok(f(&args[0]))
                        } else {
                            Err(Error::Parse {
                                pos: start,
                                msg: format!("'{name}' takes one argument"),
                            })
                        }
                    };
                    match name.as_str() {
                        "sqrt" => unary(Expr::sqrt, args),
                        "exp" => unary(Expr::exp, args),
                        "log" | "ln" => unary(Expr::ln, args),
                        "sin" => unary(Expr::sin, args),
                        "cos" => unary(Expr::cos, args),
                        "norm" => Ok(Expr::norm(args)),
                        _ => Err(Error::Parse {
                            pos: start,
                            msg: format!("unknown function '{name}'"),
                        }),
                    }
                } else {
                    match self.names.resolve(&name) {
                        Some(i) => Ok(Expr::var(i)),
                        None => Err(Error::Parse {
                            pos: start,
                            msg: format!("unknown variable '{name}'"),
                        }),
                    }
                }
            }
            Some(Tok::Sym(c)) => self.err(format!("unexpected '{c}'")),
            None => self.err("unexpected end of input"),
        }
    }
}

fn parse_list(src: &str, names: &VarNames) -> Result<Vec<Expr>> {
    let mut p = Parser {
        toks: tokenize(src)?,
        pos: 0,
        end: src.len(),
        names,
    };
    let mut out = vec![p.expr()?];
    while p.eat(',') {
        out.push(p.expr()?);
    }
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(out)
}

/// Parses a single scalar expression over `x1..xn`.
pub fn parse_expr(src: &str) -> Result<Expr> {
    parse_with_names(src, &VarNames::indexed())
}

pub fn parse_with_names(src: &str, names: &VarNames) -> Result<Expr> {
    let mut list = parse_list(src, names)?;
    if list.len() != 1 {
        return Err(Error::Parse {
            pos: 0,
            msg: "expected a single expression".into(),
        });
    }
    Ok(list.remove(0))
}

/// Parses comma-separated components `f1, f2, ...` of a map.
pub fn parse_map(src: &str, names: &VarNames) -> Result<Vec<Expr>> {
    parse_list(src, names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::SmoothMap;
    use proptest::prelude::*;

    fn eval(src: &str, at: &[f64]) -> f64 {
        let e = parse_expr(src).unwrap();
        SmoothMap::new(at.len(), vec![e]).unwrap().eval(at).unwrap()[0]
    }

    #[test]
    fn precedence_and_powers() {
        assert_eq!(eval("x1*x2 + x2^3", &[2.0, 1.0]), 3.0);
        assert_eq!(eval("-x1^2", &[3.0]), -9.0);
        assert_eq!(eval("2^-1", &[]), 0.5);
        assert_eq!(eval("x1^(-2)", &[2.0]), 0.25);
        assert_eq!(eval("x2^2 - x1^2*(x1+1)", &[1.0, 2.0]), 2.0);
        assert_eq!(eval("norm(x1, x2)", &[3.0, 4.0]), 5.0);
        assert_eq!(eval("1e-1*10", &[]), 1.0);
    }

    #[test]
    fn aliases() {
        let names = VarNames::default().with_alias("x", 0).with_alias("y", 1);
        let e = parse_with_names("y^2 - x^3", &names).unwrap();
        let f = SmoothMap::new(2, vec![e]).unwrap();
        assert_eq!(f.eval(&[1.0, 2.0]).unwrap(), vec![3.0]);
        assert!(parse_with_names("x1", &names).is_err());
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(
            parse_expr("x1 + $"),
            Err(Error::Parse {
                pos: 5,
                msg: "unexpected character '$'".into()
            })
        );
        match parse_expr("x1 * (x2 + 1") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 12),
            other => panic!("{other:?}"),
        }
        match parse_expr("x1^1.5") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 3),
            other => panic!("{other:?}"),
        }
        match parse_expr("foo(x1)") {
            Err(Error::Parse { pos, msg }) => {
                assert_eq!(pos, 0);
                assert!(msg.contains("foo"));
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_expr("x0").is_err());
        assert!(parse_expr("x1 x2").is_err());
    }

    #[test]
    fn map_lists() {
        let m = parse_map("x1, x1*x2 + x2^3, norm(x1, x2)", &VarNames::indexed()).unwrap();
        assert_eq!(m.len(), 3);
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-4i32..5).prop_map(|k| Expr::constant(f64::from(k) * 0.5)),
            (0usize..3).prop_map(Expr::var),
        ];
        leaf.prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
                (inner.clone(), -2i32..4).prop_map(|(a, n)| a.powi(n)),
                inner.clone().prop_map(|a| -a),
                inner.clone().prop_map(|a| a.sin()),
                (inner.clone(), inner).prop_map(|(a, b)| Expr::norm(vec![a, b])),
            ]
        })
    }

    proptest! {
        #[test]
        fn printing_then_parsing_preserves_values(e in arb_expr(),
                                                  p in prop::array::uniform3(-2.0f64..2.0)) {
            let printed = e.to_string();
            let back = parse_expr(&printed).unwrap();
            let f = SmoothMap::new(3, vec![e]).unwrap();
            let g = SmoothMap::new(3, vec![back]).unwrap();
            match (f.eval(&p), g.eval(&p)) {
                (Ok(a), Ok(b)) => prop_assert!((a[0] - b[0]).abs() <= 1e-12 * (1.0 + a[0].abs()),
                                               "{printed}: {} vs {}", a[0], b[0]),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{printed}: {a:?} vs {b:?}"),
            }
        }
    }
}
