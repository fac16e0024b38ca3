use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// One node of an expression tree. Children are shared, so composing maps
/// does not copy subtrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Powi(Expr, i32),
    Sqrt(Expr),
    Exp(Expr),
    Log(Expr),
    Sin(Expr),
    Cos(Expr),
    Norm(Vec<Expr>),
}

/// Immutable, cheaply clonable scalar expression over coordinates `x1..xn`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn wrap(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn constant(c: f64) -> Self {
        Self::wrap(Node::Const(c))
    }

    /// Coordinate projection onto the zero-based index `i`.
    pub fn var(i: usize) -> Self {
        Self::wrap(Node::Var(i))
    }

    pub fn powi(&self, n: i32) -> Self {
        Self::wrap(Node::Powi(self.clone(), n))
    }

    pub fn sqrt(&self) -> Self {
        Self::wrap(Node::Sqrt(self.clone()))
    }

    pub fn exp(&self) -> Self {
        Self::wrap(Node::Exp(self.clone()))
    }

    pub fn ln(&self) -> Self {
        Self::wrap(Node::Log(self.clone()))
    }

    pub fn sin(&self) -> Self {
        Self::wrap(Node::Sin(self.clone()))
    }

    pub fn cos(&self) -> Self {
        Self::wrap(Node::Cos(self.clone()))
    }

    pub fn norm(items: Vec<Expr>) -> Self {
        Self::wrap(Node::Norm(items))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self.node() {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a)
            | Node::Powi(a, _)
            | Node::Sqrt(a)
            | Node::Exp(a)
            | Node::Log(a)
            | Node::Sin(a)
            | Node::Cos(a) => a.max_var(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => a.max_var().max(b.max_var()),
            Node::Norm(items) => items.iter().filter_map(Expr::max_var).max(),
        }
    }

    /// Replaces every `Var(i)` by `args[i]`.
    pub fn substitute(&self, args: &[Expr]) -> Expr {
        let un = |a: &Expr, f: fn(Expr) -> Node| Expr::wrap(f(a.substitute(args)));
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(i) => args[*i].clone(),
            Node::Neg(a) => un(a, Node::Neg),
            Node::Sqrt(a) => un(a, Node::Sqrt),
            Node::Exp(a) => un(a, Node::Exp),
            Node::Log(a) => un(a, Node::Log),
            Node::Sin(a) => un(a, Node::Sin),
            Node::Cos(a) => un(a, Node::Cos),
            Node::Powi(a, n) => Expr::wrap(Node::Powi(a.substitute(args), *n)),
            Node::Add(a, b) => Expr::wrap(Node::Add(a.substitute(args), b.substitute(args))),
            Node::Sub(a, b) => Expr::wrap(Node::Sub(a.substitute(args), b.substitute(args))),
            Node::Mul(a, b) => Expr::wrap(Node::Mul(a.substitute(args), b.substitute(args))),
            Node::Div(a, b) => Expr::wrap(Node::Div(a.substitute(args), b.substitute(args))),
            Node::Norm(items) => Expr::wrap(Node::Norm(items.iter().map(|e| e.substitute(args)).collect())),
        }
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::constant(c)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $node:ident) => {
        impl $trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::wrap(Node::$node(self, rhs))
            }
        }
        impl $trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::wrap(Node::$node(self.clone(), rhs.clone()))
            }
        }
        impl $trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::wrap(Node::$node(self, Expr::constant(rhs)))
            }
        }
        impl $trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::wrap(Node::$node(Expr::constant(self), rhs))
            }
        }
    };
}

binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::wrap(Node::Neg(self))
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::wrap(Node::Neg(self.clone()))
    }
}

fn precedence(node: &Node) -> u8 {
    match node {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(..) => 3,
        Node::Powi(..) => 4,
        Node::Const(c) if *c < 0.0 => 3,
        _ => 5,
    }
}

struct Paren<'a>(&'a Expr, u8);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if precedence(self.0.node()) < self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Prints in the same infix syntax the parser accepts (`x1`-based names).
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(i) => write!(f, "x{}", i + 1),
            Node::Neg(a) => write!(f, "-{}", Paren(a, 4)),
            Node::Add(a, b) => write!(f, "{} + {}", Paren(a, 1), Paren(b, 2)),
            Node::Sub(a, b) => write!(f, "{} - {}", Paren(a, 1), Paren(b, 2)),
            Node::Mul(a, b) => write!(f, "{}*{}", Paren(a, 2), Paren(b, 3)),
            Node::Div(a, b) => write!(f, "{}/{}", Paren(a, 2), Paren(b, 3)),
            Node::Powi(a, n) if *n < 0 => write!(f, "{}^({n})", Paren(a, 5)),
            Node::Powi(a, n) => write!(f, "{}^{n}", Paren(a, 5)),
            Node::Sqrt(a) => write!(f, "sqrt({a})"),
            Node::Exp(a) => write!(f, "exp({a})"),
            Node::Log(a) => write!(f, "log({a})"),
            Node::Sin(a) => write!(f, "sin({a})"),
            Node::Cos(a) => write!(f, "cos({a})"),
            Node::Norm(items) => {
                write!(f, "norm(")?;
                for (k, e) in items.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")")
            }
        }
    }
}
