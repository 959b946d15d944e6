//! A small expression language for metric components.
//!
//! Expressions are parsed against a fixed list of coordinate names and a
//! table of named parameters. Evaluation is available in plain `f64` and in
//! hyper-dual arithmetic, which yields exact first and second coordinate
//! derivatives ([`Jet2`]).
//!
//! Precedence, loosest to tightest: `+ -`, `* /`, unary `-`, `^`
//! (right-associative), function application. Recognised functions are
//! `sin cos tan sinh cosh tanh exp log sqrt abs`; `pi` is a builtin constant.

mod hyperdual;
mod parser;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use hyperdual::HyperDual;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier '{name}' at offset {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid symbol table: {0}")]
    Symbols(String),
    #[error("expected a point with {expected} coordinates, got {got}")]
    PointDimension { expected: usize, got: usize },
}

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
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Expression tree. Variables and parameters are indices into the owning
/// [`Expression`]'s symbol tables.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(usize),
    Param(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn depends_on_coords(&self) -> bool {
        match self {
            Node::Num(_) | Node::Param(_) => false,
            Node::Var(_) => true,
            Node::Neg(a) | Node::Call(_, a) => a.depends_on_coords(),
            Node::Bin(_, a, b) => a.depends_on_coords() || b.depends_on_coords(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Symbols {
    coords: Vec<String>,
    params: Vec<(String, f64)>,
}

/// A parsed expression bound to its coordinate and parameter names.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    symbols: Arc<Symbols>,
}

/// Value, gradient and Hessian of an expression at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

fn validate_symbols(coords: &[String], params: &[(String, f64)]) -> Result<(), ExprError> {
    let is_word = |s: &str| {
        let mut chars = s.chars();
        matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
    };
    for (i, c) in coords.iter().enumerate() {
        if !is_word(c) {
            return Err(ExprError::Symbols(format!("'{c}' is not an ASCII identifier")));
        }
        if coords[..i].contains(c) {
            return Err(ExprError::Symbols(format!("coordinate '{c}' declared twice")));
        }
    }
    for (i, (p, _)) in params.iter().enumerate() {
        if !is_word(p) {
            return Err(ExprError::Symbols(format!("'{p}' is not an ASCII identifier")));
        }
        if coords.contains(p) {
            return Err(ExprError::Symbols(format!(
                "parameter '{p}' shadows a coordinate"
            )));
        }
        if params[..i].iter().any(|(q, _)| q == p) {
            return Err(ExprError::Symbols(format!("parameter '{p}' declared twice")));
        }
    }
    Ok(())
}

/// Parses `source` with the given coordinate names and parameter values.
pub fn parse<S: AsRef<str>>(
    source: &str,
    coords: &[S],
    params: &[(String, f64)],
) -> Result<Expression, ExprError> {
    let coords: Vec<String> = coords.iter().map(|c| c.as_ref().to_string()).collect();
    validate_symbols(&coords, params)?;
    let root = parser::Parser::new(source, &coords, params)?.parse()?;
    Ok(Expression {
        root,
        symbols: Arc::new(Symbols {
            coords,
            params: params.to_vec(),
        }),
    })
}

/// Arithmetic needed by the evaluator.
trait Scalar:
    Copy
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
{
    fn constant(v: f64) -> Self;
    fn re(&self) -> f64;
    fn apply(self, f0: f64, f1: f64, f2: f64) -> Self;
}

impl Scalar for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn re(&self) -> f64 {
        *self
    }
    fn apply(self, f0: f64, _: f64, _: f64) -> Self {
        f0
    }
}

impl Scalar for HyperDual {
    fn constant(v: f64) -> Self {
        HyperDual::constant(v)
    }
    fn re(&self) -> f64 {
        self.re
    }
    fn apply(self, f0: f64, f1: f64, f2: f64) -> Self {
        self.chain(f0, f1, f2)
    }
}

fn call<T: Scalar>(f: Func, a: T) -> Result<T, ExprError> {
    let x = a.re();
    Ok(match f {
        Func::Sin => a.apply(x.sin(), x.cos(), -x.sin()),
        Func::Cos => a.apply(x.cos(), -x.sin(), -x.cos()),
        Func::Tan => {
            let t = x.tan();
            let s = 1.0 + t * t;
            a.apply(t, s, 2.0 * t * s)
        }
        Func::Sinh => a.apply(x.sinh(), x.cosh(), x.sinh()),
        Func::Cosh => a.apply(x.cosh(), x.sinh(), x.cosh()),
        Func::Tanh => {
            let t = x.tanh();
            let s = 1.0 - t * t;
            a.apply(t, s, -2.0 * t * s)
        }
        Func::Exp => {
            let e = x.exp();
            a.apply(e, e, e)
        }
        Func::Log => {
            if x < 0.0 {
                return Err(ExprError::Domain(format!("log of negative argument {x}")));
            }
            a.apply(x.ln(), 1.0 / x, -1.0 / (x * x))
        }
        Func::Sqrt => {
            if x < 0.0 {
                return Err(ExprError::Domain(format!("sqrt of negative argument {x}")));
            }
            let s = x.sqrt();
            a.apply(s, 0.5 / s, -0.25 / (s * s * s))
        }
        Func::Abs => {
            let sign = if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            };
            a.apply(x.abs(), sign, 0.0)
        }
    })
}

fn pow_const<T: Scalar>(base: T, c: f64) -> Result<T, ExprError> {
    let x = base.re();
    if c == 0.0 {
        return Ok(T::constant(1.0));
    }
    if c.fract() == 0.0 && c.abs() <= 1024.0 {
        let k = c as i32;
        let f1 = c * x.powi(k - 1);
        let f2 = if k == 1 { 0.0 } else { c * (c - 1.0) * x.powi(k - 2) };
        return Ok(base.apply(x.powi(k), f1, f2));
    }
    if x < 0.0 {
        return Err(ExprError::Domain(format!(
            "negative base {x} raised to non-integer power {c}"
        )));
    }
    Ok(base.apply(x.powf(c), c * x.powf(c - 1.0), c * (c - 1.0) * x.powf(c - 2.0)))
}

impl Expression {
    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn coords(&self) -> &[String] {
        &self.symbols.coords
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.symbols.params
    }

    pub fn dim(&self) -> usize {
        self.symbols.coords.len()
    }

    /// Builds an expression directly from a tree; indices must be in range
    /// for the supplied tables.
    pub fn from_node<S: AsRef<str>>(
        root: Node,
        coords: &[S],
        params: &[(String, f64)],
    ) -> Result<Expression, ExprError> {
        let coords: Vec<String> = coords.iter().map(|c| c.as_ref().to_string()).collect();
        validate_symbols(&coords, params)?;
        fn check(n: &Node, nc: usize, np: usize) -> bool {
            match n {
                Node::Num(_) => true,
                Node::Var(i) => *i < nc,
                Node::Param(i) => *i < np,
                Node::Neg(a) | Node::Call(_, a) => check(a, nc, np),
                Node::Bin(_, a, b) => check(a, nc, np) && check(b, nc, np),
            }
        }
        if !check(&root, coords.len(), params.len()) {
            return Err(ExprError::Symbols("symbol index out of range".into()));
        }
        Ok(Expression {
            root,
            symbols: Arc::new(Symbols {
                coords,
                params: params.to_vec(),
            }),
        })
    }

    fn check_point(&self, point: &[f64]) -> Result<(), ExprError> {
        if point.len() != self.dim() {
            return Err(ExprError::PointDimension {
                expected: self.dim(),
                got: point.len(),
            });
        }
        Ok(())
    }

    fn eval_node<T: Scalar>(&self, node: &Node, vars: &[T]) -> Result<T, ExprError> {
        Ok(match node {
            Node::Num(v) => T::constant(*v),
            Node::Var(i) => vars[*i],
            Node::Param(i) => T::constant(self.symbols.params[*i].1),
            Node::Neg(a) => -self.eval_node(a, vars)?,
            Node::Call(f, a) => call(*f, self.eval_node(a, vars)?)?,
            Node::Bin(op, a, b) => {
                let lhs = self.eval_node(a, vars)?;
                match op {
                    BinOp::Add => lhs + self.eval_node(b, vars)?,
                    BinOp::Sub => lhs - self.eval_node(b, vars)?,
                    BinOp::Mul => lhs * self.eval_node(b, vars)?,
                    BinOp::Div => lhs / self.eval_node(b, vars)?,
                    BinOp::Pow => {
                        if b.depends_on_coords() {
                            // x^y = exp(y ln x)
                            let rhs = self.eval_node(b, vars)?;
                            let x = lhs.re();
                            if x < 0.0 {
                                return Err(ExprError::Domain(format!(
                                    "negative base {x} raised to a coordinate-dependent power"
                                )));
                            }
                            let z = lhs.apply(x.ln(), 1.0 / x, -1.0 / (x * x)) * rhs;
                            let e = z.re().exp();
                            z.apply(e, e, e)
                        } else {
                            let c = self.eval_node::<f64>(b, &[])?;
                            pow_const(lhs, c)?
                        }
                    }
                }
            }
        })
    }

    /// Plain evaluation. Non-finite results propagate; only `log`, `sqrt`
    /// and fractional powers of negative numbers raise [`ExprError::Domain`].
    pub fn eval(&self, point: &[f64]) -> Result<f64, ExprError> {
        self.check_point(point)?;
        self.eval_node(&self.root, point)
    }

    /// Value, gradient and Hessian by one hyper-dual pass per unordered
    /// coordinate pair.
    pub fn eval_jet2(&self, point: &[f64]) -> Result<Jet2, ExprError> {
        self.check_point(point)?;
        let n = point.len();
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        if n == 0 {
            let value = self.eval_node(&self.root, point)?;
            return Ok(Jet2 { value, grad, hess });
        }
        let mut value = 0.0;
        let mut vars = vec![HyperDual::default(); n];
        for k in 0..n {
            for m in k..n {
                for (i, v) in vars.iter_mut().enumerate() {
                    *v = HyperDual::new(
                        point[i],
                        if i == k { 1.0 } else { 0.0 },
                        if i == m { 1.0 } else { 0.0 },
                        0.0,
                    );
                }
                let r = self.eval_node(&self.root, &vars)?;
                if k == m {
                    grad[k] = r.e1;
                    value = r.re;
                }
                hess[(k, m)] = r.e12;
                hess[(m, k)] = r.e12;
            }
        }
        Ok(Jet2 { value, grad, hess })
    }

    /// First derivatives only (one dual pass per coordinate).
    pub fn eval_grad(&self, point: &[f64]) -> Result<(f64, DVector<f64>), ExprError> {
        self.check_point(point)?;
        let n = point.len();
        let mut grad = DVector::zeros(n);
        let mut value = self.eval_node(&self.root, point)?;
        let mut vars = vec![HyperDual::default(); n];
        for k in 0..n {
            for (i, v) in vars.iter_mut().enumerate() {
                *v = HyperDual::new(point[i], if i == k { 1.0 } else { 0.0 }, 0.0, 0.0);
            }
            let r = self.eval_node(&self.root, &vars)?;
            grad[k] = r.e1;
            value = r.re;
        }
        Ok((value, grad))
    }
}

// Precedence levels used when printing.
const P_SUM: u8 = 1;
const P_PRODUCT: u8 = 2;
const P_UNARY: u8 = 3;
const P_POWER: u8 = 4;
const P_ATOM: u8 = 5;

fn prec(node: &Node) -> u8 {
    match node {
        Node::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => P_UNARY,
        Node::Num(_) | Node::Var(_) | Node::Param(_) | Node::Call(..) => P_ATOM,
        Node::Neg(_) => P_UNARY,
        Node::Bin(BinOp::Add | BinOp::Sub, ..) => P_SUM,
        Node::Bin(BinOp::Mul | BinOp::Div, ..) => P_PRODUCT,
        Node::Bin(BinOp::Pow, ..) => P_POWER,
    }
}

impl Expression {
    fn write_node(&self, f: &mut fmt::Formatter<'_>, node: &Node, min: u8) -> fmt::Result {
        if prec(node) < min {
            write!(f, "(")?;
            self.write_node(f, node, 0)?;
            return write!(f, ")");
        }
        match node {
            Node::Num(v) => write!(f, "{v:?}"),
            Node::Var(i) => write!(f, "{}", self.symbols.coords[*i]),
            Node::Param(i) => write!(f, "{}", self.symbols.params[*i].0),
            Node::Neg(a) => {
                write!(f, "-")?;
                self.write_node(f, a, P_UNARY)
            }
            Node::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                self.write_node(f, a, 0)?;
                write!(f, ")")
            }
            Node::Bin(op, a, b) => {
                let (sym, lmin, rmin) = match op {
                    BinOp::Add => (" + ", P_SUM, P_PRODUCT),
                    BinOp::Sub => (" - ", P_SUM, P_PRODUCT),
                    BinOp::Mul => ("*", P_PRODUCT, P_UNARY),
                    BinOp::Div => ("/", P_PRODUCT, P_UNARY),
                    BinOp::Pow => ("^", P_ATOM, P_UNARY),
                };
                self.write_node(f, a, lmin)?;
                write!(f, "{sym}")?;
                self.write_node(f, b, rmin)
            }
        }
    }
}

/// Re-parsable text form.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_node(f, &self.root, 0)
    }
}
