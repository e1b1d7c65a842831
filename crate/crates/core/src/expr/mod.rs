//! The small expression language used to specify weights, defining
//! functions and densities.
//!
//! Expressions are scalar functions of named real or complex variables,
//! built from `+ - * / ^k`, `exp`, `log`, `abs2` (squared modulus), `re`,
//! `im`, `max`, `min` and constants. Complex constants are written
//! `complex(a, b)`. Exponents are integers; there are no fractional
//! powers, so `|z - a|` is expressed through `abs2` with coefficients
//! absorbing the factors of two.
//!
//! `log` of a nonpositive argument evaluates to the `-inf` sentinel
//! rather than failing: weights only ever appear as `exp(-phi)`, where
//! `-inf` simply means density zero. Division by zero is a hard error,
//! distinct from the sentinel.
//!
//! Expressions are immutable after construction and evaluation is pure,
//! so they can be shared freely between workers.

mod parser;

pub use parser::ParseError;

use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Kind of a declared variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Real,
    Complex,
}

/// Runtime value: extended real (`-inf` allowed as the singular sentinel)
/// or complex scalar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Real(f64),
    Complex(Complex64),
}

impl Value {
    pub fn complex(re: f64, im: f64) -> Self {
        Value::Complex(Complex64::new(re, im))
    }

    /// Interpret as a real number. Complex values with zero imaginary
    /// part coerce; anything else is a kind mismatch.
    pub fn as_real(&self) -> Result<f64, EvalError> {
        match self {
            Value::Real(x) => Ok(*x),
            Value::Complex(c) if c.im == 0.0 => Ok(c.re),
            Value::Complex(_) => Err(EvalError::KindMismatch("expected a real value")),
        }
    }

    fn as_complex(&self) -> Complex64 {
        match self {
            Value::Real(x) => Complex64::new(*x, 0.0),
            Value::Complex(c) => *c,
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Value::Real(x) => *x == 0.0,
            Value::Complex(c) => c.re == 0.0 && c.im == 0.0,
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Real(x)
    }
}

impl From<Complex64> for Value {
    fn from(c: Complex64) -> Self {
        Value::Complex(c)
    }
}

/// Expression tree node. Variables are indices into the owning
/// [`Expression`]'s variable list.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(Value),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Exp(Box<Node>),
    Log(Box<Node>),
    Abs2(Box<Node>),
    Re(Box<Node>),
    Im(Box<Node>),
    Max(Box<Node>, Box<Node>),
    Min(Box<Node>, Box<Node>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("kind mismatch: {0}")]
    KindMismatch(&'static str),
    #[error("binding does not cover variable {0}")]
    MissingBinding(String),
    #[error("singular stencil: non-finite value within finite-difference stencil")]
    SingularStencil,
}

#[derive(Debug, Error)]
pub enum ExprError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn add(a: Value, b: Value) -> Value {
    match (a, b) {
        (Value::Real(x), Value::Real(y)) => Value::Real(x + y),
        _ => Value::Complex(a.as_complex() + b.as_complex()),
    }
}

fn sub(a: Value, b: Value) -> Value {
    match (a, b) {
        (Value::Real(x), Value::Real(y)) => Value::Real(x - y),
        _ => Value::Complex(a.as_complex() - b.as_complex()),
    }
}

fn mul(a: Value, b: Value) -> Value {
    match (a, b) {
        (Value::Real(x), Value::Real(y)) => Value::Real(x * y),
        _ => Value::Complex(a.as_complex() * b.as_complex()),
    }
}

fn div(a: Value, b: Value) -> Result<Value, EvalError> {
    if b.is_zero() {
        return Err(EvalError::DivisionByZero);
    }
    Ok(match (a, b) {
        (Value::Real(x), Value::Real(y)) => Value::Real(x / y),
        _ => Value::Complex(a.as_complex() / b.as_complex()),
    })
}

fn powi(a: Value, k: i32) -> Result<Value, EvalError> {
    Ok(match a {
        Value::Real(x) => Value::Real(x.powi(k)),
        Value::Complex(c) => {
            if k < 0 && c.norm_sqr() == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            Value::Complex(c.powi(k))
        }
    })
}

impl Node {
    fn eval(&self, values: &[Value]) -> Result<Value, EvalError> {
        Ok(match self {
            Node::Const(v) => *v,
            Node::Var(i) => values[*i],
            Node::Neg(a) => sub(Value::Real(0.0), a.eval(values)?),
            Node::Add(a, b) => add(a.eval(values)?, b.eval(values)?),
            Node::Sub(a, b) => sub(a.eval(values)?, b.eval(values)?),
            Node::Mul(a, b) => mul(a.eval(values)?, b.eval(values)?),
            Node::Div(a, b) => div(a.eval(values)?, b.eval(values)?)?,
            Node::Pow(a, k) => powi(a.eval(values)?, *k)?,
            Node::Exp(a) => match a.eval(values)? {
                Value::Real(x) => Value::Real(x.exp()),
                Value::Complex(c) => Value::Complex(c.exp()),
            },
            Node::Log(a) => {
                let x = a.eval(values)?.as_real()?;
                // log 0 and log(negative) both map to the -inf sentinel.
                if x > 0.0 {
                    Value::Real(x.ln())
                } else {
                    Value::Real(f64::NEG_INFINITY)
                }
            }
            Node::Abs2(a) => match a.eval(values)? {
                Value::Real(x) => Value::Real(x * x),
                Value::Complex(c) => Value::Real(c.norm_sqr()),
            },
            Node::Re(a) => Value::Real(match a.eval(values)? {
                Value::Real(x) => x,
                Value::Complex(c) => c.re,
            }),
            Node::Im(a) => Value::Real(match a.eval(values)? {
                Value::Real(_) => 0.0,
                Value::Complex(c) => c.im,
            }),
            Node::Max(a, b) => {
                Value::Real(a.eval(values)?.as_real()?.max(b.eval(values)?.as_real()?))
            }
            Node::Min(a, b) => {
                Value::Real(a.eval(values)?.as_real()?.min(b.eval(values)?.as_real()?))
            }
        })
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a) | Node::Exp(a) | Node::Log(a) | Node::Abs2(a) | Node::Re(a)
            | Node::Im(a) => a.max_var(),
            Node::Pow(a, _) => a.max_var(),
            Node::Add(a, b)
            | Node::Sub(a, b)
            | Node::Mul(a, b)
            | Node::Div(a, b)
            | Node::Max(a, b)
            | Node::Min(a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, None) => x,
                (None, y) => y,
            },
        }
    }
}

/// A parsed scalar function of named real/complex variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    ast: Node,
    vars: Vec<(String, VarKind)>,
}

impl Expression {
    /// Parse `text` against the declared variable list.
    pub fn parse(text: &str, vars: &[(&str, VarKind)]) -> Result<Expression, ParseError> {
        parser::parse(text, vars)
    }

    /// Build an expression from a programmatically constructed tree.
    /// Every `Var` index must refer to a declared variable.
    pub fn from_parts(vars: Vec<(String, VarKind)>, ast: Node) -> Expression {
        if let Some(max) = ast.max_var() {
            assert!(
                max < vars.len(),
                "expression references variable index {max} but only {} declared",
                vars.len()
            );
        }
        Expression { ast, vars }
    }

    pub fn vars(&self) -> &[(String, VarKind)] {
        &self.vars
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|(n, _)| n == name)
    }

    /// Evaluate with values given in declaration order. Kinds are
    /// checked: a complex value bound to a real variable is an error.
    pub fn eval(&self, values: &[Value]) -> Result<Value, EvalError> {
        if values.len() != self.vars.len() {
            return Err(EvalError::MissingBinding(format!(
                "expected {} values, got {}",
                self.vars.len(),
                values.len()
            )));
        }
        for ((name, kind), v) in self.vars.iter().zip(values) {
            if *kind == VarKind::Real {
                if let Value::Complex(c) = v {
                    if c.im != 0.0 {
                        let _ = name;
                        return Err(EvalError::KindMismatch(
                            "complex value bound to real variable",
                        ));
                    }
                }
            }
        }
        self.ast.eval(values)
    }

    /// Evaluate with a name → value map (order independent).
    pub fn eval_named(&self, binding: &[(&str, Value)]) -> Result<Value, EvalError> {
        let mut values = Vec::with_capacity(self.vars.len());
        for (name, _) in &self.vars {
            match binding.iter().find(|(n, _)| n == name) {
                Some((_, v)) => values.push(*v),
                None => return Err(EvalError::MissingBinding(name.clone())),
            }
        }
        self.eval(&values)
    }

    /// Central-difference gradient over all real coordinates, in
    /// declaration order: a real variable contributes one coordinate, a
    /// complex one two (re, im). O(h^2) for thrice-differentiable
    /// expressions; any non-finite sample in the stencil is an error.
    pub fn gradient_fd(&self, values: &[Value], h: f64) -> Result<Vec<f64>, EvalError> {
        let mut grad = Vec::new();
        let mut work = values.to_vec();
        for (i, (_, kind)) in self.vars.iter().enumerate() {
            let parts: &[bool] = match kind {
                VarKind::Real => &[false],
                VarKind::Complex => &[false, true],
            };
            for &imag in parts {
                let base = values[i];
                let mut sample = |delta: f64| -> Result<f64, EvalError> {
                    work[i] = perturb(base, delta, imag);
                    let v = self.eval(&work)?.as_real()?;
                    if !v.is_finite() {
                        return Err(EvalError::SingularStencil);
                    }
                    Ok(v)
                };
                let plus = sample(h)?;
                let minus = sample(-h)?;
                work[i] = base;
                grad.push((plus - minus) / (2.0 * h));
            }
        }
        Ok(grad)
    }

    /// Number of real coordinates spanned by the variable list.
    pub fn real_coord_count(&self) -> usize {
        self.vars
            .iter()
            .map(|(_, k)| match k {
                VarKind::Real => 1,
                VarKind::Complex => 2,
            })
            .sum()
    }

    pub(crate) fn ast(&self) -> &Node {
        &self.ast
    }
}

fn perturb(v: Value, delta: f64, imag: bool) -> Value {
    match (v, imag) {
        (Value::Real(x), false) => Value::Real(x + delta),
        (Value::Real(x), true) => Value::Complex(Complex64::new(x, delta)),
        (Value::Complex(c), false) => Value::Complex(Complex64::new(c.re + delta, c.im)),
        (Value::Complex(c), true) => Value::Complex(Complex64::new(c.re, c.im + delta)),
    }
}

// ---------------------------------------------------------------------
// Printing. `parse(print(e))` evaluates identically to `e`.
// ---------------------------------------------------------------------

fn prec(node: &Node) -> u8 {
    match node {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(..) => 3,
        Node::Pow(..) => 4,
        _ => 5,
    }
}

fn fmt_node(node: &Node, vars: &[(String, VarKind)], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let child = |n: &Node, min: u8, f: &mut fmt::Formatter<'_>| -> fmt::Result {
        if prec(n) < min {
            write!(f, "(")?;
            fmt_node(n, vars, f)?;
            write!(f, ")")
        } else {
            fmt_node(n, vars, f)
        }
    };
    match node {
        Node::Const(Value::Real(x)) => {
            if *x < 0.0 || x.is_nan() {
                write!(f, "({x:?})")
            } else {
                write!(f, "{x:?}")
            }
        }
        Node::Const(Value::Complex(c)) => write!(f, "complex({:?}, {:?})", c.re, c.im),
        Node::Var(i) => write!(f, "{}", vars[*i].0),
        Node::Neg(a) => {
            write!(f, "-")?;
            child(a, 3, f)
        }
        Node::Add(a, b) => {
            child(a, 1, f)?;
            write!(f, " + ")?;
            child(b, 2, f)
        }
        Node::Sub(a, b) => {
            child(a, 1, f)?;
            write!(f, " - ")?;
            child(b, 2, f)
        }
        Node::Mul(a, b) => {
            child(a, 2, f)?;
            write!(f, "*")?;
            child(b, 3, f)
        }
        Node::Div(a, b) => {
            child(a, 2, f)?;
            write!(f, "/")?;
            child(b, 3, f)
        }
        Node::Pow(a, k) => {
            child(a, 5, f)?;
            if *k < 0 {
                write!(f, "^({k})")
            } else {
                write!(f, "^{k}")
            }
        }
        Node::Exp(a) => write_call(f, "exp", &[a], vars),
        Node::Log(a) => write_call(f, "log", &[a], vars),
        Node::Abs2(a) => write_call(f, "abs2", &[a], vars),
        Node::Re(a) => write_call(f, "re", &[a], vars),
        Node::Im(a) => write_call(f, "im", &[a], vars),
        Node::Max(a, b) => write_call(f, "max", &[a, b], vars),
        Node::Min(a, b) => write_call(f, "min", &[a, b], vars),
    }
}

fn write_call(
    f: &mut fmt::Formatter<'_>,
    name: &str,
    args: &[&Node],
    vars: &[(String, VarKind)],
) -> fmt::Result {
    write!(f, "{name}(")?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        fmt_node(a, vars, f)?;
    }
    write!(f, ")")
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_node(&self.ast, &self.vars, f)
    }
}

// ---------------------------------------------------------------------
// Programmatic construction.
// ---------------------------------------------------------------------

/// Tree builders for constructing expressions in code. Combine with
/// [`Expression::from_parts`].
pub mod build {
    use super::{Node, Value};
    use num_complex::Complex64;

    pub fn con(x: f64) -> Node {
        Node::Const(Value::Real(x))
    }
    pub fn conc(c: Complex64) -> Node {
        Node::Const(Value::Complex(c))
    }
    pub fn var(i: usize) -> Node {
        Node::Var(i)
    }
    pub fn exp(a: Node) -> Node {
        Node::Exp(Box::new(a))
    }
    pub fn log(a: Node) -> Node {
        Node::Log(Box::new(a))
    }
    pub fn abs2(a: Node) -> Node {
        Node::Abs2(Box::new(a))
    }
    pub fn re(a: Node) -> Node {
        Node::Re(Box::new(a))
    }
    pub fn im(a: Node) -> Node {
        Node::Im(Box::new(a))
    }
    pub fn powi(a: Node, k: i32) -> Node {
        Node::Pow(Box::new(a), k)
    }
    pub fn max(a: Node, b: Node) -> Node {
        Node::Max(Box::new(a), Box::new(b))
    }
    pub fn min(a: Node, b: Node) -> Node {
        Node::Min(Box::new(a), Box::new(b))
    }
    /// Conjugate, spelled through re/im since the language has no
    /// dedicated node: `re(a) - i*im(a)`.
    pub fn conj(a: Node) -> Node {
        Node::Sub(
            Box::new(Node::Re(Box::new(a.clone()))),
            Box::new(Node::Mul(
                Box::new(conc(Complex64::new(0.0, 1.0))),
                Box::new(Node::Im(Box::new(a))),
            )),
        )
    }
}

impl std::ops::Add for Node {
    type Output = Node;
    fn add(self, rhs: Node) -> Node {
        Node::Add(Box::new(self), Box::new(rhs))
    }
}
impl std::ops::Sub for Node {
    type Output = Node;
    fn sub(self, rhs: Node) -> Node {
        Node::Sub(Box::new(self), Box::new(rhs))
    }
}
impl std::ops::Mul for Node {
    type Output = Node;
    fn mul(self, rhs: Node) -> Node {
        Node::Mul(Box::new(self), Box::new(rhs))
    }
}
impl std::ops::Div for Node {
    type Output = Node;
    fn div(self, rhs: Node) -> Node {
        Node::Div(Box::new(self), Box::new(rhs))
    }
}
impl std::ops::Neg for Node {
    type Output = Node;
    fn neg(self) -> Node {
        Node::Neg(Box::new(self))
    }
}

// ---------------------------------------------------------------------
// Expressions bound to grid coordinates.
// ---------------------------------------------------------------------

/// How one declared variable receives its value when evaluating over a
/// coordinate vector.
#[derive(Debug, Clone, Copy)]
pub enum VarBinding {
    Fixed(Value),
    /// Real variable read from `coords[i]`.
    RealCoord(usize),
    /// Complex variable assembled from `coords[re]` and `coords[im]`.
    ComplexCoord(usize, usize),
}

/// An expression together with a rule mapping grid coordinates to its
/// variables. This is what the quadrature layer stores and evaluates at
/// every node.
#[derive(Debug, Clone)]
pub struct BoundExpr {
    expr: Arc<Expression>,
    bindings: Vec<VarBinding>,
}

impl BoundExpr {
    pub fn new(expr: Arc<Expression>, bindings: Vec<VarBinding>) -> BoundExpr {
        assert_eq!(
            expr.vars().len(),
            bindings.len(),
            "one binding per declared variable"
        );
        assert!(bindings.len() <= 8, "at most 8 variables per expression");
        BoundExpr { expr, bindings }
    }

    /// Bind every variable to consecutive coordinates: real variables
    /// take one slot, complex ones two, in declaration order.
    pub fn over_coords(expr: Arc<Expression>) -> BoundExpr {
        let mut bindings = Vec::new();
        let mut slot = 0;
        for (_, kind) in expr.vars() {
            match kind {
                VarKind::Real => {
                    bindings.push(VarBinding::RealCoord(slot));
                    slot += 1;
                }
                VarKind::Complex => {
                    bindings.push(VarBinding::ComplexCoord(slot, slot + 1));
                    slot += 2;
                }
            }
        }
        BoundExpr::new(expr, bindings)
    }

    /// Like [`BoundExpr::over_coords`] but with the named variable held
    /// fixed; the remaining variables map to consecutive coordinates.
    pub fn over_coords_with_fixed(
        expr: Arc<Expression>,
        fixed: &[(&str, Value)],
    ) -> BoundExpr {
        let mut bindings = Vec::new();
        let mut slot = 0;
        for (name, kind) in expr.vars() {
            if let Some((_, v)) = fixed.iter().find(|(n, _)| n == name) {
                bindings.push(VarBinding::Fixed(*v));
                continue;
            }
            match kind {
                VarKind::Real => {
                    bindings.push(VarBinding::RealCoord(slot));
                    slot += 1;
                }
                VarKind::Complex => {
                    bindings.push(VarBinding::ComplexCoord(slot, slot + 1));
                    slot += 2;
                }
            }
        }
        BoundExpr::new(expr, bindings)
    }

    pub fn expr(&self) -> &Arc<Expression> {
        &self.expr
    }

    /// Replace the fixed values (e.g. move to the next fiber) keeping
    /// the coordinate layout.
    pub fn with_fixed(&self, fixed: &[(&str, Value)]) -> BoundExpr {
        let mut bindings = self.bindings.clone();
        for (name, v) in fixed {
            let idx = self
                .expr
                .var_index(name)
                .unwrap_or_else(|| panic!("unknown variable {name}"));
            bindings[idx] = VarBinding::Fixed(*v);
        }
        BoundExpr {
            expr: self.expr.clone(),
            bindings,
        }
    }

    pub fn eval_at(&self, coords: &[f64]) -> Result<Value, EvalError> {
        let mut values: arrayvec::ArrayVec<Value, 8> = arrayvec::ArrayVec::new();
        for b in &self.bindings {
            values.push(match b {
                VarBinding::Fixed(v) => *v,
                VarBinding::RealCoord(i) => Value::Real(coords[*i]),
                VarBinding::ComplexCoord(r, i) => {
                    Value::Complex(Complex64::new(coords[*r], coords[*i]))
                }
            });
        }
        self.expr.eval(&values)
    }

    /// Evaluate and coerce to extended-real.
    pub fn eval_real(&self, coords: &[f64]) -> Result<f64, EvalError> {
        self.eval_at(coords)?.as_real()
    }
}

#[cfg(test)]
mod tests;
