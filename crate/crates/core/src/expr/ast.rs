use serde::{Deserialize, Serialize};

use crate::model::{RelOp, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    #[serde(rename = "+")]
    Add,
    #[serde(rename = "-")]
    Sub,
    #[serde(rename = "*")]
    Mul,
    #[serde(rename = "/")]
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

/// Arithmetic / value expression.
///
/// Quoted text is a [`Expr::Literal`]; a bare identifier parses as
/// [`Expr::Attr`] and is turned into a literal only by catalog binding, when
/// it names no attribute but is a known enum literal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Number(f64),
    Literal(String),
    Bool(bool),
    Attr(String),
    Neg(Box<Expr>),
    Binary {
        op: BinOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Call {
        function: String,
        args: Vec<Expr>,
    },
}

impl Expr {
    pub fn attr(name: &str) -> Self {
        Expr::Attr(name.to_string())
    }

    pub fn literal(text: &str) -> Self {
        Expr::Literal(text.to_string())
    }

    pub fn binary(op: BinOp, left: Expr, right: Expr) -> Self {
        Expr::Binary {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn call(function: &str, args: Vec<Expr>) -> Self {
        Expr::Call {
            function: function.to_string(),
            args,
        }
    }

    /// Visits every attribute reference, left to right.
    pub fn for_each_attr<'a>(&'a self, f: &mut dyn FnMut(&'a str)) {
        match self {
            Expr::Attr(name) => f(name),
            Expr::Neg(inner) => inner.for_each_attr(f),
            Expr::Binary { left, right, .. } => {
                left.for_each_attr(f);
                right.for_each_attr(f);
            }
            Expr::Call { args, .. } => args.iter().for_each(|a| a.for_each_attr(f)),
            Expr::Number(_) | Expr::Literal(_) | Expr::Bool(_) => {}
        }
    }

    /// Rewrites every attribute reference with `f`; `None` leaves it alone.
    pub fn map_attrs(&self, f: &mut dyn FnMut(&str) -> Option<Expr>) -> Expr {
        match self {
            Expr::Attr(name) => f(name).unwrap_or_else(|| self.clone()),
            Expr::Neg(inner) => Expr::Neg(Box::new(inner.map_attrs(f))),
            Expr::Binary { op, left, right } => {
                Expr::binary(*op, left.map_attrs(f), right.map_attrs(f))
            }
            Expr::Call { function, args } => Expr::Call {
                function: function.clone(),
                args: args.iter().map(|a| a.map_attrs(f)).collect(),
            },
            Expr::Number(_) | Expr::Literal(_) | Expr::Bool(_) => self.clone(),
        }
    }

    pub fn for_each_call<'a>(&'a self, f: &mut dyn FnMut(&'a str, usize)) {
        match self {
            Expr::Call { function, args } => {
                f(function, args.len());
                args.iter().for_each(|a| a.for_each_call(f));
            }
            Expr::Neg(inner) => inner.for_each_call(f),
            Expr::Binary { left, right, .. } => {
                left.for_each_call(f);
                right.for_each_call(f);
            }
            _ => {}
        }
    }
}

/// A literal inside a membership set: `x in {'a', 2, true}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetItem {
    Number(f64),
    Bool(bool),
    Text(String),
}

impl SetItem {
    pub fn to_value(&self) -> Value {
        match self {
            SetItem::Number(n) => Value::Number(*n),
            SetItem::Bool(b) => Value::Flag(*b),
            SetItem::Text(t) => Value::Enum(t.clone()),
        }
    }
}

/// Boolean goal formula. `a != b` is sugar for `!(a = b)` and never appears
/// as a `Compare` produced by the parser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    Const(bool),
    Compare { lhs: Expr, op: RelOp, rhs: Expr },
    Member { lhs: Expr, set: Vec<SetItem> },
    Not(Box<Goal>),
    And(Box<Goal>, Box<Goal>),
    Or(Box<Goal>, Box<Goal>),
    Implies(Box<Goal>, Box<Goal>),
    Iff(Box<Goal>, Box<Goal>),
}

impl Goal {
    pub fn compare(lhs: Expr, op: RelOp, rhs: Expr) -> Self {
        Goal::Compare { lhs, op, rhs }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Goal) -> Self {
        Goal::Not(Box::new(inner))
    }

    pub fn and(a: Goal, b: Goal) -> Self {
        Goal::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Goal, b: Goal) -> Self {
        Goal::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Goal, b: Goal) -> Self {
        Goal::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Goal, b: Goal) -> Self {
        Goal::Iff(Box::new(a), Box::new(b))
    }

    pub fn for_each_expr<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        match self {
            Goal::Const(_) => {}
            Goal::Compare { lhs, rhs, .. } => {
                f(lhs);
                f(rhs);
            }
            Goal::Member { lhs, .. } => f(lhs),
            Goal::Not(g) => g.for_each_expr(f),
            Goal::And(a, b) | Goal::Or(a, b) | Goal::Implies(a, b) | Goal::Iff(a, b) => {
                a.for_each_expr(f);
                b.for_each_expr(f);
            }
        }
    }

    /// Attribute names referenced by the goal, in order of first appearance.
    pub fn attributes(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        self.for_each_expr(&mut |e| {
            e.for_each_attr(&mut |name| {
                if !out.iter().any(|n| n == name) {
                    out.push(name.to_string());
                }
            })
        });
        out
    }

    pub fn map_exprs(&self, f: &mut dyn FnMut(&Expr) -> Expr) -> Goal {
        match self {
            Goal::Const(b) => Goal::Const(*b),
            Goal::Compare { lhs, op, rhs } => Goal::Compare {
                lhs: f(lhs),
                op: *op,
                rhs: f(rhs),
            },
            Goal::Member { lhs, set } => Goal::Member {
                lhs: f(lhs),
                set: set.clone(),
            },
            Goal::Not(g) => Goal::not(g.map_exprs(f)),
            Goal::And(a, b) => Goal::and(a.map_exprs(f), b.map_exprs(f)),
            Goal::Or(a, b) => Goal::or(a.map_exprs(f), b.map_exprs(f)),
            Goal::Implies(a, b) => Goal::implies(a.map_exprs(f), b.map_exprs(f)),
            Goal::Iff(a, b) => Goal::iff(a.map_exprs(f), b.map_exprs(f)),
        }
    }
}
