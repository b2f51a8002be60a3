use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{compare, RelOp, State, Tolerance, Value};

use super::ast::{BinOp, Expr, Goal};
use super::render::render_goal;

/// Named numeric functions callable from expressions (quality models).
pub trait Functions: Sync {
    fn call(&self, name: &str, args: &[f64]) -> Result<f64>;
}

/// A function environment with nothing in it.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoFunctions;

impl Functions for NoFunctions {
    fn call(&self, name: &str, _args: &[f64]) -> Result<f64> {
        Err(Error::UnknownFunction(name.to_string()))
    }
}

#[derive(Clone, Copy)]
pub struct Env<'a> {
    pub functions: &'a dyn Functions,
    pub tolerance: Tolerance,
}

impl<'a> Env<'a> {
    pub fn new(functions: &'a dyn Functions) -> Self {
        Self {
            functions,
            tolerance: Tolerance::default(),
        }
    }

    pub fn with_tolerance(mut self, tolerance: Tolerance) -> Self {
        self.tolerance = tolerance;
        self
    }
}

impl Default for Env<'static> {
    fn default() -> Self {
        Env::new(&NoFunctions)
    }
}

fn number(value: Value, context: &Expr) -> Result<f64> {
    match value {
        Value::Number(n) => Ok(n),
        other => Err(Error::TypeMismatch(format!(
            "`{context}` needs a number, got {} {other}",
            other.kind()
        ))),
    }
}

fn finite(n: f64, context: &Expr) -> Result<f64> {
    if n.is_finite() {
        Ok(n)
    } else {
        Err(Error::NonFinite(context.to_string()))
    }
}

/// Strict evaluation: every attribute must be bound and every call resolve.
pub fn eval_expression(expr: &Expr, state: &State, env: &Env) -> Result<Value> {
    Ok(match expr {
        Expr::Number(n) => Value::Number(*n),
        Expr::Literal(text) => Value::Enum(text.clone()),
        Expr::Bool(b) => Value::Flag(*b),
        Expr::Attr(name) => state
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownAttribute(name.clone()))?,
        Expr::Neg(inner) => Value::Number(-number(eval_expression(inner, state, env)?, expr)?),
        Expr::Binary { op, left, right } => {
            let l = number(eval_expression(left, state, env)?, expr)?;
            let r = number(eval_expression(right, state, env)?, expr)?;
            let n = match op {
                BinOp::Add => l + r,
                BinOp::Sub => l - r,
                BinOp::Mul => l * r,
                BinOp::Div if r == 0.0 => return Err(Error::DivisionByZero),
                BinOp::Div => l / r,
            };
            Value::Number(finite(n, expr)?)
        }
        Expr::Call { function, args } => {
            let args = args
                .iter()
                .map(|a| number(eval_expression(a, state, env)?, expr))
                .collect::<Result<Vec<f64>>>()?;
            Value::Number(finite(env.functions.call(function, &args)?, expr)?)
        }
    })
}

/// Evaluation tree mirroring a [`Goal`]; every node records its truth value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub goal: String,
    pub value: bool,
    #[serde(flatten)]
    pub detail: Detail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Detail {
    Const,
    Compare {
        lhs: Value,
        op: RelOp,
        rhs: Value,
    },
    Member {
        lhs: Value,
        set: Vec<Value>,
    },
    Not {
        operand: Box<Breakdown>,
    },
    And {
        left: Box<Breakdown>,
        right: Box<Breakdown>,
    },
    Or {
        left: Box<Breakdown>,
        right: Box<Breakdown>,
    },
    Implies {
        left: Box<Breakdown>,
        right: Box<Breakdown>,
    },
    Iff {
        left: Box<Breakdown>,
        right: Box<Breakdown>,
    },
}

impl Breakdown {
    fn children(&self) -> Vec<&Breakdown> {
        match &self.detail {
            Detail::Const | Detail::Compare { .. } | Detail::Member { .. } => vec![],
            Detail::Not { operand } => vec![operand],
            Detail::And { left, right }
            | Detail::Or { left, right }
            | Detail::Implies { left, right }
            | Detail::Iff { left, right } => vec![left, right],
        }
    }

    /// Indented one-line-per-node rendering for terminals.
    pub fn lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_lines(0, &mut out);
        out
    }

    fn collect_lines(&self, depth: usize, out: &mut Vec<String>) {
        let mark = if self.value { "true " } else { "false" };
        let detail = match &self.detail {
            Detail::Compare { lhs, op, rhs } => format!("   [{lhs} {op} {rhs}]"),
            Detail::Member { lhs, .. } => format!("   [{lhs}]"),
            _ => String::new(),
        };
        out.push(format!("{}{mark}  {}{detail}", "  ".repeat(depth), self.goal));
        for child in self.children() {
            child.collect_lines(depth + 1, out);
        }
    }
}

/// Two-valued evaluation of a goal. Both operands of every connective are
/// evaluated, so errors surface even where short-circuiting would hide them.
pub fn eval_goal(goal: &Goal, state: &State, env: &Env) -> Result<(bool, Breakdown)> {
    let node = breakdown(goal, state, env)?;
    Ok((node.value, node))
}

fn breakdown(goal: &Goal, state: &State, env: &Env) -> Result<Breakdown> {
    let pair = |a: &Goal, b: &Goal| -> Result<(Box<Breakdown>, Box<Breakdown>)> {
        Ok((
            Box::new(breakdown(a, state, env)?),
            Box::new(breakdown(b, state, env)?),
        ))
    };
    let (value, detail) = match goal {
        Goal::Const(v) => (*v, Detail::Const),
        Goal::Compare { lhs, op, rhs } => {
            let l = eval_expression(lhs, state, env)?;
            let r = eval_expression(rhs, state, env)?;
            let v = compare(&l, &r, *op, env.tolerance)?;
            (v, Detail::Compare { lhs: l, op: *op, rhs: r })
        }
        Goal::Member { lhs, set } => {
            let l = eval_expression(lhs, state, env)?;
            let set: Vec<Value> = set.iter().map(|item| item.to_value()).collect();
            let mut found = false;
            for item in &set {
                found |= compare(&l, item, RelOp::Eq, env.tolerance)?;
            }
            (found, Detail::Member { lhs: l, set })
        }
        Goal::Not(inner) => {
            let operand = Box::new(breakdown(inner, state, env)?);
            (!operand.value, Detail::Not { operand })
        }
        Goal::And(a, b) => {
            let (left, right) = pair(a, b)?;
            (left.value && right.value, Detail::And { left, right })
        }
        Goal::Or(a, b) => {
            let (left, right) = pair(a, b)?;
            (left.value || right.value, Detail::Or { left, right })
        }
        Goal::Implies(a, b) => {
            let (left, right) = pair(a, b)?;
            (!left.value || right.value, Detail::Implies { left, right })
        }
        Goal::Iff(a, b) => {
            let (left, right) = pair(a, b)?;
            (left.value == right.value, Detail::Iff { left, right })
        }
    };
    Ok(Breakdown {
        goal: render_goal(goal),
        value,
        detail,
    })
}
