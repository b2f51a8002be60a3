//! Canonical printing. Compound subterms are always parenthesized, so the
//! output never depends on precedence rules and reparses to the same tree.

use std::fmt::{self, Write};

use super::ast::{Expr, Goal, SetItem};

fn is_compound(expr: &Expr) -> bool {
    matches!(expr, Expr::Binary { .. } | Expr::Neg(_))
}

fn write_operand(out: &mut String, expr: &Expr) {
    if is_compound(expr) {
        out.push('(');
        write_expr(out, expr);
        out.push(')');
    } else {
        write_expr(out, expr);
    }
}

pub(crate) fn write_number(out: &mut String, n: f64) {
    // `Display` for f64 is the shortest round-tripping form without exponent.
    let _ = write!(out, "{n}");
}

pub(crate) fn write_expr(out: &mut String, expr: &Expr) {
    match expr {
        Expr::Number(n) => write_number(out, *n),
        Expr::Literal(text) => {
            let _ = write!(out, "'{text}'");
        }
        Expr::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Expr::Attr(name) => out.push_str(name),
        Expr::Neg(inner) => {
            out.push('-');
            write_operand(out, inner);
        }
        Expr::Binary { op, left, right } => {
            write_operand(out, left);
            let _ = write!(out, " {} ", op.symbol());
            write_operand(out, right);
        }
        Expr::Call { function, args } => {
            out.push_str(function);
            out.push('(');
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, arg);
            }
            out.push(')');
        }
    }
}

fn write_item(out: &mut String, item: &SetItem) {
    match item {
        SetItem::Number(n) => write_number(out, *n),
        SetItem::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        SetItem::Text(t) => {
            let _ = write!(out, "'{t}'");
        }
    }
}

fn write_goal_operand(out: &mut String, goal: &Goal) {
    match goal {
        Goal::Const(_) => write_goal(out, goal),
        _ => {
            out.push('(');
            write_goal(out, goal);
            out.push(')');
        }
    }
}

fn write_binary_goal_operand(out: &mut String, goal: &Goal) {
    match goal {
        Goal::And(..) | Goal::Or(..) | Goal::Implies(..) | Goal::Iff(..) => {
            out.push('(');
            write_goal(out, goal);
            out.push(')');
        }
        _ => write_goal(out, goal),
    }
}

pub(crate) fn write_goal(out: &mut String, goal: &Goal) {
    let (sym, a, b) = match goal {
        Goal::Const(v) => {
            let _ = write!(out, "{v}");
            return;
        }
        Goal::Compare { lhs, op, rhs } => {
            write_expr(out, lhs);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, rhs);
            return;
        }
        Goal::Member { lhs, set } => {
            write_expr(out, lhs);
            out.push_str(" in {");
            for (i, item) in set.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_item(out, item);
            }
            out.push('}');
            return;
        }
        Goal::Not(inner) => {
            out.push('!');
            write_goal_operand(out, inner);
            return;
        }
        Goal::And(a, b) => ("&", a, b),
        Goal::Or(a, b) => ("|", a, b),
        Goal::Implies(a, b) => ("=>", a, b),
        Goal::Iff(a, b) => ("<=>", a, b),
    };
    write_binary_goal_operand(out, a);
    let _ = write!(out, " {sym} ");
    write_binary_goal_operand(out, b);
}

pub fn render_expression(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr);
    out
}

pub fn render_goal(goal: &Goal) -> String {
    let mut out = String::new();
    write_goal(&mut out, goal);
    out
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_expression(self))
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_goal(self))
    }
}
