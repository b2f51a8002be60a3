//! Name resolution and static kind checking for embedded expressions.

use crate::error::{Error, Result};
use crate::expr::{Expr, Goal, SetItem};
use crate::model::{AttributeDef, Kind, Schema};

/// What an identifier may refer to while binding.
pub(crate) trait Scope {
    fn attribute(&self, name: &str) -> Option<&AttributeDef>;
    /// Whether an unbound bare identifier may be read as an enum literal.
    fn literal_fallback(&self, name: &str) -> bool;
    fn function_arity(&self, name: &str) -> Option<usize>;
}

#[derive(Debug, Clone, PartialEq)]
enum Ty<'a> {
    Number,
    Flag,
    Enum(&'a AttributeDef),
    Literal(String),
}

impl Ty<'_> {
    fn describe(&self) -> String {
        match self {
            Ty::Number => "number".into(),
            Ty::Flag => "flag".into(),
            Ty::Enum(def) => format!("enum `{}`", def.name),
            Ty::Literal(t) => format!("literal '{t}'"),
        }
    }
}

/// Replaces bare identifiers that are not attributes but are enum literals.
pub(crate) fn resolve_expr(expr: &Expr, scope: &dyn Scope) -> Result<Expr> {
    let mut problem = None;
    let resolved = expr.map_attrs(&mut |name| {
        if scope.attribute(name).is_some() {
            None
        } else if scope.literal_fallback(name) {
            Some(Expr::Literal(name.to_string()))
        } else {
            problem.get_or_insert_with(|| Error::UnknownAttribute(name.to_string()));
            None
        }
    });
    match problem {
        Some(e) => Err(e),
        None => Ok(resolved),
    }
}

fn infer<'a>(expr: &Expr, scope: &'a dyn Scope) -> Result<Ty<'a>> {
    let numeric = |e: &Expr, ty: Ty| -> Result<()> {
        if ty == Ty::Number {
            Ok(())
        } else {
            Err(Error::TypeMismatch(format!(
                "`{e}` is a {}, arithmetic needs numbers",
                ty.describe()
            )))
        }
    };
    Ok(match expr {
        Expr::Number(_) => Ty::Number,
        Expr::Bool(_) => Ty::Flag,
        Expr::Literal(t) => Ty::Literal(t.clone()),
        Expr::Attr(name) => {
            let def = scope
                .attribute(name)
                .ok_or_else(|| Error::UnknownAttribute(name.clone()))?;
            match def.kind {
                Kind::Number => Ty::Number,
                Kind::Flag => Ty::Flag,
                Kind::Enum => Ty::Enum(def),
            }
        }
        Expr::Neg(inner) => {
            numeric(inner, infer(inner, scope)?)?;
            Ty::Number
        }
        Expr::Binary { left, right, .. } => {
            numeric(left, infer(left, scope)?)?;
            numeric(right, infer(right, scope)?)?;
            Ty::Number
        }
        Expr::Call { function, args } => {
            let arity = scope
                .function_arity(function)
                .ok_or_else(|| Error::UnknownFunction(function.clone()))?;
            if arity != args.len() {
                return Err(Error::ArityMismatch {
                    function: function.clone(),
                    expected: arity,
                    found: args.len(),
                });
            }
            for arg in args {
                numeric(arg, infer(arg, scope)?)?;
            }
            Ty::Number
        }
    })
}

fn item_ty(item: &SetItem) -> Ty<'static> {
    match item {
        SetItem::Number(_) => Ty::Number,
        SetItem::Bool(_) => Ty::Flag,
        SetItem::Text(t) => Ty::Literal(t.clone()),
    }
}

fn comparable(a: &Ty, b: &Ty) -> Result<()> {
    let ok = match (a, b) {
        (Ty::Number, Ty::Number) | (Ty::Flag, Ty::Flag) => true,
        (Ty::Enum(def), Ty::Literal(t)) | (Ty::Literal(t), Ty::Enum(def)) => {
            if !def.domain.contains(t) {
                return Err(Error::TypeMismatch(format!(
                    "'{t}' is not in the domain of `{}` {:?}",
                    def.name, def.domain
                )));
            }
            true
        }
        (Ty::Enum(_) | Ty::Literal(_), Ty::Enum(_) | Ty::Literal(_)) => true,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::TypeMismatch(format!(
            "cannot compare {} with {}",
            a.describe(),
            b.describe()
        )))
    }
}

pub(crate) fn check_goal(goal: &Goal, scope: &dyn Scope) -> Result<()> {
    match goal {
        Goal::Const(_) => Ok(()),
        Goal::Compare { lhs, op, rhs } => {
            let l = infer(lhs, scope)?;
            let r = infer(rhs, scope)?;
            if op.is_ordering() && (l != Ty::Number || r != Ty::Number) {
                return Err(Error::TypeMismatch(format!(
                    "`{op}` needs numbers, got {} and {}",
                    l.describe(),
                    r.describe()
                )));
            }
            comparable(&l, &r)
        }
        Goal::Member { lhs, set } => {
            let l = infer(lhs, scope)?;
            set.iter().try_for_each(|item| comparable(&l, &item_ty(item)))
        }
        Goal::Not(g) => check_goal(g, scope),
        Goal::And(a, b) | Goal::Or(a, b) | Goal::Implies(a, b) | Goal::Iff(a, b) => {
            check_goal(a, scope)?;
            check_goal(b, scope)
        }
    }
}

/// Resolves names and checks kinds; returns the bound goal.
pub(crate) fn bind_goal(goal: &Goal, scope: &dyn Scope) -> Result<Goal> {
    let mut problem = None;
    let bound = goal.map_exprs(&mut |e| match resolve_expr(e, scope) {
        Ok(r) => r,
        Err(err) => {
            problem.get_or_insert(err);
            e.clone()
        }
    });
    if let Some(e) = problem {
        return Err(e);
    }
    check_goal(&bound, scope)?;
    Ok(bound)
}

/// Binds the right-hand side of `target := rhs`.
pub(crate) fn bind_assignment(target: &AttributeDef, rhs: &Expr, scope: &dyn Scope) -> Result<Expr> {
    let rhs = resolve_expr(rhs, scope)?;
    let ty = infer(&rhs, scope)?;
    let ok = match (target.kind, &ty) {
        (Kind::Number, Ty::Number) | (Kind::Flag, Ty::Flag) | (Kind::Enum, Ty::Enum(_)) => true,
        (Kind::Enum, Ty::Literal(t)) => {
            if !target.domain.contains(t) {
                return Err(Error::TypeMismatch(format!(
                    "'{t}' is not in the domain of `{}` {:?}",
                    target.name, target.domain
                )));
            }
            true
        }
        _ => false,
    };
    if !ok {
        return Err(Error::TypeMismatch(format!(
            "cannot assign {} to {} attribute `{}`",
            ty.describe(),
            target.kind,
            target.name
        )));
    }
    Ok(rhs)
}

/// Scope over a catalog schema plus declared function arities.
pub(crate) struct SchemaScope<'a> {
    pub schema: &'a Schema,
    pub arity: &'a dyn Fn(&str) -> Option<usize>,
}

impl Scope for SchemaScope<'_> {
    fn attribute(&self, name: &str) -> Option<&AttributeDef> {
        self.schema.get(name)
    }

    fn literal_fallback(&self, name: &str) -> bool {
        self.schema.is_enum_literal(name)
    }

    fn function_arity(&self, name: &str) -> Option<usize> {
        (self.arity)(name)
    }
}
