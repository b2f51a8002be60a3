//! Quality models: named cause-effect functions usable inside expressions.

use crate::error::{Error, Result};
use crate::expr::{eval_expression, Env, Expr, Functions};
use crate::model::{State, Tolerance, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum ModelBody {
    Expression(Expr),
    /// Knots `(x, y)` with strictly increasing `x`; interpolated linearly.
    Table(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityModel {
    pub name: String,
    pub params: Vec<String>,
    pub body: ModelBody,
}

impl QualityModel {
    pub fn expression(name: &str, params: &[&str], body: Expr) -> Self {
        Self {
            name: name.to_string(),
            params: params.iter().map(|p| p.to_string()).collect(),
            body: ModelBody::Expression(body),
        }
    }

    pub fn table(name: &str, param: &str, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.to_string(),
            params: vec![param.to_string()],
            body: ModelBody::Table(points),
        }
    }

    pub(crate) fn validate_table(&self) -> Result<()> {
        let ModelBody::Table(points) = &self.body else {
            return Ok(());
        };
        let bad = |msg: String| Err(Error::InvalidDocument(format!("table `{}`: {msg}", self.name)));
        if self.params.len() != 1 {
            return bad(format!("tables take exactly one parameter, found {}", self.params.len()));
        }
        if points.len() < 2 {
            return bad("at least two points are required".into());
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return bad("points must be finite".into());
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return bad("x values must be strictly increasing".into());
        }
        Ok(())
    }
}

/// Piecewise-linear interpolation; exact at knots, no extrapolation.
fn interpolate(name: &str, points: &[(f64, f64)], x: f64) -> Result<f64> {
    let (min, max) = (points[0].0, points[points.len() - 1].0);
    if !(min..=max).contains(&x) {
        return Err(Error::TableDomain {
            function: name.to_string(),
            arg: x,
            min,
            max,
        });
    }
    if let Some(&(_, y)) = points.iter().find(|(k, _)| *k == x) {
        return Ok(y);
    }
    let upper = points.partition_point(|(k, _)| *k < x);
    let (x0, y0) = points[upper - 1];
    let (x1, y1) = points[upper];
    Ok(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
}

/// Evaluates a quality model. `functions` resolves calls made by an
/// expression body (the owning catalog).
pub fn eval_function(
    model: &QualityModel,
    args: &[f64],
    functions: &dyn Functions,
    tolerance: Tolerance,
) -> Result<f64> {
    if args.len() != model.params.len() {
        return Err(Error::ArityMismatch {
            function: model.name.clone(),
            expected: model.params.len(),
            found: args.len(),
        });
    }
    match &model.body {
        ModelBody::Table(points) => interpolate(&model.name, points, args[0]),
        ModelBody::Expression(body) => {
            let scope: State = model.params.iter().cloned().zip(args.iter().copied()).collect();
            let env = Env::new(functions).with_tolerance(tolerance);
            match eval_expression(body, &scope, &env)? {
                Value::Number(n) => Ok(n),
                other => Err(Error::TypeMismatch(format!(
                    "function `{}` returned {} {other}",
                    model.name,
                    other.kind()
                ))),
            }
        }
    }
}
