//! Pattern combinations: `seq`, `par`, `if`, `while` over pattern atoms.
//!
//! ```text
//! comb := IDENT
//!       | "seq(" comb ("," comb)+ ")" | "par(" comb ("," comb)+ ")"
//!       | "if(" goal "," comb ["," comb] ")" | "while(" goal "," comb ")"
//! ```

mod eval;
mod rewrite;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::error::{Error, ParseError, Result};
use crate::expr::{goal_text, write_goal, Goal, Parser, Tok};

pub use eval::{evaluate, verify, Branch, Evaluation, Trace, TraceEvent, VerifyReport, DEFAULT_ITERATION_CAP};
pub use rewrite::{node_at, rewrite, Edit, Path};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combination {
    Atom(String),
    Seq(Vec<Combination>),
    Par(Vec<Combination>),
    #[serde(rename = "if")]
    Cond {
        #[serde(with = "goal_text")]
        guard: Goal,
        then: Box<Combination>,
        #[serde(rename = "else", default, skip_serializing_if = "Option::is_none")]
        otherwise: Option<Box<Combination>>,
    },
    #[serde(rename = "while")]
    Iter {
        #[serde(with = "goal_text")]
        guard: Goal,
        body: Box<Combination>,
    },
}

impl Combination {
    pub fn atom(id: &str) -> Self {
        Combination::Atom(id.to_string())
    }

    pub fn cond(guard: Goal, then: Combination, otherwise: Option<Combination>) -> Self {
        Combination::Cond {
            guard,
            then: Box::new(then),
            otherwise: otherwise.map(Box::new),
        }
    }

    pub fn iter(guard: Goal, body: Combination) -> Self {
        Combination::Iter {
            guard,
            body: Box::new(body),
        }
    }

    /// Child nodes in path order (`if`: then, else; `while`: body).
    pub fn children(&self) -> Vec<&Combination> {
        match self {
            Combination::Atom(_) => vec![],
            Combination::Seq(cs) | Combination::Par(cs) => cs.iter().collect(),
            Combination::Cond { then, otherwise, .. } => {
                let mut out = vec![then.as_ref()];
                out.extend(otherwise.as_deref());
                out
            }
            Combination::Iter { body, .. } => vec![body],
        }
    }

    /// Atom ids in left-to-right order, with repeats.
    pub fn atoms(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Combination::Atom(id) => out.push(id),
            _ => self.children().into_iter().for_each(|c| c.collect_atoms(out)),
        }
    }

    fn write(&self, out: &mut String) {
        let list = |out: &mut String, name: &str, cs: &[Combination]| {
            out.push_str(name);
            out.push('(');
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                c.write(out);
            }
            out.push(')');
        };
        match self {
            Combination::Atom(id) => out.push_str(id),
            Combination::Seq(cs) => list(out, "seq", cs),
            Combination::Par(cs) => list(out, "par", cs),
            Combination::Cond {
                guard,
                then,
                otherwise,
            } => {
                out.push_str("if(");
                write_goal(out, guard);
                out.push_str(", ");
                then.write(out);
                if let Some(e) = otherwise {
                    out.push_str(", ");
                    e.write(out);
                }
                out.push(')');
            }
            Combination::Iter { guard, body } => {
                out.push_str("while(");
                write_goal(out, guard);
                out.push_str(", ");
                body.write(out);
                out.push(')');
            }
        }
    }
}

impl fmt::Display for Combination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_combination(self))
    }
}

pub fn render_combination(comb: &Combination) -> String {
    let mut out = String::new();
    comb.write(&mut out);
    out
}

fn parse_node(p: &mut Parser) -> Result<Combination, ParseError> {
    let at = p.position();
    let name = p.ident("a pattern id or operator")?;
    if !p.eat(&Tok::LParen) {
        return Ok(Combination::Atom(name));
    }
    let node = match name.as_str() {
        "seq" | "par" => {
            let mut children = vec![parse_node(p)?];
            while p.eat(&Tok::Comma) {
                children.push(parse_node(p)?);
            }
            if children.len() < 2 {
                return Err(p.error(format!("`{name}` needs at least two operands")));
            }
            if name == "seq" {
                Combination::Seq(children)
            } else {
                Combination::Par(children)
            }
        }
        "if" => {
            let guard = p.goal()?;
            p.expect(&Tok::Comma, "`,` after the condition")?;
            let then = parse_node(p)?;
            let otherwise = if p.eat(&Tok::Comma) {
                Some(parse_node(p)?)
            } else {
                None
            };
            Combination::cond(guard, then, otherwise)
        }
        "while" => {
            let guard = p.goal()?;
            p.expect(&Tok::Comma, "`,` after the condition")?;
            Combination::iter(guard, parse_node(p)?)
        }
        other => {
            let mut err = p.error(format!("unknown operator `{other}`"));
            err.position = at;
            return Err(err);
        }
    };
    p.expect(&Tok::RParen, "`)`")?;
    Ok(node)
}

/// Parses combination text. Pattern ids are not checked; see [`bind`].
pub fn parse_combination(text: &str) -> Result<Combination, ParseError> {
    let mut p = Parser::new(text)?;
    let comb = parse_node(&mut p)?;
    p.finish()?;
    Ok(comb)
}

/// Checks a combination against a catalog: atoms exist, `seq`/`par` have at
/// least two operands, guards resolve and type-check. Returns the bound tree.
pub fn bind(comb: &Combination, catalog: &Catalog) -> Result<Combination> {
    let mut problems = Vec::new();
    let bound = bind_node(comb, catalog, &mut problems);
    Error::collect(problems)?;
    Ok(bound)
}

fn bind_node(comb: &Combination, catalog: &Catalog, problems: &mut Vec<Error>) -> Combination {
    let mut guard = |g: &Goal| match catalog.bind_goal(g) {
        Ok(g) => g,
        Err(e) => {
            problems.push(e.context(format!("condition `{g}`")));
            g.clone()
        }
    };
    match comb {
        Combination::Atom(id) => {
            if let Err(e) = catalog.pattern(id) {
                problems.push(e);
            }
            comb.clone()
        }
        Combination::Seq(cs) | Combination::Par(cs) => {
            if cs.len() < 2 {
                problems.push(Error::InvalidDocument(format!(
                    "`{}` needs at least two operands",
                    if matches!(comb, Combination::Seq(_)) { "seq" } else { "par" }
                )));
            }
            let children = cs.iter().map(|c| bind_node(c, catalog, problems)).collect();
            match comb {
                Combination::Seq(_) => Combination::Seq(children),
                _ => Combination::Par(children),
            }
        }
        Combination::Cond {
            guard: g,
            then,
            otherwise,
        } => {
            let g = guard(g);
            Combination::cond(
                g,
                bind_node(then, catalog, problems),
                otherwise.as_ref().map(|e| bind_node(e, catalog, problems)),
            )
        }
        Combination::Iter { guard: g, body } => {
            let g = guard(g);
            Combination::iter(g, bind_node(body, catalog, problems))
        }
    }
}

impl Catalog {
    /// Parses and binds combination text.
    pub fn parse_combination(&self, text: &str) -> Result<Combination> {
        bind(&parse_combination(text)?, self)
    }
}
