//! The embedded expression and goal languages.
//!
//! ```text
//! expr    := term (("+"|"-") term)*
//! term    := factor (("*"|"/") factor)*
//! factor  := "-" factor | primary
//! primary := NUMBER ["%"] | "'" chars "'" | IDENT | IDENT "(" [expr ("," expr)*] ")" | "(" expr ")"
//!
//! goal    := imp ("<=>" imp)*
//! imp     := disj ["=>" imp]
//! disj    := conj ("|" conj)*
//! conj    := neg ("&" neg)*
//! neg     := "!" neg | "(" goal ")" | atom
//! atom    := "true" | "false" | expr relop expr | expr "in" "{" literal ("," literal)* "}"
//! ```
//!
//! `true`/`false` are also accepted as expression primaries so flag
//! attributes can be assigned and compared.

mod ast;
mod eval;
mod lexer;
mod parser;
mod render;

pub use ast::{BinOp, Expr, Goal, SetItem};
pub use eval::{eval_expression, eval_goal, Breakdown, Detail, Env, Functions, NoFunctions};
pub use parser::{parse_assignment, parse_expression, parse_goal};
pub use render::{render_expression, render_goal};

pub(crate) use parser::Parser;
pub(crate) use render::write_goal;
pub(crate) use lexer::Tok;

/// Serde adapter for goals embedded in payloads: serializes as goal text,
/// deserializes from either goal text or a structured tree.
pub mod goal_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{parse_goal, render_goal, Goal};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum TextOrTree {
        Text(String),
        Tree(Goal),
    }

    pub fn serialize<S: Serializer>(goal: &Goal, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&render_goal(goal))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Goal, D::Error> {
        match TextOrTree::deserialize(deserializer)? {
            TextOrTree::Text(text) => parse_goal(&text).map_err(serde::de::Error::custom),
            TextOrTree::Tree(goal) => Ok(goal),
        }
    }
}
