//! Recursive-descent parser for value expressions and goal formulas.
//!
//! Goal precedence, tightest first: `!`, `&`, `|`, `=>` (right-assoc),
//! `<=>` (left-assoc). A `(` at the start of a negation operand is ambiguous
//! between a parenthesized goal and a parenthesized expression; the parser
//! tries the comparison reading first and backtracks.

use crate::error::ParseError;
use crate::model::RelOp;

use super::ast::{BinOp, Expr, Goal, SetItem};
use super::lexer::{number_value, tokenize, Tok, Token};

pub(crate) struct Parser<'s> {
    src: &'s str,
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl<'s> Parser<'s> {
    pub(crate) fn new(src: &'s str) -> PResult<Self> {
        Ok(Self {
            src,
            toks: tokenize(src)?,
            pos: 0,
        })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub(crate) fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub(crate) fn position(&self) -> usize {
        self.toks[self.pos].pos
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let tok = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        tok
    }

    pub(crate) fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::new(self.position(), message, self.src)
    }

    pub(crate) fn expected(&self, what: &str) -> ParseError {
        self.error(format!("expected {what}, found {}", self.peek().describe()))
    }

    pub(crate) fn expect(&mut self, tok: &Tok, what: &str) -> PResult<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.expected(what))
        }
    }

    pub(crate) fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(name)
            }
            _ => Err(self.expected(what)),
        }
    }

    pub(crate) fn finish(&self) -> PResult<()> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            Err(self.expected("end of input"))
        }
    }

    // expr := term (("+"|"-") term)*
    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        let mut left = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(left),
            };
            self.bump();
            let right = self.term()?;
            left = Expr::binary(op, left, right);
        }
    }

    // term := factor (("*"|"/") factor)*
    fn term(&mut self) -> PResult<Expr> {
        let mut left = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(left),
            };
            self.bump();
            let right = self.factor()?;
            left = Expr::binary(op, left, right);
        }
    }

    // factor := "-" factor | primary
    fn factor(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Minus) {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Number(text) => {
                self.bump();
                let percent = self.eat(&Tok::Percent);
                Ok(Expr::Number(number_value(&text, percent)))
            }
            Tok::Quoted(text) => {
                self.bump();
                Ok(Expr::Literal(text))
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "true" => return Ok(Expr::Bool(true)),
                    "false" => return Ok(Expr::Bool(false)),
                    _ => {}
                }
                if !self.eat(&Tok::LParen) {
                    return Ok(Expr::Attr(name));
                }
                let mut args = Vec::new();
                if !self.eat(&Tok::RParen) {
                    loop {
                        args.push(self.expr()?);
                        if self.eat(&Tok::RParen) {
                            break;
                        }
                        self.expect(&Tok::Comma, "`,` or `)` in argument list")?;
                    }
                }
                Ok(Expr::Call {
                    function: name,
                    args,
                })
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.expected("an expression")),
        }
    }

    // goal := iff ; iff := imp ("<=>" imp)*
    pub(crate) fn goal(&mut self) -> PResult<Goal> {
        let mut left = self.implication()?;
        while self.eat(&Tok::Iff) {
            let right = self.implication()?;
            left = Goal::iff(left, right);
        }
        Ok(left)
    }

    // imp := disj ["=>" imp]
    fn implication(&mut self) -> PResult<Goal> {
        let left = self.disjunction()?;
        if self.eat(&Tok::Implies) {
            let right = self.implication()?;
            return Ok(Goal::implies(left, right));
        }
        Ok(left)
    }

    fn disjunction(&mut self) -> PResult<Goal> {
        let mut left = self.conjunction()?;
        while self.eat(&Tok::Bar) {
            let right = self.conjunction()?;
            left = Goal::or(left, right);
        }
        Ok(left)
    }

    fn conjunction(&mut self) -> PResult<Goal> {
        let mut left = self.negation()?;
        while self.eat(&Tok::Amp) {
            let right = self.negation()?;
            left = Goal::and(left, right);
        }
        Ok(left)
    }

    // neg := "!" neg | "(" goal ")" | atom
    fn negation(&mut self) -> PResult<Goal> {
        if self.eat(&Tok::Bang) {
            return Ok(Goal::not(self.negation()?));
        }
        if *self.peek() != Tok::LParen {
            return self.atom();
        }
        let start = self.pos;
        let as_atom = match self.atom() {
            Ok(goal) => return Ok(goal),
            Err(e) => e,
        };
        self.pos = start;
        self.bump();
        let grouped = self.goal().and_then(|g| {
            self.expect(&Tok::RParen, "`)`")?;
            Ok(g)
        });
        match grouped {
            Ok(goal) => Ok(goal),
            Err(e) if e.position >= as_atom.position => Err(e),
            Err(_) => Err(as_atom),
        }
    }

    fn continues_expression(tok: &Tok) -> bool {
        matches!(
            tok,
            Tok::Plus
                | Tok::Minus
                | Tok::Star
                | Tok::Slash
                | Tok::Lt
                | Tok::Le
                | Tok::Gt
                | Tok::Ge
                | Tok::Eq
                | Tok::Ne
        ) || matches!(tok, Tok::Ident(kw) if kw == "in")
    }

    // atom := "true" | "false" | expr relop expr | expr "in" "{" literal ("," literal)* "}"
    fn atom(&mut self) -> PResult<Goal> {
        if let Tok::Ident(kw) = self.peek() {
            let value = match kw.as_str() {
                "true" => Some(true),
                "false" => Some(false),
                _ => None,
            };
            if let Some(value) = value {
                if !Self::continues_expression(self.peek_at(1)) {
                    self.bump();
                    return Ok(Goal::Const(value));
                }
            }
        }
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Lt => RelOp::Lt,
            Tok::Le => RelOp::Le,
            Tok::Gt => RelOp::Gt,
            Tok::Ge => RelOp::Ge,
            Tok::Eq => RelOp::Eq,
            Tok::Ne => RelOp::Ne,
            Tok::Ident(kw) if kw == "in" => {
                self.bump();
                let set = self.set()?;
                return Ok(Goal::Member { lhs, set });
            }
            _ => return Err(self.expected("a comparison operator or `in`")),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(match op {
            RelOp::Ne => Goal::not(Goal::compare(lhs, RelOp::Eq, rhs)),
            op => Goal::compare(lhs, op, rhs),
        })
    }

    fn set(&mut self) -> PResult<Vec<SetItem>> {
        self.expect(&Tok::LBrace, "`{`")?;
        let mut items: Vec<SetItem> = Vec::new();
        loop {
            let at = self.position();
            let item = self.set_item()?;
            if items.contains(&item) {
                return Err(ParseError::new(at, "duplicate literal in set", self.src));
            }
            items.push(item);
            if self.eat(&Tok::RBrace) {
                return Ok(items);
            }
            self.expect(&Tok::Comma, "`,` or `}` in set")?;
        }
    }

    fn set_item(&mut self) -> PResult<SetItem> {
        let negative = self.eat(&Tok::Minus);
        match self.peek().clone() {
            Tok::Number(text) => {
                self.bump();
                let percent = self.eat(&Tok::Percent);
                let n = number_value(&text, percent);
                Ok(SetItem::Number(if negative { -n } else { n }))
            }
            _ if negative => Err(self.expected("a number after `-`")),
            Tok::Quoted(text) => {
                self.bump();
                Ok(SetItem::Text(text))
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(match name.as_str() {
                    "true" => SetItem::Bool(true),
                    "false" => SetItem::Bool(false),
                    _ => SetItem::Text(name),
                })
            }
            _ => Err(self.expected("a literal")),
        }
    }
}

pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text)?;
    let expr = p.expr()?;
    p.finish()?;
    Ok(expr)
}

pub fn parse_goal(text: &str) -> Result<Goal, ParseError> {
    let mut p = Parser::new(text)?;
    let goal = p.goal()?;
    p.finish()?;
    Ok(goal)
}

/// Parses a transformation `target := expr`.
pub fn parse_assignment(text: &str) -> Result<(String, Expr), ParseError> {
    let mut p = Parser::new(text)?;
    let target = p.ident("an attribute name")?;
    p.expect(&Tok::Assign, "`:=`")?;
    let rhs = p.expr()?;
    p.finish()?;
    Ok((target, rhs))
}
