//! Generic s-expressions, the carrier syntax for everything else.

use num_bigint::BigUint;

use super::lexer::{Loc, Token, TokenKind};
use super::ParseError;

/// An s-expression node. Equality ignores source locations.
#[derive(Debug, Clone)]
pub struct SExpr {
    pub kind: SExprKind,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SExprKind {
    Symbol(String),
    Keyword(String),
    Numeral(BigUint),
    Decimal(String),
    String(String),
    List(Vec<SExpr>),
}

impl PartialEq for SExpr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl SExpr {
    pub fn symbol(name: impl Into<String>) -> Self {
        SExpr { kind: SExprKind::Symbol(name.into()), loc: Loc::default() }
    }

    pub fn list(items: Vec<SExpr>) -> Self {
        SExpr { kind: SExprKind::List(items), loc: Loc::default() }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match &self.kind {
            SExprKind::Symbol(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match &self.kind {
            SExprKind::List(items) => Some(items),
            _ => None,
        }
    }
}

/// Reads a whole token stream into a sequence of top-level s-expressions.
pub fn read_sexprs(tokens: &[Token]) -> Result<Vec<SExpr>, ParseError> {
    let mut pos = 0;
    let mut out = Vec::new();
    while pos < tokens.len() {
        let (sexpr, next) = read_one(tokens, pos)?;
        out.push(sexpr);
        pos = next;
    }
    Ok(out)
}

fn read_one(tokens: &[Token], pos: usize) -> Result<(SExpr, usize), ParseError> {
    let tok = &tokens[pos];
    let kind = match &tok.kind {
        TokenKind::LParen => {
            let mut items = Vec::new();
            let mut cur = pos + 1;
            loop {
                match tokens.get(cur) {
                    None => return Err(ParseError::syntax(tok.loc, "unbalanced `(`")),
                    Some(t) if t.kind == TokenKind::RParen => {
                        return Ok((SExpr { kind: SExprKind::List(items), loc: tok.loc }, cur + 1));
                    }
                    Some(_) => {
                        let (item, next) = read_one(tokens, cur)?;
                        items.push(item);
                        cur = next;
                    }
                }
            }
        }
        TokenKind::RParen => return Err(ParseError::syntax(tok.loc, "unbalanced `)`")),
        TokenKind::Symbol(s) => SExprKind::Symbol(s.clone()),
        TokenKind::Keyword(s) => SExprKind::Keyword(s.clone()),
        TokenKind::Numeral(n) => SExprKind::Numeral(n.clone()),
        TokenKind::Decimal(d) => SExprKind::Decimal(d.clone()),
        TokenKind::String(s) => SExprKind::String(s.clone()),
    };
    Ok((SExpr { kind, loc: tok.loc }, pos + 1))
}
