//! SMT-LIB 2.6 frontend for the CHC-COMP benchmark subset.
//!
//! The subset covers `set-logic`, `set-info`, `declare-fun`,
//! non-parametric `declare-datatypes`, `assert`, `check-sat`,
//! `get-model` and `exit`. Anything else parses into
//! [`Command::Unsupported`] and is rejected by validation later, with a
//! better diagnostic than a parse failure would give.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod sexpr;

pub use ast::{
    Command, ConstructorDecl, DatatypeDecl, FuncSym, Quantifier, Script, SelectorDecl, Sort,
    SortedVar, Term,
};
pub use lexer::Loc;
pub use parser::parse_script;
pub use printer::{print_script, print_term};
pub use sexpr::{SExpr, SExprKind};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("{loc}: lex error: {msg}")]
    Lex { loc: Loc, msg: String },
    #[error("{loc}: {msg}")]
    Syntax { loc: Loc, msg: String },
    #[error("{loc}: datatype `{name}` is parametric; parametric datatypes are not accepted")]
    ParametricDatatype { loc: Loc, name: String },
}

impl ParseError {
    pub(crate) fn lex(loc: Loc, msg: impl Into<String>) -> Self {
        ParseError::Lex { loc, msg: msg.into() }
    }

    pub(crate) fn syntax(loc: Loc, msg: impl Into<String>) -> Self {
        ParseError::Syntax { loc, msg: msg.into() }
    }
}
