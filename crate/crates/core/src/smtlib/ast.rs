//! Abstract syntax for the CHC-COMP command and term subset.

use num_bigint::BigUint;

use super::sexpr::SExpr;

/// Sorts of the admitted background theories. Anything that is not a
/// builtin or an `Array` must be a declared algebraic datatype.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Sort {
    Bool,
    Int,
    Real,
    Array(Box<Sort>, Box<Sort>),
    Named(String),
}

impl Sort {
    /// All datatype names mentioned by this sort, traversing array
    /// index and element sorts.
    pub fn named_sorts<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Sort::Bool | Sort::Int | Sort::Real => {}
            Sort::Array(idx, elem) => {
                idx.named_sorts(out);
                elem.named_sorts(out);
            }
            Sort::Named(name) => out.push(name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortedVar {
    pub name: String,
    pub sort: Sort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    Forall,
    Exists,
}

/// Head of an application. Recognizer applications `((_ is C) t)` are the
/// only indexed identifiers in the subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FuncSym {
    Named(String),
    Tester(String),
}

impl FuncSym {
    pub fn named(name: impl Into<String>) -> Self {
        FuncSym::Named(name.into())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    /// Reference to a variable bound by an enclosing quantifier or let.
    Var(String),
    Numeral(BigUint),
    /// Decimal constant, kept as its source lexeme.
    Decimal(String),
    /// Application; nullary applications print as bare symbols.
    App(FuncSym, Vec<Term>),
    Let(Vec<(String, Term)>, Box<Term>),
    Quant(Quantifier, Vec<SortedVar>, Box<Term>),
}

impl Term {
    pub fn tt() -> Term {
        Term::App(FuncSym::named("true"), vec![])
    }

    pub fn ff() -> Term {
        Term::App(FuncSym::named("false"), vec![])
    }

    pub fn app(name: &str, args: Vec<Term>) -> Term {
        Term::App(FuncSym::named(name), args)
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Term::App(FuncSym::Named(n), args) if n == "true" && args.is_empty())
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Term::App(FuncSym::Named(n), args) if n == "false" && args.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectorDecl {
    pub name: String,
    pub sort: Sort,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructorDecl {
    pub name: String,
    pub selectors: Vec<SelectorDecl>,
}

/// One non-parametric datatype of a `declare-datatypes` group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatatypeDecl {
    pub name: String,
    pub constructors: Vec<ConstructorDecl>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    SetLogic(String),
    SetInfo(String, SExpr),
    DeclareFun { name: String, args: Vec<Sort>, ret: Sort },
    /// One `declare-datatypes` command declaring a group of datatypes.
    DeclareDatatypes(Vec<DatatypeDecl>),
    Assert(Term),
    CheckSat,
    GetModel,
    Exit,
    /// Command outside the subset, kept verbatim so nothing is lost.
    Unsupported(SExpr),
}

/// A parsed benchmark: the commands of an `.smt2` file in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Script {
    pub commands: Vec<Command>,
}

impl Script {
    pub fn asserts(&self) -> impl Iterator<Item = &Term> {
        self.commands.iter().filter_map(|c| match c {
            Command::Assert(t) => Some(t),
            _ => None,
        })
    }

    pub fn has_unsupported(&self) -> Option<&SExpr> {
        self.commands.iter().find_map(|c| match c {
            Command::Unsupported(e) => Some(e),
            _ => None,
        })
    }
}
