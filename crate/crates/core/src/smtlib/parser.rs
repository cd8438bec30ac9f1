//! Parser from source text to [`Script`].
//!
//! Symbols occurring under a `forall`/`exists`/`let` binder resolve to
//! [`Term::Var`]; everything else becomes a (possibly nullary)
//! application and is checked against declarations later, during clause
//! extraction. Commands with an unknown head are captured verbatim as
//! [`Command::Unsupported`] so that validation can report them instead
//! of the parser dropping them.

use std::collections::HashSet;

use super::ast::*;
use super::lexer::tokenize;
use super::sexpr::{read_sexprs, SExpr, SExprKind};
use super::ParseError;

pub fn parse_script(text: &str) -> Result<Script, ParseError> {
    let tokens = tokenize(text)?;
    let sexprs = read_sexprs(&tokens)?;
    let mut commands = Vec::with_capacity(sexprs.len());
    let mut saw_set_logic = false;
    for sexpr in &sexprs {
        let cmd = parse_command(sexpr)?;
        if let Command::SetLogic(_) = cmd {
            if saw_set_logic {
                return Err(ParseError::syntax(sexpr.loc, "duplicate set-logic command"));
            }
            saw_set_logic = true;
        }
        commands.push(cmd);
    }
    Ok(Script { commands })
}

fn parse_command(sexpr: &SExpr) -> Result<Command, ParseError> {
    let items = match sexpr.as_list() {
        Some(items) => items,
        None => return Err(ParseError::syntax(sexpr.loc, "expected a command list")),
    };
    let head = match items.first().and_then(SExpr::as_symbol) {
        Some(head) => head,
        None => return Err(ParseError::syntax(sexpr.loc, "command must start with a symbol")),
    };
    let args = &items[1..];
    match head {
        "set-logic" => match args {
            [logic] => Ok(Command::SetLogic(expect_symbol(logic)?.to_string())),
            _ => Err(malformed(sexpr, "set-logic")),
        },
        "set-info" => match args {
            [kw, value] => match &kw.kind {
                SExprKind::Keyword(name) => Ok(Command::SetInfo(name.clone(), value.clone())),
                _ => Err(malformed(sexpr, "set-info")),
            },
            _ => Err(malformed(sexpr, "set-info")),
        },
        "declare-fun" => match args {
            [name, arg_sorts, ret] => {
                let arg_sorts = arg_sorts
                    .as_list()
                    .ok_or_else(|| malformed(sexpr, "declare-fun"))?
                    .iter()
                    .map(parse_sort)
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Command::DeclareFun {
                    name: expect_symbol(name)?.to_string(),
                    args: arg_sorts,
                    ret: parse_sort(ret)?,
                })
            }
            _ => Err(malformed(sexpr, "declare-fun")),
        },
        "declare-datatypes" => parse_declare_datatypes(sexpr, args),
        "assert" => match args {
            [term] => Ok(Command::Assert(parse_term(term, &mut Scopes::default())?)),
            _ => Err(malformed(sexpr, "assert")),
        },
        "check-sat" if args.is_empty() => Ok(Command::CheckSat),
        "get-model" if args.is_empty() => Ok(Command::GetModel),
        "exit" if args.is_empty() => Ok(Command::Exit),
        _ => Ok(Command::Unsupported(sexpr.clone())),
    }
}

fn parse_declare_datatypes(sexpr: &SExpr, args: &[SExpr]) -> Result<Command, ParseError> {
    let [sort_decs, datatype_decs] = args else {
        return Err(malformed(sexpr, "declare-datatypes"));
    };
    let sort_decs = sort_decs.as_list().ok_or_else(|| malformed(sexpr, "declare-datatypes"))?;
    let datatype_decs =
        datatype_decs.as_list().ok_or_else(|| malformed(sexpr, "declare-datatypes"))?;
    if sort_decs.is_empty() || sort_decs.len() != datatype_decs.len() {
        return Err(malformed(sexpr, "declare-datatypes"));
    }

    let mut names = Vec::with_capacity(sort_decs.len());
    for dec in sort_decs {
        let items = dec.as_list().ok_or_else(|| malformed(sexpr, "declare-datatypes"))?;
        let [name, arity] = items else {
            return Err(malformed(sexpr, "declare-datatypes"));
        };
        let name = expect_symbol(name)?;
        match &arity.kind {
            SExprKind::Numeral(n) if *n == 0u32.into() => {}
            SExprKind::Numeral(_) => {
                return Err(ParseError::ParametricDatatype {
                    loc: dec.loc,
                    name: name.to_string(),
                })
            }
            _ => return Err(malformed(sexpr, "declare-datatypes")),
        }
        names.push(name.to_string());
    }

    let mut decls = Vec::with_capacity(names.len());
    for (name, dec) in names.into_iter().zip(datatype_decs) {
        let ctor_list = dec.as_list().ok_or_else(|| malformed(sexpr, "declare-datatypes"))?;
        // `(par (T) ...)` introduces sort parameters, which the format forbids
        if ctor_list.first().and_then(SExpr::as_symbol) == Some("par") {
            return Err(ParseError::ParametricDatatype { loc: dec.loc, name });
        }
        let mut constructors = Vec::with_capacity(ctor_list.len());
        let mut ctor_names = HashSet::new();
        let mut sel_names = HashSet::new();
        for ctor in ctor_list {
            let items = ctor.as_list().ok_or_else(|| malformed(sexpr, "declare-datatypes"))?;
            let ctor_name = match items.first().and_then(SExpr::as_symbol) {
                Some(n) => n.to_string(),
                None => return Err(malformed(sexpr, "declare-datatypes")),
            };
            if !ctor_names.insert(ctor_name.clone()) {
                return Err(ParseError::syntax(
                    ctor.loc,
                    format!("duplicate constructor `{ctor_name}`"),
                ));
            }
            let mut selectors = Vec::new();
            for sel in &items[1..] {
                let sel_items = sel.as_list().ok_or_else(|| malformed(sexpr, "declare-datatypes"))?;
                let [sel_name, sel_sort] = sel_items else {
                    return Err(malformed(sexpr, "declare-datatypes"));
                };
                let sel_name = expect_symbol(sel_name)?.to_string();
                if !sel_names.insert(sel_name.clone()) {
                    return Err(ParseError::syntax(
                        sel.loc,
                        format!("duplicate selector `{sel_name}`"),
                    ));
                }
                selectors.push(SelectorDecl { name: sel_name, sort: parse_sort(sel_sort)? });
            }
            constructors.push(ConstructorDecl { name: ctor_name, selectors });
        }
        decls.push(DatatypeDecl { name, constructors });
    }
    Ok(Command::DeclareDatatypes(decls))
}

fn parse_sort(sexpr: &SExpr) -> Result<Sort, ParseError> {
    match &sexpr.kind {
        SExprKind::Symbol(name) => Ok(match name.as_str() {
            "Bool" => Sort::Bool,
            "Int" => Sort::Int,
            "Real" => Sort::Real,
            _ => Sort::Named(name.clone()),
        }),
        SExprKind::List(items) => match items.first().and_then(SExpr::as_symbol) {
            Some("Array") if items.len() == 3 => Ok(Sort::Array(
                Box::new(parse_sort(&items[1])?),
                Box::new(parse_sort(&items[2])?),
            )),
            _ => Err(ParseError::syntax(sexpr.loc, "unsupported sort")),
        },
        _ => Err(ParseError::syntax(sexpr.loc, "expected a sort")),
    }
}

/// Stack of binder scopes used to distinguish variables from nullary
/// applications.
#[derive(Default)]
struct Scopes {
    frames: Vec<HashSet<String>>,
}

impl Scopes {
    fn bound(&self, name: &str) -> bool {
        self.frames.iter().rev().any(|f| f.contains(name))
    }
}

fn parse_term(sexpr: &SExpr, scopes: &mut Scopes) -> Result<Term, ParseError> {
    match &sexpr.kind {
        SExprKind::Numeral(n) => Ok(Term::Numeral(n.clone())),
        SExprKind::Decimal(d) => Ok(Term::Decimal(d.clone())),
        SExprKind::Symbol(name) => {
            if scopes.bound(name) {
                Ok(Term::Var(name.clone()))
            } else {
                Ok(Term::App(FuncSym::Named(name.clone()), vec![]))
            }
        }
        SExprKind::Keyword(_) | SExprKind::String(_) => {
            Err(ParseError::syntax(sexpr.loc, "unexpected atom in term"))
        }
        SExprKind::List(items) => parse_term_list(sexpr, items, scopes),
    }
}

fn parse_term_list(sexpr: &SExpr, items: &[SExpr], scopes: &mut Scopes) -> Result<Term, ParseError> {
    let Some(head) = items.first() else {
        return Err(ParseError::syntax(sexpr.loc, "empty term"));
    };
    match &head.kind {
        SExprKind::Symbol(name) => match name.as_str() {
            "forall" | "exists" => {
                let quant = if name == "forall" { Quantifier::Forall } else { Quantifier::Exists };
                let [_, binders, body] = items else {
                    return Err(ParseError::syntax(sexpr.loc, format!("malformed {name}")));
                };
                let binders = parse_sorted_vars(binders)?;
                if binders.is_empty() {
                    return Err(ParseError::syntax(sexpr.loc, "quantifier binds no variables"));
                }
                scopes.frames.push(binders.iter().map(|v| v.name.clone()).collect());
                let body = parse_term(body, scopes);
                scopes.frames.pop();
                Ok(Term::Quant(quant, binders, Box::new(body?)))
            }
            "let" => {
                let [_, bindings, body] = items else {
                    return Err(ParseError::syntax(sexpr.loc, "malformed let"));
                };
                let binding_list =
                    bindings.as_list().ok_or_else(|| ParseError::syntax(sexpr.loc, "malformed let"))?;
                if binding_list.is_empty() {
                    return Err(ParseError::syntax(sexpr.loc, "let binds no variables"));
                }
                let mut parsed = Vec::with_capacity(binding_list.len());
                for binding in binding_list {
                    let pair =
                        binding.as_list().ok_or_else(|| ParseError::syntax(binding.loc, "malformed let binding"))?;
                    let [var, value] = pair else {
                        return Err(ParseError::syntax(binding.loc, "malformed let binding"));
                    };
                    // bindings are parallel: values see the outer scope
                    parsed.push((expect_symbol(var)?.to_string(), parse_term(value, scopes)?));
                }
                scopes.frames.push(parsed.iter().map(|(n, _)| n.clone()).collect());
                let body = parse_term(body, scopes);
                scopes.frames.pop();
                Ok(Term::Let(parsed, Box::new(body?)))
            }
            _ => {
                if items.len() == 1 {
                    return Err(ParseError::syntax(sexpr.loc, "application without arguments"));
                }
                let args = items[1..]
                    .iter()
                    .map(|a| parse_term(a, scopes))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Term::App(FuncSym::Named(name.clone()), args))
            }
        },
        SExprKind::List(head_items) => {
            // the only indexed identifier in the subset: ((_ is C) t)
            let tester = match head_items.as_slice() {
                [u, is, ctor]
                    if u.as_symbol() == Some("_") && is.as_symbol() == Some("is") =>
                {
                    expect_symbol(ctor)?.to_string()
                }
                _ => return Err(ParseError::syntax(head.loc, "unsupported application head")),
            };
            let args = items[1..]
                .iter()
                .map(|a| parse_term(a, scopes))
                .collect::<Result<Vec<_>, _>>()?;
            if args.len() != 1 {
                return Err(ParseError::syntax(sexpr.loc, "recognizer takes one argument"));
            }
            Ok(Term::App(FuncSym::Tester(tester), args))
        }
        _ => Err(ParseError::syntax(head.loc, "unsupported application head")),
    }
}

fn parse_sorted_vars(sexpr: &SExpr) -> Result<Vec<SortedVar>, ParseError> {
    let items = sexpr
        .as_list()
        .ok_or_else(|| ParseError::syntax(sexpr.loc, "expected sorted variable list"))?;
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        let pair = item
            .as_list()
            .ok_or_else(|| ParseError::syntax(item.loc, "expected (name Sort)"))?;
        let [name, sort] = pair else {
            return Err(ParseError::syntax(item.loc, "expected (name Sort)"));
        };
        out.push(SortedVar { name: expect_symbol(name)?.to_string(), sort: parse_sort(sort)? });
    }
    Ok(out)
}

fn expect_symbol(sexpr: &SExpr) -> Result<&str, ParseError> {
    sexpr
        .as_symbol()
        .ok_or_else(|| ParseError::syntax(sexpr.loc, "expected a symbol"))
}

fn malformed(sexpr: &SExpr, what: &str) -> ParseError {
    ParseError::syntax(sexpr.loc, format!("malformed {what} command"))
}
