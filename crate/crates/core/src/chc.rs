//! Constrained Horn clause view of a parsed script.
//!
//! [`to_chc_system`] decomposes every `assert` into a quantifier prefix,
//! body atoms, a constraint and a head, accepting the three clause
//! spellings found in the wild: `(=> body head)`, `(or (not body) head)`
//! and the bare query `(not body)`. `let` bindings are expanded before
//! decomposition. Anything that is not strictly Horn is rejected with a
//! structured error rather than silently repaired.

use std::collections::{HashMap, HashSet};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::smtlib::{
    print_script, Command, DatatypeDecl, FuncSym, Quantifier, Script, Sort, SortedVar, Term,
};

#[derive(Debug, Error, PartialEq)]
pub enum ChcError {
    #[error("not a Horn clause: {0}")]
    NotHorn(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("undeclared predicate `{0}`")]
    UndeclaredPredicate(String),
    #[error("unknown symbol `{0}` in constraint")]
    UndeclaredSymbol(String),
    #[error("`{symbol}` applied to {got} arguments, expected {expected}")]
    ArityMismatch { symbol: String, expected: usize, got: usize },
    #[error("unknown sort `{0}`")]
    UnknownSort(String),
    #[error("declaration `{0}` does not declare a predicate (result sort must be Bool)")]
    NonPredicateDeclaration(String),
    #[error("duplicate declaration of `{0}`")]
    DuplicateDeclaration(String),
    #[error("unsupported command `{0}`")]
    UnsupportedCommand(String),
    #[error("expected exactly one check-sat command, found {0}")]
    CheckSatCount(usize),
    #[error("benchmark contains no clauses")]
    EmptySystem,
}

/// An uninterpreted predicate symbol with its argument sorts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predicate {
    pub name: String,
    pub args: Vec<Sort>,
}

/// Application of a declared predicate.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClauseHead {
    Atom(Atom),
    False,
}

/// One universally quantified Horn clause.
#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub vars: Vec<SortedVar>,
    pub body_atoms: Vec<Atom>,
    pub constraint: Term,
    pub head: ClauseHead,
}

impl Clause {
    pub fn is_query(&self) -> bool {
        matches!(self.head, ClauseHead::False)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linearity {
    Linear,
    Nonlinear,
}

/// Semantic form of a benchmark: declarations plus clauses, with a
/// digest of the source it was extracted from.
#[derive(Debug, Clone, PartialEq)]
pub struct ChcSystem {
    pub predicates: Vec<Predicate>,
    /// Datatype groups exactly as declared, one entry per
    /// `declare-datatypes` command.
    pub datatype_groups: Vec<Vec<DatatypeDecl>>,
    pub clauses: Vec<Clause>,
    /// SHA-256 (hex) of the printed source script.
    pub source_digest: String,
}

impl ChcSystem {
    pub fn queries(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter().filter(|c| c.is_query())
    }

    pub fn predicate(&self, name: &str) -> Option<&Predicate> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn datatypes(&self) -> impl Iterator<Item = &DatatypeDecl> {
        self.datatype_groups.iter().flatten()
    }
}

/// A clause is linear iff its premise applies at most one
/// uninterpreted predicate.
pub fn clause_linearity(clause: &Clause) -> Linearity {
    if clause.body_atoms.len() <= 1 {
        Linearity::Linear
    } else {
        Linearity::Nonlinear
    }
}

/// A system is linear iff all of its clauses are.
pub fn system_linearity(system: &ChcSystem) -> Linearity {
    if system.clauses.iter().any(|c| clause_linearity(c) == Linearity::Nonlinear) {
        Linearity::Nonlinear
    } else {
        Linearity::Linear
    }
}

/// Interpreted function and predicate symbols admitted in constraints.
/// `/` is accepted here so that real-arithmetic benchmarks reach the
/// categorizer, which rejects them with a precise reason.
pub const THEORY_SYMBOLS: &[&str] = &[
    "true", "false", "not", "and", "or", "=>", "xor", "ite", "=", "distinct", "<", "<=", ">",
    ">=", "+", "-", "*", "div", "mod", "abs", "/", "select", "store",
];

fn theory_arity_ok(name: &str, argc: usize) -> bool {
    match name {
        "true" | "false" => argc == 0,
        "not" | "abs" => argc == 1,
        "ite" | "store" => argc == 3,
        "select" | "mod" => argc == 2,
        "=>" | "=" | "distinct" | "<" | "<=" | ">" | ">=" | "+" | "*" | "div" | "/" | "xor" => {
            argc >= 2
        }
        // unary minus is negation, n-ary is subtraction
        "-" => argc >= 1,
        "and" | "or" => argc >= 1,
        _ => false,
    }
}

/// Symbol environment extracted from the declarations of a script.
struct SymbolTable {
    predicates: HashMap<String, usize>,
    constructors: HashMap<String, usize>,
    selectors: HashSet<String>,
    datatype_sorts: HashSet<String>,
}

impl SymbolTable {
    fn check_sort(&self, sort: &Sort) -> Result<(), ChcError> {
        let mut named = Vec::new();
        sort.named_sorts(&mut named);
        for name in named {
            if !self.datatype_sorts.contains(name) {
                return Err(ChcError::UnknownSort(name.to_string()));
            }
        }
        Ok(())
    }
}

/// Converts a parsed script into a Horn clause system.
pub fn to_chc_system(script: &Script) -> Result<ChcSystem, ChcError> {
    let mut predicates: Vec<Predicate> = Vec::new();
    let mut datatype_groups: Vec<Vec<DatatypeDecl>> = Vec::new();
    let mut asserts: Vec<&Term> = Vec::new();
    let mut check_sats = 0usize;

    for command in &script.commands {
        match command {
            Command::SetLogic(_) | Command::SetInfo(..) | Command::GetModel | Command::Exit => {}
            Command::DeclareFun { name, args, ret } => {
                if *ret != Sort::Bool {
                    return Err(ChcError::NonPredicateDeclaration(name.clone()));
                }
                if predicates.iter().any(|p| &p.name == name) {
                    return Err(ChcError::DuplicateDeclaration(name.clone()));
                }
                predicates.push(Predicate { name: name.clone(), args: args.clone() });
            }
            Command::DeclareDatatypes(decls) => datatype_groups.push(decls.clone()),
            Command::Assert(term) => asserts.push(term),
            Command::CheckSat => check_sats += 1,
            Command::Unsupported(sexpr) => {
                let head = sexpr
                    .as_list()
                    .and_then(|l| l.first())
                    .and_then(|h| h.as_symbol())
                    .unwrap_or("?");
                return Err(ChcError::UnsupportedCommand(head.to_string()));
            }
        }
    }

    if check_sats != 1 {
        return Err(ChcError::CheckSatCount(check_sats));
    }
    if asserts.is_empty() {
        return Err(ChcError::EmptySystem);
    }

    let mut table = SymbolTable {
        predicates: predicates.iter().map(|p| (p.name.clone(), p.args.len())).collect(),
        constructors: HashMap::new(),
        selectors: HashSet::new(),
        datatype_sorts: HashSet::new(),
    };
    for decl in datatype_groups.iter().flatten() {
        if !table.datatype_sorts.insert(decl.name.clone()) {
            return Err(ChcError::DuplicateDeclaration(decl.name.clone()));
        }
        if table.predicates.contains_key(&decl.name) {
            return Err(ChcError::DuplicateDeclaration(decl.name.clone()));
        }
        for ctor in &decl.constructors {
            if table
                .constructors
                .insert(ctor.name.clone(), ctor.selectors.len())
                .is_some()
            {
                return Err(ChcError::DuplicateDeclaration(ctor.name.clone()));
            }
            for sel in &ctor.selectors {
                table.selectors.insert(sel.name.clone());
            }
        }
    }

    for pred in &predicates {
        for sort in &pred.args {
            table.check_sort(sort)?;
        }
    }
    for decl in datatype_groups.iter().flatten() {
        for ctor in &decl.constructors {
            for sel in &ctor.selectors {
                table.check_sort(&sel.sort)?;
            }
        }
    }

    let mut clauses = Vec::with_capacity(asserts.len());
    for term in asserts {
        clauses.push(extract_clause(term, &table)?);
    }

    let source_digest = {
        let mut hasher = Sha256::new();
        hasher.update(print_script(script).as_bytes());
        hex(&hasher.finalize())
    };

    Ok(ChcSystem { predicates, datatype_groups, clauses, source_digest })
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn extract_clause(term: &Term, table: &SymbolTable) -> Result<Clause, ChcError> {
    let expanded = expand_lets(term, &HashMap::new());

    // collect the (possibly nested) universal prefix
    let mut vars: Vec<SortedVar> = Vec::new();
    let mut body = &expanded;
    while let Term::Quant(Quantifier::Forall, qvars, inner) = body {
        vars.extend(qvars.iter().cloned());
        body = inner;
    }

    for var in &vars {
        table.check_sort(&var.sort)?;
    }

    let dup = vars.iter().enumerate().find(|(i, v)| {
        vars[..*i].iter().any(|w| w.name == v.name)
    });
    if let Some((_, var)) = dup {
        // shadowing within one prefix would make the printed form ambiguous
        return Err(ChcError::NotHorn(format!("variable `{}` bound twice", var.name)));
    }
    let scope: HashSet<String> = vars.iter().map(|v| v.name.clone()).collect();

    let (premise_parts, head) = split_implication(body)?;

    let mut body_atoms = Vec::new();
    let mut constraint_parts = Vec::new();
    for part in premise_parts {
        classify_premise(part, table, &mut body_atoms, &mut constraint_parts)?;
    }

    let head = match head {
        None => ClauseHead::False,
        Some(t) if t.is_false() => ClauseHead::False,
        Some(t) => match as_atom(t, table)? {
            Some(atom) => ClauseHead::Atom(atom),
            None => {
                return Err(ChcError::NotHorn(
                    "head is neither false nor an uninterpreted atom".into(),
                ))
            }
        },
    };

    for part in &constraint_parts {
        check_constraint(part, table)?;
    }
    let constraint = conjoin(constraint_parts);

    let clause = Clause { vars, body_atoms, constraint, head };
    check_bound(&clause, &scope)?;
    Ok(clause)
}

/// Splits a clause body into premise conjuncts and an optional head.
/// `None` as head means the clause is a query.
fn split_implication(term: &Term) -> Result<(Vec<&Term>, Option<&Term>), ChcError> {
    match term {
        Term::App(FuncSym::Named(name), args) if name == "=>" && args.len() >= 2 => {
            let (premise, head) = args.split_at(args.len() - 1);
            Ok((premise.iter().collect(), Some(&head[0])))
        }
        Term::App(FuncSym::Named(name), args) if name == "or" => {
            let mut premise = Vec::new();
            let mut head = None;
            for disjunct in args {
                match disjunct {
                    Term::App(FuncSym::Named(n), not_args) if n == "not" && not_args.len() == 1 => {
                        premise.push(&not_args[0]);
                    }
                    d if d.is_false() => {}
                    d => {
                        if head.replace(d).is_some() {
                            return Err(ChcError::NotHorn(
                                "more than one positive disjunct in clause".into(),
                            ));
                        }
                    }
                }
            }
            Ok((premise, head))
        }
        Term::App(FuncSym::Named(name), args) if name == "not" && args.len() == 1 => {
            Ok((vec![&args[0]], None))
        }
        t if t.is_false() => Ok((Vec::new(), None)),
        t => Ok((Vec::new(), Some(t))),
    }
}

/// Sorts one premise conjunct into atoms and constraint parts,
/// flattening nested conjunctions.
fn classify_premise<'a>(
    term: &'a Term,
    table: &SymbolTable,
    atoms: &mut Vec<Atom>,
    constraints: &mut Vec<&'a Term>,
) -> Result<(), ChcError> {
    match term {
        Term::App(FuncSym::Named(name), args) if name == "and" => {
            for arg in args {
                classify_premise(arg, table, atoms, constraints)?;
            }
            Ok(())
        }
        t if t.is_true() => Ok(()),
        t => {
            if let Some(atom) = as_atom(t, table)? {
                atoms.push(atom);
            } else {
                constraints.push(t);
            }
            Ok(())
        }
    }
}

/// Returns the atom if `term` applies a declared predicate, checking
/// its arity; `Ok(None)` if the head symbol is interpreted.
fn as_atom(term: &Term, table: &SymbolTable) -> Result<Option<Atom>, ChcError> {
    let Term::App(FuncSym::Named(name), args) = term else {
        return Ok(None);
    };
    let Some(&arity) = table.predicates.get(name) else {
        return Ok(None);
    };
    if args.len() != arity {
        return Err(ChcError::ArityMismatch { symbol: name.clone(), expected: arity, got: args.len() });
    }
    Ok(Some(Atom { pred: name.clone(), args: args.clone() }))
}

/// Checks that a constraint term uses only interpreted or datatype
/// symbols; an uninterpreted predicate nested here breaks Horn form.
fn check_constraint(term: &Term, table: &SymbolTable) -> Result<(), ChcError> {
    match term {
        Term::Var(_) | Term::Numeral(_) | Term::Decimal(_) => Ok(()),
        Term::Quant(..) => Err(ChcError::NotHorn("quantifier nested in clause body".into())),
        Term::Let(..) => unreachable!("lets expanded before decomposition"),
        Term::App(head, args) => {
            match head {
                FuncSym::Tester(ctor) => {
                    if !table.constructors.contains_key(ctor) {
                        return Err(ChcError::UndeclaredSymbol(format!("(_ is {ctor})")));
                    }
                    if args.len() != 1 {
                        return Err(ChcError::ArityMismatch {
                            symbol: format!("(_ is {ctor})"),
                            expected: 1,
                            got: args.len(),
                        });
                    }
                }
                FuncSym::Named(name) => {
                    if table.predicates.contains_key(name) {
                        return Err(ChcError::NotHorn(format!(
                            "predicate `{name}` occurs inside a constraint"
                        )));
                    }
                    if let Some(&arity) = table.constructors.get(name) {
                        if args.len() != arity {
                            return Err(ChcError::ArityMismatch {
                                symbol: name.clone(),
                                expected: arity,
                                got: args.len(),
                            });
                        }
                    } else if table.selectors.contains(name) {
                        if args.len() != 1 {
                            return Err(ChcError::ArityMismatch {
                                symbol: name.clone(),
                                expected: 1,
                                got: args.len(),
                            });
                        }
                    } else if THEORY_SYMBOLS.contains(&name.as_str()) {
                        if !theory_arity_ok(name, args.len()) {
                            return Err(ChcError::ArityMismatch {
                                symbol: name.clone(),
                                expected: 2,
                                got: args.len(),
                            });
                        }
                    } else if args.is_empty() {
                        // an unknown bare symbol is almost always a
                        // variable missing from the quantifier prefix
                        return Err(ChcError::UnboundVariable(name.clone()));
                    } else {
                        return Err(ChcError::UndeclaredSymbol(name.clone()));
                    }
                }
            }
            for arg in args {
                check_constraint(arg, table)?;
            }
            Ok(())
        }
    }
}

fn check_bound(clause: &Clause, scope: &HashSet<String>) -> Result<(), ChcError> {
    for atom in &clause.body_atoms {
        for arg in &atom.args {
            check_vars_bound(arg, scope)?;
        }
    }
    check_vars_bound(&clause.constraint, scope)?;
    if let ClauseHead::Atom(atom) = &clause.head {
        for arg in &atom.args {
            check_vars_bound(arg, scope)?;
        }
    }
    Ok(())
}

fn check_vars_bound(term: &Term, scope: &HashSet<String>) -> Result<(), ChcError> {
    match term {
        Term::Var(name) if !scope.contains(name) => Err(ChcError::UnboundVariable(name.clone())),
        Term::Var(_) | Term::Numeral(_) | Term::Decimal(_) => Ok(()),
        Term::App(_, args) => args.iter().try_for_each(|a| check_vars_bound(a, scope)),
        Term::Let(bindings, body) => {
            for (_, value) in bindings {
                check_vars_bound(value, scope)?;
            }
            check_vars_bound(body, scope)
        }
        Term::Quant(_, vars, body) => {
            let mut inner = scope.clone();
            inner.extend(vars.iter().map(|v| v.name.clone()));
            check_vars_bound(body, &inner)
        }
    }
}

/// Capture-avoiding expansion of all `let` bindings.
pub fn expand_lets(term: &Term, env: &HashMap<String, Term>) -> Term {
    match term {
        Term::Var(name) => env.get(name).cloned().unwrap_or_else(|| term.clone()),
        Term::Numeral(_) | Term::Decimal(_) => term.clone(),
        Term::App(head, args) => Term::App(
            head.clone(),
            args.iter().map(|a| expand_lets(a, env)).collect(),
        ),
        Term::Let(bindings, body) => {
            let mut inner = env.clone();
            for (name, value) in bindings {
                // parallel semantics: values expand in the outer env
                inner.insert(name.clone(), expand_lets(value, env));
            }
            expand_lets(body, &inner)
        }
        Term::Quant(quant, vars, body) => {
            let mut inner = env.clone();
            let mut vars = vars.clone();
            for var in &mut vars {
                inner.remove(&var.name);
                let captured = inner.values().any(|t| mentions_var(t, &var.name));
                if captured {
                    let fresh = fresh_name(&var.name, &inner, body);
                    inner.insert(var.name.clone(), Term::Var(fresh.clone()));
                    var.name = fresh;
                }
            }
            Term::Quant(*quant, vars, Box::new(expand_lets(body, &inner)))
        }
    }
}

fn mentions_var(term: &Term, name: &str) -> bool {
    match term {
        Term::Var(v) => v == name,
        Term::Numeral(_) | Term::Decimal(_) => false,
        Term::App(_, args) => args.iter().any(|a| mentions_var(a, name)),
        Term::Let(bindings, body) => {
            bindings.iter().any(|(_, v)| mentions_var(v, name)) || mentions_var(body, name)
        }
        Term::Quant(_, _, body) => mentions_var(body, name),
    }
}

fn fresh_name(base: &str, env: &HashMap<String, Term>, body: &Term) -> String {
    let mut i = 0;
    loop {
        let candidate = format!("{base}!{i}");
        let clashes = env.contains_key(&candidate)
            || env.values().any(|t| mentions_var(t, &candidate))
            || mentions_var(body, &candidate);
        if !clashes {
            return candidate;
        }
        i += 1;
    }
}

fn conjoin(parts: Vec<&Term>) -> Term {
    match parts.len() {
        0 => Term::tt(),
        1 => parts[0].clone(),
        _ => Term::app("and", parts.into_iter().cloned().collect()),
    }
}

/// Counts applications of declared predicates anywhere in a term,
/// without expanding lets. Used to cross-check clause extraction.
pub fn count_predicate_applications(term: &Term, predicates: &HashSet<String>) -> usize {
    match term {
        Term::Var(_) | Term::Numeral(_) | Term::Decimal(_) => 0,
        Term::App(head, args) => {
            let own = match head {
                FuncSym::Named(name) if predicates.contains(name) => 1,
                _ => 0,
            };
            own + args
                .iter()
                .map(|a| count_predicate_applications(a, predicates))
                .sum::<usize>()
        }
        Term::Let(bindings, body) => {
            bindings
                .iter()
                .map(|(_, v)| count_predicate_applications(v, predicates))
                .sum::<usize>()
                + count_predicate_applications(body, predicates)
        }
        Term::Quant(_, _, body) => count_predicate_applications(body, predicates),
    }
}
