//! Normalization into conformant shape: `(set-logic HORN)` first,
//! declarations before asserts, datatype groups merged into one
//! `declare-datatypes` per dependency component, multiple queries
//! merged into one, exactly one `check-sat`. Also computes the
//! canonical fingerprint used to deduplicate benchmarks across
//! repositories.

use std::collections::{HashMap, HashSet};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::chc::{
    to_chc_system, Atom, ChcError, ChcSystem, Clause, ClauseHead, Predicate,
};
use crate::smtlib::{
    parse_script, print_script, Command, DatatypeDecl, FuncSym, ParseError, Quantifier, Script,
    Sort, Term,
};

/// Reserved prefix for the predicate introduced by query merging.
pub const QUERY_PREDICATE_PREFIX: &str = "CHC_COMP_QUERY_";

/// 256-bit digest of a benchmark's canonical form. Equal canonical
/// forms imply equal fingerprints; this is the deduplication key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint([u8; 32]);

impl std::fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

/// Why a benchmark was rejected instead of normalized.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RejectionReason {
    #[error("not a Horn clause system: {0}")]
    NotHorn(String),
    #[error("unsupported command `{0}`")]
    UnsupportedCommand(String),
    #[error("parametric datatype: {0}")]
    ParametricDatatype(String),
    #[error("expected exactly one query clause, found {0}")]
    QueryCount(usize),
    #[error("invalid script: {0}")]
    InvalidScript(String),
}

impl From<ParseError> for RejectionReason {
    fn from(err: ParseError) -> Self {
        match err {
            ParseError::ParametricDatatype { ref name, .. } => {
                RejectionReason::ParametricDatatype(format!("{name}: {err}"))
            }
            other => RejectionReason::InvalidScript(other.to_string()),
        }
    }
}

impl From<ChcError> for RejectionReason {
    fn from(err: ChcError) -> Self {
        match err {
            ChcError::NotHorn(msg) => RejectionReason::NotHorn(msg),
            ChcError::UnsupportedCommand(name) => RejectionReason::UnsupportedCommand(name),
            other => RejectionReason::InvalidScript(other.to_string()),
        }
    }
}

/// Transformations normalization may apply; only steps that actually
/// changed the script are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeStep {
    SetLogic,
    DropAuxiliary,
    ReorderCommands,
    GroupDatatypes,
    CanonicalizeClauses,
    MergeQueries,
}

/// Per-file normalization record, one JSON line each.
#[derive(Debug, Clone, Serialize)]
pub struct NormalizationReport {
    pub input: String,
    pub transformations: Vec<NormalizeStep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejected: Option<String>,
}

impl NormalizationReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Rewrites a system with `k > 1` queries so that exactly one remains:
/// every query `body => false` becomes `body => G` for a fresh nullary
/// predicate `G`, and a single clause `G => false` is appended.
/// Systems with at most one query are returned unchanged.
pub fn merge_queries(system: &ChcSystem) -> ChcSystem {
    if system.queries().count() <= 1 {
        return system.clone();
    }
    let mut merged = system.clone();
    let taken: HashSet<&str> = system
        .predicates
        .iter()
        .map(|p| p.name.as_str())
        .chain(system.datatypes().map(|d| d.name.as_str()))
        .collect();
    let goal = {
        let mut candidate = QUERY_PREDICATE_PREFIX.to_string();
        let mut counter = 0usize;
        while taken.contains(candidate.as_str()) {
            candidate = format!("{QUERY_PREDICATE_PREFIX}{counter}");
            counter += 1;
        }
        candidate
    };
    merged.predicates.push(Predicate { name: goal.clone(), args: vec![] });
    for clause in &mut merged.clauses {
        if clause.is_query() {
            clause.head = ClauseHead::Atom(Atom { pred: goal.clone(), args: vec![] });
        }
    }
    merged.clauses.push(Clause {
        vars: vec![],
        body_atoms: vec![Atom { pred: goal.clone(), args: vec![] }],
        constraint: Term::tt(),
        head: ClauseHead::False,
    });
    merged
}

/// Partitions datatype declarations into the connected components of
/// their (undirected) dependency graph: if a constructor of `a` has a
/// field of datatype sort `b`, then `a` and `b` land in one group.
/// Components are ordered by first declaration, members keep
/// declaration order.
pub fn group_datatypes(decls: &[DatatypeDecl]) -> Vec<Vec<DatatypeDecl>> {
    let index: HashMap<&str, usize> =
        decls.iter().enumerate().map(|(i, d)| (d.name.as_str(), i)).collect();

    // union-find over declaration indices
    let mut parent: Vec<usize> = (0..decls.len()).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for (i, decl) in decls.iter().enumerate() {
        for ctor in &decl.constructors {
            for sel in &ctor.selectors {
                let mut named = Vec::new();
                sel.sort.named_sorts(&mut named);
                for name in named {
                    if let Some(&j) = index.get(name) {
                        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                        if a != b {
                            parent[a] = b;
                        }
                    }
                }
            }
        }
    }

    let mut groups: Vec<(usize, Vec<DatatypeDecl>)> = Vec::new();
    let mut root_to_group: HashMap<usize, usize> = HashMap::new();
    for (i, decl) in decls.iter().enumerate() {
        let root = find(&mut parent, i);
        match root_to_group.get(&root) {
            Some(&g) => groups[g].1.push(decl.clone()),
            None => {
                root_to_group.insert(root, groups.len());
                groups.push((i, vec![decl.clone()]));
            }
        }
    }
    groups.sort_by_key(|(first, _)| *first);
    groups.into_iter().map(|(_, members)| members).collect()
}

/// Result of normalizing one script.
#[derive(Debug)]
pub struct Normalized {
    pub script: Script,
    pub system: ChcSystem,
    pub steps: Vec<NormalizeStep>,
}

/// Normalizes a parsed script, or rejects it. `merge` disables query
/// merging when false; multi-query benchmarks are then rejected by the
/// single-query validation instead of silently passed through.
pub fn normalize(script: &Script, merge: bool) -> Result<Normalized, RejectionReason> {
    let system = to_chc_system(script)?;

    let query_count = system.queries().count();
    let (system, merged) = if merge && query_count > 1 {
        (merge_queries(&system), true)
    } else {
        (system, false)
    };
    let queries_after = system.queries().count();
    if queries_after != 1 {
        return Err(RejectionReason::QueryCount(queries_after));
    }

    let decls: Vec<DatatypeDecl> = system.datatypes().cloned().collect();
    let groups = group_datatypes(&decls);
    let canonical = build_script(&system, &groups);

    let mut steps = Vec::new();
    if input_logic(script) != Some("HORN") {
        steps.push(NormalizeStep::SetLogic);
    }
    if script.commands.iter().any(|c| {
        matches!(c, Command::SetInfo(..) | Command::GetModel | Command::Exit)
    }) {
        steps.push(NormalizeStep::DropAuxiliary);
    }
    if shape_of(script) != shape_of(&canonical) {
        steps.push(NormalizeStep::ReorderCommands);
    }
    let input_grouping: Vec<Vec<&str>> = script
        .commands
        .iter()
        .filter_map(|c| match c {
            Command::DeclareDatatypes(ds) => {
                Some(ds.iter().map(|d| d.name.as_str()).collect())
            }
            _ => None,
        })
        .collect();
    let output_grouping: Vec<Vec<&str>> =
        groups.iter().map(|g| g.iter().map(|d| d.name.as_str()).collect()).collect();
    if input_grouping != output_grouping {
        steps.push(NormalizeStep::GroupDatatypes);
    }
    if merged {
        steps.push(NormalizeStep::MergeQueries);
    } else {
        let input_asserts: Vec<&Term> = script.asserts().collect();
        let output_asserts: Vec<&Term> = canonical.asserts().collect();
        if input_asserts != output_asserts {
            steps.push(NormalizeStep::CanonicalizeClauses);
        }
    }

    Ok(Normalized { script: canonical, system, steps })
}

/// Parses and normalizes source text in one step.
pub fn normalize_source(text: &str, merge: bool) -> Result<Normalized, RejectionReason> {
    let script = parse_script(text)?;
    normalize(&script, merge)
}

fn input_logic(script: &Script) -> Option<&str> {
    match script.commands.first() {
        Some(Command::SetLogic(logic)) => Some(logic),
        _ => None,
    }
}

/// Command-kind skeleton used to detect reordering, ignoring commands
/// normalization drops.
fn shape_of(script: &Script) -> Vec<u8> {
    script
        .commands
        .iter()
        .filter_map(|c| match c {
            Command::SetLogic(_) => Some(0),
            Command::DeclareDatatypes(_) => Some(1),
            Command::DeclareFun { .. } => Some(2),
            Command::Assert(_) => Some(3),
            Command::CheckSat => Some(4),
            _ => None,
        })
        .collect()
}

/// Renders a system back to script form: logic, datatype groups,
/// predicate declarations, clauses, check-sat.
fn build_script(system: &ChcSystem, groups: &[Vec<DatatypeDecl>]) -> Script {
    let mut commands = Vec::new();
    commands.push(Command::SetLogic("HORN".into()));
    for group in groups {
        commands.push(Command::DeclareDatatypes(group.clone()));
    }
    for pred in &system.predicates {
        commands.push(Command::DeclareFun {
            name: pred.name.clone(),
            args: pred.args.clone(),
            ret: Sort::Bool,
        });
    }
    for clause in &system.clauses {
        commands.push(Command::Assert(clause_term(clause)));
    }
    commands.push(Command::CheckSat);
    Script { commands }
}

/// Canonical clause form: `(forall vars (=> premise head))`, with the
/// premise flattening body atoms followed by the constraint conjuncts.
/// Ground clauses drop the quantifier, since `forall` with an empty
/// binder list is not legal.
pub fn clause_term(clause: &Clause) -> Term {
    let mut parts: Vec<Term> = clause.body_atoms.iter().map(atom_term).collect();
    flatten_and(&clause.constraint, &mut parts);
    let premise = match parts.len() {
        0 => Term::tt(),
        1 => parts.pop().unwrap(),
        _ => Term::app("and", parts),
    };
    let head = match &clause.head {
        ClauseHead::Atom(atom) => atom_term(atom),
        ClauseHead::False => Term::ff(),
    };
    let body = Term::app("=>", vec![premise, head]);
    if clause.vars.is_empty() {
        body
    } else {
        Term::Quant(Quantifier::Forall, clause.vars.clone(), Box::new(body))
    }
}

fn atom_term(atom: &Atom) -> Term {
    Term::App(FuncSym::Named(atom.pred.clone()), atom.args.clone())
}

fn flatten_and(term: &Term, out: &mut Vec<Term>) {
    match term {
        Term::App(FuncSym::Named(name), args) if name == "and" => {
            for arg in args {
                flatten_and(arg, out);
            }
        }
        t if t.is_true() => {}
        t => out.push(t.clone()),
    }
}

/// Canonical fingerprint of a normalized benchmark: declarations
/// sorted by (kind, name), group members sorted by name, binders
/// alpha-renamed to `v0, v1, ...` in binding order, then hashed.
pub fn fingerprint(script: &Script) -> Result<Fingerprint, RejectionReason> {
    let normalized = normalize(script, true)?;
    Ok(fingerprint_of_normalized(&normalized.script))
}

fn fingerprint_of_normalized(script: &Script) -> Fingerprint {
    let mut datatypes: Vec<Vec<DatatypeDecl>> = Vec::new();
    let mut funs: Vec<Command> = Vec::new();
    let mut asserts: Vec<Command> = Vec::new();
    for command in &script.commands {
        match command {
            Command::DeclareDatatypes(group) => {
                let mut group = group.clone();
                group.sort_by(|a, b| a.name.cmp(&b.name));
                datatypes.push(group);
            }
            Command::DeclareFun { .. } => funs.push(command.clone()),
            Command::Assert(term) => {
                asserts.push(Command::Assert(alpha_rename(term)));
            }
            _ => {}
        }
    }
    datatypes.sort_by(|a, b| a[0].name.cmp(&b[0].name));
    funs.sort_by_key(|c| match c {
        Command::DeclareFun { name, .. } => name.clone(),
        _ => unreachable!(),
    });

    let mut commands = vec![Command::SetLogic("HORN".into())];
    commands.extend(datatypes.into_iter().map(Command::DeclareDatatypes));
    commands.extend(funs);
    commands.extend(asserts);
    commands.push(Command::CheckSat);

    let text = print_script(&Script { commands });
    let digest = Sha256::digest(text.as_bytes());
    Fingerprint(digest.into())
}

/// Renames every bound variable to `v<n>` in binding order.
fn alpha_rename(term: &Term) -> Term {
    let mut counter = 0usize;
    rename(term, &HashMap::new(), &mut counter)
}

fn rename(term: &Term, env: &HashMap<String, String>, counter: &mut usize) -> Term {
    match term {
        Term::Var(name) => {
            Term::Var(env.get(name).cloned().unwrap_or_else(|| name.clone()))
        }
        Term::Numeral(_) | Term::Decimal(_) => term.clone(),
        Term::App(head, args) => Term::App(
            head.clone(),
            args.iter().map(|a| rename(a, env, counter)).collect(),
        ),
        Term::Let(bindings, body) => {
            let values: Vec<Term> =
                bindings.iter().map(|(_, v)| rename(v, env, counter)).collect();
            let mut inner = env.clone();
            let mut renamed = Vec::with_capacity(bindings.len());
            for ((name, _), value) in bindings.iter().zip(values) {
                let fresh = format!("v{counter}");
                *counter += 1;
                inner.insert(name.clone(), fresh.clone());
                renamed.push((fresh, value));
            }
            Term::Let(renamed, Box::new(rename(body, &inner, counter)))
        }
        Term::Quant(quant, vars, body) => {
            let mut inner = env.clone();
            let vars = vars
                .iter()
                .map(|v| {
                    let fresh = format!("v{counter}");
                    *counter += 1;
                    inner.insert(v.name.clone(), fresh.clone());
                    crate::smtlib::SortedVar { name: fresh, sort: v.sort.clone() }
                })
                .collect();
            Term::Quant(*quant, vars, Box::new(rename(body, &inner, counter)))
        }
    }
}
