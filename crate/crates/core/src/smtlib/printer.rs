//! Printer from [`Script`] back to `.smt2` text.
//!
//! Output is deterministic: one command per line, lists that do not fit
//! in [`WIDTH`] columns break with two-space indentation. Printing then
//! re-parsing yields a structurally equal script.

use num_bigint::BigUint;

use super::ast::*;
use super::lexer::is_simple_symbol;
use super::sexpr::{SExpr, SExprKind};

const WIDTH: usize = 100;
const INDENT: usize = 2;

pub fn print_script(script: &Script) -> String {
    let mut out = String::new();
    for command in &script.commands {
        pretty(&command_sexpr(command), 0, &mut out);
        out.push('\n');
    }
    out
}

pub fn print_term(term: &Term) -> String {
    let mut out = String::new();
    pretty(&term_sexpr(term), 0, &mut out);
    out
}

fn command_sexpr(command: &Command) -> SExpr {
    match command {
        Command::SetLogic(logic) => {
            SExpr::list(vec![SExpr::symbol("set-logic"), SExpr::symbol(logic.clone())])
        }
        Command::SetInfo(keyword, value) => SExpr::list(vec![
            SExpr::symbol("set-info"),
            SExpr { kind: SExprKind::Keyword(keyword.clone()), loc: Default::default() },
            value.clone(),
        ]),
        Command::DeclareFun { name, args, ret } => SExpr::list(vec![
            SExpr::symbol("declare-fun"),
            SExpr::symbol(name.clone()),
            SExpr::list(args.iter().map(sort_sexpr).collect()),
            sort_sexpr(ret),
        ]),
        Command::DeclareDatatypes(decls) => SExpr::list(vec![
            SExpr::symbol("declare-datatypes"),
            SExpr::list(
                decls
                    .iter()
                    .map(|d| {
                        SExpr::list(vec![SExpr::symbol(d.name.clone()), numeral(0u32.into())])
                    })
                    .collect(),
            ),
            SExpr::list(
                decls
                    .iter()
                    .map(|d| {
                        SExpr::list(d.constructors.iter().map(constructor_sexpr).collect())
                    })
                    .collect(),
            ),
        ]),
        Command::Assert(term) => SExpr::list(vec![SExpr::symbol("assert"), term_sexpr(term)]),
        Command::CheckSat => SExpr::list(vec![SExpr::symbol("check-sat")]),
        Command::GetModel => SExpr::list(vec![SExpr::symbol("get-model")]),
        Command::Exit => SExpr::list(vec![SExpr::symbol("exit")]),
        Command::Unsupported(sexpr) => sexpr.clone(),
    }
}

fn constructor_sexpr(ctor: &ConstructorDecl) -> SExpr {
    let mut items = vec![SExpr::symbol(ctor.name.clone())];
    for sel in &ctor.selectors {
        items.push(SExpr::list(vec![SExpr::symbol(sel.name.clone()), sort_sexpr(&sel.sort)]));
    }
    SExpr::list(items)
}

fn sort_sexpr(sort: &Sort) -> SExpr {
    match sort {
        Sort::Bool => SExpr::symbol("Bool"),
        Sort::Int => SExpr::symbol("Int"),
        Sort::Real => SExpr::symbol("Real"),
        Sort::Array(idx, elem) => {
            SExpr::list(vec![SExpr::symbol("Array"), sort_sexpr(idx), sort_sexpr(elem)])
        }
        Sort::Named(name) => SExpr::symbol(name.clone()),
    }
}

fn term_sexpr(term: &Term) -> SExpr {
    match term {
        Term::Var(name) => SExpr::symbol(name.clone()),
        Term::Numeral(n) => numeral(n.clone()),
        Term::Decimal(d) => SExpr { kind: SExprKind::Decimal(d.clone()), loc: Default::default() },
        Term::App(head, args) => {
            let head = match head {
                FuncSym::Named(name) => SExpr::symbol(name.clone()),
                FuncSym::Tester(ctor) => SExpr::list(vec![
                    SExpr::symbol("_"),
                    SExpr::symbol("is"),
                    SExpr::symbol(ctor.clone()),
                ]),
            };
            if args.is_empty() {
                head
            } else {
                let mut items = vec![head];
                items.extend(args.iter().map(term_sexpr));
                SExpr::list(items)
            }
        }
        Term::Let(bindings, body) => SExpr::list(vec![
            SExpr::symbol("let"),
            SExpr::list(
                bindings
                    .iter()
                    .map(|(name, value)| {
                        SExpr::list(vec![SExpr::symbol(name.clone()), term_sexpr(value)])
                    })
                    .collect(),
            ),
            term_sexpr(body),
        ]),
        Term::Quant(quant, vars, body) => SExpr::list(vec![
            SExpr::symbol(match quant {
                Quantifier::Forall => "forall",
                Quantifier::Exists => "exists",
            }),
            SExpr::list(
                vars.iter()
                    .map(|v| SExpr::list(vec![SExpr::symbol(v.name.clone()), sort_sexpr(&v.sort)]))
                    .collect(),
            ),
            term_sexpr(body),
        ]),
    }
}

fn numeral(n: BigUint) -> SExpr {
    SExpr { kind: SExprKind::Numeral(n), loc: Default::default() }
}

fn atom_text(kind: &SExprKind) -> String {
    match kind {
        SExprKind::Symbol(s) => {
            if is_simple_symbol(s) {
                s.clone()
            } else {
                format!("|{s}|")
            }
        }
        SExprKind::Keyword(k) => format!(":{k}"),
        SExprKind::Numeral(n) => n.to_string(),
        SExprKind::Decimal(d) => d.clone(),
        SExprKind::String(s) => format!("\"{}\"", s.replace('"', "\"\"")),
        SExprKind::List(_) => unreachable!("atom_text on list"),
    }
}

fn inline_text(sexpr: &SExpr) -> String {
    match &sexpr.kind {
        SExprKind::List(items) => {
            let inner: Vec<String> = items.iter().map(inline_text).collect();
            format!("({})", inner.join(" "))
        }
        kind => atom_text(kind),
    }
}

fn pretty(sexpr: &SExpr, indent: usize, out: &mut String) {
    let inline = inline_text(sexpr);
    if indent + inline.len() <= WIDTH {
        out.push_str(&inline);
        return;
    }
    match &sexpr.kind {
        SExprKind::List(items) if !items.is_empty() => {
            out.push('(');
            // heads stay on the opening line even when they are lists
            out.push_str(&inline_text(&items[0]));
            for item in &items[1..] {
                out.push('\n');
                out.push_str(&" ".repeat(indent + INDENT));
                pretty(item, indent + INDENT, out);
            }
            out.push(')');
        }
        _ => out.push_str(&inline),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse_script;
    use super::*;

    #[test]
    fn smallest_script_prints_one_command_per_line() {
        let script = Script {
            commands: vec![Command::SetLogic("HORN".into()), Command::CheckSat],
        };
        assert_eq!(print_script(&script), "(set-logic HORN)\n(check-sat)\n");
    }

    #[test]
    fn round_trip_is_structural_identity() {
        let src = r#"
(set-logic HORN)
(declare-fun inv (Int Int) Bool)
(declare-datatypes ((lst 0)) (((nil) (cons (hd Int) (tl lst)))))
(assert (forall ((x Int) (y Int)) (=> (and (inv x y) (> x 0)) (inv (- x 1) y))))
(assert (forall ((l lst)) (=> ((_ is nil) l) (inv 0 0))))
(assert (let ((z (+ 1 2))) (= z 3)))
(check-sat)
"#;
        let parsed = parse_script(src).unwrap();
        let printed = print_script(&parsed);
        let reparsed = parse_script(&printed).unwrap();
        assert_eq!(parsed, reparsed);
    }

    #[test]
    fn print_is_stable() {
        let src = "(assert (forall ((x Int)) (=> (> x 0) (P x))))(check-sat)";
        let once = print_script(&parse_script(src).unwrap());
        let twice = print_script(&parse_script(&once).unwrap());
        assert_eq!(once, twice);
    }

    #[test]
    fn long_terms_break_with_two_space_indent() {
        let args: Vec<String> = (0..24).map(|i| format!("someLongVariableName{i}")).collect();
        let src = format!(
            "(assert (forall ({}) (P {})))",
            args.iter().map(|a| format!("({a} Int)")).collect::<Vec<_>>().join(" "),
            args.join(" ")
        );
        let parsed = parse_script(&src).unwrap();
        let printed = print_script(&parsed);
        assert!(printed.lines().count() > 1);
        assert!(printed.lines().any(|l| l.starts_with("  ") && !l.starts_with("   ")));
        assert_eq!(parsed, parse_script(&printed).unwrap());
    }

    #[test]
    fn quoted_symbols_survive() {
        let src = "(declare-fun |odd name| (Int) Bool)(assert (|odd name| 1))(check-sat)";
        let parsed = parse_script(src).unwrap();
        let printed = print_script(&parsed);
        assert!(printed.contains("|odd name|"));
        assert_eq!(parsed, parse_script(&printed).unwrap());
    }

    #[test]
    fn unsupported_commands_are_reprinted_verbatim() {
        let src = "(define-fun f ((x Int)) Int (+ x 1))";
        let parsed = parse_script(src).unwrap();
        let printed = print_script(&parsed);
        assert_eq!(parsed, parse_script(&printed).unwrap());
        assert!(printed.contains("define-fun"));
    }
}
