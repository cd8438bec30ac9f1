//! Track categorization: theory detection, the semantic linearity rules
//! for `*`/`div`/`mod`, recursive-datatype detection, and the final
//! track assignment.
//!
//! The arithmetic rules: a `div` or `mod` whose divisor is not a
//! constant term excludes the benchmark, as does a `*` with more than
//! one non-constant factor; otherwise occurrences of `*`, `div`, `mod`
//! and `abs` count as semantically linear. A constant term is
//! variable-free, built from numerals and `+ - * div mod abs`, and
//! evaluates to an integer.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;

use crate::chc::{system_linearity, ChcSystem, ClauseHead, Linearity};
use crate::smtlib::{DatatypeDecl, FuncSym, Sort, Term};

/// Verdict of the linearity rules on arithmetic, ordered so that the
/// join of two verdicts is their maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LiaVerdict {
    NoArith,
    PureLia,
    SemanticallyLinear,
    ExcludedNonlinearArith,
}

/// Background-theory usage of a whole system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TheorySet {
    pub uses_bool: bool,
    pub uses_ints: bool,
    pub uses_arrays: bool,
    pub uses_adts: bool,
    pub uses_reals: bool,
    pub adt_recursive: bool,
    pub lia_verdict: LiaVerdict,
}

/// The six competition tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Track {
    LiaLin,
    LiaNonlin,
    LiaLinArrays,
    LiaNonlinArrays,
    LiaNonlinArraysNonrecAdt,
    AdtLiaNonlin,
}

impl Track {
    pub const ALL: [Track; 6] = [
        Track::LiaLin,
        Track::LiaNonlin,
        Track::LiaLinArrays,
        Track::LiaNonlinArrays,
        Track::LiaNonlinArraysNonrecAdt,
        Track::AdtLiaNonlin,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Track::LiaLin => "LIA-lin",
            Track::LiaNonlin => "LIA-nonlin",
            Track::LiaLinArrays => "LIA-lin-Arrays",
            Track::LiaNonlinArrays => "LIA-nonlin-Arrays",
            Track::LiaNonlinArraysNonrecAdt => "LIA-nonlin-Arrays-nonrecADT",
            Track::AdtLiaNonlin => "ADT-LIA-nonlin",
        }
    }
}

impl std::fmt::Display for Track {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Track {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Track::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown track `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UncategorizedReason {
    NonlinearArithmetic,
    RealArithmetic,
    RecursiveAdtWithArrays,
}

impl std::fmt::Display for UncategorizedReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            UncategorizedReason::NonlinearArithmetic => "nonlinear arithmetic",
            UncategorizedReason::RealArithmetic => "real arithmetic",
            UncategorizedReason::RecursiveAdtWithArrays => "recursive datatype combined with arrays",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackAssignment {
    Track(Track),
    Uncategorized(UncategorizedReason),
}

impl std::fmt::Display for TrackAssignment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrackAssignment::Track(t) => t.fmt(f),
            TrackAssignment::Uncategorized(r) => write!(f, "Uncategorized: {r}"),
        }
    }
}

impl TrackAssignment {
    pub fn track(&self) -> Option<Track> {
        match self {
            TrackAssignment::Track(t) => Some(*t),
            TrackAssignment::Uncategorized(_) => None,
        }
    }
}

/// Applies the linearity rules to one constraint term.
pub fn arith_linearity_verdict(term: &Term) -> LiaVerdict {
    let mut verdict = LiaVerdict::NoArith;
    scan_verdict(term, &mut verdict);
    verdict
}

fn scan_verdict(term: &Term, verdict: &mut LiaVerdict) {
    match term {
        Term::Var(_) | Term::Decimal(_) => {}
        Term::Numeral(_) => bump(verdict, LiaVerdict::PureLia),
        Term::Let(bindings, body) => {
            for (_, value) in bindings {
                scan_verdict(value, verdict);
            }
            scan_verdict(body, verdict);
        }
        Term::Quant(_, _, body) => scan_verdict(body, verdict),
        Term::App(head, args) => {
            if let FuncSym::Named(name) = head {
                match name.as_str() {
                    "div" | "mod" => {
                        if args[1..].iter().all(|a| constant_value(a).is_some()) {
                            bump(verdict, LiaVerdict::SemanticallyLinear);
                        } else {
                            bump(verdict, LiaVerdict::ExcludedNonlinearArith);
                        }
                    }
                    "*" => {
                        let non_constant =
                            args.iter().filter(|a| constant_value(a).is_none()).count();
                        if non_constant > 1 {
                            bump(verdict, LiaVerdict::ExcludedNonlinearArith);
                        } else {
                            bump(verdict, LiaVerdict::SemanticallyLinear);
                        }
                    }
                    "abs" => bump(verdict, LiaVerdict::SemanticallyLinear),
                    "+" | "-" | "<" | "<=" | ">" | ">=" => bump(verdict, LiaVerdict::PureLia),
                    _ => {}
                }
            }
            for arg in args {
                scan_verdict(arg, verdict);
            }
        }
    }
}

fn bump(verdict: &mut LiaVerdict, at_least: LiaVerdict) {
    if *verdict < at_least {
        *verdict = at_least;
    }
}

/// Evaluates a variable-free term over numerals and
/// `+ - * div mod abs`. `None` marks a non-constant term, including
/// division by zero.
fn constant_value(term: &Term) -> Option<BigInt> {
    match term {
        Term::Numeral(n) => Some(BigInt::from(n.clone())),
        Term::App(FuncSym::Named(name), args) => {
            let values: Vec<BigInt> =
                args.iter().map(constant_value).collect::<Option<Vec<_>>>()?;
            match (name.as_str(), values.as_slice()) {
                ("-", [v]) => Some(-v),
                ("-", [first, rest @ ..]) if !rest.is_empty() => {
                    Some(rest.iter().fold(first.clone(), |acc, v| acc - v))
                }
                ("+", [first, rest @ ..]) if !rest.is_empty() => {
                    Some(rest.iter().fold(first.clone(), |acc, v| acc + v))
                }
                ("*", [first, rest @ ..]) if !rest.is_empty() => {
                    Some(rest.iter().fold(first.clone(), |acc, v| acc * v))
                }
                ("div", [first, rest @ ..]) if !rest.is_empty() => {
                    let mut acc = first.clone();
                    for v in rest {
                        acc = div_euclid(&acc, v)?;
                    }
                    Some(acc)
                }
                ("mod", [a, b]) => mod_euclid(a, b),
                ("abs", [v]) => Some(if v.sign() == num_bigint::Sign::Minus { -v } else { v.clone() }),
                _ => None,
            }
        }
        _ => None,
    }
}

// SMT-LIB integer division is Euclidean: the remainder is always
// non-negative, regardless of the divisor's sign.
fn div_euclid(a: &BigInt, b: &BigInt) -> Option<BigInt> {
    use num_traits::Zero;
    if b.is_zero() {
        return None;
    }
    let r = a.mod_floor(&abs(b));
    Some((a - r) / b)
}

fn mod_euclid(a: &BigInt, b: &BigInt) -> Option<BigInt> {
    use num_traits::Zero;
    if b.is_zero() {
        return None;
    }
    Some(a.mod_floor(&abs(b)))
}

fn abs(v: &BigInt) -> BigInt {
    if v.sign() == num_bigint::Sign::Minus {
        -v
    } else {
        v.clone()
    }
}

/// True iff the selector-sort graph of `group` has a cycle, following
/// array index and element sorts and counting self-loops.
pub fn adt_recursive(group: &[DatatypeDecl]) -> bool {
    let declared: HashSet<&str> = group.iter().map(|d| d.name.as_str()).collect();
    let mut edges: HashMap<&str, Vec<&str>> = HashMap::new();
    for decl in group {
        let targets = edges.entry(decl.name.as_str()).or_default();
        for ctor in &decl.constructors {
            for sel in &ctor.selectors {
                let mut named = Vec::new();
                sel.sort.named_sorts(&mut named);
                for target in named {
                    if declared.contains(target) {
                        targets.push(target);
                    }
                }
            }
        }
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        InProgress,
        Done,
    }

    fn visit<'a>(
        node: &'a str,
        edges: &HashMap<&'a str, Vec<&'a str>>,
        marks: &mut HashMap<&'a str, Mark>,
    ) -> bool {
        match marks.get(node) {
            Some(Mark::InProgress) => return true,
            Some(Mark::Done) => return false,
            None => {}
        }
        marks.insert(node, Mark::InProgress);
        if let Some(targets) = edges.get(node) {
            for target in targets {
                if visit(target, edges, marks) {
                    return true;
                }
            }
        }
        marks.insert(node, Mark::Done);
        false
    }

    let mut marks = HashMap::new();
    group.iter().any(|d| visit(d.name.as_str(), &edges, &mut marks))
}

/// Computes the theory usage flags and the joined linearity verdict of
/// all constraints and atom arguments.
pub fn detect_theories(system: &ChcSystem) -> TheorySet {
    let mut set = TheorySet {
        uses_bool: false,
        uses_ints: false,
        uses_arrays: false,
        uses_adts: !system.datatype_groups.is_empty(),
        uses_reals: false,
        adt_recursive: false,
        lia_verdict: LiaVerdict::NoArith,
    };

    let all_datatypes: Vec<DatatypeDecl> = system.datatypes().cloned().collect();
    set.adt_recursive = adt_recursive(&all_datatypes);

    for pred in &system.predicates {
        for sort in &pred.args {
            note_sort(sort, &mut set);
        }
    }
    for decl in &all_datatypes {
        for ctor in &decl.constructors {
            for sel in &ctor.selectors {
                note_sort(&sel.sort, &mut set);
            }
        }
    }

    for clause in &system.clauses {
        for var in &clause.vars {
            note_sort(&var.sort, &mut set);
        }
        let mut verdict = LiaVerdict::NoArith;
        let mut note_term = |t: &Term| {
            scan_verdict(t, &mut verdict);
            note_term_theories(t, &mut set);
        };
        note_term(&clause.constraint);
        for atom in &clause.body_atoms {
            for arg in &atom.args {
                note_term(arg);
            }
        }
        if let ClauseHead::Atom(atom) = &clause.head {
            for arg in &atom.args {
                note_term(arg);
            }
        }
        bump(&mut set.lia_verdict, verdict);
    }

    set
}

fn note_sort(sort: &Sort, set: &mut TheorySet) {
    match sort {
        Sort::Bool => set.uses_bool = true,
        Sort::Int => set.uses_ints = true,
        Sort::Real => set.uses_reals = true,
        Sort::Array(idx, elem) => {
            set.uses_arrays = true;
            note_sort(idx, set);
            note_sort(elem, set);
        }
        Sort::Named(_) => set.uses_adts = true,
    }
}

fn note_term_theories(term: &Term, set: &mut TheorySet) {
    match term {
        Term::Var(_) => {}
        Term::Numeral(_) => set.uses_ints = true,
        Term::Decimal(_) => set.uses_reals = true,
        Term::Let(bindings, body) => {
            for (_, value) in bindings {
                note_term_theories(value, set);
            }
            note_term_theories(body, set);
        }
        Term::Quant(_, vars, body) => {
            for var in vars {
                note_sort(&var.sort, set);
            }
            note_term_theories(body, set);
        }
        Term::App(head, args) => {
            if let FuncSym::Named(name) = head {
                match name.as_str() {
                    "select" | "store" => set.uses_arrays = true,
                    "/" => set.uses_reals = true,
                    "+" | "-" | "*" | "div" | "mod" | "abs" | "<" | "<=" | ">" | ">=" => {
                        set.uses_ints = true
                    }
                    _ => {}
                }
            }
            if let FuncSym::Tester(_) = head {
                set.uses_adts = true;
            }
            for arg in args {
                note_term_theories(arg, set);
            }
        }
    }
}

/// Assigns a benchmark to its competition track, or reports why it
/// fits none. There is no linear datatype track, so systems using
/// datatypes land in the nonlinear-named tracks regardless of their
/// clause shape.
pub fn assign_track(system: &ChcSystem) -> TrackAssignment {
    let theories = detect_theories(system);
    let linear = system_linearity(system) == Linearity::Linear;

    if theories.uses_reals {
        return TrackAssignment::Uncategorized(UncategorizedReason::RealArithmetic);
    }
    if theories.lia_verdict == LiaVerdict::ExcludedNonlinearArith {
        return TrackAssignment::Uncategorized(UncategorizedReason::NonlinearArithmetic);
    }
    if theories.uses_adts {
        if theories.adt_recursive {
            if theories.uses_arrays {
                return TrackAssignment::Uncategorized(
                    UncategorizedReason::RecursiveAdtWithArrays,
                );
            }
            return TrackAssignment::Track(Track::AdtLiaNonlin);
        }
        return TrackAssignment::Track(Track::LiaNonlinArraysNonrecAdt);
    }
    if theories.uses_arrays {
        return TrackAssignment::Track(if linear {
            Track::LiaLinArrays
        } else {
            Track::LiaNonlinArrays
        });
    }
    TrackAssignment::Track(if linear { Track::LiaLin } else { Track::LiaNonlin })
}

/// One line of the categorization report: `path<TAB>track`.
pub fn report_line(path: &str, assignment: &TrackAssignment) -> String {
    format!("{path}\t{assignment}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chc::to_chc_system;
    use crate::smtlib::{parse_script, ConstructorDecl, SelectorDecl};

    fn term(src: &str) -> Term {
        // wrap in an assert to reuse the term parser
        let script = parse_script(&format!("(assert (forall ((x Int) (y Int)) {src}))")).unwrap();
        let crate::smtlib::Command::Assert(Term::Quant(_, _, body)) = &script.commands[0] else {
            panic!()
        };
        (**body).clone()
    }

    fn sys(src: &str) -> ChcSystem {
        to_chc_system(&parse_script(src).unwrap()).unwrap()
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(arith_linearity_verdict(&term("(= y (div x 2))")), LiaVerdict::SemanticallyLinear);
        assert_eq!(arith_linearity_verdict(&term("(= y (div x y))")), LiaVerdict::ExcludedNonlinearArith);
        assert_eq!(arith_linearity_verdict(&term("(= y (mod x y))")), LiaVerdict::ExcludedNonlinearArith);
        assert_eq!(arith_linearity_verdict(&term("(= y (* x y))")), LiaVerdict::ExcludedNonlinearArith);
        assert_eq!(arith_linearity_verdict(&term("(= y (* 3 x))")), LiaVerdict::SemanticallyLinear);
        assert_eq!(arith_linearity_verdict(&term("(= y (+ x 1))")), LiaVerdict::PureLia);
        assert_eq!(arith_linearity_verdict(&term("(= x y)")), LiaVerdict::NoArith);
        assert_eq!(arith_linearity_verdict(&term("(= y (abs x))")), LiaVerdict::SemanticallyLinear);
    }

    #[test]
    fn constant_terms_admit_division() {
        // a constant divisor may itself be an expression
        assert_eq!(
            arith_linearity_verdict(&term("(= y (div x (+ 1 2)))")),
            LiaVerdict::SemanticallyLinear
        );
        // constant folding does not change the verdict
        assert_eq!(
            arith_linearity_verdict(&term("(= y (* x (* 2 3)))")),
            arith_linearity_verdict(&term("(= y (* x 6))"))
        );
        // division by zero is not a constant term
        assert_eq!(
            arith_linearity_verdict(&term("(= y (div x (div 1 0)))")),
            LiaVerdict::ExcludedNonlinearArith
        );
    }

    #[test]
    fn multiplication_with_one_variable_factor() {
        assert_eq!(arith_linearity_verdict(&term("(= y (* 2 x 3))")), LiaVerdict::SemanticallyLinear);
        assert_eq!(arith_linearity_verdict(&term("(= y (* x 2 y))")), LiaVerdict::ExcludedNonlinearArith);
        // x * x has two non-constant factors even though they are equal
        assert_eq!(arith_linearity_verdict(&term("(= y (* x x))")), LiaVerdict::ExcludedNonlinearArith);
    }

    #[test]
    fn euclidean_division() {
        use num_traits::ToPrimitive;
        let v = constant_value(&term("(div (- 7) 2)")).unwrap();
        assert_eq!(v.to_i64(), Some(-4));
        let v = constant_value(&term("(mod (- 7) 2)")).unwrap();
        assert_eq!(v.to_i64(), Some(1));
        let v = constant_value(&term("(div 7 (- 2))")).unwrap();
        assert_eq!(v.to_i64(), Some(-3));
        let v = constant_value(&term("(mod 7 (- 2))")).unwrap();
        assert_eq!(v.to_i64(), Some(1));
    }

    fn decl(name: &str, fields: &[(&str, Sort)]) -> DatatypeDecl {
        DatatypeDecl {
            name: name.into(),
            constructors: vec![ConstructorDecl {
                name: format!("mk-{name}"),
                selectors: fields
                    .iter()
                    .map(|(n, s)| SelectorDecl { name: (*n).into(), sort: s.clone() })
                    .collect(),
            }],
        }
    }

    #[test]
    fn recursion_detection() {
        // self-loop
        assert!(adt_recursive(&[decl("lst", &[("hd", Sort::Int), ("tl", Sort::Named("lst".into()))])]));
        // no datatype-sorted field
        assert!(!adt_recursive(&[decl("pair", &[("fst", Sort::Int), ("snd", Sort::Bool)])]));
        // mutual recursion
        assert!(adt_recursive(&[
            decl("a", &[("b", Sort::Named("b".into()))]),
            decl("b", &[("a", Sort::Named("a".into()))]),
        ]));
        // chain without a cycle
        assert!(!adt_recursive(&[
            decl("a", &[("b", Sort::Named("b".into()))]),
            decl("b", &[("i", Sort::Int)]),
        ]));
        // recursion through an array element sort
        assert!(adt_recursive(&[decl(
            "t",
            &[("elems", Sort::Array(Box::new(Sort::Int), Box::new(Sort::Named("t".into()))))],
        )]));
    }

    #[test]
    fn theories_of_a_plain_lia_system() {
        let s = sys(
            "(set-logic HORN)(declare-fun inv (Int) Bool)\
             (assert (forall ((x Int)) (=> (<= x 0) (inv x))))\
             (assert (forall ((x Int)) (=> (and (inv x) (> x 10)) false)))(check-sat)",
        );
        let t = detect_theories(&s);
        assert!(t.uses_ints && !t.uses_arrays && !t.uses_adts && !t.uses_reals);
        assert_eq!(t.lia_verdict, LiaVerdict::PureLia);
        assert_eq!(assign_track(&s), TrackAssignment::Track(Track::LiaLin));
    }

    #[test]
    fn array_store_select_flags_arrays() {
        let s = sys(
            "(set-logic HORN)(declare-fun m ((Array Int Int)) Bool)\
             (assert (forall ((a (Array Int Int))) (=> (= (select a 0) 0) (m a))))\
             (assert (forall ((a (Array Int Int))) (=> (and (m a) (> (select a 1) 5)) false)))(check-sat)",
        );
        let t = detect_theories(&s);
        assert!(t.uses_arrays);
        assert_eq!(assign_track(&s), TrackAssignment::Track(Track::LiaLinArrays));
    }

    #[test]
    fn recursive_adt_system() {
        let s = sys(
            "(set-logic HORN)\
             (declare-datatypes ((lst 0)) (((nil) (cons (hd Int) (tl lst)))))\
             (declare-fun len (lst Int) Bool)\
             (assert (forall ((l lst)) (=> ((_ is nil) l) (len l 0))))\
             (assert (forall ((l lst) (n Int)) (=> (and ((_ is cons) l) (len (tl l) n)) (len l (+ n 1)))))\
             (assert (forall ((l lst) (n Int)) (=> (and (len l n) (< n 0)) false)))(check-sat)",
        );
        let t = detect_theories(&s);
        assert!(t.uses_adts && t.adt_recursive);
        assert_eq!(assign_track(&s), TrackAssignment::Track(Track::AdtLiaNonlin));
    }

    #[test]
    fn excluded_multiplication() {
        let s = sys(
            "(set-logic HORN)(declare-fun sq (Int Int) Bool)\
             (assert (forall ((x Int) (y Int)) (=> (= y (* x x)) (sq x y))))\
             (assert (forall ((x Int) (y Int)) (=> (and (sq x y) (< y 0)) false)))(check-sat)",
        );
        assert_eq!(
            assign_track(&s),
            TrackAssignment::Uncategorized(UncategorizedReason::NonlinearArithmetic)
        );
    }

    #[test]
    fn track_rules_apply_in_order() {
        // nonlinear clauses + arrays
        let s = sys(
            "(set-logic HORN)(declare-fun p ((Array Int Int)) Bool)\
             (assert (forall ((a (Array Int Int))) (=> (= (select a 0) 0) (p a))))\
             (assert (forall ((a (Array Int Int)) (b (Array Int Int))) (=> (and (p a) (p b)) false)))(check-sat)",
        );
        assert_eq!(assign_track(&s), TrackAssignment::Track(Track::LiaNonlinArrays));
    }

    #[test]
    fn bool_usage_never_affects_assignment() {
        let s = sys(
            "(set-logic HORN)(declare-fun b (Bool) Bool)\
             (assert (forall ((x Bool)) (=> x (b x))))\
             (assert (forall ((x Bool)) (=> (and (b x) (not x)) false)))(check-sat)",
        );
        let t = detect_theories(&s);
        assert!(t.uses_bool);
        assert_eq!(assign_track(&s), TrackAssignment::Track(Track::LiaLin));
    }

    #[test]
    fn adding_a_nonlinear_clause_never_moves_to_a_lin_track() {
        let mut s = sys(
            "(set-logic HORN)(declare-fun p (Int) Bool)\
             (assert (forall ((x Int)) (=> (= x 0) (p x))))\
             (assert (forall ((x Int)) (=> (and (p x) (> x 9)) false)))(check-sat)",
        );
        assert_eq!(assign_track(&s), TrackAssignment::Track(Track::LiaLin));
        let mut nonlinear = s.clauses[1].clone();
        nonlinear.body_atoms.push(nonlinear.body_atoms[0].clone());
        s.clauses.push(nonlinear);
        assert_eq!(assign_track(&s), TrackAssignment::Track(Track::LiaNonlin));
    }

    #[test]
    fn assignment_invariant_under_reordering_and_renaming() {
        let s = sys(
            "(set-logic HORN)(declare-fun p (Int) Bool)\
             (assert (forall ((x Int)) (=> (= x (div x 2)) (p x))))\
             (assert (forall ((x Int)) (=> (and (p x) (> x 9)) false)))(check-sat)",
        );
        let renamed = sys(
            "(set-logic HORN)(declare-fun p (Int) Bool)\
             (assert (forall ((b Int)) (=> (and (p b) (> b 9)) false)))\
             (assert (forall ((a Int)) (=> (= a (div a 2)) (p a))))(check-sat)",
        );
        assert_eq!(assign_track(&s), assign_track(&renamed));
    }

    #[test]
    fn real_arithmetic_is_uncategorized() {
        let s = sys(
            "(set-logic HORN)(declare-fun r (Real) Bool)\
             (assert (forall ((x Real)) (=> (> x 0.5) (r x))))\
             (assert (forall ((x Real)) (=> (and (r x) (< x 0.0)) false)))(check-sat)",
        );
        assert_eq!(
            assign_track(&s),
            TrackAssignment::Uncategorized(UncategorizedReason::RealArithmetic)
        );
    }
}
