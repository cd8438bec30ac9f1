//! Core library of `chctools`, a toolchain for running a CHC solver
//! competition end to end:
//!
//! - [`smtlib`]: lexer, parser and printer for the SMT-LIB 2.6 subset
//!   used by CHC-COMP benchmarks;
//! - [`chc`]: extraction of constrained Horn clause systems from
//!   scripts, plus clause/system linearity;
//! - [`categorize`]: background-theory detection, the semantic
//!   linearity rules for `*`/`div`/`mod`, recursive-datatype detection,
//!   and track assignment;
//! - [`normalize`]: conformant reshaping (query merging, datatype
//!   grouping, canonical clause form) and the fingerprint used to
//!   deduplicate benchmarks;
//! - [`select`]: difficulty rating against reference solvers and
//!   quota-based selection of competition sets;
//! - [`runner`]: solver execution under CPU/wall/memory limits and the
//!   job-information CSV;
//! - [`score`]: scores, rankings, unique-solve counts and cross-solver
//!   inconsistency reports.
//!
//! Everything up to the runner is pure and deterministic; campaign
//! output is deterministic apart from measured times.

pub mod categorize;
pub mod chc;
pub mod normalize;
pub mod runner;
pub mod score;
pub mod select;
pub mod smtlib;
