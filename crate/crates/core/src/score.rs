//! Scoring and ranking from job records.
//!
//! Score is the number of definite (`sat` or `unsat`) results. Ranking
//! is by descending score with total CPU time (over all records,
//! unknowns included) breaking ties. Hors-concours solvers stay in the
//! listing but are skipped when the podium is assigned. A benchmark on
//! which solvers split between sat and unsat is reported as an
//! inconsistency; dropping it or disqualifying a solver is the
//! organizers' call, exposed as explicit filters rather than applied
//! automatically.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::runner::{JobRecord, SolverResult};

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("duplicate record for solver `{solver}` on benchmark `{benchmark}`")]
    DuplicateRecord { solver: String, benchmark: String },
}

/// Aggregated standing of one solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverScore {
    pub solver: String,
    pub score: usize,
    pub sat: usize,
    pub unsat: usize,
    pub cpu_time: f64,
    pub wall_time: f64,
    pub unique: usize,
    pub hors_concours: bool,
}

/// A benchmark with definite answers on both sides.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inconsistency {
    pub benchmark: String,
    pub sat_solvers: Vec<String>,
    pub unsat_solvers: Vec<String>,
}

fn check_unique_pairs(records: &[JobRecord]) -> Result<(), ScoreError> {
    let mut seen = BTreeSet::new();
    for r in records {
        if !seen.insert((&r.solver, &r.benchmark)) {
            return Err(ScoreError::DuplicateRecord {
                solver: r.solver.clone(),
                benchmark: r.benchmark.clone(),
            });
        }
    }
    Ok(())
}

/// Aggregates records into per-solver scores (sorted by name), with
/// the unique-solve column filled in.
pub fn score(records: &[JobRecord]) -> Result<Vec<SolverScore>, ScoreError> {
    check_unique_pairs(records)?;
    let unique = count_unique(records);
    let mut by_solver: BTreeMap<&str, SolverScore> = BTreeMap::new();
    for r in records {
        let entry = by_solver.entry(&r.solver).or_insert_with(|| SolverScore {
            solver: r.solver.clone(),
            score: 0,
            sat: 0,
            unsat: 0,
            cpu_time: 0.0,
            wall_time: 0.0,
            unique: *unique.get(&r.solver).unwrap_or(&0),
            hors_concours: false,
        });
        match r.result {
            SolverResult::Sat => entry.sat += 1,
            SolverResult::Unsat => entry.unsat += 1,
            SolverResult::Unknown => {}
        }
        entry.cpu_time += r.cpu_time;
        entry.wall_time += r.wall_time;
    }
    let mut scores: Vec<SolverScore> = by_solver.into_values().collect();
    for s in &mut scores {
        s.score = s.sat + s.unsat;
    }
    Ok(scores)
}

/// Per solver, the number of benchmarks it decided while every other
/// solver answered unknown (or did not run).
pub fn count_unique(records: &[JobRecord]) -> BTreeMap<String, usize> {
    let mut deciders: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut solvers: BTreeSet<&str> = BTreeSet::new();
    for r in records {
        solvers.insert(&r.solver);
        if matches!(r.result, SolverResult::Sat | SolverResult::Unsat) {
            deciders.entry(&r.benchmark).or_default().push(&r.solver);
        }
    }
    let mut unique: BTreeMap<String, usize> =
        solvers.iter().map(|s| (s.to_string(), 0)).collect();
    for (_, who) in deciders {
        if let [only] = who.as_slice() {
            *unique.get_mut(*only).expect("solver present") += 1;
        }
    }
    unique
}

/// Benchmarks with at least one sat and one unsat answer, sorted by
/// benchmark id; solver lists are sorted too.
pub fn find_inconsistencies(records: &[JobRecord]) -> Vec<Inconsistency> {
    let mut sides: BTreeMap<&str, (Vec<String>, Vec<String>)> = BTreeMap::new();
    for r in records {
        let entry = sides.entry(&r.benchmark).or_default();
        match r.result {
            SolverResult::Sat => entry.0.push(r.solver.clone()),
            SolverResult::Unsat => entry.1.push(r.solver.clone()),
            SolverResult::Unknown => {}
        }
    }
    sides
        .into_iter()
        .filter(|(_, (sat, unsat))| !sat.is_empty() && !unsat.is_empty())
        .map(|(benchmark, (mut sat, mut unsat))| {
            sat.sort();
            unsat.sort();
            Inconsistency { benchmark: benchmark.to_string(), sat_solvers: sat, unsat_solvers: unsat }
        })
        .collect()
}

/// Orders scores descending by score, ascending CPU time on ties, name
/// as the final tiebreaker for stable output.
pub fn rank(mut scores: Vec<SolverScore>) -> Vec<SolverScore> {
    scores.sort_by(|a, b| {
        b.score
            .cmp(&a.score)
            .then(a.cpu_time.partial_cmp(&b.cpu_time).unwrap_or(std::cmp::Ordering::Equal))
            .then_with(|| a.solver.cmp(&b.solver))
    });
    scores
}

/// Marks the named solvers as hors concours.
pub fn mark_hors_concours(scores: &mut [SolverScore], names: &HashSet<String>) {
    for s in scores {
        if names.contains(&s.solver) {
            s.hors_concours = true;
        }
    }
}

/// Competing solvers in ranked order; index 0 is the track winner.
pub fn podium(ranked: &[SolverScore]) -> Vec<&SolverScore> {
    ranked.iter().filter(|s| !s.hors_concours).collect()
}

/// Drops all records of `solver`.
pub fn disqualify(records: &mut Vec<JobRecord>, solver: &str) {
    records.retain(|r| r.solver != solver);
}

/// Drops all records on `benchmark`.
pub fn drop_benchmark(records: &mut Vec<JobRecord>, benchmark: &str) {
    records.retain(|r| r.benchmark != benchmark);
}

/// Aligned plain-text ranking table.
pub fn ranking_table(ranked: &[SolverScore]) -> String {
    let mut rows = vec![vec![
        "rank".to_string(),
        "solver".to_string(),
        "score".to_string(),
        "sat".to_string(),
        "unsat".to_string(),
        "cpu_time/s".to_string(),
        "wallclock/s".to_string(),
        "unique".to_string(),
        "".to_string(),
    ]];
    for (i, s) in ranked.iter().enumerate() {
        rows.push(vec![
            (i + 1).to_string(),
            s.solver.clone(),
            s.score.to_string(),
            s.sat.to_string(),
            s.unsat.to_string(),
            format!("{:.2}", s.cpu_time),
            format!("{:.2}", s.wall_time),
            s.unique.to_string(),
            if s.hors_concours { "(hors concours)".into() } else { String::new() },
        ]);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|col| rows.iter().map(|r| r[col].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, width)| format!("{cell:<width$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub const RANKING_CSV_HEADER: &str =
    "rank,solver,score,sat,unsat,cpu_time,wallclock_time,unique,hors_concours";

/// Machine-readable ranking CSV.
pub fn ranking_csv(ranked: &[SolverScore]) -> String {
    let mut out = String::from(RANKING_CSV_HEADER);
    out.push('\n');
    for (i, s) in ranked.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{:.2},{:.2},{},{}\n",
            i + 1,
            s.solver,
            s.score,
            s.sat,
            s.unsat,
            s.cpu_time,
            s.wall_time,
            s.unique,
            s.hors_concours
        ));
    }
    out
}

/// Inconsistency report, one JSON object per line.
pub fn inconsistencies_jsonl(inconsistencies: &[Inconsistency]) -> String {
    let mut out = String::new();
    for inconsistency in inconsistencies {
        out.push_str(&serde_json::to_string(inconsistency).expect("serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::JobStatus;

    fn record(benchmark: &str, solver: &str, result: SolverResult, cpu: f64) -> JobRecord {
        JobRecord {
            benchmark: benchmark.into(),
            solver: solver.into(),
            configuration: "def".into(),
            status: JobStatus::Complete,
            result,
            cpu_time: cpu,
            wall_time: cpu,
        }
    }

    /// Records giving solver `name` the requested sat/unsat counts over
    /// a shared benchmark universe.
    fn synthetic(name: &str, sat: usize, unsat: usize, total: usize, cpu: f64) -> Vec<JobRecord> {
        (0..total)
            .map(|i| {
                let result = if i < sat {
                    SolverResult::Sat
                } else if i < sat + unsat {
                    SolverResult::Unsat
                } else {
                    SolverResult::Unknown
                };
                record(&format!("b{i:04}"), name, result, if i == 0 { cpu } else { 0.0 })
            })
            .collect()
    }

    #[test]
    fn score_is_sat_plus_unsat() {
        let mut records = synthetic("spacer", 199, 66, 422, 274397.0);
        records.extend(synthetic("golem", 148, 81, 422, 368980.0));
        let scores = score(&records).unwrap();
        let spacer = scores.iter().find(|s| s.solver == "spacer").unwrap();
        assert_eq!((spacer.sat, spacer.unsat, spacer.score), (199, 66, 265));
        let golem = scores.iter().find(|s| s.solver == "golem").unwrap();
        assert_eq!(golem.score, 229);
    }

    #[test]
    fn all_unknown_scores_zero() {
        let records = synthetic("quiet", 0, 0, 10, 5.0);
        let scores = score(&records).unwrap();
        assert_eq!(scores[0].score, 0);
    }

    #[test]
    fn duplicate_records_are_rejected() {
        let records = vec![
            record("b", "s", SolverResult::Sat, 1.0),
            record("b", "s", SolverResult::Unsat, 1.0),
        ];
        assert_eq!(
            score(&records).unwrap_err(),
            ScoreError::DuplicateRecord { solver: "s".into(), benchmark: "b".into() }
        );
    }

    #[test]
    fn score_is_permutation_invariant() {
        let mut records = synthetic("a", 3, 2, 8, 10.0);
        records.extend(synthetic("b", 1, 1, 8, 20.0));
        let forward = score(&records).unwrap();
        records.reverse();
        let backward = score(&records).unwrap();
        assert_eq!(forward, backward);
    }

    #[test]
    fn unique_counting() {
        let records = vec![
            record("b1", "s1", SolverResult::Sat, 1.0),
            record("b1", "s2", SolverResult::Unknown, 1.0),
            record("b1", "s3", SolverResult::Unknown, 1.0),
            record("b2", "s1", SolverResult::Sat, 1.0),
            record("b2", "s2", SolverResult::Unsat, 1.0),
            record("b2", "s3", SolverResult::Unknown, 1.0),
        ];
        let unique = count_unique(&records);
        assert_eq!(unique["s1"], 1, "b1 counts, b2 is shared");
        assert_eq!(unique["s2"], 0);
        assert_eq!(unique["s3"], 0);
    }

    #[test]
    fn removing_a_solver_never_decreases_others_uniques() {
        let records = vec![
            record("b1", "s1", SolverResult::Sat, 1.0),
            record("b1", "s2", SolverResult::Sat, 1.0),
            record("b2", "s2", SolverResult::Unsat, 1.0),
        ];
        let before = count_unique(&records);
        let mut fewer = records.clone();
        disqualify(&mut fewer, "s1");
        let after = count_unique(&fewer);
        for (solver, count) in after {
            assert!(count >= before[&solver]);
        }
    }

    #[test]
    fn inconsistency_detection() {
        let records = vec![
            record("b1", "s1", SolverResult::Sat, 1.0),
            record("b1", "s2", SolverResult::Unsat, 1.0),
            record("b2", "s1", SolverResult::Sat, 1.0),
            record("b2", "s2", SolverResult::Unknown, 1.0),
        ];
        let found = find_inconsistencies(&records);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].benchmark, "b1");
        assert_eq!(found[0].sat_solvers, vec!["s1"]);
        assert_eq!(found[0].unsat_solvers, vec!["s2"]);
    }

    #[test]
    fn two_on_each_side() {
        let records = vec![
            record("b", "s1", SolverResult::Sat, 1.0),
            record("b", "s2", SolverResult::Sat, 1.0),
            record("b", "s3", SolverResult::Unsat, 1.0),
            record("b", "s4", SolverResult::Unsat, 1.0),
        ];
        let found = find_inconsistencies(&records);
        assert_eq!(found[0].sat_solvers.len(), 2);
        assert_eq!(found[0].unsat_solvers.len(), 2);
    }

    #[test]
    fn ranking_order_and_tie_break() {
        let mk = |name: &str, score: usize, cpu: f64| SolverScore {
            solver: name.into(),
            score,
            sat: score,
            unsat: 0,
            cpu_time: cpu,
            wall_time: cpu,
            unique: 0,
            hors_concours: false,
        };
        let ranked = rank(vec![mk("slow", 100, 70.0), mk("fast", 100, 50.0), mk("top", 120, 90.0)]);
        let order: Vec<&str> = ranked.iter().map(|s| s.solver.as_str()).collect();
        assert_eq!(order, vec!["top", "fast", "slow"]);
        // adjacent entries are non-increasing in (score, -cpu)
        for pair in ranked.windows(2) {
            assert!(
                pair[0].score > pair[1].score
                    || (pair[0].score == pair[1].score && pair[0].cpu_time <= pair[1].cpu_time)
            );
        }
    }

    #[test]
    fn hors_concours_stays_listed_but_skips_the_podium() {
        let mut records = synthetic("spacer", 199, 66, 422, 274397.0);
        records.extend(synthetic("golem", 148, 81, 422, 368980.0));
        records.extend(synthetic("eldarica", 160, 59, 422, 385851.0));
        let mut scores = score(&records).unwrap();
        mark_hors_concours(&mut scores, &HashSet::from(["spacer".to_string()]));
        let ranked = rank(scores);
        assert_eq!(ranked[0].solver, "spacer", "still listed first");
        let podium = podium(&ranked);
        assert_eq!(podium[0].solver, "golem", "winner skips hors concours");
        assert_eq!(podium[1].solver, "eldarica");
    }

    #[test]
    fn conservation_of_definite_results() {
        let mut records = synthetic("a", 3, 2, 10, 1.0);
        records.extend(synthetic("b", 4, 0, 10, 1.0));
        let scores = score(&records).unwrap();
        let total: usize = scores.iter().map(|s| s.score).sum();
        let definite = records
            .iter()
            .filter(|r| matches!(r.result, SolverResult::Sat | SolverResult::Unsat))
            .count();
        assert_eq!(total, definite);
    }

    #[test]
    fn reports_render() {
        let mut records = synthetic("a", 2, 1, 4, 1.0);
        records.extend(synthetic("b", 1, 0, 4, 2.0));
        let ranked = rank(score(&records).unwrap());
        let table = ranking_table(&ranked);
        assert!(table.lines().count() == 3);
        assert!(table.starts_with("rank"));
        let csv = ranking_csv(&ranked);
        assert!(csv.starts_with(RANKING_CSV_HEADER));
        assert!(csv.lines().nth(1).unwrap().starts_with("1,a,3,2,1,"));

        let jsonl = inconsistencies_jsonl(&[Inconsistency {
            benchmark: "b".into(),
            sat_solvers: vec!["a".into()],
            unsat_solvers: vec!["b".into()],
        }]);
        assert!(jsonl.contains("\"sat_solvers\":[\"a\"]"));
    }
}
