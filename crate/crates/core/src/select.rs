//! Benchmark rating and competition-set selection.
//!
//! Benchmarks are rated against reference solvers under a short
//! timeout: with two references, A means both solved, Bw/Br only the
//! winner/runner-up, C neither. Selection then takes per-rating quotas
//! of the repository cap `N_r` (floor of the configured fractions) and
//! cascades unfilled quota strictly downward: the A shortfall is split
//! over the two B sides (odd remainder to the winner side, shares one
//! side cannot absorb flow to the other), and whatever the B stage
//! leaves unfilled is added to the C quota. Nothing flows upward.
//!
//! Per-bucket sampling is a seeded shuffle, so a selection is
//! reproducible from its policy while still uniform within buckets.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::categorize::Track;
use crate::runner::{JobRecord, SolverResult};

#[derive(Debug, Error, PartialEq)]
pub enum SelectError {
    #[error("records rate different benchmarks: `{0}` vs `{1}`")]
    MismatchedBenchmark(String, String),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("bad manifest line {0}: {1}")]
    BadManifest(usize, String),
}

/// Rating from the two-reference-solver procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rating {
    A,
    BWinner,
    BRunnerUp,
    C,
}

impl Rating {
    pub fn label(&self) -> &'static str {
        match self {
            Rating::A => "A",
            Rating::BWinner => "Bw",
            Rating::BRunnerUp => "Br",
            Rating::C => "C",
        }
    }
}

impl std::fmt::Display for Rating {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Rating from the single-reference-solver procedure used for the
/// datatype tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SingleRating {
    /// Solved by the reference solver (reported in column B).
    Solved,
    /// Not solved (column C).
    Unsolved,
}

impl SingleRating {
    pub fn label(&self) -> &'static str {
        match self {
            SingleRating::Solved => "B",
            SingleRating::Unsolved => "C",
        }
    }
}

/// Selection parameters for one repository pool.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionPolicy {
    /// Per-repository cap on selected benchmarks.
    pub n_r: usize,
    /// Timeout used for the rating runs, seconds.
    pub rating_timeout_secs: u64,
    pub frac_a: f64,
    pub frac_b_winner: f64,
    pub frac_b_runner_up: f64,
    pub frac_c: f64,
    pub frac_solved: f64,
    pub frac_unsolved: f64,
    pub seed: u64,
    /// Skip quotas entirely and take every benchmark in the pool.
    pub take_all: bool,
}

impl Default for SelectionPolicy {
    fn default() -> Self {
        SelectionPolicy {
            n_r: 0,
            rating_timeout_secs: 30,
            frac_a: 0.2,
            frac_b_winner: 0.2,
            frac_b_runner_up: 0.2,
            frac_c: 0.4,
            frac_solved: 0.2,
            frac_unsolved: 0.8,
            seed: 0,
            take_all: false,
        }
    }
}

impl SelectionPolicy {
    pub fn validate(&self) -> Result<(), SelectError> {
        let fractions = [
            self.frac_a,
            self.frac_b_winner,
            self.frac_b_runner_up,
            self.frac_c,
            self.frac_solved,
            self.frac_unsolved,
        ];
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(SelectError::InvalidPolicy("fractions must be in [0, 1]".into()));
        }
        if self.frac_a + self.frac_b_winner + self.frac_b_runner_up + self.frac_c > 1.0 + 1e-9 {
            return Err(SelectError::InvalidPolicy("two-solver fractions exceed 1".into()));
        }
        if self.frac_solved + self.frac_unsolved > 1.0 + 1e-9 {
            return Err(SelectError::InvalidPolicy("single-solver fractions exceed 1".into()));
        }
        Ok(())
    }
}

/// Rated benchmarks of one repository in one two-reference track.
#[derive(Debug, Clone, Default)]
pub struct RepoPool {
    pub repository: String,
    pub track: Option<Track>,
    pub a: Vec<String>,
    pub b_winner: Vec<String>,
    pub b_runner_up: Vec<String>,
    pub c: Vec<String>,
}

/// Rated benchmarks of one repository in a single-reference track.
#[derive(Debug, Clone, Default)]
pub struct SingleSolverPool {
    pub repository: String,
    pub track: Option<Track>,
    pub solved: Vec<String>,
    pub unsolved: Vec<String>,
}

fn solved(result: SolverResult) -> bool {
    matches!(result, SolverResult::Sat | SolverResult::Unsat)
}

/// Rates one benchmark from its winner and runner-up reference runs.
pub fn rate_benchmark(winner: &JobRecord, runner_up: &JobRecord) -> Result<Rating, SelectError> {
    if winner.benchmark != runner_up.benchmark {
        return Err(SelectError::MismatchedBenchmark(
            winner.benchmark.clone(),
            runner_up.benchmark.clone(),
        ));
    }
    Ok(match (solved(winner.result), solved(runner_up.result)) {
        (true, true) => Rating::A,
        (true, false) => Rating::BWinner,
        (false, true) => Rating::BRunnerUp,
        (false, false) => Rating::C,
    })
}

/// Rates one benchmark from the single reference solver's run.
pub fn rate_single(reference: &JobRecord) -> SingleRating {
    if solved(reference.result) {
        SingleRating::Solved
    } else {
        SingleRating::Unsolved
    }
}

// Decimal fractions such as 0.6 have no exact binary representation
// and can land just below an exact multiple; nudge before flooring.
fn quota(frac: f64, n: usize) -> usize {
    ((frac * n as f64) + 1e-9).floor() as usize
}

/// Quota selection with downward cascade for two-reference tracks.
pub fn select_two_solver(pool: &RepoPool, policy: &SelectionPolicy) -> Vec<String> {
    if policy.take_all {
        return select_take_all_two(pool);
    }
    let n = policy.n_r;
    let quota_a = quota(policy.frac_a, n);
    let quota_bw = quota(policy.frac_b_winner, n);
    let quota_br = quota(policy.frac_b_runner_up, n);
    let quota_c = quota(policy.frac_c, n);

    let take_a = pool.a.len().min(quota_a);
    let shortfall_a = quota_a - take_a;

    // split the cascaded shortfall over the two B sides, odd unit to
    // the winner side; a share a side cannot absorb moves across
    let base_w = pool.b_winner.len().min(quota_bw);
    let base_r = pool.b_runner_up.len().min(quota_br);
    let share_w = shortfall_a.div_ceil(2);
    let share_r = shortfall_a / 2;
    let extra_w = (pool.b_winner.len() - base_w).min(share_w);
    let extra_r = (pool.b_runner_up.len() - base_r).min(share_r + (share_w - extra_w));
    let extra_w2 = (pool.b_winner.len() - base_w - extra_w)
        .min(share_r + (share_w - extra_w) - extra_r);
    let take_w = base_w + extra_w + extra_w2;
    let take_r = base_r + extra_r;

    let shortfall_b = (quota_bw + quota_br + shortfall_a) - (take_w + take_r);
    let take_c = pool.c.len().min(quota_c + shortfall_b);

    let mut selection = Vec::with_capacity(take_a + take_w + take_r + take_c);
    selection.extend(pick(&pool.a, take_a, policy.seed, pool, "A"));
    selection.extend(pick(&pool.b_winner, take_w, policy.seed, pool, "Bw"));
    selection.extend(pick(&pool.b_runner_up, take_r, policy.seed, pool, "Br"));
    selection.extend(pick(&pool.c, take_c, policy.seed, pool, "C"));
    selection
}

/// Quota selection for single-reference tracks: solved benchmarks up
/// to their quota, then unsolved ones, inheriting any solved-stage
/// shortfall.
pub fn select_single_solver(pool: &SingleSolverPool, policy: &SelectionPolicy) -> Vec<String> {
    if policy.take_all {
        let mut all: Vec<String> =
            pool.solved.iter().chain(&pool.unsolved).cloned().collect();
        all.sort();
        all.dedup();
        return all;
    }
    let n = policy.n_r;
    let quota_solved = quota(policy.frac_solved, n);
    let quota_unsolved = quota(policy.frac_unsolved, n);

    let take_solved = pool.solved.len().min(quota_solved);
    let shortfall = quota_solved - take_solved;
    let take_unsolved = pool.unsolved.len().min(quota_unsolved + shortfall);

    let two = RepoPool { repository: pool.repository.clone(), track: pool.track, ..Default::default() };
    let mut selection = Vec::with_capacity(take_solved + take_unsolved);
    selection.extend(pick(&pool.solved, take_solved, policy.seed, &two, "B"));
    selection.extend(pick(&pool.unsolved, take_unsolved, policy.seed, &two, "C"));
    selection
}

/// Takes every unique benchmark in the pool, used for tracks too small
/// to subsample.
pub fn select_take_all(pool: &RepoPool) -> Vec<String> {
    select_take_all_two(pool)
}

fn select_take_all_two(pool: &RepoPool) -> Vec<String> {
    let mut all: Vec<String> = pool
        .a
        .iter()
        .chain(&pool.b_winner)
        .chain(&pool.b_runner_up)
        .chain(&pool.c)
        .cloned()
        .collect();
    all.sort();
    all.dedup();
    all
}

/// Uniformly samples `k` members of a bucket with a rng derived from
/// the policy seed and the bucket's identity, so results do not depend
/// on processing order.
fn pick(bucket: &[String], k: usize, seed: u64, pool: &RepoPool, label: &str) -> Vec<String> {
    let track = pool.track.map(|t| t.name()).unwrap_or("-");
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update([0]);
    hasher.update(track.as_bytes());
    hasher.update([0]);
    hasher.update(pool.repository.as_bytes());
    hasher.update([0]);
    hasher.update(label.as_bytes());
    let mut rng = ChaCha8Rng::from_seed(hasher.finalize().into());

    let mut indices: Vec<usize> = (0..bucket.len()).collect();
    indices.shuffle(&mut rng);
    let mut chosen: Vec<String> =
        indices.into_iter().take(k).map(|i| bucket[i].clone()).collect();
    chosen.sort();
    chosen
}

/// One line of a rating-bucket manifest:
/// `track<TAB>repository<TAB>rating<TAB>benchmark`.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketEntry {
    pub track: String,
    pub repository: String,
    pub rating: String,
    pub benchmark: String,
}

pub fn parse_bucket_manifest(text: &str) -> Result<Vec<BucketEntry>, SelectError> {
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [track, repository, rating, benchmark] = fields.as_slice() else {
            return Err(SelectError::BadManifest(
                lineno + 1,
                "expected track<TAB>repository<TAB>rating<TAB>benchmark".into(),
            ));
        };
        entries.push(BucketEntry {
            track: track.to_string(),
            repository: repository.to_string(),
            rating: rating.to_string(),
            benchmark: benchmark.to_string(),
        });
    }
    Ok(entries)
}

/// Declarative selection configuration: fractions, caps, seed, and the
/// per-track mode switches.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_rating_timeout")]
    pub rating_timeout_secs: u64,
    #[serde(default)]
    pub fractions: FractionsConfig,
    /// Tracks whose pools are taken in full.
    #[serde(default)]
    pub take_all_tracks: Vec<String>,
    /// Tracks rated by a single reference solver.
    #[serde(default)]
    pub single_solver_tracks: Vec<String>,
    /// `caps.<track>.<repository> = N_r`
    #[serde(default)]
    pub caps: BTreeMap<String, BTreeMap<String, usize>>,
}

fn default_rating_timeout() -> u64 {
    30
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FractionsConfig {
    #[serde(default = "d02")]
    pub a: f64,
    #[serde(default = "d02")]
    pub b_winner: f64,
    #[serde(default = "d02")]
    pub b_runner_up: f64,
    #[serde(default = "d04")]
    pub c: f64,
    #[serde(default = "d02")]
    pub solved: f64,
    #[serde(default = "d08")]
    pub unsolved: f64,
}

impl Default for FractionsConfig {
    fn default() -> Self {
        FractionsConfig { a: 0.2, b_winner: 0.2, b_runner_up: 0.2, c: 0.4, solved: 0.2, unsolved: 0.8 }
    }
}

fn d02() -> f64 {
    0.2
}
fn d04() -> f64 {
    0.4
}
fn d08() -> f64 {
    0.8
}

impl PolicyConfig {
    pub fn parse(text: &str) -> Result<Self, SelectError> {
        toml::from_str(text).map_err(|e| SelectError::InvalidPolicy(e.to_string()))
    }

    pub fn policy_for(&self, track: &str, repository: &str) -> SelectionPolicy {
        SelectionPolicy {
            n_r: self
                .caps
                .get(track)
                .and_then(|repos| repos.get(repository))
                .copied()
                .unwrap_or(0),
            rating_timeout_secs: self.rating_timeout_secs,
            frac_a: self.fractions.a,
            frac_b_winner: self.fractions.b_winner,
            frac_b_runner_up: self.fractions.b_runner_up,
            frac_c: self.fractions.c,
            frac_solved: self.fractions.solved,
            frac_unsolved: self.fractions.unsolved,
            seed: self.seed,
            take_all: self.take_all_tracks.iter().any(|t| t == track),
        }
    }

    pub fn is_single_solver(&self, track: &str) -> bool {
        self.single_solver_tracks.iter().any(|t| t == track)
    }
}

/// A selected benchmark with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedRow {
    pub track: String,
    pub repository: String,
    pub benchmark: String,
}

/// Runs selection over a whole bucket manifest. Pools are formed per
/// (track, repository); rows come out sorted for stable manifests.
pub fn run_selection(
    entries: &[BucketEntry],
    config: &PolicyConfig,
) -> Result<Vec<SelectedRow>, SelectError> {
    let mut pools: BTreeMap<(String, String), Vec<&BucketEntry>> = BTreeMap::new();
    for entry in entries {
        pools
            .entry((entry.track.clone(), entry.repository.clone()))
            .or_default()
            .push(entry);
    }

    let mut rows = Vec::new();
    for ((track, repository), entries) in pools {
        let policy = config.policy_for(&track, &repository);
        policy.validate()?;
        let parsed_track = track.parse::<Track>().ok();
        let chosen = if config.is_single_solver(&track) {
            let mut pool = SingleSolverPool {
                repository: repository.clone(),
                track: parsed_track,
                ..Default::default()
            };
            for e in &entries {
                match e.rating.as_str() {
                    "B" => pool.solved.push(e.benchmark.clone()),
                    "C" => pool.unsolved.push(e.benchmark.clone()),
                    other => {
                        return Err(SelectError::BadManifest(
                            0,
                            format!("rating `{other}` invalid for single-solver track {track}"),
                        ))
                    }
                }
            }
            select_single_solver(&pool, &policy)
        } else {
            let mut pool = RepoPool {
                repository: repository.clone(),
                track: parsed_track,
                ..Default::default()
            };
            for e in &entries {
                match e.rating.as_str() {
                    "A" => pool.a.push(e.benchmark.clone()),
                    "Bw" => pool.b_winner.push(e.benchmark.clone()),
                    "Br" => pool.b_runner_up.push(e.benchmark.clone()),
                    "C" => pool.c.push(e.benchmark.clone()),
                    other => {
                        return Err(SelectError::BadManifest(
                            0,
                            format!("rating `{other}` invalid for track {track}"),
                        ))
                    }
                }
            }
            select_two_solver(&pool, &policy)
        };
        for benchmark in chosen {
            rows.push(SelectedRow { track: track.clone(), repository: repository.clone(), benchmark });
        }
    }
    rows.sort_by(|a, b| {
        (&a.track, &a.repository, &a.benchmark).cmp(&(&b.track, &b.repository, &b.benchmark))
    });
    Ok(rows)
}

pub fn selection_manifest(rows: &[SelectedRow]) -> String {
    let mut out = String::new();
    for row in rows {
        out.push_str(&row.track);
        out.push('\t');
        out.push_str(&row.repository);
        out.push('\t');
        out.push_str(&row.benchmark);
        out.push('\n');
    }
    out
}
