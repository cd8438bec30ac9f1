//! Solver execution under resource limits.
//!
//! Each job runs in its own process group with `RLIMIT_CPU` and
//! `RLIMIT_AS` applied; wall clock is enforced by the parent, which
//! kills the whole group on expiry and sweeps it again after normal
//! exit so no grandchild survives a campaign. CPU time comes from the
//! child's rusage, which accumulates everything the solver itself
//! waited for (portfolio solvers fork workers).
//!
//! The verdict is the first non-empty line of stdout: `sat`, `unsat`,
//! anything else is `unknown`. A verdict only counts when the process
//! completed; timeouts, memouts and crashes all record `unknown`.

use std::collections::BTreeSet;
use std::io::Read;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Deserialize;
use thiserror::Error;

/// Placeholder in a command template replaced by the benchmark path.
pub const BENCHMARK_PLACEHOLDER: &str = "{benchmark}";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot launch solver `{solver}`: {source}")]
    Launch { solver: String, source: std::io::Error },
    #[error("invalid solver configuration `{0}`: {1}")]
    InvalidConfig(String, String),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One solver configuration entered in a track.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SolverConfig {
    /// Solver name, e.g. `eldarica`.
    #[serde(rename = "name")]
    pub solver: String,
    /// Configuration name, e.g. `def`.
    pub configuration: String,
    /// Executable and arguments; exactly one argument must contain
    /// the `{benchmark}` placeholder.
    pub command: Vec<String>,
    #[serde(default)]
    pub hors_concours: bool,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        let placeholders = self
            .command
            .iter()
            .filter(|arg| arg.contains(BENCHMARK_PLACEHOLDER))
            .count();
        if self.command.is_empty() {
            return Err(RunError::InvalidConfig(self.solver.clone(), "empty command".into()));
        }
        if placeholders != 1 {
            return Err(RunError::InvalidConfig(
                self.solver.clone(),
                format!("expected exactly one {BENCHMARK_PLACEHOLDER} placeholder, found {placeholders}"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
struct Registry {
    #[serde(rename = "solver", default)]
    solvers: Vec<SolverConfig>,
}

/// Loads a solver registry from TOML (`[[solver]]` entries) and checks
/// that (solver, configuration) pairs are unique.
pub fn parse_registry(text: &str) -> Result<Vec<SolverConfig>, RunError> {
    let registry: Registry = toml::from_str(text)
        .map_err(|e| RunError::InvalidConfig("registry".into(), e.to_string()))?;
    let mut seen = BTreeSet::new();
    for config in &registry.solvers {
        config.validate()?;
        if !seen.insert((config.solver.clone(), config.configuration.clone())) {
            return Err(RunError::InvalidConfig(
                config.solver.clone(),
                format!("duplicate configuration `{}`", config.configuration),
            ));
        }
    }
    Ok(registry.solvers)
}

/// CPU, wall-clock and memory limits for one job.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResourceLimits {
    pub cpu_secs: u64,
    pub wall_secs: u64,
    pub mem_bytes: u64,
}

const GIB: u64 = 1 << 30;

impl ResourceLimits {
    /// Competition runs: 1800s CPU, 1800s wall, 64 GiB.
    pub const fn competition() -> Self {
        ResourceLimits { cpu_secs: 1800, wall_secs: 1800, mem_bytes: 64 * GIB }
    }

    /// Test runs: 600s CPU, 600s wall, 64 GiB.
    pub const fn test_run() -> Self {
        ResourceLimits { cpu_secs: 600, wall_secs: 600, mem_bytes: 64 * GIB }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverResult {
    Sat,
    Unsat,
    Unknown,
}

impl std::fmt::Display for SolverResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverResult::Sat => "sat",
            SolverResult::Unsat => "unsat",
            SolverResult::Unknown => "unknown",
        })
    }
}

impl std::str::FromStr for SolverResult {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sat" => Ok(SolverResult::Sat),
            "unsat" => Ok(SolverResult::Unsat),
            "unknown" => Ok(SolverResult::Unknown),
            other => Err(format!("unknown result `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobStatus {
    Complete,
    Timeout,
    MemOut,
    Crash,
}

impl std::fmt::Display for JobStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            JobStatus::Complete => "complete",
            JobStatus::Timeout => "timeout",
            JobStatus::MemOut => "memout",
            JobStatus::Crash => "crash",
        })
    }
}

impl std::str::FromStr for JobStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "complete" => Ok(JobStatus::Complete),
            "timeout" => Ok(JobStatus::Timeout),
            "memout" => Ok(JobStatus::MemOut),
            "crash" => Ok(JobStatus::Crash),
            other => Err(format!("unknown status `{other}`")),
        }
    }
}

/// Outcome of one ⟨solver-configuration, benchmark⟩ execution.
#[derive(Debug, Clone, PartialEq)]
pub struct JobRecord {
    pub benchmark: String,
    pub solver: String,
    pub configuration: String,
    pub status: JobStatus,
    pub result: SolverResult,
    /// Seconds, rounded to the CSV's two decimals.
    pub cpu_time: f64,
    pub wall_time: f64,
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Runs one solver configuration on one benchmark under `limits`.
/// A missing executable is a launch error; a solver that starts and
/// then fails yields an `unknown` record instead.
pub fn run_job(
    config: &SolverConfig,
    benchmark: &str,
    limits: &ResourceLimits,
) -> Result<JobRecord, RunError> {
    config.validate()?;
    let args: Vec<String> = config
        .command
        .iter()
        .map(|arg| arg.replace(BENCHMARK_PLACEHOLDER, benchmark))
        .collect();

    let started = Instant::now();
    let execution = unix::execute(&args, limits).map_err(|source| RunError::Launch {
        solver: config.solver.clone(),
        source,
    })?;
    let wall = started.elapsed();

    let verdict = execution
        .stdout
        .lines()
        .map(str::trim)
        .find(|line| !line.is_empty())
        .map(|line| match line {
            "sat" => SolverResult::Sat,
            "unsat" => SolverResult::Unsat,
            _ => SolverResult::Unknown,
        })
        .unwrap_or(SolverResult::Unknown);

    let status = classify(&execution, wall, limits);
    let result = if status == JobStatus::Complete { verdict } else { SolverResult::Unknown };

    Ok(JobRecord {
        benchmark: benchmark.to_string(),
        solver: config.solver.clone(),
        configuration: config.configuration.clone(),
        status,
        result,
        cpu_time: round2(execution.cpu_time.as_secs_f64()),
        wall_time: round2(wall.as_secs_f64()),
    })
}

fn classify(execution: &unix::Execution, wall: Duration, limits: &ResourceLimits) -> JobStatus {
    if execution.wall_expired
        || execution.cpu_limit_hit
        || execution.cpu_time.as_secs() >= limits.cpu_secs
        || wall.as_secs() >= limits.wall_secs
    {
        return JobStatus::Timeout;
    }
    if execution.exited_cleanly {
        return JobStatus::Complete;
    }
    // with RLIMIT_AS the usual failure mode is an abort after a failed
    // allocation near the cap
    if execution.max_rss_bytes >= limits.mem_bytes.saturating_mul(9) / 10 {
        return JobStatus::MemOut;
    }
    JobStatus::Crash
}

#[cfg(unix)]
mod unix {
    use super::ResourceLimits;
    use std::io::Read;
    use std::os::unix::process::{CommandExt, ExitStatusExt};
    use std::process::{Command, Stdio};
    use std::time::{Duration, Instant};

    pub struct Execution {
        pub stdout: String,
        pub cpu_time: Duration,
        pub max_rss_bytes: u64,
        pub exited_cleanly: bool,
        pub cpu_limit_hit: bool,
        pub wall_expired: bool,
    }

    pub fn execute(args: &[String], limits: &ResourceLimits) -> std::io::Result<Execution> {
        let cpu = limits.cpu_secs;
        let mem = limits.mem_bytes;
        let mut command = Command::new(&args[0]);
        command
            .args(&args[1..])
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .process_group(0);
        unsafe {
            command.pre_exec(move || {
                // SIGXCPU at the soft limit, hard kill one second later
                let cpu_limit = libc::rlimit { rlim_cur: cpu, rlim_max: cpu + 1 };
                if libc::setrlimit(libc::RLIMIT_CPU, &cpu_limit) != 0 {
                    return Err(std::io::Error::last_os_error());
                }
                let mem_limit = libc::rlimit { rlim_cur: mem, rlim_max: mem };
                if libc::setrlimit(libc::RLIMIT_AS, &mem_limit) != 0 {
                    return Err(std::io::Error::last_os_error());
                }
                Ok(())
            });
        }

        let mut child = command.spawn()?;
        let pid = child.id() as libc::pid_t;

        // drain stdout on a side thread so a chatty solver cannot fill
        // the pipe and deadlock against our wait loop
        let mut stdout_pipe = child.stdout.take().expect("stdout piped");
        let reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stdout_pipe.read_to_end(&mut buf);
            String::from_utf8_lossy(&buf).into_owned()
        });

        let deadline = Instant::now() + Duration::from_secs(limits.wall_secs);
        let mut wall_expired = false;
        let mut status: libc::c_int = 0;
        let mut rusage: libc::rusage = unsafe { std::mem::zeroed() };
        loop {
            let reaped =
                unsafe { libc::wait4(pid, &mut status, libc::WNOHANG, &mut rusage) };
            if reaped == pid {
                break;
            }
            if reaped == -1 {
                return Err(std::io::Error::last_os_error());
            }
            if Instant::now() >= deadline {
                wall_expired = true;
                kill_group(pid);
                let reaped = unsafe { libc::wait4(pid, &mut status, 0, &mut rusage) };
                if reaped == -1 {
                    return Err(std::io::Error::last_os_error());
                }
                break;
            }
            std::thread::sleep(Duration::from_millis(10));
        }
        // sweep stragglers the solver may have left in its group
        kill_group(pid);

        let stdout = reader.join().unwrap_or_default();

        let cpu_time = timeval_duration(rusage.ru_utime) + timeval_duration(rusage.ru_stime);
        let max_rss_bytes = (rusage.ru_maxrss as u64).saturating_mul(1024);
        let exit = std::process::ExitStatus::from_raw(status);
        let exited_cleanly = exit.code() == Some(0);
        let cpu_limit_hit = exit.signal() == Some(libc::SIGXCPU);

        Ok(Execution { stdout, cpu_time, max_rss_bytes, exited_cleanly, cpu_limit_hit, wall_expired })
    }

    fn kill_group(pid: libc::pid_t) {
        unsafe {
            libc::kill(-pid, libc::SIGKILL);
        }
    }

    fn timeval_duration(tv: libc::timeval) -> Duration {
        Duration::new(tv.tv_sec as u64, (tv.tv_usec as u32) * 1000)
    }
}

/// Results of a whole campaign: one record per pair plus any launch
/// failures (which also produce crash records so the pairing stays
/// complete).
#[derive(Debug, Default)]
pub struct CampaignOutcome {
    pub records: Vec<JobRecord>,
    pub failures: Vec<String>,
}

/// Runs the full cross product of configurations × benchmarks on a
/// bounded worker pool. Records come back sorted by (benchmark,
/// solver, configuration) regardless of scheduling.
pub fn run_campaign(
    configs: &[SolverConfig],
    benchmarks: &[String],
    limits: &ResourceLimits,
    parallelism: usize,
) -> CampaignOutcome {
    let parallelism = parallelism.max(1);
    let jobs: Vec<(&SolverConfig, &String)> = configs
        .iter()
        .flat_map(|c| benchmarks.iter().map(move |b| (c, b)))
        .collect();

    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<JobRecord>>> =
        jobs.iter().map(|_| Mutex::new(None)).collect();
    let failures: Mutex<Vec<String>> = Mutex::new(Vec::new());

    std::thread::scope(|scope| {
        for _ in 0..parallelism.min(jobs.len().max(1)) {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                let Some((config, benchmark)) = jobs.get(index) else {
                    break;
                };
                let record = match run_job(config, benchmark, limits) {
                    Ok(record) => record,
                    Err(err) => {
                        failures.lock().unwrap().push(err.to_string());
                        JobRecord {
                            benchmark: (*benchmark).clone(),
                            solver: config.solver.clone(),
                            configuration: config.configuration.clone(),
                            status: JobStatus::Crash,
                            result: SolverResult::Unknown,
                            cpu_time: 0.0,
                            wall_time: 0.0,
                        }
                    }
                };
                *slots[index].lock().unwrap() = Some(record);
            });
        }
    });

    let mut records: Vec<JobRecord> =
        slots.into_iter().map(|slot| slot.into_inner().unwrap().expect("job ran")).collect();
    records.sort_by(|a, b| {
        (&a.benchmark, &a.solver, &a.configuration).cmp(&(&b.benchmark, &b.solver, &b.configuration))
    });
    CampaignOutcome { records, failures: failures.into_inner().unwrap() }
}

pub const JOBS_CSV_HEADER: [&str; 7] = [
    "benchmark",
    "solver",
    "configuration",
    "status",
    "result",
    "cpu_time",
    "wallclock_time",
];

/// Writes the job-information CSV, times with two decimal places.
pub fn write_jobs_csv<W: std::io::Write>(records: &[JobRecord], writer: W) -> Result<(), RunError> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(JOBS_CSV_HEADER).map_err(|e| RunError::Csv(e.to_string()))?;
    for r in records {
        csv.write_record([
            r.benchmark.as_str(),
            r.solver.as_str(),
            r.configuration.as_str(),
            &r.status.to_string(),
            &r.result.to_string(),
            &format!("{:.2}", r.cpu_time),
            &format!("{:.2}", r.wall_time),
        ])
        .map_err(|e| RunError::Csv(e.to_string()))?;
    }
    csv.flush()?;
    Ok(())
}

pub fn jobs_csv_string(records: &[JobRecord]) -> String {
    let mut buf = Vec::new();
    write_jobs_csv(records, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("csv is utf-8")
}

/// Parses a job-information CSV back into records.
pub fn read_jobs_csv<R: Read>(reader: R) -> Result<Vec<JobRecord>, RunError> {
    let mut csv = csv::Reader::from_reader(reader);
    let headers = csv.headers().map_err(|e| RunError::Csv(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != JOBS_CSV_HEADER {
        return Err(RunError::Csv(format!("unexpected header: {headers:?}")));
    }
    let mut records = Vec::new();
    for (lineno, row) in csv.records().enumerate() {
        let row = row.map_err(|e| RunError::Csv(e.to_string()))?;
        let field = |i: usize| row.get(i).unwrap_or("").to_string();
        let parse_time = |i: usize| {
            field(i)
                .parse::<f64>()
                .map_err(|e| RunError::Csv(format!("line {}: {e}", lineno + 2)))
        };
        records.push(JobRecord {
            benchmark: field(0),
            solver: field(1),
            configuration: field(2),
            status: field(3)
                .parse()
                .map_err(|e| RunError::Csv(format!("line {}: {e}", lineno + 2)))?,
            result: field(4)
                .parse()
                .map_err(|e| RunError::Csv(format!("line {}: {e}", lineno + 2)))?,
            cpu_time: parse_time(5)?,
            wall_time: parse_time(6)?,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;
    use std::os::unix::fs::PermissionsExt;
    use std::path::Path;

    fn stub(dir: &Path, name: &str, body: &str) -> SolverConfig {
        let path = dir.join(name);
        let mut file = std::fs::File::create(&path).unwrap();
        writeln!(file, "#!/bin/sh\n{body}").unwrap();
        file.set_permissions(std::fs::Permissions::from_mode(0o755)).unwrap();
        SolverConfig {
            solver: name.to_string(),
            configuration: "default".into(),
            command: vec![path.to_str().unwrap().into(), BENCHMARK_PLACEHOLDER.into()],
            hors_concours: false,
        }
    }

    fn quick_limits() -> ResourceLimits {
        ResourceLimits { cpu_secs: 5, wall_secs: 2, mem_bytes: 4 * GIB }
    }

    #[test]
    fn sat_stub_completes() {
        let dir = tempfile::tempdir().unwrap();
        let config = stub(dir.path(), "says-sat", "echo sat");
        let record = run_job(&config, "bench.smt2", &quick_limits()).unwrap();
        assert_eq!(record.result, SolverResult::Sat);
        assert_eq!(record.status, JobStatus::Complete);
        assert!(record.cpu_time >= 0.0 && record.wall_time < 2.0);
    }

    #[test]
    fn giving_up_is_unknown_but_complete() {
        let dir = tempfile::tempdir().unwrap();
        let config = stub(dir.path(), "says-maybe", "echo maybe");
        let record = run_job(&config, "bench.smt2", &quick_limits()).unwrap();
        assert_eq!(record.result, SolverResult::Unknown);
        assert_eq!(record.status, JobStatus::Complete);
    }

    #[test]
    fn verdict_is_first_nonempty_line() {
        let dir = tempfile::tempdir().unwrap();
        let config = stub(dir.path(), "chatty", "printf '\\n unsat \\ndiagnostics\\nsat\\n'");
        let record = run_job(&config, "bench.smt2", &quick_limits()).unwrap();
        assert_eq!(record.result, SolverResult::Unsat);
    }

    #[test]
    fn wall_timeout_yields_unknown() {
        let dir = tempfile::tempdir().unwrap();
        let config = stub(dir.path(), "sleeper", "sleep 30\necho sat");
        let started = Instant::now();
        let record = run_job(&config, "bench.smt2", &quick_limits()).unwrap();
        assert!(started.elapsed() < Duration::from_secs(20));
        assert_eq!(record.status, JobStatus::Timeout);
        assert_eq!(record.result, SolverResult::Unknown);
    }

    #[test]
    fn verdict_printed_before_hanging_does_not_count() {
        let dir = tempfile::tempdir().unwrap();
        let config = stub(dir.path(), "sat-then-hang", "echo sat\nsleep 30");
        let record = run_job(&config, "bench.smt2", &quick_limits()).unwrap();
        assert_eq!(record.status, JobStatus::Timeout);
        assert_eq!(record.result, SolverResult::Unknown);
    }

    #[test]
    fn crash_is_not_a_timeout() {
        let dir = tempfile::tempdir().unwrap();
        let config = stub(dir.path(), "crasher", "exit 3");
        let record = run_job(&config, "bench.smt2", &quick_limits()).unwrap();
        assert_eq!(record.status, JobStatus::Crash);
        assert_eq!(record.result, SolverResult::Unknown);
    }

    #[test]
    fn missing_executable_is_a_launch_error() {
        let config = SolverConfig {
            solver: "ghost".into(),
            configuration: "default".into(),
            command: vec!["/nonexistent/solver".into(), BENCHMARK_PLACEHOLDER.into()],
            hors_concours: false,
        };
        assert!(matches!(
            run_job(&config, "bench.smt2", &quick_limits()),
            Err(RunError::Launch { .. })
        ));
    }

    #[test]
    fn completing_within_small_limits_completes_within_larger_ones() {
        let dir = tempfile::tempdir().unwrap();
        let config = stub(dir.path(), "quick", "echo unsat");
        let small = ResourceLimits { cpu_secs: 2, wall_secs: 2, mem_bytes: 4 * GIB };
        let large = ResourceLimits { cpu_secs: 60, wall_secs: 60, mem_bytes: 8 * GIB };
        assert_eq!(run_job(&config, "b", &small).unwrap().status, JobStatus::Complete);
        assert_eq!(run_job(&config, "b", &large).unwrap().status, JobStatus::Complete);
    }

    #[test]
    fn campaign_covers_the_cross_product_once() {
        let dir = tempfile::tempdir().unwrap();
        let configs = vec![stub(dir.path(), "s1", "echo sat"), stub(dir.path(), "s2", "echo unsat")];
        let benchmarks: Vec<String> = (0..3).map(|i| format!("b{i}.smt2")).collect();
        let outcome = run_campaign(&configs, &benchmarks, &quick_limits(), 4);
        assert_eq!(outcome.records.len(), 6);
        let mut pairs: Vec<(String, String)> = outcome
            .records
            .iter()
            .map(|r| (r.benchmark.clone(), r.solver.clone()))
            .collect();
        pairs.dedup();
        assert_eq!(pairs.len(), 6, "records must be unique and sorted");
        assert!(outcome.failures.is_empty());
    }

    #[test]
    fn campaign_survives_a_missing_solver() {
        let dir = tempfile::tempdir().unwrap();
        let good = stub(dir.path(), "ok", "echo sat");
        let bad = SolverConfig {
            solver: "ghost".into(),
            configuration: "default".into(),
            command: vec!["/nonexistent/bin".into(), BENCHMARK_PLACEHOLDER.into()],
            hors_concours: false,
        };
        let outcome =
            run_campaign(&[good, bad], &["b.smt2".into()], &quick_limits(), 2);
        assert_eq!(outcome.records.len(), 2);
        assert_eq!(outcome.failures.len(), 1);
        let ghost = outcome.records.iter().find(|r| r.solver == "ghost").unwrap();
        assert_eq!(ghost.status, JobStatus::Crash);
    }

    #[test]
    fn csv_round_trip() {
        let records = vec![
            JobRecord {
                benchmark: "dir/with,comma.smt2".into(),
                solver: "s1".into(),
                configuration: "def".into(),
                status: JobStatus::Complete,
                result: SolverResult::Sat,
                cpu_time: 1.23,
                wall_time: 0.5,
            },
            JobRecord {
                benchmark: "b2".into(),
                solver: "s2".into(),
                configuration: "fix".into(),
                status: JobStatus::Timeout,
                result: SolverResult::Unknown,
                cpu_time: 600.0,
                wall_time: 600.01,
            },
        ];
        let text = jobs_csv_string(&records);
        assert!(text.starts_with("benchmark,solver,configuration,status,result,cpu_time,wallclock_time"));
        let parsed = read_jobs_csv(text.as_bytes()).unwrap();
        assert_eq!(parsed, records);
    }

    #[test]
    fn registry_parsing_and_placeholder_validation() {
        let configs = parse_registry(
            r#"
[[solver]]
name = "golem"
configuration = "lia-lin"
command = ["/opt/golem", "--engine", "spacer", "{benchmark}"]

[[solver]]
name = "spacer"
configuration = "def"
command = ["/opt/z3", "{benchmark}"]
hors_concours = true
"#,
        )
        .unwrap();
        assert_eq!(configs.len(), 2);
        assert!(configs[1].hors_concours);

        let err = parse_registry(
            "[[solver]]\nname = \"x\"\nconfiguration = \"d\"\ncommand = [\"/bin/x\"]\n",
        )
        .unwrap_err();
        assert!(matches!(err, RunError::InvalidConfig(..)));
    }
}
