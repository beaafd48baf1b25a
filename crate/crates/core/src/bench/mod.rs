//! Experiment harness: build, run a phase plan of update rounds, probes and
//! restructures, validate after every phase, optionally cross-check against
//! the oracle, and collect one metrics row per phase.

pub mod records;

use std::io::{self, Write};
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error as ThisError;

use crate::build::build;
use crate::dispatch::SortedBatch;
use crate::error::Error;
use crate::index::{BuildConfig, Index, ValidationError};
use crate::metrics::{snapshot, Counters, MetricsReport, PhaseTimings};
use crate::node::{KeyValue, RESERVED_KEY};
use crate::oracle::Oracle;
use crate::query::{point_query, successor_query};
use crate::restructure::{restructure, RecoveryStats};
use crate::update::{delete_batch, insert_batch, KernelChoice};
use crate::workload::{gen_probe_hit, gen_probe_miss, gen_probe_successor, Liveness, Phase, Workload, WorkloadSpec};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub workload: WorkloadSpec,
    pub build: BuildConfig,
    pub kernels: KernelChoice,
    pub verify: bool,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

/// One metrics row. Probe and update phases fill `misses` (sentinel results
/// or absent delete keys); restructure phases fill the recovery columns.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseRow {
    #[serde(flatten)]
    pub metrics: MetricsReport,
    pub updated_in_place: u64,
    pub misses: u64,
    /// A probe batch that could not be drawn because its pool was empty.
    pub exhausted: bool,
    pub nodes_recovered: u64,
    pub percent_recovered: f64,
}

/// CSV columns, in order.
pub const CSV_COLUMNS: [&str; 25] = [
    "phase",
    "round",
    "ops",
    "sort_ns",
    "dispatch_ns",
    "execute_ns",
    "node_visits",
    "key_comparisons",
    "binary_searches",
    "splits",
    "merges",
    "nodes_freed",
    "buckets",
    "reachable_nodes",
    "free_nodes",
    "live_pairs",
    "footprint_bytes",
    "live_footprint_bytes",
    "throughput_ops_s",
    "qtmf",
    "updated_in_place",
    "misses",
    "exhausted",
    "nodes_recovered",
    "percent_recovered",
];

/// Columns that depend on wall-clock time.
pub const TIMING_COLUMNS: [&str; 5] = ["sort_ns", "dispatch_ns", "execute_ns", "throughput_ops_s", "qtmf"];

impl PhaseRow {
    fn new(metrics: MetricsReport) -> Self {
        PhaseRow { metrics, updated_in_place: 0, misses: 0, exhausted: false, nodes_recovered: 0, percent_recovered: 0.0 }
    }

    pub fn csv_record(&self) -> Vec<String> {
        let m = &self.metrics;
        let c = &m.counters;
        vec![
            m.phase.clone(),
            m.round.to_string(),
            m.ops.to_string(),
            m.sort_ns.to_string(),
            m.dispatch_ns.to_string(),
            m.execute_ns.to_string(),
            c.node_visits.to_string(),
            c.key_comparisons.to_string(),
            c.binary_searches.to_string(),
            c.splits.to_string(),
            c.merges.to_string(),
            c.nodes_freed.to_string(),
            m.buckets.to_string(),
            m.reachable_nodes.to_string(),
            m.free_nodes.to_string(),
            m.live_pairs.to_string(),
            m.footprint_bytes.to_string(),
            m.live_footprint_bytes.to_string(),
            format!("{:.3}", m.throughput_ops_s),
            format!("{:.6e}", m.qtmf),
            self.updated_in_place.to_string(),
            self.misses.to_string(),
            self.exhausted.to_string(),
            self.nodes_recovered.to_string(),
            format!("{:.6}", self.percent_recovered),
        ]
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[PhaseRow]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.write_record(r.csv_record())?;
    }
    w.flush()
}

pub fn write_jsonl<W: Write>(mut out: W, rows: &[PhaseRow]) -> io::Result<()> {
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[derive(Debug, ThisError)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Usage(String),
    #[error("validation failed after {phase} in round {round}: {error}")]
    Validation { phase: String, round: u32, error: ValidationError },
    #[error("oracle mismatch after {phase} in round {round}: {detail}")]
    OracleMismatch { phase: String, round: u32, detail: String },
    #[error(transparent)]
    Index(#[from] Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl RunError {
    /// Process exit status: 2 usage, 3 validation, 4 oracle, 5 arena, 1 other.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => 2,
            RunError::Index(Error::InvalidConfig(_) | Error::InvalidWorkload(_)) => 2,
            RunError::Validation { .. } => 3,
            RunError::OracleMismatch { .. } => 4,
            RunError::Index(Error::ArenaExhausted { .. }) => 5,
            _ => 1,
        }
    }
}

/// What a probe batch is expected to return.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeKind {
    /// Every key present.
    Hit,
    /// Every key absent.
    Miss,
    /// No expectation beyond agreeing with the oracle.
    Point,
    Successor,
}

impl ProbeKind {
    pub fn phase_name(self) -> &'static str {
        match self {
            ProbeKind::Hit => "probe-hit",
            ProbeKind::Miss => "probe-miss",
            ProbeKind::Point => "query",
            ProbeKind::Successor => "probe-successor",
        }
    }
}

/// Drives one index through a sequence of phases.
pub struct Runner {
    index: Index,
    oracle: Option<Oracle>,
    kernels: KernelChoice,
    rows: Vec<PhaseRow>,
    recoveries: Vec<RecoveryStats>,
}

fn first_difference<T: PartialEq + std::fmt::Debug>(got: &[T], want: &[T]) -> String {
    if got.len() != want.len() {
        return format!("{} entries, oracle has {}", got.len(), want.len());
    }
    match got.iter().zip(want).position(|(a, b)| a != b) {
        Some(i) => format!("entry {i}: {:?}, oracle {:?}", got[i], want[i]),
        None => "no difference".into(),
    }
}

impl Runner {
    /// Builds the index and records the `build` row.
    pub fn build(pairs: &[KeyValue], config: &BuildConfig, kernels: KernelChoice, verify: bool) -> Result<Runner, RunError> {
        let t = Instant::now();
        let index = build(pairs, config)?;
        let timings = PhaseTimings { execute: t.elapsed(), ..Default::default() };
        let oracle = verify.then(|| Oracle::from_pairs(pairs));
        let row = PhaseRow::new(snapshot(&index, "build", 0, pairs.len() as u64, timings, Counters::default()));
        let mut runner = Runner { index, oracle, kernels, rows: Vec::new(), recoveries: Vec::new() };
        runner.finish("build", 0, row)?;
        Ok(runner)
    }

    pub fn index(&self) -> &Index {
        &self.index
    }

    pub fn rows(&self) -> &[PhaseRow] {
        &self.rows
    }

    pub fn recoveries(&self) -> &[RecoveryStats] {
        &self.recoveries
    }

    pub fn into_rows(self) -> Vec<PhaseRow> {
        self.rows
    }

    fn finish(&mut self, phase: &str, round: u32, row: PhaseRow) -> Result<(), RunError> {
        self.rows.push(row);
        if let Err(error) = self.index.validate() {
            return Err(RunError::Validation { phase: phase.into(), round, error });
        }
        Ok(())
    }

    fn check_walk(&self, phase: &str, round: u32) -> Result<(), RunError> {
        let Some(oracle) = &self.oracle else { return Ok(()) };
        let (got, want) = (self.index.walk(), oracle.walk());
        if got != want {
            let detail = first_difference(&got, &want);
            return Err(RunError::OracleMismatch { phase: phase.into(), round, detail });
        }
        Ok(())
    }

    pub fn insert(&mut self, round: u32, pairs: &[KeyValue]) -> Result<(), RunError> {
        let batch = SortedBatch::inserts(pairs);
        let res = insert_batch(&mut self.index, &batch, &self.kernels, round);
        if let Some(o) = &mut self.oracle {
            o.insert_all(pairs);
        }
        let stats = res?;
        let timings = PhaseTimings {
            sort: batch.sort_time(),
            dispatch: stats.phase.dispatch_time,
            execute: stats.phase.execute_time,
        };
        let mut row = PhaseRow::new(snapshot(&self.index, "insert", round, pairs.len() as u64, timings, stats.phase.counters));
        row.updated_in_place = stats.updated_in_place;
        self.finish("insert", round, row)?;
        self.check_walk("insert", round)
    }

    pub fn delete(&mut self, round: u32, keys: &[u64]) -> Result<(), RunError> {
        let batch = SortedBatch::deletes(keys);
        let stats = delete_batch(&mut self.index, &batch, &self.kernels)?;
        if let Some(o) = &mut self.oracle {
            let (_, misses) = o.delete_all(keys);
            if misses != stats.misses_ignored {
                let detail = format!("{} absent delete keys, oracle counts {misses}", stats.misses_ignored);
                return Err(RunError::OracleMismatch { phase: "delete".into(), round, detail });
            }
        }
        let timings = PhaseTimings {
            sort: batch.sort_time(),
            dispatch: stats.phase.dispatch_time,
            execute: stats.phase.execute_time,
        };
        let mut row = PhaseRow::new(snapshot(&self.index, "delete", round, keys.len() as u64, timings, stats.phase.counters));
        row.misses = stats.misses_ignored;
        self.finish("delete", round, row)?;
        self.check_walk("delete", round)
    }

    /// Runs a probe batch. An empty hit or miss batch is reported as an
    /// exhausted pool.
    pub fn probe(&mut self, round: u32, kind: ProbeKind, keys: &[u64]) -> Result<Vec<u64>, RunError> {
        let phase = kind.phase_name();
        let (batch, res) = if kind == ProbeKind::Successor {
            let b = SortedBatch::successors(keys);
            let r = successor_query(&self.index, &b)?;
            (b, r)
        } else {
            let b = SortedBatch::queries(keys);
            let r = point_query(&self.index, &b)?;
            (b, r)
        };
        let timings = PhaseTimings { sort: batch.sort_time(), dispatch: res.stats.dispatch_time, execute: res.stats.execute_time };
        let mut row = PhaseRow::new(snapshot(&self.index, phase, round, keys.len() as u64, timings, res.stats.counters));
        row.misses = res.misses() as u64;
        row.exhausted = keys.is_empty() && matches!(kind, ProbeKind::Hit | ProbeKind::Miss);
        self.finish(phase, round, row)?;

        if let Some(o) = &self.oracle {
            let want = match kind {
                ProbeKind::Successor => o.successors(keys),
                _ => o.points(keys),
            };
            if res.values != want {
                let detail = first_difference(&res.values, &want);
                return Err(RunError::OracleMismatch { phase: phase.into(), round, detail });
            }
            let protocol_broken = match kind {
                ProbeKind::Hit => res.values.contains(&RESERVED_KEY),
                ProbeKind::Miss => res.values.iter().any(|&v| v != RESERVED_KEY),
                _ => false,
            };
            if protocol_broken {
                let detail = format!("{} probe batch returned {} sentinels of {}", phase, res.misses(), keys.len());
                return Err(RunError::OracleMismatch { phase: phase.into(), round, detail });
            }
        }
        Ok(res.values)
    }

    pub fn restructure(&mut self, round: u32) -> Result<RecoveryStats, RunError> {
        let stats = restructure(&mut self.index)?;
        let timings = PhaseTimings { execute: stats.wall_time, ..Default::default() };
        let ops = self.index.len() as u64;
        let mut row = PhaseRow::new(snapshot(&self.index, "restructure", round, ops, timings, Counters::default()));
        row.nodes_recovered = stats.nodes_recovered;
        row.percent_recovered = stats.percent_recovered;
        self.recoveries.push(stats.clone());
        self.finish("restructure", round, row)?;
        self.check_walk("restructure", round)?;
        Ok(stats)
    }
}

/// Rows collected so far and how the run ended.
pub struct RunOutcome {
    pub rows: Vec<PhaseRow>,
    pub recoveries: Vec<RecoveryStats>,
    pub result: Result<(), RunError>,
}

/// File name a dumped batch gets; [`infer_phase`] reads it back.
pub fn batch_file_name(phase: &str, round: u32) -> String {
    format!("r{round:03}-{phase}.bin")
}

/// Phase and round encoded in a dumped batch file name such as
/// `r003-insert.bin`.
pub fn infer_phase(path: &Path) -> Option<(String, u32)> {
    let stem = path.file_stem()?.to_str()?;
    let rest = stem.strip_prefix('r')?;
    let (round, phase) = rest.split_once('-')?;
    let round = round.parse().ok()?;
    let known = ["insert", "delete", "probe-hit", "probe-miss", "probe-successor", "query", "restructure"];
    known.contains(&phase).then(|| (phase.to_string(), round))
}

struct Dumper<'p>(Option<&'p Path>);

impl Dumper<'_> {
    fn pairs(&self, name: &str, pairs: &[KeyValue]) -> io::Result<()> {
        match self.0 {
            Some(dir) => records::write_records(&dir.join(name), pairs),
            None => Ok(()),
        }
    }

    fn keys(&self, name: &str, keys: &[u64]) -> io::Result<()> {
        if self.0.is_none() {
            return Ok(());
        }
        let pairs: Vec<KeyValue> = keys.iter().map(|&k| KeyValue::new(k, 0)).collect();
        self.pairs(name, &pairs)
    }
}

/// Generates the workload and runs its phase plan. Batches are written to
/// `dump_dir` as they are produced, when given.
pub fn run(config: &RunConfig, dump_dir: Option<&Path>) -> RunOutcome {
    match config.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run_inner(config, dump_dir)),
            Err(e) => RunOutcome {
                rows: Vec::new(),
                recoveries: Vec::new(),
                result: Err(RunError::Usage(format!("cannot start {n} threads: {e}"))),
            },
        },
        None => run_inner(config, dump_dir),
    }
}

fn run_inner(config: &RunConfig, dump_dir: Option<&Path>) -> RunOutcome {
    let mut runner = None;
    let result = drive(config, dump_dir, &mut runner);
    match runner {
        Some(r) => RunOutcome { recoveries: r.recoveries.clone(), rows: r.into_rows(), result },
        None => RunOutcome { rows: Vec::new(), recoveries: Vec::new(), result },
    }
}

fn drive(config: &RunConfig, dump_dir: Option<&Path>, slot: &mut Option<Runner>) -> Result<(), RunError> {
    config.build.validate()?;
    config.workload.validate()?;
    if config.threads == Some(0) {
        return Err(RunError::Usage("thread count must be positive".into()));
    }
    if let Some(dir) = dump_dir {
        std::fs::create_dir_all(dir)?;
    }
    let dump = Dumper(dump_dir);
    let spec = &config.workload;
    let workload = Workload::generate(spec)?;
    dump.pairs("build.bin", workload.build_pairs())?;

    let runner = slot.insert(Runner::build(workload.build_pairs(), &config.build, config.kernels, config.verify)?);
    let mut live = Liveness::after_build(&workload.keys);
    let n = spec.probe_size;

    for phase in spec.plan.phases() {
        let name = batch_file_name(phase.name(), phase.round());
        match phase {
            Phase::Insert(r) => {
                let pairs = workload.insert_batch(r);
                dump.pairs(&name, pairs)?;
                live.set(r as usize, true);
                runner.insert(r, pairs)?;
            }
            Phase::Delete(r) => {
                let keys = workload.delete_keys(r);
                dump.keys(&name, &keys)?;
                live.set(workload.delete_segment(r), false);
                runner.delete(r, &keys)?;
            }
            Phase::ProbeHit(r) => {
                let b = gen_probe_hit(&workload.keys, &live, n, spec.seed, r);
                dump.keys(&name, &b.keys)?;
                runner.probe(r, ProbeKind::Hit, &b.keys)?;
            }
            Phase::ProbeMiss(r) => {
                let b = gen_probe_miss(&workload.keys, &live, n, spec.seed, r);
                dump.keys(&name, &b.keys)?;
                runner.probe(r, ProbeKind::Miss, &b.keys)?;
            }
            Phase::ProbeSuccessor(r) => {
                let b = gen_probe_successor(spec, n, r);
                dump.keys(&name, &b.keys)?;
                runner.probe(r, ProbeKind::Successor, &b.keys)?;
            }
            Phase::Restructure(r) => {
                dump.pairs(&name, &[])?;
                runner.restructure(r)?;
            }
        }
    }
    Ok(())
}

/// Writes every batch `run` would feed the index, without running it.
/// Liveness follows the plan, so probe batches match a real run.
pub fn generate(spec: &WorkloadSpec, dir: &Path) -> Result<usize, RunError> {
    spec.validate()?;
    std::fs::create_dir_all(dir)?;
    let dump = Dumper(Some(dir));
    let workload = Workload::generate(spec)?;
    dump.pairs("build.bin", workload.build_pairs())?;
    let mut live = Liveness::after_build(&workload.keys);
    let mut files = 1;
    for phase in spec.plan.phases() {
        let name = batch_file_name(phase.name(), phase.round());
        let n = spec.probe_size;
        match phase {
            Phase::Insert(r) => {
                live.set(r as usize, true);
                dump.pairs(&name, workload.insert_batch(r))?;
            }
            Phase::Delete(r) => {
                live.set(workload.delete_segment(r), false);
                dump.keys(&name, &workload.delete_keys(r))?;
            }
            Phase::ProbeHit(r) => dump.keys(&name, &gen_probe_hit(&workload.keys, &live, n, spec.seed, r).keys)?,
            Phase::ProbeMiss(r) => dump.keys(&name, &gen_probe_miss(&workload.keys, &live, n, spec.seed, r).keys)?,
            Phase::ProbeSuccessor(r) => dump.keys(&name, &gen_probe_successor(spec, n, r).keys)?,
            Phase::Restructure(_) => dump.pairs(&name, &[])?,
        }
        files += 1;
    }
    Ok(files)
}

/// Re-executes dumped batch files against a fresh build. Each file's phase
/// and round come from its name unless `phase_override` is given.
pub fn replay(
    build_pairs: &[KeyValue],
    batches: &[(std::path::PathBuf, Option<String>)],
    config: &BuildConfig,
    kernels: KernelChoice,
    verify: bool,
) -> RunOutcome {
    let mut slot = None;
    let result = (|| {
        let runner = slot.insert(Runner::build(build_pairs, config, kernels, verify)?);
        for (i, (path, phase_override)) in batches.iter().enumerate() {
            let inferred = infer_phase(path);
            let round = inferred.as_ref().map_or(i as u32 + 1, |(_, r)| *r);
            let phase = match (phase_override, inferred) {
                (Some(p), _) => p.clone(),
                (None, Some((p, _))) => p,
                (None, None) => {
                    return Err(RunError::Usage(format!(
                        "cannot tell the operation of {}; name it like r001-insert.bin or pass --op",
                        path.display()
                    )))
                }
            };
            let pairs = records::read_records(path)?;
            let keys: Vec<u64> = pairs.iter().map(|kv| kv.key).collect();
            match phase.as_str() {
                "insert" => runner.insert(round, &pairs)?,
                "delete" => runner.delete(round, &keys)?,
                "probe-hit" => runner.probe(round, ProbeKind::Hit, &keys).map(drop)?,
                "probe-miss" => runner.probe(round, ProbeKind::Miss, &keys).map(drop)?,
                "query" => runner.probe(round, ProbeKind::Point, &keys).map(drop)?,
                "probe-successor" | "successor" => runner.probe(round, ProbeKind::Successor, &keys).map(drop)?,
                "restructure" => runner.restructure(round).map(drop)?,
                other => return Err(RunError::Usage(format!("unknown operation `{other}`"))),
            }
        }
        Ok(())
    })();
    match slot {
        Some(r) => RunOutcome { recoveries: r.recoveries.clone(), rows: r.into_rows(), result },
        None => RunOutcome { rows: Vec::new(), recoveries: Vec::new(), result },
    }
}

/// Reads `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected `key = value`", n + 1))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(format!("line {}: empty key", n + 1));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{PlanOptions, ProbeMode};

    fn small(seed: u64) -> RunConfig {
        RunConfig {
            workload: WorkloadSpec {
                build_size: 2000,
                batch_size: 500,
                probe_size: 300,
                seed,
                x: 6.0,
                plan: PlanOptions {
                    rounds: 6,
                    deletes_after: 3,
                    probe: ProbeMode::Both,
                    restructure_every: None,
                    restructure_after_deletes: true,
                },
                ..Default::default()
            },
            build: BuildConfig::with_node_capacity(8),
            kernels: KernelChoice::default(),
            verify: true,
            threads: None,
        }
    }

    #[test]
    fn verified_run_produces_a_row_per_phase() {
        let cfg = small(5);
        let out = run(&cfg, None);
        out.result.unwrap();
        assert_eq!(out.rows.len(), 1 + cfg.workload.plan.phases().len());
        assert_eq!(out.recoveries.len(), 1);
        let last = out.rows.last().unwrap();
        assert_eq!(last.metrics.phase, "restructure");
        assert_eq!(last.metrics.live_pairs, 2000);
    }

    #[test]
    fn dump_then_replay_matches() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(9);
        let out = run(&cfg, Some(dir.path()));
        out.result.unwrap();
        let build = records::read_records(&dir.path().join("build.bin")).unwrap();
        let mut files: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.file_name().unwrap() != "build.bin")
            .collect();
        files.sort();
        let batches: Vec<_> = files.into_iter().map(|p| (p, None)).collect();
        let again = replay(&build, &batches, &cfg.build, cfg.kernels, true);
        again.result.unwrap();
        let strip = |rows: &[PhaseRow]| -> Vec<Vec<String>> {
            rows.iter()
                .map(|r| {
                    r.csv_record()
                        .into_iter()
                        .zip(CSV_COLUMNS)
                        .filter(|(_, c)| !TIMING_COLUMNS.contains(c))
                        .map(|(v, _)| v)
                        .collect()
                })
                .collect()
        };
        assert_eq!(strip(&out.rows), strip(&again.rows));
    }

    #[test]
    fn generate_matches_run_dump() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let cfg = small(3);
        run(&cfg, Some(a.path())).result.unwrap();
        let files = generate(&cfg.workload, b.path()).unwrap();
        let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert_eq!(names.len(), files);
        for n in names {
            assert_eq!(std::fs::read(a.path().join(&n)).unwrap(), std::fs::read(b.path().join(&n)).unwrap(), "{n:?}");
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(RunError::Index(Error::ArenaExhausted { capacity: 1 }).exit_code(), 5);
        assert_eq!(RunError::Usage("x".into()).exit_code(), 2);
        let mut cfg = small(1);
        cfg.build.allocation_region_factor = 0;
        assert_eq!(run(&cfg, None).result.unwrap_err().exit_code(), 5);
        cfg.workload.x = 0.0;
        assert_eq!(run(&cfg, None).result.unwrap_err().exit_code(), 2);
    }

    #[test]
    fn phase_names_round_trip() {
        assert_eq!(infer_phase(Path::new("/tmp/r012-probe-miss.bin")), Some(("probe-miss".into(), 12)));
        assert_eq!(infer_phase(Path::new(&batch_file_name("insert", 3))), Some(("insert".into(), 3)));
        assert_eq!(infer_phase(Path::new("batch.bin")), None);
    }

    #[test]
    fn config_lines() {
        let kv = parse_config("# c\nbuild-size = 10\n\nx=6 # dense\n").unwrap();
        assert_eq!(kv, vec![("build-size".into(), "10".into()), ("x".into(), "6".into())]);
        assert!(parse_config("nonsense").is_err());
        assert!(parse_config("= 4").is_err());
    }
}
