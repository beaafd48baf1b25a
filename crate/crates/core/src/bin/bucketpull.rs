use std::fs::File;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bucketpull::bench::{self, records, RunConfig, RunError, RunOutcome};
use bucketpull::workload::{PlanOptions, ProbeMode, WorkloadSpec, DEFAULT_KEY_MAX, DEFAULT_KEY_MIN};
use bucketpull::{BuildConfig, DeleteKernel, InsertKernel, KernelChoice};

#[derive(Parser)]
#[command(name = "bucketpull", version, about = "Batched ordered-index benchmark harness", args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a workload, run its phase plan and report metrics.
    Run(RunArgs),
    /// Re-run dumped batch files against a fresh build.
    Replay(ReplayArgs),
    /// Build (and optionally replay batches), then check every structural invariant.
    Validate(ReplayArgs),
    /// Write a workload's batches to a directory without running them.
    Gen(GenArgs),
}

#[derive(Args, Clone)]
struct IndexArgs {
    /// Pairs per node (2..=64).
    #[arg(long, default_value_t = 32)]
    node_size: usize,
    /// Fraction of each node filled by the build.
    #[arg(long, default_value_t = 0.5)]
    fill: f64,
    /// Allocation-region nodes per bucket.
    #[arg(long, default_value_t = 4)]
    alloc_factor: usize,
    #[arg(long, default_value = "tl-bulk")]
    insert_kernel: InsertKernel,
    #[arg(long, default_value = "tl-bulk")]
    delete_kernel: DeleteKernel,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Cross-check every phase against a reference ordered map.
    #[arg(long)]
    verify: bool,
}

impl IndexArgs {
    fn build_config(&self) -> BuildConfig {
        BuildConfig {
            node_capacity: self.node_size,
            build_fill_fraction: self.fill,
            allocation_region_factor: self.alloc_factor,
        }
    }

    fn kernels(&self) -> KernelChoice {
        KernelChoice { insert: self.insert_kernel, delete: self.delete_kernel }
    }
}

#[derive(Args, Clone)]
struct WorkloadArgs {
    /// Plain-text `key = value` file; keys are flag names without dashes.
    /// Flags on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1 << 20)]
    build_size: usize,
    /// Total rounds, inserts first.
    #[arg(long, default_value_t = 4)]
    rounds: u32,
    /// Rounds after which deletions start (default: never).
    #[arg(long)]
    deletes_after: Option<u32>,
    /// Total growth over the insert rounds, in percent of the build size.
    #[arg(long, default_value_t = 100.0)]
    growth: f64,
    /// Keys per insert round; overrides --growth.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Percentage of the key space receiving the dense share.
    #[arg(long, default_value_t = 90.0)]
    x: f64,
    /// Percentage of update keys placed in the dense interval.
    #[arg(long, default_value_t = 90.0)]
    y: f64,
    #[arg(long, default_value_t = DEFAULT_KEY_MIN)]
    key_min: u64,
    #[arg(long, default_value_t = DEFAULT_KEY_MAX)]
    key_max: u64,
    /// Probe batches after every round: none, hit, miss, successor or both.
    #[arg(long, default_value = "both")]
    probe: ProbeMode,
    /// Keys per probe batch (default: the insert batch size).
    #[arg(long)]
    probe_size: Option<usize>,
    #[arg(long)]
    restructure_every: Option<u32>,
    #[arg(long)]
    restructure_after_deletes: bool,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl WorkloadArgs {
    fn spec(&self) -> WorkloadSpec {
        let plan = PlanOptions {
            rounds: self.rounds,
            deletes_after: self.deletes_after.unwrap_or(self.rounds),
            probe: self.probe,
            restructure_every: self.restructure_every,
            restructure_after_deletes: self.restructure_after_deletes,
        };
        let batch_size = self
            .batch_size
            .unwrap_or_else(|| WorkloadSpec::batch_for_growth(self.build_size, self.growth, plan.insert_rounds()));
        WorkloadSpec {
            key_min: self.key_min,
            key_max: self.key_max,
            x: self.x,
            y: self.y,
            build_size: self.build_size,
            batch_size,
            probe_size: self.probe_size.unwrap_or(if batch_size > 0 { batch_size } else { 1 << 14 }),
            seed: self.seed,
            plan,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    workload: WorkloadArgs,
    #[command(flatten)]
    index: IndexArgs,
    /// Directory for metrics.csv and metrics.jsonl (default: CSV on stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write every generated batch to this directory.
    #[arg(long)]
    dump_batches: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    build_file: PathBuf,
    /// Batch files, applied in order. Names like `r001-insert.bin` carry
    /// the operation and round.
    #[arg(long)]
    batch_file: Vec<PathBuf>,
    /// Operation for every batch file: insert, delete, query,
    /// probe-hit, probe-miss, probe-successor or restructure.
    #[arg(long)]
    op: Option<String>,
    #[command(flatten)]
    index: IndexArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    workload: WorkloadArgs,
    /// Accepted so one config file can drive every subcommand; unused here.
    #[command(flatten)]
    _index: IndexArgs,
    #[arg(long)]
    out: PathBuf,
}

/// Splices `--config FILE` entries in as flags right after the subcommand,
/// so that explicit flags, which come later, win.
fn expand_config(args: Vec<String>) -> Result<Vec<String>, String> {
    let pos = args.iter().position(|a| a == "--config" || a.starts_with("--config="));
    let Some(pos) = pos else { return Ok(args) };
    let path = match args[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => args.get(pos + 1).cloned().ok_or("--config needs a file")?,
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
    let entries = bench::parse_config(&text).map_err(|e| format!("{path}: {e}"))?;
    let mut flags = Vec::new();
    for (k, v) in entries {
        let flag = format!("--{}", k.replace('_', "-"));
        match v.as_str() {
            "true" => flags.push(flag),
            "false" => {}
            _ => {
                flags.push(flag);
                flags.push(v);
            }
        }
    }
    // Right after the subcommand name, or after the program name if none.
    let insert_at = args.iter().skip(1).position(|a| !a.starts_with('-')).map_or(1, |i| i + 2).min(args.len());
    let mut out = args[..insert_at].to_vec();
    out.extend(flags);
    out.extend_from_slice(&args[insert_at..]);
    Ok(out)
}

fn write_reports(out: Option<&Path>, outcome: &RunOutcome) -> io::Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            bench::write_csv(BufWriter::new(File::create(dir.join("metrics.csv"))?), &outcome.rows)?;
            bench::write_jsonl(BufWriter::new(File::create(dir.join("metrics.jsonl"))?), &outcome.rows)
        }
        None => bench::write_csv(io::stdout().lock(), &outcome.rows),
    }
}

fn finish(outcome: RunOutcome, out: Option<&Path>, verify: bool) -> ExitCode {
    if let Err(e) = write_reports(out, &outcome) {
        eprintln!("error: writing reports: {e}");
        return ExitCode::from(1);
    }
    for r in &outcome.recoveries {
        eprintln!(
            "restructure: {} -> {} nodes, {} recovered ({:.1}%)",
            r.nodes_before,
            r.nodes_after,
            r.nodes_recovered,
            r.percent_recovered * 100.0
        );
    }
    match outcome.result {
        Ok(()) => {
            if verify {
                eprintln!("verify: PASS");
            }
            ExitCode::SUCCESS
        }
        Err(e) => report(e, verify),
    }
}

fn report(e: RunError, verify: bool) -> ExitCode {
    if verify && matches!(e, RunError::OracleMismatch { .. }) {
        eprintln!("verify: FAIL");
    }
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

/// Batch files paired with the operation forced by `--op`, if any.
type BatchList = Vec<(PathBuf, Option<String>)>;

fn load_batches(args: &ReplayArgs) -> Result<(Vec<bucketpull::KeyValue>, BatchList), RunError> {
    let build = records::read_records(&args.build_file)?;
    let batches = args.batch_file.iter().map(|p| (p.clone(), args.op.clone())).collect();
    Ok((build, batches))
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, RunError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(RunError::Usage("thread count must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| RunError::Usage(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn main() -> ExitCode {
    let args = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };

    match cli.command {
        Command::Run(a) => {
            let config = RunConfig {
                workload: a.workload.spec(),
                build: a.index.build_config(),
                kernels: a.index.kernels(),
                verify: a.index.verify,
                threads: a.index.threads,
            };
            let outcome = bench::run(&config, a.dump_batches.as_deref());
            finish(outcome, a.out.as_deref(), config.verify)
        }
        Command::Replay(a) => {
            let (build, batches) = match load_batches(&a) {
                Ok(b) => b,
                Err(e) => return report(e, false),
            };
            let (config, kernels) = (a.index.build_config(), a.index.kernels());
            match with_threads(a.index.threads, || bench::replay(&build, &batches, &config, kernels, a.index.verify)) {
                Ok(outcome) => finish(outcome, a.out.as_deref(), a.index.verify),
                Err(e) => report(e, false),
            }
        }
        Command::Validate(a) => {
            let (build, batches) = match load_batches(&a) {
                Ok(b) => b,
                Err(e) => return report(e, false),
            };
            let (config, kernels) = (a.index.build_config(), a.index.kernels());
            let outcome = match with_threads(a.index.threads, || bench::replay(&build, &batches, &config, kernels, a.index.verify)) {
                Ok(o) => o,
                Err(e) => return report(e, false),
            };
            if let Err(e) = outcome.result {
                return report(e, a.index.verify);
            }
            let last = &outcome.rows.last().expect("build row").metrics;
            println!(
                "{}",
                serde_json::json!({
                    "status": "ok",
                    "phases": outcome.rows.len(),
                    "live_pairs": last.live_pairs,
                    "buckets": last.buckets,
                    "reachable_nodes": last.reachable_nodes,
                    "free_nodes": last.free_nodes,
                })
            );
            ExitCode::SUCCESS
        }
        Command::Gen(a) => {
            let spec = a.workload.spec();
            match bench::generate(&spec, &a.out) {
                Ok(n) => {
                    eprintln!("wrote {n} batch files to {}", a.out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => report(e, false),
            }
        }
    }
}
