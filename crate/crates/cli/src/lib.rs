//! Benchmark and experiment harness behind the `cdfsort` binary.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use cdfsort::classic::{self, PivotMethod, PivotQualityReport, DEFAULT_BASE_CASE};
use cdfsort::data::{self, DatasetSpec, GENERATORS};
use cdfsort::sample::{rng_for, SampleRng};
use cdfsort::sort::{multiset_fingerprint, ClassicStats};
use cdfsort::{learned_sort_classic, sort, verify_sorted, Key, SortConfig};
use clap::{Args, Parser, Subcommand};

pub const CSV_HEADER: &str = "algorithm,dataset,n,workers,run,elapsed_ns,keys_per_second,verified";

#[derive(Debug, Parser)]
#[command(name = "cdfsort", version, about = "Learned-pivot sorting benchmarks and experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset as a binary key file.
    Generate(GenerateArgs),
    /// Time sorting algorithms and emit CSV records.
    Bench(BenchArgs),
    /// Compare random and learned pivots.
    PivotQuality(PivotQualityArgs),
    /// Check that a key file is sorted.
    Verify(VerifyArgs),
    /// Run one of the single-model learned sorts and report its counters.
    ClassicSort(ClassicSortArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Generator name.
    pub name: Option<String>,
    pub n_pos: Option<usize>,
    pub seed_pos: Option<u64>,
    pub out_pos: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Algorithm (same as one `--algo`).
    pub algo_pos: Option<String>,
    /// Generator name or key file.
    pub dataset_pos: Option<String>,
    pub n_pos: Option<usize>,
    pub runs_pos: Option<usize>,
    pub workers_pos: Option<usize>,
    /// Algorithms to run; repeatable.
    #[arg(long = "algo")]
    pub algos: Vec<String>,
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PivotQualityArgs {
    #[arg(long, default_value = "uniform")]
    pub dataset: String,
    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,
    #[arg(long, default_value_t = 255)]
    pub pivots: usize,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub path: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassicSortArgs {
    #[arg(long = "algo", default_value = "learnedsort-classic")]
    pub algo: String,
    #[arg(long, default_value = "uniform")]
    pub dataset: String,
    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Write the sorted keys here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Aips2o,
    LearnedSortClassic,
    LearnedQuicksort,
    QuicksortLearnedPivot,
    Reference,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Self::Aips2o,
        Self::LearnedSortClassic,
        Self::LearnedQuicksort,
        Self::QuicksortLearnedPivot,
        Self::Reference,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Aips2o => "aips2o",
            Self::LearnedSortClassic => "learnedsort-classic",
            Self::LearnedQuicksort => "learned-quicksort",
            Self::QuicksortLearnedPivot => "quicksort-learned-pivot",
            Self::Reference => "reference",
        }
    }

    pub fn run(self, keys: &mut [Key], cfg: &SortConfig) {
        match self {
            Self::Aips2o => sort(keys, cfg),
            Self::LearnedSortClassic => {
                learned_sort_classic(keys, cfg);
            }
            Self::LearnedQuicksort => classic::learned_quicksort_counted(keys, DEFAULT_BASE_CASE, cfg.seed, &mut ()),
            Self::QuicksortLearnedPivot => classic::quicksort_learned_pivot_seeded(keys, DEFAULT_BASE_CASE, cfg.seed),
            Self::Reference => keys.sort_unstable(),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            let known: Vec<_> = Self::ALL.iter().map(|a| a.name()).collect();
            anyhow::anyhow!("unknown algorithm `{s}`; known: {}", known.join(", "))
        })
    }
}

/// Loads keys by generator name, or from a key file if `source` is not a
/// generator. `n` truncates file input.
pub fn load_dataset(source: &str, n: Option<usize>, seed: u64) -> Result<(String, Vec<Key>)> {
    if GENERATORS.contains(&source) {
        let n = n.context("a generated dataset needs --n")?;
        let keys = data::generate(&DatasetSpec::new(source, n, seed)?)?;
        return Ok((source.to_string(), keys));
    }
    let path = Path::new(source);
    if !path.exists() {
        bail!("`{source}` is neither a generator ({}) nor an existing file", GENERATORS.join(", "));
    }
    let mut keys = data::read_keys(path)?;
    if let Some(n) = n {
        keys.truncate(n);
    }
    let label = path
        .file_stem()
        .map_or_else(|| source.to_string(), |s| s.to_string_lossy().into_owned());
    Ok((label, keys))
}

pub fn cmd_generate(name: &str, n: usize, seed: u64, out: &Path) -> Result<()> {
    let keys = data::generate(&DatasetSpec::new(name, n, seed)?)?;
    data::write_keys(out, &keys)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub algorithm: String,
    pub dataset: String,
    pub n: usize,
    pub workers: usize,
    pub run_index: usize,
    pub elapsed_ns: u64,
    pub keys_per_second: f64,
    pub verified: bool,
}

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.1},{}",
            self.algorithm, self.dataset, self.n, self.workers, self.run_index, self.elapsed_ns, self.keys_per_second, self.verified
        )
    }
}

fn keys_per_second(n: usize, elapsed: Duration) -> f64 {
    let secs = elapsed.as_secs_f64();
    if secs > 0.0 {
        n as f64 / secs
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub algorithms: Vec<Algorithm>,
    pub runs: usize,
    pub workers: usize,
    pub seed: u64,
}

/// Mean and sample standard deviation per algorithm over verified runs.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchSummary {
    pub algorithm: String,
    pub runs: usize,
    pub mean_elapsed_ns: f64,
    pub std_elapsed_ns: f64,
    pub mean_keys_per_second: f64,
    pub std_keys_per_second: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub records: Vec<BenchRecord>,
    pub summaries: Vec<BenchSummary>,
}

impl BenchReport {
    pub fn all_verified(&self) -> bool {
        self.records.iter().all(|r| r.verified)
    }

    pub fn write_csv<W: Write + ?Sized>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.records {
            writeln!(w, "{}", r.csv_row())?;
        }
        for s in &self.summaries {
            let base = self.records.iter().find(|r| r.algorithm == s.algorithm);
            let (dataset, n, workers) = base.map_or(("", 0, 0), |r| (r.dataset.as_str(), r.n, r.workers));
            writeln!(
                w,
                "{},{dataset},{n},{workers},mean,{:.0},{:.1},true",
                s.algorithm, s.mean_elapsed_ns, s.mean_keys_per_second
            )?;
            writeln!(
                w,
                "{},{dataset},{n},{workers},std,{:.0},{:.1},true",
                s.algorithm, s.std_elapsed_ns, s.std_keys_per_second
            )?;
        }
        Ok(())
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Failure of an output check, carrying the partial report.
#[derive(Debug)]
pub struct VerificationFailed {
    pub algorithm: String,
    pub run_index: usize,
    pub index: Option<usize>,
    pub report: BenchReport,
}

impl fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(
                f,
                "{} run {}: output not sorted, violation at index {i}",
                self.algorithm, self.run_index
            ),
            None => write!(
                f,
                "{} run {}: output is not a permutation of the input",
                self.algorithm, self.run_index
            ),
        }
    }
}

impl std::error::Error for VerificationFailed {}

/// Runs the benchmark protocol on `input`. Each run sorts a fresh copy;
/// the clock covers only the `sorter` call.
pub fn run_bench<F>(dataset: &str, input: &[Key], opts: &BenchOptions, mut sorter: F) -> Result<BenchReport>
where
    F: FnMut(Algorithm, &mut [Key], &SortConfig),
{
    if opts.runs == 0 {
        bail!("runs must be at least 1");
    }
    let cfg = SortConfig::default().with_workers(opts.workers.max(1)).with_seed(opts.seed);
    cfg.validate()?;
    let expect = multiset_fingerprint(input);
    let mut report = BenchReport::default();
    for &algo in &opts.algorithms {
        let mut elapsed = Vec::new();
        let mut rates = Vec::new();
        for run in 0..opts.runs {
            let mut keys = input.to_vec();
            let start = Instant::now();
            sorter(algo, &mut keys, &cfg);
            let took = start.elapsed();
            let check = verify_sorted(&keys);
            let permutation = multiset_fingerprint(&keys) == expect;
            let record = BenchRecord {
                algorithm: algo.name().to_string(),
                dataset: dataset.to_string(),
                n: input.len(),
                workers: cfg.workers,
                run_index: run,
                elapsed_ns: took.as_nanos() as u64,
                keys_per_second: keys_per_second(input.len(), took),
                verified: check.is_sorted() && permutation,
            };
            let verified = record.verified;
            report.records.push(record);
            if !verified {
                return Err(VerificationFailed {
                    algorithm: algo.name().to_string(),
                    run_index: run,
                    index: check.first_violation,
                    report,
                }
                .into());
            }
            elapsed.push(took.as_nanos() as f64);
            rates.push(keys_per_second(input.len(), took));
        }
        let (me, se) = mean_std(&elapsed);
        let (mr, sr) = mean_std(&rates);
        report.summaries.push(BenchSummary {
            algorithm: algo.name().to_string(),
            runs: elapsed.len(),
            mean_elapsed_ns: me,
            std_elapsed_ns: se,
            mean_keys_per_second: mr,
            std_keys_per_second: sr,
        });
    }
    Ok(report)
}

fn write_output(csv: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    match csv {
        Some(p) => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?);
            write(&mut f).with_context(|| format!("writing {}", p.display()))?;
            f.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            write(&mut stdout.lock())?;
        }
    }
    Ok(())
}

pub fn cmd_bench(args: &BenchArgs) -> Result<BenchReport> {
    let mut names: Vec<String> = args.algo_pos.iter().cloned().collect();
    names.extend(args.algos.iter().cloned());
    if names.is_empty() {
        names.push(Algorithm::Aips2o.name().to_string());
    }
    let algorithms = names.iter().map(|s| s.parse()).collect::<Result<Vec<Algorithm>>>()?;
    let source = args
        .dataset
        .clone()
        .or_else(|| args.dataset_pos.clone())
        .unwrap_or_else(|| "uniform".into());
    let n = args.n.or(args.n_pos);
    let n = if GENERATORS.contains(&source.as_str()) {
        Some(n.unwrap_or(1_000_000))
    } else {
        n
    };
    let opts = BenchOptions {
        algorithms,
        runs: args.runs.or(args.runs_pos).unwrap_or(10),
        workers: args.workers.or(args.workers_pos).unwrap_or(1),
        seed: args.seed,
    };
    let (label, input) = load_dataset(&source, n, args.seed)?;
    let result = run_bench(&label, &input, &opts, |a, k, c| a.run(k, c));
    let report = match &result {
        Ok(r) => r,
        Err(e) => match e.downcast_ref::<VerificationFailed>() {
            Some(v) => &v.report,
            None => return result,
        },
    };
    write_output(args.csv.as_deref(), |w| report.write_csv(w))?;
    result
}

/// Per-trial rows of the pivot comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotTrial {
    pub trial: usize,
    pub random: PivotQualityReport,
    pub learned: PivotQualityReport,
}

/// Runs `trials` pivot comparisons over sorted data. `random_picker`
/// replaces the random pivot sampler (a test hook).
pub fn run_pivot_quality<P>(a_sorted: &[Key], pivots: usize, trials: usize, seed: u64, mut random_picker: P) -> Result<Vec<PivotTrial>>
where
    P: FnMut(&[Key], usize, &mut SampleRng) -> Vec<Key>,
{
    if pivots == 0 || trials == 0 {
        bail!("pivots and trials must be at least 1");
    }
    let b = pivots + 1;
    (0..trials)
        .map(|t| {
            let mut rng = rng_for(seed, t, 0);
            let random = classic::pivot_quality(a_sorted, &random_picker(a_sorted, b, &mut rng), b, PivotMethod::Random)?;
            let (_, learned) = classic::pivot_quality_trial(a_sorted, pivots, &mut rng)?;
            Ok(PivotTrial { trial: t, random, learned })
        })
        .collect()
}

pub fn write_pivot_csv<W: Write + ?Sized>(w: &mut W, rows: &[PivotTrial]) -> std::io::Result<()> {
    writeln!(w, "trial,method,pivot_count,distance,complete")?;
    let line =
        |w: &mut W, t: &str, r: &PivotQualityReport| writeln!(w, "{t},{},{},{:.6},{}", r.method, r.pivot_count, r.distance, r.complete);
    for row in rows {
        line(w, &row.trial.to_string(), &row.random)?;
        line(w, &row.trial.to_string(), &row.learned)?;
    }
    for method in [PivotMethod::Random, PivotMethod::Learned] {
        let pick = |r: &PivotTrial| {
            if method == PivotMethod::Random {
                r.random.clone()
            } else {
                r.learned.clone()
            }
        };
        let reports: Vec<_> = rows.iter().map(pick).collect();
        let mean = reports.iter().map(|r| r.distance).sum::<f64>() / reports.len().max(1) as f64;
        let count = reports.iter().map(|r| r.pivot_count).min().unwrap_or(0);
        let complete = reports.iter().all(|r| r.complete);
        writeln!(w, "mean,{method},{count},{mean:.6},{complete}")?;
    }
    Ok(())
}

pub fn cmd_pivot_quality(args: &PivotQualityArgs) -> Result<Vec<PivotTrial>> {
    let (_, mut keys) = load_dataset(&args.dataset, Some(args.n), args.seed)?;
    keys.sort_unstable();
    let rows = run_pivot_quality(&keys, args.pivots, args.trials, args.seed, classic::random_pivots)?;
    write_output(args.csv.as_deref(), |w| write_pivot_csv(w, &rows))?;
    for r in &rows {
        if !r.learned.complete {
            eprintln!(
                "trial {}: model produced only {} of {} pivots",
                r.trial, r.learned.pivot_count, args.pivots
            );
        }
    }
    Ok(rows)
}

/// Returns the first violation, if any.
pub fn cmd_verify(path: &Path) -> Result<Option<usize>> {
    let keys = data::read_keys(path)?;
    Ok(verify_sorted(&keys).first_violation)
}

#[derive(Debug, Clone)]
pub struct ClassicSortOutcome {
    pub algorithm: Algorithm,
    pub n: usize,
    pub elapsed: Duration,
    pub verified: bool,
    pub stats: Option<ClassicStats>,
}

pub fn cmd_classic_sort(args: &ClassicSortArgs) -> Result<ClassicSortOutcome> {
    let algorithm: Algorithm = args.algo.parse()?;
    let (_, mut keys) = load_dataset(&args.dataset, Some(args.n), args.seed)?;
    let expect = multiset_fingerprint(&keys);
    let cfg = SortConfig::default().with_seed(args.seed);
    let start = Instant::now();
    let stats = match algorithm {
        Algorithm::LearnedSortClassic => Some(learned_sort_classic(&mut keys, &cfg)),
        Algorithm::LearnedQuicksort | Algorithm::QuicksortLearnedPivot => {
            algorithm.run(&mut keys, &cfg);
            None
        }
        other => bail!("classic-sort runs learnedsort-classic, learned-quicksort or quicksort-learned-pivot, not {other}"),
    };
    let elapsed = start.elapsed();
    let verified = verify_sorted(&keys).is_sorted() && multiset_fingerprint(&keys) == expect;
    if let Some(out) = &args.out {
        data::write_keys(out, &keys)?;
    }
    Ok(ClassicSortOutcome {
        algorithm,
        n: keys.len(),
        elapsed,
        verified,
        stats,
    })
}

/// Runs a parsed command; the return value is the process exit code.
pub fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Generate(g) => {
            let name = g.dataset.or(g.name).context("missing generator name")?;
            let n = g.n.or(g.n_pos).context("missing n")?;
            let seed = g.seed.or(g.seed_pos).unwrap_or(42);
            let out = g.out.or(g.out_pos).context("missing output path")?;
            cmd_generate(&name, n, seed, &out)?;
            eprintln!("wrote {n} {name} keys to {}", out.display());
            Ok(0)
        }
        Command::Bench(b) => match cmd_bench(&b) {
            Ok(_) => Ok(0),
            Err(e) if e.is::<VerificationFailed>() => {
                eprintln!("error: {e}");
                Ok(2)
            }
            Err(e) => Err(e),
        },
        Command::PivotQuality(p) => {
            cmd_pivot_quality(&p)?;
            Ok(0)
        }
        Command::Verify(v) => match cmd_verify(&v.path)? {
            None => {
                println!("sorted");
                Ok(0)
            }
            Some(i) => {
                println!("violation at index {i}");
                Ok(1)
            }
        },
        Command::ClassicSort(c) => {
            let o = cmd_classic_sort(&c)?;
            println!(
                "algorithm={} n={} elapsed_ns={} verified={}",
                o.algorithm,
                o.n,
                o.elapsed.as_nanos(),
                o.verified
            );
            if let Some(s) = o.stats {
                println!(
                    "first_round_buckets={} homogeneous_buckets={} second_round_buckets={} mean_occupancy={:.3} fixup_shifts={}",
                    s.first_round_buckets,
                    s.homogeneous_buckets,
                    s.second_round_buckets,
                    s.mean_occupancy(),
                    s.fixup_shifts
                );
            }
            Ok(if o.verified { 0 } else { 2 })
        }
    }
}
