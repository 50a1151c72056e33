use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use cyclotomic_ek::arith::ArithmeticTables;
use cyclotomic_ek::decomp::{self, DecompositionReport};
use cyclotomic_ek::ek::{self, ConductorCache, PrecisionTag};
use cyclotomic_ek::experiments::{self, EhVariant, Format};
use cyclotomic_ek::Error;

const CACHE_ENV: &str = "CYCLO_EK_CACHE_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "cyclo-ek",
    version,
    about = "Euler-Kronecker constants of cyclotomic fields"
)]
struct Cli {
    /// Directory holding the conductor cache files
    #[arg(long, global = true, env = CACHE_ENV)]
    cache_dir: Option<PathBuf>,

    /// Euler-Maclaurin shift used for the Stieltjes constants
    #[arg(long, global = true, default_value_t = 50)]
    precision: u32,

    /// Worker threads (defaults to the number of cores)
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Sieve bound N for the arithmetic tables
    #[arg(long, global = true, default_value_t = 1_000_000)]
    sieve_bound: u64,

    /// Keep the conductor cache in memory only
    #[arg(long, global = true)]
    no_cache: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print γ_q, log q and their ratio
    Gamma { q: u64 },
    /// Evaluate the seven-term decomposition and check that it closes
    Decompose(DecomposeArgs),
    /// γ_q over the dyadic range Q < q ≤ 2Q
    Scan(ScanArgs),
    /// Elliott-Halberstam error sums at level x^(1-ε)
    Probe(ProbeArgs),
    /// Inspect or reset the conductor cache
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    q: u64,
    /// Outer cut-off (default max(1e5, q²) capped at the sieve bound)
    #[arg(long)]
    x: Option<f64>,
    /// Exponent e in x1 = q^e
    #[arg(long, default_value_t = decomp::DEFAULT_X1_EXPONENT)]
    e: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(value_name = "Q")]
    big_q: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
    /// Ratio histogram bins over [0, 2]
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Write the ratio histogram here
    #[arg(long)]
    hist_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProbeArgs {
    x: f64,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// literal (primes only) or prime-powers
    #[arg(long, default_value = "literal")]
    variant: String,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-modulus maxima as `m,max_abs_error`
    #[arg(long)]
    per_m_out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Subcommand, Debug)]
enum CacheAction {
    List,
    Clear,
    Verify {
        /// Recompute every record and compare bit for bit
        #[arg(long)]
        deep: bool,
    },
}

fn default_cache_dir() -> PathBuf {
    if let Some(x) = std::env::var_os("XDG_CACHE_HOME") {
        return PathBuf::from(x).join("cyclo-ek");
    }
    if let Some(h) = std::env::var_os("HOME") {
        return PathBuf::from(h).join(".cache").join("cyclo-ek");
    }
    PathBuf::from(".cyclo-ek-cache")
}

/// Usage problems the core library reports as errors.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(
            Error::InvalidParameter(_)
            | Error::OutOfRange { .. }
            | Error::BoundTooSmall(_)
            | Error::Capacity { .. }
            | Error::EmptyInput(_)
            | Error::InsufficientPrecision { .. },
        ) => 2,
        Some(Error::Io { .. } | Error::CacheCorrupt { .. } | Error::Parse { .. }) => 3,
        Some(_) => 1,
        None => 3,
    }
}

struct Ctx {
    cache_dir: PathBuf,
    precision: PrecisionTag,
    sieve_bound: u64,
    persist: bool,
}

impl Ctx {
    fn cache(&self) -> anyhow::Result<ConductorCache> {
        if self.persist {
            Ok(ConductorCache::open(&self.cache_dir, self.precision)?)
        } else {
            Ok(ConductorCache::in_memory(self.precision))
        }
    }

    fn header(&self, command: &str) {
        let cache = if self.persist {
            self.cache_dir.display().to_string()
        } else {
            "memory".into()
        };
        println!(
            "# cyclo-ek {command}: precision {} sieve-bound {} workers {} cache {cache}",
            self.precision,
            self.sieve_bound,
            rayon::current_num_threads()
        );
    }
}

fn parse_format(s: &str) -> anyhow::Result<Format> {
    s.parse::<Format>().map_err(|e| usage(e.to_string()))
}

fn cmd_gamma(ctx: &Ctx, q: u64) -> anyhow::Result<u8> {
    if q == 0 {
        return Err(usage("q must be at least 1"));
    }
    ctx.header("gamma");
    let cache = ctx.cache()?;
    let g = ek::gamma_q(q, &cache)?;
    cache.flush()?;
    let log_q = (q as f64).ln();
    let ratio = if q >= 3 {
        format!("{:.12}", g.value / log_q)
    } else {
        "n/a".into()
    };
    println!("q        {q}");
    println!("gamma_q  {:.15}", g.value);
    println!("log_q    {log_q:.15}");
    println!("ratio    {ratio}");
    println!("err      {:.3e}", g.err_estimate);
    Ok(0)
}

fn print_report(r: &DecompositionReport) {
    let rows = [
        ("gamma_q", r.gamma_q_lhs),
        ("A", r.a),
        ("B", r.b),
        ("B_simplified", r.b_simplified),
        ("gamma2", r.g2),
        ("gamma3", r.g3),
        ("gamma11", r.g11),
        ("gamma12", r.g12),
        ("gamma13", r.g13),
        ("rhs", r.rhs()),
        ("residual", r.residual),
        ("B_gap", r.b_gap),
    ];
    for (name, v) in rows {
        println!("{name:<13} {v:>22.15e}");
    }
}

fn cmd_decompose(ctx: &Ctx, a: &DecomposeArgs) -> anyhow::Result<u8> {
    let format = parse_format(&a.format)?;
    if a.q == 0 {
        return Err(usage("q must be at least 1"));
    }
    let x =
        a.x.unwrap_or_else(|| decomp::default_x(a.q, ctx.sieve_bound));
    if !(a.e >= 1.0) {
        return Err(usage(format!("exponent e must be at least 1, got {}", a.e)));
    }
    if !(x >= 2.0 && x >= a.q as f64) {
        return Err(usage(format!(
            "x = {x} must be at least max(2, q = {})",
            a.q
        )));
    }
    if x > ctx.sieve_bound as f64 {
        return Err(usage(format!(
            "x = {x} exceeds the sieve bound {}; raise --sieve-bound",
            ctx.sieve_bound
        )));
    }
    let x1 = decomp::x1_from_exponent(a.q, x, a.e);
    ctx.header("decompose");
    println!("# q {} x {x} e {} x1 {x1}", a.q, a.e);
    let tables = ArithmeticTables::build(ctx.sieve_bound)?;
    let cache = ctx.cache()?;
    let report = decomp::decompose(a.q, x, x1, &tables, &cache)?;
    cache.flush()?;
    print_report(&report);
    if let Some(out) = &a.out {
        experiments::emit(std::slice::from_ref(&report), format, out)?;
    }
    if report.passes() {
        println!(
            "identity ok (|residual| <= {:e})",
            decomp::RESIDUAL_TOLERANCE
        );
        Ok(0)
    } else {
        println!(
            "identity FAILED (|residual| > {:e})",
            decomp::RESIDUAL_TOLERANCE
        );
        Ok(1)
    }
}

fn cmd_scan(ctx: &Ctx, a: &ScanArgs) -> anyhow::Result<u8> {
    let format = parse_format(&a.format)?;
    if a.big_q < 2 {
        return Err(usage("Q must be at least 2"));
    }
    ctx.header("scan");
    let cache = ctx.cache()?;
    let records = experiments::scan_range(a.big_q, &cache)?;
    cache.flush()?;
    if let Some(out) = &a.out {
        experiments::emit(records.as_slice(), format, out)?;
    }
    let stat = experiments::theorem_statistic(&records, a.big_q)?;
    let mean = experiments::fouvry_mean(&records, a.big_q)?;
    let hist = experiments::ratio_histogram(&records, a.bins)?;
    if let Some(out) = &a.hist_out {
        experiments::emit(&hist, format, out)?;
    }
    let (lo, hi) = hist.edges(hist.modal_bin());
    println!("records             {}", records.len());
    println!("mean |γ_q − log q|  {:.12}", stat.mean_abs_dev);
    println!("normalized          {:.12}", stat.normalized);
    println!("mean γ_q            {:.12}", mean.mean);
    println!("|mean − log Q|      {:.12}", mean.deviation);
    println!("modal ratio bin     [{lo:.3}, {hi:.3})");
    Ok(0)
}

fn cmd_probe(ctx: &Ctx, a: &ProbeArgs) -> anyhow::Result<u8> {
    let format = parse_format(&a.format)?;
    let variant: EhVariant = a.variant.parse().map_err(|e: Error| usage(e.to_string()))?;
    if !(a.x >= 2.0) || !a.x.is_finite() {
        return Err(usage(format!("x must be at least 2, got {}", a.x)));
    }
    let bound = ctx.sieve_bound.max(a.x.ceil() as u64);
    ctx.header("probe");
    let tables = ArithmeticTables::build(bound)?;
    let probe = experiments::eh_probe(a.x, a.epsilon, &tables, variant)?;
    if let Some(out) = &a.out {
        experiments::emit(std::slice::from_ref(&probe), format, out)?;
    }
    if let Some(out) = &a.per_m_out {
        std::fs::write(out, probe.per_m_csv()).with_context(|| out.display().to_string())?;
    }
    println!("x        {}", a.x);
    println!("epsilon  {}", a.epsilon);
    println!("m_max    {}", probe.m_max);
    println!("total    {:.12e}", probe.total);
    println!("total/x  {:.12e}", probe.total / a.x);
    println!("identity max deviation {:.3e}", probe.identity_max_dev);
    if probe.identity_max_dev <= 1e-8 {
        Ok(0)
    } else {
        println!("residue-sum identity FAILED");
        Ok(1)
    }
}

fn cache_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let entries = match std::fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(e) => return Err(Error::io(dir, e).into()),
    };
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with("conductors-") && name.ends_with(".bin") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn cmd_cache(ctx: &Ctx, action: &CacheAction) -> anyhow::Result<u8> {
    let files = cache_files(&ctx.cache_dir)?;
    match action {
        CacheAction::List => {
            println!("# cache dir {}", ctx.cache_dir.display());
            for f in files {
                let (tag, recs) = ek::read_cache_file(&f)?;
                let top = recs.last().map_or(0, |r| r.conductor);
                println!(
                    "{}  {tag}  {} records  max conductor {top}",
                    f.display(),
                    recs.len()
                );
            }
        }
        CacheAction::Clear => {
            for f in &files {
                std::fs::remove_file(f).map_err(|e| Error::io(f, e))?;
                println!("removed {}", f.display());
            }
        }
        CacheAction::Verify { deep } => {
            for f in &files {
                let s = ek::verify_cache_file(f, *deep)?;
                println!(
                    "{}  {}  {} records ok{}",
                    f.display(),
                    s.precision,
                    s.records,
                    if *deep { " (recomputed)" } else { "" }
                );
            }
        }
    }
    Ok(0)
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    if let Some(n) = cli.workers {
        if n == 0 {
            bail!(usage("--workers must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("starting the worker pool")?;
    }
    let ctx = Ctx {
        cache_dir: cli.cache_dir.unwrap_or_else(default_cache_dir),
        precision: PrecisionTag(cli.precision),
        sieve_bound: cli.sieve_bound,
        persist: !cli.no_cache,
    };
    match &cli.command {
        Command::Gamma { q } => cmd_gamma(&ctx, *q),
        Command::Decompose(a) => cmd_decompose(&ctx, a),
        Command::Scan(a) => cmd_scan(&ctx, a),
        Command::Probe(a) => cmd_probe(&ctx, a),
        Command::Cache { action } => cmd_cache(&ctx, action),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
