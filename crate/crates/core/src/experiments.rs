//! Dyadic-range scans of `γ_q`, their summary statistics, the
//! Elliott-Halberstam error probe, and output files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{divisors, factorize, gcd, psi, totient, ArithmeticTables};
use crate::decomp::DecompositionReport;
use crate::ek::{gamma_q, ConductorCache};
use crate::error::{Error, Result};
use crate::summation::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub q: u64,
    pub gamma_q: f64,
    pub log_q: f64,
    /// `γ_q / log q`, absent for `q ≤ 2`.
    pub ratio: Option<f64>,
    pub abs_dev: f64,
}

impl ScanRecord {
    pub fn new(q: u64, gamma_q: f64) -> Self {
        let log_q = (q as f64).ln();
        ScanRecord {
            q,
            gamma_q,
            log_q,
            ratio: (q >= 3).then(|| gamma_q / log_q),
            abs_dev: (gamma_q - log_q).abs(),
        }
    }
}

/// `γ_q` for every `q` in `(Q, 2Q]`, ascending.
pub fn scan_range(big_q: u64, cache: &ConductorCache) -> Result<Vec<ScanRecord>> {
    if big_q < 1 {
        return Err(Error::InvalidParameter("Q must be at least 1".into()));
    }
    let qs: Vec<u64> = (big_q + 1..=2 * big_q).collect();
    let mut needed: Vec<u64> = qs.iter().flat_map(|&q| divisors(q)).collect();
    needed.sort_unstable();
    needed.dedup();
    cache.prefetch(needed)?;
    qs.par_iter()
        .map(|&q| Ok(ScanRecord::new(q, gamma_q(q, cache)?.value)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremStatistic {
    pub big_q: u64,
    /// `(1/Q) Σ |γ_q − log q|`
    pub mean_abs_dev: f64,
    /// The same divided by `log Q`.
    pub normalized: f64,
}

pub fn theorem_statistic(records: &[ScanRecord], big_q: u64) -> Result<TheoremStatistic> {
    if records.is_empty() {
        return Err(Error::EmptyInput("scan records"));
    }
    if big_q < 2 {
        return Err(Error::InvalidParameter("Q must be at least 2".into()));
    }
    let s: NeumaierSum = records.iter().map(|r| r.abs_dev).sum();
    let mean_abs_dev = s.value() / big_q as f64;
    Ok(TheoremStatistic {
        big_q,
        mean_abs_dev,
        normalized: mean_abs_dev / (big_q as f64).ln(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FouvryMean {
    pub big_q: u64,
    /// `(1/Q) Σ γ_q`
    pub mean: f64,
    /// `|mean − log Q|`
    pub deviation: f64,
}

pub fn fouvry_mean(records: &[ScanRecord], big_q: u64) -> Result<FouvryMean> {
    if records.is_empty() {
        return Err(Error::EmptyInput("scan records"));
    }
    if big_q < 1 {
        return Err(Error::InvalidParameter("Q must be at least 1".into()));
    }
    let s: NeumaierSum = records.iter().map(|r| r.gamma_q).sum();
    let mean = s.value() / big_q as f64;
    Ok(FouvryMean {
        big_q,
        mean,
        deviation: (mean - (big_q as f64).ln()).abs(),
    })
}

pub const HISTOGRAM_LO: f64 = 0.0;
pub const HISTOGRAM_HI: f64 = 2.0;

/// Ratio histogram over `[0, 2)` with one bin each side for outliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
    /// Records without a ratio (`q ≤ 2`).
    pub skipped: u64,
}

impl Histogram {
    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn edges(&self, bin: usize) -> (f64, f64) {
        let w = self.width();
        (self.lo + bin as f64 * w, self.lo + (bin + 1) as f64 * w)
    }

    pub fn bin_of(&self, r: f64) -> Option<usize> {
        if r < self.lo || r >= self.hi {
            return None;
        }
        let b = ((r - self.lo) / self.width()) as usize;
        Some(b.min(self.counts.len() - 1))
    }

    /// First bin with the largest count.
    pub fn modal_bin(&self) -> usize {
        let best = self.counts.iter().copied().max().unwrap_or(0);
        self.counts.iter().position(|&c| c == best).unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow + self.skipped
    }
}

pub fn ratio_histogram(records: &[ScanRecord], bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::InvalidParameter(
            "histogram needs at least one bin".into(),
        ));
    }
    let mut h = Histogram {
        lo: HISTOGRAM_LO,
        hi: HISTOGRAM_HI,
        counts: vec![0; bins],
        underflow: 0,
        overflow: 0,
        skipped: 0,
    };
    for r in records {
        match r.ratio {
            None => h.skipped += 1,
            Some(v) if v < h.lo => h.underflow += 1,
            Some(v) => match h.bin_of(v) {
                Some(b) => h.counts[b] += 1,
                None => h.overflow += 1,
            },
        }
    }
    Ok(h)
}

/// Which arithmetic weights `E(x; m, a)` sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EhVariant {
    /// `Σ_{p ≤ x, p ≡ a} log p − ψ(x)/φ(m)`
    #[default]
    Literal,
    /// `ψ(x; m, a) − ψ(x)/φ(m)`
    PrimePowers,
}

impl FromStr for EhVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" | "primes" => Ok(EhVariant::Literal),
            "prime-powers" | "powers" => Ok(EhVariant::PrimePowers),
            _ => Err(Error::InvalidParameter(format!(
                "unknown probe variant `{s}` (expected literal or prime-powers)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusError {
    pub m: u64,
    pub max_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EhProbeRecord {
    pub x: f64,
    pub epsilon: f64,
    pub m_max: u64,
    /// `Σ_{m ≤ m_max} max_{(a,m)=1} |E(x; m, a)|`
    pub total: f64,
    pub variant: EhVariant,
    /// Largest violation of `Σ_{(a,m)=1} E(x;m,a) = Σ_{n coprime to m} w(n) − ψ(x)`.
    pub identity_max_dev: f64,
    pub per_m: Vec<ModulusError>,
}

/// `a mod m` by one multiply-high, valid for `a, m < 2³²`.
#[derive(Debug, Clone, Copy)]
struct FastMod {
    m: u64,
    mult: u64,
}

impl FastMod {
    fn new(m: u64) -> Self {
        debug_assert!(m >= 1 && m < 1 << 32);
        FastMod {
            m,
            mult: (u64::MAX / m).wrapping_add(1),
        }
    }

    #[inline]
    fn rem(self, a: u32) -> usize {
        if self.m == 1 {
            return 0;
        }
        let low = self.mult.wrapping_mul(a as u64);
        ((low as u128 * self.m as u128) >> 64) as usize
    }
}

/// Residue-class sums of the variant's weights modulo `m`, each bucket
/// compensated by a branch-free two-sum.
fn residue_sums(m: u64, points: &[(u32, f64)]) -> Vec<f64> {
    let fm = FastMod::new(m);
    let mut buckets = vec![(0.0f64, 0.0f64); m as usize];
    for &(n, w) in points {
        let (s, c) = &mut buckets[fm.rem(n)];
        let t = *s + w;
        let bp = t - *s;
        *c += (*s - (t - bp)) + (w - bp);
        *s = t;
    }
    buckets.into_iter().map(|(s, c)| s + c).collect()
}

/// `Σ_{n ≤ x} w(n)` for the variant, the common part of every residue identity.
fn variant_total(x: f64, tables: &ArithmeticTables, variant: EhVariant) -> Result<f64> {
    match variant {
        EhVariant::Literal => Ok(tables
            .primes_upto(x)
            .iter()
            .map(|&p| tables.lambda(p as u64))
            .sum::<NeumaierSum>()
            .value()),
        EhVariant::PrimePowers => psi(tables, x),
    }
}

fn identity_rhs(
    m: u64,
    x: f64,
    full: f64,
    psi_x: f64,
    tables: &ArithmeticTables,
    variant: EhVariant,
) -> f64 {
    let mut acc = NeumaierSum::new();
    acc.add(full);
    for (p, _) in factorize(m) {
        let mut pk = p;
        while pk as f64 <= x {
            acc.add(-tables.lambda(pk));
            if variant == EhVariant::Literal {
                break;
            }
            pk *= p;
        }
    }
    acc.add(-psi_x);
    acc.value()
}

/// `Σ_{n ≤ x, (n,m)=1} w(n) − ψ(x)`, from the full sum minus the primes of `m`.
pub fn residue_identity_rhs(
    m: u64,
    x: f64,
    tables: &ArithmeticTables,
    variant: EhVariant,
) -> Result<f64> {
    let psi_x = psi(tables, x)?;
    let full = variant_total(x, tables, variant)?;
    Ok(identity_rhs(m, x, full, psi_x, tables, variant))
}

/// `floor(x^{1−ε})`, guarded against `x^{1−ε}` landing a hair below an integer.
pub fn level_of_distribution(x: f64, epsilon: f64) -> u64 {
    let v = x.powf(1.0 - epsilon);
    let r = v.round();
    if (v - r).abs() <= 1e-9 * r.max(1.0) {
        r as u64
    } else {
        v.floor() as u64
    }
}

pub fn eh_probe(
    x: f64,
    epsilon: f64,
    tables: &ArithmeticTables,
    variant: EhVariant,
) -> Result<EhProbeRecord> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if !(x >= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "x must be at least 2, got {x}"
        )));
    }
    tables.check_range(x)?;
    let psi_x = psi(tables, x)?;
    let full = variant_total(x, tables, variant)?;
    let m_max = level_of_distribution(x, epsilon).max(1);
    let source: &[u32] = match variant {
        EhVariant::Literal => tables.primes_upto(x),
        EhVariant::PrimePowers => tables.prime_powers_upto(x),
    };
    let points: Vec<(u32, f64)> = source
        .iter()
        .map(|&n| (n, tables.lambda(n as u64)))
        .collect();

    let per_m: Vec<(ModulusError, f64)> = (1..=m_max)
        .into_par_iter()
        .map(|m| {
            let sums = residue_sums(m, &points);
            let share = psi_x / totient(m) as f64;
            let mut worst = 0.0f64;
            let mut lhs = NeumaierSum::new();
            for (a, &s) in sums.iter().enumerate() {
                if gcd(a as u64, m) == 1 {
                    let e = s - share;
                    worst = worst.max(e.abs());
                    lhs.add(e);
                }
            }
            let rhs = identity_rhs(m, x, full, psi_x, tables, variant);
            Ok((
                ModulusError {
                    m,
                    max_abs_error: worst,
                },
                (lhs.value() - rhs).abs(),
            ))
        })
        .collect::<Result<_>>()?;

    let total: NeumaierSum = per_m.iter().map(|(e, _)| e.max_abs_error).sum();
    let identity_max_dev = per_m.iter().map(|&(_, d)| d).fold(0.0, f64::max);
    Ok(EhProbeRecord {
        x,
        epsilon,
        m_max,
        total: total.value(),
        variant,
        identity_max_dev,
        per_m: per_m.into_iter().map(|(e, _)| e).collect(),
    })
}

/// Output flavours shared by every artifact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
    Plotdata,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "plotdata" | "plot" => Ok(Format::Plotdata),
            _ => Err(Error::InvalidParameter(format!(
                "unknown format `{s}` (expected csv, json or plotdata)"
            ))),
        }
    }
}

/// `%.12g`: twelve significant digits, trailing zeros dropped.
pub fn fmt_g12(v: f64) -> String {
    const DIGITS: i32 = 12;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -4 || exp >= DIGITS {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Anything that can be written as csv, json or plotdata.
pub trait Emit {
    fn csv(&self) -> String;
    fn json(&self) -> Result<String>;
    fn plotdata(&self) -> String;

    fn render(&self, format: Format) -> Result<String> {
        Ok(match format {
            Format::Csv => self.csv(),
            Format::Json => self.json()?,
            Format::Plotdata => self.plotdata(),
        })
    }
}

fn to_json<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)
        .map_err(|e| Error::InvalidParameter(format!("json encoding failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub const SCAN_HEADER: &str = "q,gamma_q,log_q,ratio,abs_dev";

impl Emit for [ScanRecord] {
    fn csv(&self) -> String {
        let mut out = String::from(SCAN_HEADER);
        out.push('\n');
        for r in self {
            let ratio = r.ratio.map(fmt_g12).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.q,
                fmt_g12(r.gamma_q),
                fmt_g12(r.log_q),
                ratio,
                fmt_g12(r.abs_dev)
            );
        }
        out
    }

    fn json(&self) -> Result<String> {
        to_json(self)
    }

    fn plotdata(&self) -> String {
        let mut out = String::from("# q gamma_q\n");
        for r in self {
            let _ = writeln!(out, "{} {}", r.q, fmt_g12(r.gamma_q));
        }
        out
    }
}

pub const REPORT_HEADER: &str =
    "q,x,x1,a,b,b_simplified,g2,g3,g11,g12,g13,gamma_q_lhs,residual,b_gap";

impl Emit for [DecompositionReport] {
    fn csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for r in self {
            let cols = [
                r.x,
                r.x1,
                r.a,
                r.b,
                r.b_simplified,
                r.g2,
                r.g3,
                r.g11,
                r.g12,
                r.g13,
                r.gamma_q_lhs,
                r.residual,
                r.b_gap,
            ];
            let _ = write!(out, "{}", r.q);
            for c in cols {
                let _ = write!(out, ",{}", fmt_g12(c));
            }
            out.push('\n');
        }
        out
    }

    fn json(&self) -> Result<String> {
        to_json(self)
    }

    fn plotdata(&self) -> String {
        let mut out = String::from("# q residual\n");
        for r in self {
            let _ = writeln!(out, "{} {}", r.q, fmt_g12(r.residual));
        }
        out
    }
}

pub const PROBE_HEADER: &str = "x,epsilon,m_max,total";
pub const PER_M_HEADER: &str = "m,max_abs_error";

impl EhProbeRecord {
    /// The optional per-modulus table as CSV.
    pub fn per_m_csv(&self) -> String {
        let mut out = String::from(PER_M_HEADER);
        out.push('\n');
        for e in &self.per_m {
            let _ = writeln!(out, "{},{}", e.m, fmt_g12(e.max_abs_error));
        }
        out
    }
}

impl Emit for [EhProbeRecord] {
    fn csv(&self) -> String {
        let mut out = String::from(PROBE_HEADER);
        out.push('\n');
        for p in self {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_g12(p.x),
                fmt_g12(p.epsilon),
                p.m_max,
                fmt_g12(p.total)
            );
        }
        out
    }

    fn json(&self) -> Result<String> {
        to_json(self)
    }

    fn plotdata(&self) -> String {
        let mut out = String::new();
        for p in self {
            let _ = writeln!(out, "# x={} epsilon={}", fmt_g12(p.x), fmt_g12(p.epsilon));
            out.push_str("# m max_abs_error\n");
            for e in &p.per_m {
                let _ = writeln!(out, "{} {}", e.m, fmt_g12(e.max_abs_error));
            }
        }
        out
    }
}

impl Emit for Histogram {
    fn csv(&self) -> String {
        let mut out = String::from("lo,hi,count\n");
        let _ = writeln!(out, "-inf,{},{}", fmt_g12(self.lo), self.underflow);
        for (i, c) in self.counts.iter().enumerate() {
            let (a, b) = self.edges(i);
            let _ = writeln!(out, "{},{},{c}", fmt_g12(a), fmt_g12(b));
        }
        let _ = writeln!(out, "{},inf,{}", fmt_g12(self.hi), self.overflow);
        out
    }

    fn json(&self) -> Result<String> {
        to_json(std::slice::from_ref(self))
    }

    fn plotdata(&self) -> String {
        let mut out = format!(
            "# bin_center count (underflow {}, overflow {}, skipped {})\n",
            self.underflow, self.overflow, self.skipped
        );
        for (i, c) in self.counts.iter().enumerate() {
            let (a, b) = self.edges(i);
            let _ = writeln!(out, "{} {c}", fmt_g12(0.5 * (a + b)));
        }
        out
    }
}

/// Write `item` to `path` in `format`, creating parent directories.
pub fn emit<T: Emit + ?Sized>(item: &T, format: Format, path: &Path) -> Result<()> {
    let body = item.render(format)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Parse a scan CSV produced by [`emit`].
pub fn read_scan_csv(path: &Path) -> Result<Vec<ScanRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scan_csv(&text).map_err(|reason| Error::Parse {
        path: path.to_path_buf(),
        reason,
    })
}

pub fn parse_scan_csv(text: &str) -> std::result::Result<Vec<ScanRecord>, String> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().collect::<Vec<_>>().join(",") != SCAN_HEADER {
        return Err(format!(
            "unexpected header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        ));
    }
    let num = |s: &str, line: u64| -> std::result::Result<f64, String> {
        s.parse::<f64>()
            .map_err(|e| format!("line {line}: bad number `{s}`: {e}"))
    };
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| e.to_string())?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 5 {
            return Err(format!("line {line}: expected 5 fields, got {}", row.len()));
        }
        let q = row[0]
            .parse::<u64>()
            .map_err(|e| format!("line {line}: bad q `{}`: {e}", &row[0]))?;
        let ratio = if row[3].is_empty() {
            None
        } else {
            Some(num(&row[3], line)?)
        };
        out.push(ScanRecord {
            q,
            gamma_q: num(&row[1], line)?,
            log_q: num(&row[2], line)?,
            ratio,
            abs_dev: num(&row[4], line)?,
        });
    }
    Ok(out)
}
