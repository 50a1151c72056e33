//! Euler-Kronecker constants of cyclotomic fields.
//!
//! ```text
//! γ_q = γ + Σ_{1<q*|q} T(q*),    T(q*) = Σ_{χ* primitive mod q*} L'/L(1, χ*)
//! ```
//!
//! `T(q*)` depends only on the conductor, so a range scan pays for each
//! conductor once. [`ConductorCache`] memoizes the totals and can persist them
//! in a small binary file (layout in the crate README).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use num_complex::Complex64;
use parking_lot::RwLock;
use rayon::prelude::*;

use crate::arith::{divisors, ArithmeticTables};
use crate::characters::primitive_characters;
use crate::decomp::{b_term, progression_discrepancy};
use crate::error::{Error, Result};
use crate::lfunc::{l_values, HurwitzTable, LValueRecord};
use crate::special::DEFAULT_SHIFT;
use crate::summation::{ComplexSum, NeumaierSum};
use crate::EULER_GAMMA;

pub const CACHE_MAGIC: [u8; 8] = *b"CYEKCACH";
pub const CACHE_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;
pub const RECORD_LEN: usize = 44;

/// Numerical setting a cached total was computed under. Currently the
/// Euler-Maclaurin shift used for the Stieltjes constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrecisionTag(pub u32);

impl Default for PrecisionTag {
    fn default() -> Self {
        PrecisionTag(DEFAULT_SHIFT)
    }
}

impl fmt::Display for PrecisionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "em{}", self.0)
    }
}

impl PrecisionTag {
    pub fn shift(self) -> u32 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConductorTotal {
    pub conductor: u64,
    /// Real part of the sum of `L'/L(1, χ*)` over primitive `χ*`.
    pub total: f64,
    /// `|Im|` of the same sum; zero up to rounding by conjugate pairing.
    pub imag_residual: f64,
    pub err_estimate: f64,
    pub primitive_count: u32,
    pub precision: PrecisionTag,
}

impl ConductorTotal {
    fn empty(conductor: u64, precision: PrecisionTag) -> Self {
        ConductorTotal {
            conductor,
            total: 0.0,
            imag_residual: 0.0,
            err_estimate: 0.0,
            primitive_count: 0,
            precision,
        }
    }
}

/// `L(1)`, `L'(1)` and `L'/L(1)` for every primitive character mod `conductor`.
pub fn primitive_log_derivatives(
    conductor: u64,
    precision: PrecisionTag,
) -> Result<Vec<LValueRecord>> {
    if conductor == 0 {
        return Err(Error::InvalidParameter("conductor must be positive".into()));
    }
    let chars = primitive_characters(conductor);
    if chars.is_empty() {
        return Ok(Vec::new());
    }
    let table = HurwitzTable::new(chars[0].group(), precision.shift())?;
    chars.iter().map(|chi| l_values(chi, &table)).collect()
}

pub fn conductor_total(conductor: u64, precision: PrecisionTag) -> Result<ConductorTotal> {
    if conductor == 0 {
        return Err(Error::InvalidParameter("conductor must be positive".into()));
    }
    if conductor == 1 || conductor % 4 == 2 {
        return Ok(ConductorTotal::empty(conductor, precision));
    }
    let records = primitive_log_derivatives(conductor, precision)?;
    let mut sum = ComplexSum::new();
    let mut err = NeumaierSum::new();
    for r in &records {
        sum.add(r.log_deriv);
        err.add(r.err_estimate);
    }
    let z: Complex64 = sum.value();
    Ok(ConductorTotal {
        conductor,
        total: z.re,
        imag_residual: z.im.abs(),
        err_estimate: err.value(),
        primitive_count: records.len() as u32,
        precision,
    })
}

/// Memo table of [`ConductorTotal`]s for one precision tag. Readers run
/// concurrently; inserts take the write lock briefly.
#[derive(Debug)]
pub struct ConductorCache {
    precision: PrecisionTag,
    entries: RwLock<BTreeMap<u64, ConductorTotal>>,
    path: Option<PathBuf>,
    dirty: AtomicBool,
}

impl ConductorCache {
    pub fn in_memory(precision: PrecisionTag) -> Self {
        ConductorCache {
            precision,
            entries: RwLock::new(BTreeMap::new()),
            path: None,
            dirty: AtomicBool::new(false),
        }
    }

    /// Cache backed by `dir/conductors-em{shift}.bin`, loading it if present.
    pub fn open(dir: &Path, precision: PrecisionTag) -> Result<Self> {
        let path = Self::file_path(dir, precision);
        let mut map = BTreeMap::new();
        if path.exists() {
            let (tag, records) = read_cache_file(&path)?;
            if tag != precision {
                return Err(Error::CacheCorrupt {
                    path: path.clone(),
                    reason: format!("header tag {tag} does not match file name tag {precision}"),
                });
            }
            for r in records {
                map.insert(r.conductor, r);
            }
        }
        Ok(ConductorCache {
            precision,
            entries: RwLock::new(map),
            path: Some(path),
            dirty: AtomicBool::new(false),
        })
    }

    pub fn file_path(dir: &Path, precision: PrecisionTag) -> PathBuf {
        dir.join(format!("conductors-{precision}.bin"))
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn precision(&self) -> PrecisionTag {
        self.precision
    }

    pub fn len(&self) -> usize {
        self.entries.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, conductor: u64) -> Option<ConductorTotal> {
        self.entries.read().get(&conductor).copied()
    }

    pub fn get_or_compute(&self, conductor: u64) -> Result<ConductorTotal> {
        if let Some(hit) = self.get(conductor) {
            return Ok(hit);
        }
        let fresh = conductor_total(conductor, self.precision)?;
        let mut w = self.entries.write();
        let stored = *w.entry(conductor).or_insert(fresh);
        self.dirty.store(true, Ordering::Release);
        Ok(stored)
    }

    /// Compute every missing conductor in parallel.
    pub fn prefetch<I: IntoIterator<Item = u64>>(&self, conductors: I) -> Result<()> {
        let mut missing: Vec<u64> = {
            let r = self.entries.read();
            conductors
                .into_iter()
                .filter(|c| !r.contains_key(c))
                .collect()
        };
        missing.sort_unstable();
        missing.dedup();
        if missing.is_empty() {
            return Ok(());
        }
        // largest first keeps the tail of the parallel run short
        missing.reverse();
        let computed: Vec<ConductorTotal> = missing
            .par_iter()
            .map(|&c| conductor_total(c, self.precision))
            .collect::<Result<_>>()?;
        let mut w = self.entries.write();
        for t in computed {
            w.entry(t.conductor).or_insert(t);
        }
        self.dirty.store(true, Ordering::Release);
        Ok(())
    }

    /// Rewrite the backing file if anything was added. No-op in memory.
    pub fn flush(&self) -> Result<()> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        if !self.dirty.swap(false, Ordering::AcqRel) {
            return Ok(());
        }
        let records: Vec<ConductorTotal> = self.entries.read().values().copied().collect();
        write_cache_file(path, self.precision, &records)
    }

    pub fn snapshot(&self) -> Vec<ConductorTotal> {
        self.entries.read().values().copied().collect()
    }
}

impl Drop for ConductorCache {
    fn drop(&mut self) {
        let _ = self.flush();
    }
}

/// FNV-1a, 32-bit.
pub fn fnv1a32(bytes: &[u8]) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for &b in bytes {
        h ^= b as u32;
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

fn encode_record(r: &ConductorTotal) -> [u8; RECORD_LEN] {
    let mut buf = [0u8; RECORD_LEN];
    buf[0..8].copy_from_slice(&r.conductor.to_le_bytes());
    buf[8..16].copy_from_slice(&r.total.to_le_bytes());
    buf[16..24].copy_from_slice(&r.imag_residual.to_le_bytes());
    buf[24..32].copy_from_slice(&r.err_estimate.to_le_bytes());
    buf[32..36].copy_from_slice(&r.precision.0.to_le_bytes());
    buf[36..40].copy_from_slice(&r.primitive_count.to_le_bytes());
    let sum = fnv1a32(&buf[0..40]);
    buf[40..44].copy_from_slice(&sum.to_le_bytes());
    buf
}

fn le_u32(b: &[u8]) -> u32 {
    u32::from_le_bytes(b.try_into().unwrap())
}

fn le_u64(b: &[u8]) -> u64 {
    u64::from_le_bytes(b.try_into().unwrap())
}

fn le_f64(b: &[u8]) -> f64 {
    f64::from_le_bytes(b.try_into().unwrap())
}

/// Write records in ascending conductor order via a temporary file and rename.
pub fn write_cache_file(path: &Path, tag: PrecisionTag, records: &[ConductorTotal]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut sorted: Vec<&ConductorTotal> = records.iter().collect();
    sorted.sort_by_key(|r| r.conductor);
    let mut bytes = Vec::with_capacity(HEADER_LEN + RECORD_LEN * sorted.len());
    bytes.extend_from_slice(&CACHE_MAGIC);
    bytes.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    bytes.extend_from_slice(&tag.0.to_le_bytes());
    for r in sorted {
        bytes.extend_from_slice(&encode_record(r));
    }
    let tmp = path.with_extension("bin.tmp");
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Parse and checksum-verify a cache file.
pub fn read_cache_file(path: &Path) -> Result<(PrecisionTag, Vec<ConductorTotal>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let corrupt = |reason: String| Error::CacheCorrupt {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER_LEN || bytes[0..8] != CACHE_MAGIC {
        return Err(corrupt("missing magic header".into()));
    }
    let version = le_u32(&bytes[8..12]);
    if version != CACHE_VERSION {
        return Err(corrupt(format!("unsupported version {version}")));
    }
    let tag = PrecisionTag(le_u32(&bytes[12..16]));
    let body = &bytes[HEADER_LEN..];
    if body.len() % RECORD_LEN != 0 {
        return Err(corrupt(format!(
            "trailing {} bytes after the last record",
            body.len() % RECORD_LEN
        )));
    }
    let mut out = Vec::with_capacity(body.len() / RECORD_LEN);
    let mut prev = 0u64;
    for (i, rec) in body.chunks_exact(RECORD_LEN).enumerate() {
        let conductor = le_u64(&rec[0..8]);
        if fnv1a32(&rec[0..40]) != le_u32(&rec[40..44]) {
            return Err(corrupt(format!(
                "checksum mismatch in record {i} (conductor {conductor})"
            )));
        }
        let rec_tag = le_u32(&rec[32..36]);
        if rec_tag != tag.0 {
            return Err(corrupt(format!(
                "record {i} (conductor {conductor}) has tag em{rec_tag}, header says {tag}"
            )));
        }
        if conductor <= prev {
            return Err(corrupt(format!(
                "record {i} (conductor {conductor}) out of order"
            )));
        }
        prev = conductor;
        out.push(ConductorTotal {
            conductor,
            total: le_f64(&rec[8..16]),
            imag_residual: le_f64(&rec[16..24]),
            err_estimate: le_f64(&rec[24..32]),
            primitive_count: le_u32(&rec[36..40]),
            precision: tag,
        });
    }
    Ok((tag, out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CacheSummary {
    pub path: PathBuf,
    pub precision: PrecisionTag,
    pub records: usize,
    pub recomputed: usize,
}

/// Structural check of a cache file; `deep` also recomputes every record and
/// demands bit-identical totals.
pub fn verify_cache_file(path: &Path, deep: bool) -> Result<CacheSummary> {
    let (tag, records) = read_cache_file(path)?;
    let mut recomputed = 0;
    if deep {
        for r in &records {
            let fresh = conductor_total(r.conductor, tag)?;
            if fresh.total.to_bits() != r.total.to_bits()
                || fresh.primitive_count != r.primitive_count
            {
                return Err(Error::CacheCorrupt {
                    path: path.to_path_buf(),
                    reason: format!(
                        "conductor {} stored T = {} but recomputes to {}",
                        r.conductor, r.total, fresh.total
                    ),
                });
            }
            recomputed += 1;
        }
    }
    Ok(CacheSummary {
        path: path.to_path_buf(),
        precision: tag,
        records: records.len(),
        recomputed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GammaQ {
    pub q: u64,
    pub value: f64,
    pub err_estimate: f64,
}

/// `γ_q = γ + Σ_{1<q*|q} T(q*)`, summed over divisors in ascending order.
pub fn gamma_q(q: u64, cache: &ConductorCache) -> Result<GammaQ> {
    if q == 0 {
        return Err(Error::InvalidParameter("q must be at least 1".into()));
    }
    let mut value = NeumaierSum::new();
    let mut err = 0.0;
    value.add(EULER_GAMMA);
    for d in divisors(q).into_iter().skip(1) {
        let t = cache.get_or_compute(d)?;
        value.add(t.total);
        err += t.err_estimate + t.imag_residual;
    }
    Ok(GammaQ {
        q,
        value: value.value(),
        err_estimate: err,
    })
}

/// Character-free estimate of `γ_q` from primes up to `x`.
///
/// Orthogonality turns `−Σ_{χ≠χ0} Φ_χ(x)` into a sum over prime powers
/// weighted by `φ(q)[n ≡ 1 mod q] − [(n, q) = 1]`. Adding the prime-power
/// correction [`b_term`] for imprimitive layers gives
/// `γ + B(q) − Σ_n Λ(n)(x−n)/n · (φ(q)[n ≡ 1] − 1) / (x−1)`,
/// whose distance from `γ_q` is the `A` term and shrinks as `x` grows.
pub fn gamma_q_via_primes(q: u64, x: f64, tables: &ArithmeticTables) -> Result<f64> {
    if q == 0 {
        return Err(Error::InvalidParameter("q must be at least 1".into()));
    }
    let b = b_term(q, x, tables)?;
    let s = progression_discrepancy(q, x, tables)?;
    let mut acc = NeumaierSum::new();
    acc.add(EULER_GAMMA);
    acc.add(b - s);
    Ok(acc.value())
}
