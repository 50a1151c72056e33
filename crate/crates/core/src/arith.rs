//! Sieved arithmetic tables and Chebyshev-type sums.
//!
//! [`ArithmeticTables`] is built by one pass of a linear sieve, which yields
//! the smallest prime factor of every `n ≤ N` and with it `Λ(n)`, `φ(n)` and
//! `μ(n)`. Tables are immutable once built and can be shared across threads.
//!
//! Memory use is about 17 bytes per integer plus the prime lists, so the
//! in-memory bound is capped at [`MAX_TABLE_BOUND`]. Beyond that, use
//! [`psi_streaming`] and [`psi_mod_streaming`], which walk a segmented
//! Eratosthenes sieve with segments of [`STREAM_SEGMENT`] integers.

use crate::error::{Error, Result};
use crate::summation::NeumaierSum;

/// Largest sieve bound accepted by [`ArithmeticTables::build`].
pub const MAX_TABLE_BOUND: u64 = 100_000_000;

/// Segment length used by the streaming sums.
pub const STREAM_SEGMENT: usize = 1 << 20;

#[derive(Debug, Clone)]
pub struct ArithmeticTables {
    bound: usize,
    spf: Vec<u32>,
    lambda: Vec<f64>,
    phi: Vec<u32>,
    mu: Vec<i8>,
    primes: Vec<u32>,
    prime_powers: Vec<u32>,
}

impl ArithmeticTables {
    /// Sieves every table up to `bound` inclusive.
    pub fn build(bound: u64) -> Result<Self> {
        if bound < 2 {
            return Err(Error::BoundTooSmall(bound));
        }
        if bound > MAX_TABLE_BOUND {
            return Err(Error::Capacity {
                requested: bound,
                max: MAX_TABLE_BOUND,
            });
        }
        let n = bound as usize;
        let mut spf = vec![0u32; n + 1];
        let mut lambda = vec![0.0f64; n + 1];
        let mut phi = vec![0u32; n + 1];
        let mut mu = vec![0i8; n + 1];
        let mut primes: Vec<u32> = Vec::with_capacity(prime_count_upper(n));

        spf[1] = 1;
        phi[1] = 1;
        mu[1] = 1;
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                phi[i] = i as u32 - 1;
                mu[i] = -1;
                lambda[i] = (i as f64).ln();
                primes.push(i as u32);
            }
            let spf_i = spf[i];
            for k in 0..primes.len() {
                let p = primes[k];
                let ip = i * p as usize;
                if p > spf_i || ip > n {
                    break;
                }
                spf[ip] = p;
                if p == spf_i {
                    phi[ip] = phi[i] * p;
                    mu[ip] = 0;
                    // i is a power of p exactly when Λ(i) ≠ 0
                    lambda[ip] = lambda[i];
                } else {
                    phi[ip] = phi[i] * (p - 1);
                    mu[ip] = -mu[i];
                }
            }
        }

        let prime_powers = (2..=n)
            .filter(|&k| lambda[k] != 0.0)
            .map(|k| k as u32)
            .collect();

        Ok(Self {
            bound: n,
            spf,
            lambda,
            phi,
            mu,
            primes,
            prime_powers,
        })
    }

    pub fn bound(&self) -> u64 {
        self.bound as u64
    }

    /// `Λ(n)`. Panics if `n` exceeds the bound.
    #[inline]
    pub fn lambda(&self, n: u64) -> f64 {
        self.lambda[n as usize]
    }

    #[inline]
    pub fn phi(&self, n: u64) -> u64 {
        self.phi[n as usize] as u64
    }

    #[inline]
    pub fn mu(&self, n: u64) -> i8 {
        self.mu[n as usize]
    }

    #[inline]
    pub fn spf(&self, n: u64) -> u64 {
        self.spf[n as usize] as u64
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// All prime powers `p^k ≤ N` (k ≥ 1), ascending.
    pub fn prime_powers(&self) -> &[u32] {
        &self.prime_powers
    }

    /// Prime powers not exceeding `x`.
    pub fn prime_powers_upto(&self, x: f64) -> &[u32] {
        let limit = x.floor();
        let end = self.prime_powers.partition_point(|&n| (n as f64) <= limit);
        &self.prime_powers[..end]
    }

    /// Primes not exceeding `x`.
    pub fn primes_upto(&self, x: f64) -> &[u32] {
        let limit = x.floor();
        let end = self.primes.partition_point(|&p| (p as f64) <= limit);
        &self.primes[..end]
    }

    pub(crate) fn check_range(&self, x: f64) -> Result<()> {
        if !x.is_finite() || x.floor() > self.bound as f64 {
            return Err(Error::OutOfRange {
                x,
                bound: self.bound as u64,
            });
        }
        Ok(())
    }

    /// Factorization of `n ≤ N` read off the smallest-prime-factor table.
    pub fn factorize(&self, mut n: u64) -> Vec<(u64, u32)> {
        let mut out: Vec<(u64, u32)> = Vec::new();
        while n > 1 {
            let p = self.spf(n);
            let mut k = 0;
            while n % p == 0 {
                n /= p;
                k += 1;
            }
            out.push((p, k));
        }
        out
    }
}

/// Chebyshev's `ψ(x) = Σ_{n ≤ x} Λ(n)`.
pub fn psi(tables: &ArithmeticTables, x: f64) -> Result<f64> {
    tables.check_range(x)?;
    if x < 2.0 {
        return Ok(0.0);
    }
    let mut acc = NeumaierSum::new();
    for &n in tables.prime_powers_upto(x) {
        acc.add(tables.lambda[n as usize]);
    }
    Ok(acc.value())
}

/// `ψ(x; q, a) = Σ_{n ≤ x, n ≡ a (mod q)} Λ(n)`.
pub fn psi_mod(tables: &ArithmeticTables, x: f64, q: u64, a: u64) -> Result<f64> {
    tables.check_range(x)?;
    if q == 0 || a >= q {
        return Err(Error::InvalidParameter(format!(
            "residue class {a} mod {q} requires q ≥ 1 and 0 ≤ a < q"
        )));
    }
    if x < 2.0 {
        return Ok(0.0);
    }
    let limit = x.floor() as u64;
    let mut acc = NeumaierSum::new();
    let powers = tables.prime_powers_upto(x);
    if limit / q < powers.len() as u64 {
        let mut n = if a == 0 { q } else { a };
        while n <= limit {
            acc.add(tables.lambda[n as usize]);
            n += q;
        }
    } else {
        for &n in powers {
            if n as u64 % q == a {
                acc.add(tables.lambda[n as usize]);
            }
        }
    }
    Ok(acc.value())
}

/// Streaming `ψ(x)`; memory is bounded by one sieve segment plus the primes
/// up to `√x`.
pub fn psi_streaming(x: f64) -> f64 {
    let mut acc = NeumaierSum::new();
    for_each_prime_power(x, |_, lam| acc.add(lam));
    acc.value()
}

/// Streaming `ψ(x; q, a)`.
pub fn psi_mod_streaming(x: f64, q: u64, a: u64) -> Result<f64> {
    if q == 0 || a >= q {
        return Err(Error::InvalidParameter(format!(
            "residue class {a} mod {q} requires q ≥ 1 and 0 ≤ a < q"
        )));
    }
    let mut acc = NeumaierSum::new();
    for_each_prime_power(x, |n, lam| {
        if n % q == a {
            acc.add(lam);
        }
    });
    Ok(acc.value())
}

/// Calls `f(n, Λ(n))` for every prime power `n ≤ x` in ascending order using
/// a segmented sieve.
pub fn for_each_prime_power(x: f64, mut f: impl FnMut(u64, f64)) {
    if !(x >= 2.0) {
        return;
    }
    let limit = x.floor() as u64;
    let root = isqrt(limit);
    let base = simple_primes(root);

    // higher powers p^k, k ≥ 2, all have p ≤ √x
    let mut higher: Vec<(u64, f64)> = Vec::new();
    for &p in &base {
        let lp = (p as f64).ln();
        let mut pk = p * p;
        while pk <= limit {
            higher.push((pk, lp));
            match pk.checked_mul(p) {
                Some(v) => pk = v,
                None => break,
            }
        }
    }
    higher.sort_unstable_by_key(|&(n, _)| n);
    let mut hi_idx = 0;

    let seg = STREAM_SEGMENT as u64;
    let mut composite = vec![false; STREAM_SEGMENT];
    let mut lo = 2u64;
    while lo <= limit {
        let hi = (lo + seg - 1).min(limit);
        let len = (hi - lo + 1) as usize;
        composite[..len].iter_mut().for_each(|c| *c = false);
        for &p in &base {
            if p * p > hi {
                break;
            }
            let mut start = lo.div_ceil(p) * p;
            if start < p * p {
                start = p * p;
            }
            let mut m = start;
            while m <= hi {
                composite[(m - lo) as usize] = true;
                m += p;
            }
        }
        for (off, &c) in composite[..len].iter().enumerate() {
            let n = lo + off as u64;
            while hi_idx < higher.len() && higher[hi_idx].0 < n {
                f(higher[hi_idx].0, higher[hi_idx].1);
                hi_idx += 1;
            }
            if !c {
                f(n, (n as f64).ln());
            }
        }
        lo = hi + 1;
    }
    while hi_idx < higher.len() {
        f(higher[hi_idx].0, higher[hi_idx].1);
        hi_idx += 1;
    }
}

fn simple_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

fn prime_count_upper(n: usize) -> usize {
    if n < 17 {
        return 8;
    }
    let x = n as f64;
    (1.26 * x / x.ln()) as usize + 8
}

pub fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// Trial-division factorization, primes ascending.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut k = 0;
            while n % p == 0 {
                n /= p;
                k += 1;
            }
            out.push((p, k));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// All positive divisors of `n`, ascending.
pub fn divisors(n: u64) -> Vec<u64> {
    assert!(n >= 1, "divisors of 0 are not defined");
    let mut divs = vec![1u64];
    for (p, k) in factorize(n) {
        let len = divs.len();
        let mut pk = 1;
        for _ in 0..k {
            pk *= p;
            for i in 0..len {
                divs.push(divs[i] * pk);
            }
        }
    }
    divs.sort_unstable();
    divs
}

pub fn totient(n: u64) -> u64 {
    factorize(n)
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1))
}

pub fn mobius(n: u64) -> i64 {
    let f = factorize(n);
    if f.iter().any(|&(_, k)| k > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut result = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            result = (result as u128 * base as u128 % m as u128) as u64;
        }
        base = (base as u128 * base as u128 % m as u128) as u64;
        exp >>= 1;
    }
    result
}

/// `n` with every factor of `p` removed.
pub fn strip_prime(mut n: u64, p: u64) -> u64 {
    while n % p == 0 {
        n /= p;
    }
    n
}
