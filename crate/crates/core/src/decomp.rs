//! The seven-term decomposition of `γ_q` at finite `(x, x1)`.
//!
//! ```text
//! γ_q = γ + A + B − γ2 − γ3 − (γ11 + γ12 + γ13)
//! ```
//!
//! `γ + A + B` telescopes to `γ_q + Σ_{χ≠χ0 mod q} Φ_χ(x)`. Orthogonality
//! writes that character sum as a prime-power sum with coefficients
//! `c_n = Λ(n)(φ(q)[n ≡ 1 mod q] − 1)` over every `n ≤ x`, plus `γ3` which
//! restores the prime powers sharing a factor with `q`. Splitting
//! `(x−n)/n = log(x/n) + W(n, x)` gives `γ2` and, after cutting the double
//! integral at `q` and `x1`, the three `γ1j` bands. Every integral has a step
//! integrand, so each term is a finite weighted sum over prime powers.
//!
//! `B` comes in two forms. [`b_from_characters`] is the triple sum over
//! primitive `χ*` of conductor `q* > 1`, which is what makes the identity
//! close. [`b_term`] is the simplified closed form obtained after folding in
//! the trivial conductor; it is never positive and differs from the
//! character sum by exactly `−γ3`.

use serde::{Deserialize, Serialize};

use crate::arith::{divisors, mobius, totient, ArithmeticTables};
use crate::characters::primitive_characters;
use crate::ek::{gamma_q, ConductorCache};
use crate::error::{Error, Result};
use crate::lfunc::step_weight;
use crate::summation::{ComplexSum, NeumaierSum};
use crate::EULER_GAMMA;

/// Default `x` floor and the default exponent for `x1 = q^e`.
pub const DEFAULT_X_FLOOR: f64 = 1e5;
pub const DEFAULT_X1_EXPONENT: f64 = 2.0;
/// Identity residual accepted by [`DecompositionReport::passes`].
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Band {
    /// `u < q`
    Low,
    /// `q ≤ u < x1`
    Middle,
    /// `x1 ≤ u ≤ x`
    High,
}

/// `x = max(10⁵, q²)`, capped at the sieve bound.
pub fn default_x(q: u64, bound: u64) -> f64 {
    let q = q as f64;
    DEFAULT_X_FLOOR.max(q * q).min(bound as f64)
}

/// `x1 = q^e` clamped into `[q, x]`.
pub fn x1_from_exponent(q: u64, x: f64, e: f64) -> f64 {
    let q = q as f64;
    q.powf(e).min(x).max(q)
}

fn validate(q: u64, x: f64, tables: &ArithmeticTables) -> Result<()> {
    if q == 0 {
        return Err(Error::InvalidParameter("q must be at least 1".into()));
    }
    if !(x >= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "x must be at least 2, got {x}"
        )));
    }
    tables.check_range(x)
}

fn validate_bands(q: u64, x: f64, x1: f64, tables: &ArithmeticTables) -> Result<()> {
    validate(q, x, tables)?;
    let qf = q as f64;
    if !(qf <= x1 && x1 <= x) {
        return Err(Error::InvalidParameter(format!(
            "need q ≤ x1 ≤ x, got q = {q}, x1 = {x1}, x = {x}"
        )));
    }
    Ok(())
}

/// `φ(q)[n ≡ 1 mod q] − 1`.
#[inline]
fn coefficient(n: u64, q: u64, phi_q: f64) -> f64 {
    if n % q == 1 % q {
        phi_q - 1.0
    } else {
        -1.0
    }
}

/// Visit `(n, Λ(n))` for prime powers `n ≤ x`, ascending.
fn for_each_prime_power(x: f64, tables: &ArithmeticTables, mut f: impl FnMut(u64, f64)) {
    for &n in tables.prime_powers_upto(x) {
        let n = n as u64;
        f(n, tables.lambda(n));
    }
}

/// Prime powers `p^v ≤ x` with `p | q`, grouped by ascending `p`.
fn dividing_prime_powers(q: u64, x: f64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for (p, _) in crate::arith::factorize(q) {
        let mut pv = p;
        while pv as f64 <= x {
            out.push((p, pv));
            match pv.checked_mul(p) {
                Some(next) => pv = next,
                None => break,
            }
        }
    }
    out
}

/// `(1/(x−1)) Σ_{n≤x} Λ(n)(x−n)/n · (φ(q)[n ≡ 1] − 1)`, which is
/// `γ2 + γ11 + γ12 + γ13`.
pub fn progression_discrepancy(q: u64, x: f64, tables: &ArithmeticTables) -> Result<f64> {
    validate(q, x, tables)?;
    let phi_q = totient(q) as f64;
    let mut acc = NeumaierSum::new();
    for_each_prime_power(x, tables, |n, lam| {
        acc.add(step_weight(lam, n, x) * coefficient(n, q, phi_q));
    });
    Ok(acc.value() / (x - 1.0))
}

/// `γ2 = (1/(x−1))[φ(q) Σ_{n≡1 (q)} Λ(n) log(x/n) − Σ_{n≤x} Λ(n) log(x/n)]`.
pub fn gamma2(q: u64, x: f64, tables: &ArithmeticTables) -> Result<f64> {
    validate(q, x, tables)?;
    let phi_q = totient(q) as f64;
    let mut acc = NeumaierSum::new();
    for_each_prime_power(x, tables, |n, lam| {
        acc.add(lam * (x / n as f64).ln() * coefficient(n, q, phi_q));
    });
    Ok(acc.value() / (x - 1.0))
}

/// `γ3 = (1/(x−1)) Σ_{n≤x, (n,q)>1} Λ(n)(x−n)/n`.
pub fn gamma3(q: u64, x: f64, tables: &ArithmeticTables) -> Result<f64> {
    validate(q, x, tables)?;
    let mut acc = NeumaierSum::new();
    for (_, pv) in dividing_prime_powers(q, x) {
        acc.add(step_weight(tables.lambda(pv), pv, x));
    }
    Ok(acc.value() / (x - 1.0))
}

/// `∫_n^x ∫_n^{min(t,c)} du/u² dt`, the weight of `Λ(n)` in a band ending at `c`.
#[inline]
fn band_weight(n: f64, c: f64, x: f64) -> f64 {
    if c <= n {
        return 0.0;
    }
    (c - n) / n - (c / n).ln() + (x - c) * (1.0 / n - 1.0 / c)
}

/// All three `γ1j` in one pass over the prime powers.
pub fn gamma1_bands(q: u64, x: f64, x1: f64, tables: &ArithmeticTables) -> Result<[f64; 3]> {
    validate_bands(q, x, x1, tables)?;
    let qf = q as f64;
    let phi_q = totient(q) as f64;
    let mut acc = [NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new()];
    for_each_prime_power(x, tables, |n, lam| {
        let c = lam * coefficient(n, q, phi_q);
        let nf = n as f64;
        let w_q = band_weight(nf, qf, x);
        let w_x1 = band_weight(nf, x1, x);
        let w_x = band_weight(nf, x, x);
        acc[0].add(c * w_q);
        acc[1].add(c * (w_x1 - w_q));
        acc[2].add(c * (w_x - w_x1));
    });
    let d = x - 1.0;
    Ok([acc[0].value() / d, acc[1].value() / d, acc[2].value() / d])
}

/// One band of `γ1 = (1/(x−1)) ∫_1^x ∫_1^t [φ(q)ψ(u;q,1) − ψ(u)]/u² du dt`,
/// the inner integral restricted to `band`.
pub fn gamma1j(q: u64, x: f64, x1: f64, tables: &ArithmeticTables, band: Band) -> Result<f64> {
    let all = gamma1_bands(q, x, x1, tables)?;
    Ok(match band {
        Band::Low => all[0],
        Band::Middle => all[1],
        Band::High => all[2],
    })
}

/// `Σ_{q*|q, d|q*, p∤q*} μ(q*/d)`, the divisor `q* = 1` included.
pub fn inner_mobius_sum(q: u64, p: u64, d: u64) -> i64 {
    if d == 0 || q % d != 0 {
        return 0;
    }
    divisors(q / d)
        .into_iter()
        .map(|m| m * d)
        .filter(|qs| qs % p != 0)
        .map(|qs| mobius(qs / d))
        .sum()
}

/// `w(p, v, q) = Σ_{d | p^v − 1} φ(d) · inner_mobius_sum(q, p, d)`.
pub fn prime_power_weight(q: u64, p: u64, pv: u64) -> i64 {
    divisors(pv - 1)
        .into_iter()
        .filter(|d| q % d == 0)
        .map(|d| totient(d) as i64 * inner_mobius_sum(q, p, d))
        .sum()
}

/// `B(q) = −(1/(x−1)) Σ_{p|q} Σ_{p^v≤x} Λ(p^v)(x − p^v)/p^v · w(p, v, q)`.
pub fn b_term(q: u64, x: f64, tables: &ArithmeticTables) -> Result<f64> {
    validate(q, x, tables)?;
    let mut acc = NeumaierSum::new();
    for (p, pv) in dividing_prime_powers(q, x) {
        let w = prime_power_weight(q, p, pv);
        acc.add(step_weight(tables.lambda(pv), pv, x) * w as f64);
    }
    Ok(-acc.value() / (x - 1.0))
}

/// `B` as the character triple sum over primitive `χ*` mod `q* | q`, `q* > 1`,
/// restricted to prime powers sharing a factor with `q`.
pub fn b_from_characters(q: u64, x: f64, tables: &ArithmeticTables) -> Result<f64> {
    validate(q, x, tables)?;
    let powers = dividing_prime_powers(q, x);
    let mut acc = ComplexSum::new();
    for qs in divisors(q).into_iter().skip(1) {
        for chi in primitive_characters(qs) {
            for &(p, pv) in &powers {
                if qs % p != 0 {
                    acc.add(chi.evaluate(pv) * step_weight(tables.lambda(pv), pv, x));
                }
            }
        }
    }
    Ok(-acc.value().re / (x - 1.0))
}

/// `Re Σ_{χ* primitive mod q*} Φ_{χ*}(x)`, bucketing `n` by residue first.
pub fn primitive_phi_total(conductor: u64, x: f64, tables: &ArithmeticTables) -> Result<f64> {
    validate(conductor, x, tables)?;
    let chars = primitive_characters(conductor);
    if chars.is_empty() {
        return Ok(0.0);
    }
    let m = conductor as usize;
    let mut buckets = vec![NeumaierSum::new(); m];
    for_each_prime_power(x, tables, |n, lam| {
        buckets[n as usize % m].add(step_weight(lam, n, x));
    });
    let sums: Vec<f64> = buckets.iter().map(NeumaierSum::value).collect();
    let mut acc = ComplexSum::new();
    for chi in &chars {
        let phases = chi.phase_table();
        for (r, &s) in sums.iter().enumerate() {
            if s != 0.0 {
                acc.add(chi.evaluate_with(&phases, r as u64) * s);
            }
        }
    }
    Ok(acc.value().re / (x - 1.0))
}

/// `Re Σ_{χ ≠ χ0 mod q} Φ_χ(x)` by orthogonality, `= progression_discrepancy + γ3`.
pub fn nonprincipal_phi_sum(q: u64, x: f64, tables: &ArithmeticTables) -> Result<f64> {
    let mut acc = NeumaierSum::new();
    acc.add(progression_discrepancy(q, x, tables)?);
    acc.add(gamma3(q, x, tables)?);
    Ok(acc.value())
}

/// `A = Σ_{1<q*|q} Σ_{χ*} [L'/L(1, χ*) + Φ_{χ*}(x)]`.
pub fn a_term(q: u64, x: f64, tables: &ArithmeticTables, cache: &ConductorCache) -> Result<f64> {
    validate(q, x, tables)?;
    let mut acc = NeumaierSum::new();
    for qs in divisors(q).into_iter().skip(1) {
        if qs % 4 == 2 {
            continue;
        }
        acc.add(cache.get_or_compute(qs)?.total);
        acc.add(primitive_phi_total(qs, x, tables)?);
    }
    Ok(acc.value())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub q: u64,
    pub x: f64,
    pub x1: f64,
    pub a: f64,
    /// Character form of `B`, the one entering the identity.
    pub b: f64,
    /// Simplified closed form of `B`; always `≤ 0`.
    pub b_simplified: f64,
    pub g2: f64,
    pub g3: f64,
    pub g11: f64,
    pub g12: f64,
    pub g13: f64,
    pub gamma_q_lhs: f64,
    /// `γ_q − (γ + A + B − γ2 − γ3 − γ11 − γ12 − γ13)`.
    pub residual: f64,
    /// `b − b_simplified − g3`, zero up to rounding.
    pub b_gap: f64,
}

impl DecompositionReport {
    pub fn passes(&self) -> bool {
        self.residual.abs() <= RESIDUAL_TOLERANCE
    }

    /// Right-hand side of the identity.
    pub fn rhs(&self) -> f64 {
        let mut acc = NeumaierSum::new();
        for t in [
            EULER_GAMMA,
            self.a,
            self.b,
            -self.g2,
            -self.g3,
            -self.g11,
            -self.g12,
            -self.g13,
        ] {
            acc.add(t);
        }
        acc.value()
    }
}

pub fn decompose(
    q: u64,
    x: f64,
    x1: f64,
    tables: &ArithmeticTables,
    cache: &ConductorCache,
) -> Result<DecompositionReport> {
    validate_bands(q, x, x1, tables)?;
    let lhs = gamma_q(q, cache)?.value;
    let a = a_term(q, x, tables, cache)?;
    let b = b_from_characters(q, x, tables)?;
    let b_simplified = b_term(q, x, tables)?;
    let g2 = gamma2(q, x, tables)?;
    let g3 = gamma3(q, x, tables)?;
    let [g11, g12, g13] = gamma1_bands(q, x, x1, tables)?;
    let mut report = DecompositionReport {
        q,
        x,
        x1,
        a,
        b,
        b_simplified,
        g2,
        g3,
        g11,
        g12,
        g13,
        gamma_q_lhs: lhs,
        residual: 0.0,
        b_gap: b - b_simplified - g3,
    };
    report.residual = lhs - report.rhs();
    Ok(report)
}
