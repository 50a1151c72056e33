//! Digamma and the first two generalized Stieltjes constants at rational
//! arguments.
//!
//! Convention: `ζ(s, x) = 1/(s-1) + Σ_{n≥0} (-1)^n γ_n(x) (s-1)^n / n!`, so
//! `γ_0(x) = -ψ(x)` and `γ_0(1) = γ`.
//!
//! [`digamma_rational`] uses Gauss's finite closed form. [`stieltjes01`]
//! expands the Euler-Maclaurin representation of `ζ(s, x)` about `s = 1`:
//! with `w = x + N` and `ℓ = log w`,
//!
//! ```text
//! γ_0(x) = Σ_{k<N} 1/(x+k) − ℓ + 1/(2w) + Σ_j B_2j/(2j) · w^{-2j}
//! γ_1(x) = Σ_{k<N} log(x+k)/(x+k) − ℓ²/2 + ℓ/(2w)
//!          − Σ_j B_2j/(2j) · w^{-2j} · (H_{2j-1} − ℓ)
//! ```
//!
//! with Bernoulli corrections through `B_12`.

use std::collections::HashMap;
use std::f64::consts::PI;

use parking_lot::RwLock;

use crate::arith::gcd;
use crate::error::{Error, Result};
use crate::summation::NeumaierSum;
use crate::EULER_GAMMA;

pub const DEFAULT_SHIFT: u32 = 50;
pub const MIN_SHIFT: u32 = 10;
pub const TARGET_ERROR: f64 = 1e-11;

/// `B_2, B_4, …, B_12`.
const BERNOULLI: [f64; 6] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
];
/// First omitted correction.
const B14: f64 = 7.0 / 6.0;

/// `H_1, H_3, …, H_11`.
const ODD_HARMONIC: [f64; 6] = [
    1.0,
    11.0 / 6.0,
    137.0 / 60.0,
    363.0 / 140.0,
    7129.0 / 2520.0,
    83711.0 / 27720.0,
];
const H13: f64 = 1145993.0 / 360360.0;

/// `ψ(a/q)` for `1 ≤ a ≤ q` by Gauss's digamma theorem.
pub fn digamma_rational(a: u64, q: u64) -> f64 {
    assert!(a >= 1 && a <= q, "digamma_rational needs 1 ≤ a ≤ q");
    let g = gcd(a, q);
    let (r, m) = (a / g, q / g);
    if r == m {
        return -EULER_GAMMA;
    }
    let mf = m as f64;
    let mut acc = NeumaierSum::new();
    acc.add(-EULER_GAMMA);
    acc.add(-(2.0 * mf).ln());
    let (s, c) = (PI * r as f64 / mf).sin_cos();
    acc.add(-0.5 * PI * c / s);
    for k in 1..=(m - 1) / 2 {
        let j = k * r % m;
        let j = j.min(m - j);
        let cosine = (2.0 * PI * j as f64 / mf).cos();
        let log_sine = (PI * k as f64 / mf).sin().ln();
        acc.add(2.0 * cosine * log_sine);
    }
    acc.value()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StieltjesPair {
    pub numerator: u64,
    pub denominator: u64,
    pub gamma0: f64,
    pub gamma1: f64,
    pub err_estimate: f64,
}

/// `γ_0(a/q)` and `γ_1(a/q)` for `1 ≤ a ≤ q` with Euler-Maclaurin shift `shift`.
pub fn stieltjes01(a: u64, q: u64, shift: u32) -> Result<StieltjesPair> {
    if a == 0 || a > q {
        return Err(Error::InvalidParameter(format!(
            "Stieltjes argument {a}/{q} must lie in (0, 1]"
        )));
    }
    let (gamma0, gamma1, err_estimate) = stieltjes_at(a as f64 / q as f64, shift)?;
    Ok(StieltjesPair {
        numerator: a,
        denominator: q,
        gamma0,
        gamma1,
        err_estimate,
    })
}

/// `(γ_0(x), γ_1(x), error estimate)` for any real `x > 0`.
pub fn stieltjes_at(x: f64, shift: u32) -> Result<(f64, f64, f64)> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Stieltjes argument {x} must be positive"
        )));
    }
    let w = x + shift as f64;
    let ell = w.ln();
    let truncation = 2.0 * B14.abs() / 14.0 * w.powi(-14) * (1.0 + H13 + ell);
    if shift < MIN_SHIFT || truncation > TARGET_ERROR {
        return Err(Error::InsufficientPrecision {
            shift,
            estimate: truncation,
            target: TARGET_ERROR,
        });
    }

    let mut g0 = NeumaierSum::new();
    let mut g1 = NeumaierSum::new();
    let mut magnitude = 0.0;
    for k in 0..shift {
        let v = x + k as f64;
        let inv = 1.0 / v;
        let t1 = v.ln() * inv;
        g0.add(inv);
        g1.add(t1);
        magnitude += inv + t1.abs();
    }
    g0.add(-ell);
    g0.add(0.5 / w);
    g1.add(-0.5 * ell * ell);
    g1.add(0.5 * ell / w);
    magnitude += ell + 0.5 * ell * ell;

    let w2 = 1.0 / (w * w);
    let mut wpow = w2;
    for (j, (&b, &h)) in BERNOULLI.iter().zip(&ODD_HARMONIC).enumerate() {
        let c = b / (2 * (j + 1)) as f64 * wpow;
        g0.add(c);
        g1.add(-c * (h - ell));
        wpow *= w2;
    }

    let rounding = 4.0 * f64::EPSILON * magnitude;
    Ok((g0.value(), g1.value(), truncation + rounding))
}

/// Memo table for [`stieltjes01`] keyed by the reduced fraction and shift.
/// Readers proceed concurrently; inserts take the write lock briefly.
#[derive(Debug, Default)]
pub struct StieltjesCache {
    entries: RwLock<HashMap<(u64, u64, u32), StieltjesPair>>,
}

impl StieltjesCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_compute(&self, a: u64, q: u64, shift: u32) -> Result<StieltjesPair> {
        let g = gcd(a, q).max(1);
        let key = (a / g, q / g, shift);
        if let Some(hit) = self.entries.read().get(&key) {
            return Ok(StieltjesPair {
                numerator: a,
                denominator: q,
                ..*hit
            });
        }
        let pair = stieltjes01(key.0, key.1, shift)?;
        self.entries.write().entry(key).or_insert(pair);
        Ok(StieltjesPair {
            numerator: a,
            denominator: q,
            ..pair
        })
    }

    pub fn len(&self) -> usize {
        self.entries.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent values from mpmath (digamma, stieltjes) at 30 digits.
    const STIELTJES1_AT_1: f64 = -0.072_815_845_483_676_724_86;

    #[test]
    fn digamma_reference_points() {
        assert!((digamma_rational(1, 1) + EULER_GAMMA).abs() < 1e-15);
        let half = -EULER_GAMMA - 2.0 * 2f64.ln();
        assert!((digamma_rational(1, 2) - half).abs() < 1e-13);
        assert!((digamma_rational(1, 2) + 1.963_510_026_021_423_5).abs() < 1e-12);
        assert!((digamma_rational(2, 4) - half).abs() < 1e-13);
        // ψ(4/3) − ψ(1/3) = 3, with ψ(4/3) from the Euler-Maclaurin route
        let (g0_43, _, _) = stieltjes_at(4.0 / 3.0, DEFAULT_SHIFT).unwrap();
        assert!((-g0_43 - digamma_rational(1, 3) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn stieltjes_reference_points() {
        let p = stieltjes01(1, 1, DEFAULT_SHIFT).unwrap();
        assert!((p.gamma0 - EULER_GAMMA).abs() < 1e-14);
        assert!((p.gamma1 - STIELTJES1_AT_1).abs() < 1e-13);
        assert!(p.err_estimate < TARGET_ERROR);
        let third = stieltjes01(1, 3, DEFAULT_SHIFT).unwrap();
        let (_, g1_43, _) = stieltjes_at(4.0 / 3.0, DEFAULT_SHIFT).unwrap();
        assert!((third.gamma1 - g1_43 + 3.0 * 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn shift_too_small_reports_estimate() {
        match stieltjes01(1, 2, 4) {
            Err(Error::InsufficientPrecision { estimate, .. }) => assert!(estimate > 0.0),
            other => panic!("expected precision error, got {other:?}"),
        }
        assert!(stieltjes01(0, 3, 50).is_err());
        assert!(stieltjes01(4, 3, 50).is_err());
    }

    #[test]
    fn gauss_and_euler_maclaurin_agree() {
        for q in 1..=50u64 {
            for a in 1..=q {
                let p = stieltjes01(a, q, DEFAULT_SHIFT).unwrap();
                let d = digamma_rational(a, q);
                assert!(
                    (p.gamma0 + d).abs() <= 1e-12 + p.err_estimate,
                    "{a}/{q}: {} vs {}",
                    p.gamma0,
                    -d
                );
            }
        }
    }

    #[test]
    fn doubling_shift_stays_within_estimate() {
        for (a, q) in [(1u64, 1u64), (1, 2048), (7, 9), (1000, 1999), (3, 4)] {
            let p = stieltjes01(a, q, 50).unwrap();
            let r = stieltjes01(a, q, 100).unwrap();
            assert!((p.gamma0 - r.gamma0).abs() <= p.err_estimate, "{a}/{q}");
            assert!((p.gamma1 - r.gamma1).abs() <= p.err_estimate, "{a}/{q}");
        }
    }

    #[test]
    fn cache_returns_the_same_bits() {
        let cache = StieltjesCache::new();
        let a = cache.get_or_compute(2, 6, 50).unwrap();
        let b = cache.get_or_compute(1, 3, 50).unwrap();
        assert_eq!(cache.len(), 1);
        assert_eq!(a.gamma1.to_bits(), b.gamma1.to_bits());
        assert_eq!(a.numerator, 2);
        let direct = stieltjes01(1, 3, 50).unwrap();
        assert_eq!(direct.gamma0.to_bits(), b.gamma0.to_bits());
    }

    #[test]
    fn cache_is_shareable_across_threads() {
        let cache = std::sync::Arc::new(StieltjesCache::new());
        let handles: Vec<_> = (0..4)
            .map(|t| {
                let c = cache.clone();
                std::thread::spawn(move || {
                    for a in 1..=60u64 {
                        c.get_or_compute(a, 61 + t % 2, 50).unwrap();
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert_eq!(cache.len(), 120);
    }
}
