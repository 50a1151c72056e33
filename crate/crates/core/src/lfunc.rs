//! `L(1, χ)`, `L'(1, χ)` and the prime-sum proxy `Φ_χ(x)`.
//!
//! Writing `L(s, χ) = q^{-s} Σ_a χ(a) ζ(s, a/q)` and expanding each Hurwitz
//! zeta about `s = 1`, the poles cancel because `Σ_a χ(a) = 0` for
//! non-principal `χ`, leaving
//!
//! ```text
//! L(1, χ)  = (1/q) Σ_a χ(a) γ_0(a/q)
//! L'(1, χ) = −log q · L(1, χ) − (1/q) Σ_a χ(a) γ_1(a/q)
//! ```
//!
//! The pole terms are never formed. `Φ_χ(x)` is the Cesàro-type mean of the
//! partial sums of `Λ(n)χ(n)/n`; since the partial sum is a step function the
//! defining integral collapses to `(1/(x−1)) Σ_{n≤x} Λ(n)χ(n)(x−n)/n`.

use num_complex::Complex64;

use crate::arith::ArithmeticTables;
use crate::characters::{CharacterGroup, DirichletCharacter, NOT_A_UNIT};
use crate::error::{Error, Result};
use crate::special::{stieltjes01, DEFAULT_SHIFT};
use crate::summation::ComplexSum;

/// Smallest `|L(1, χ)|` accepted before dividing.
pub const MIN_L_MAGNITUDE: f64 = 1e-6;

/// `γ_0(a/q)` and `γ_1(a/q)` for every unit `a`, laid out in the order of
/// [`CharacterGroup::units_by_exponent`].
#[derive(Debug, Clone)]
pub struct HurwitzTable {
    modulus: u64,
    shift: u32,
    gamma0: Vec<f64>,
    gamma1: Vec<f64>,
    mean_err: f64,
}

impl HurwitzTable {
    pub fn new(group: &CharacterGroup, shift: u32) -> Result<Self> {
        let q = group.modulus();
        let units = group.units_by_exponent();
        let mut gamma0 = Vec::with_capacity(units.len());
        let mut gamma1 = Vec::with_capacity(units.len());
        let mut err = 0.0;
        for &a in &units {
            let a = if a == 0 { q } else { a };
            let p = stieltjes01(a, q, shift)?;
            gamma0.push(p.gamma0);
            gamma1.push(p.gamma1);
            err += p.err_estimate;
        }
        Ok(Self {
            modulus: q,
            shift,
            gamma0,
            gamma1,
            mean_err: err / units.len() as f64,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn shift(&self) -> u32 {
        self.shift
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LValueRecord {
    pub modulus: u64,
    pub exponents: Vec<u64>,
    pub l1: Complex64,
    pub l1_prime: Complex64,
    pub log_deriv: Complex64,
    pub err_estimate: f64,
}

/// `L(1, χ)`, `L'(1, χ)` and their ratio from a precomputed table.
pub fn l_values(chi: &DirichletCharacter, table: &HurwitzTable) -> Result<LValueRecord> {
    let q = chi.modulus();
    debug_assert_eq!(q, table.modulus);
    if chi.is_principal() {
        return Err(Error::PrincipalCharacter { modulus: q });
    }
    let group = chi.group();
    let mut s0 = ComplexSum::new();
    let mut s1 = ComplexSum::new();
    for ((ph, &g0), &g1) in chi
        .phases_by_exponent()
        .into_iter()
        .zip(&table.gamma0)
        .zip(&table.gamma1)
    {
        let z = group.root(ph);
        s0.add(z * g0);
        s1.add(z * g1);
    }
    let qf = q as f64;
    let l1 = s0.value() / qf;
    let l1_prime = -qf.ln() * l1 - s1.value() / qf;
    let magnitude = l1.norm();
    if magnitude < MIN_L_MAGNITUDE {
        return Err(Error::VanishingL {
            modulus: q,
            magnitude,
        });
    }
    let log_deriv = l1_prime / l1;
    let err_l1 = table.mean_err;
    let err_l1_prime = qf.ln() * err_l1 + table.mean_err;
    let err_estimate = (err_l1_prime + log_deriv.norm() * err_l1) / magnitude;
    Ok(LValueRecord {
        modulus: q,
        exponents: chi.exponents().to_vec(),
        l1,
        l1_prime,
        log_deriv,
        err_estimate,
    })
}

/// `L(1, χ)` at the default Euler-Maclaurin shift.
pub fn l_at_one(chi: &DirichletCharacter) -> Result<Complex64> {
    let table = HurwitzTable::new(chi.group(), DEFAULT_SHIFT)?;
    Ok(l_values(chi, &table)?.l1)
}

/// `L'(1, χ)` at the default Euler-Maclaurin shift.
pub fn l_prime_at_one(chi: &DirichletCharacter) -> Result<Complex64> {
    let table = HurwitzTable::new(chi.group(), DEFAULT_SHIFT)?;
    Ok(l_values(chi, &table)?.l1_prime)
}

/// `Φ_χ(x) = (1/(x−1)) ∫_1^x Σ_{n≤t} Λ(n)χ(n)/n dt`, evaluated exactly.
pub fn phi_chi(chi: &DirichletCharacter, x: f64, tables: &ArithmeticTables) -> Result<Complex64> {
    if !(x >= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "Φ_χ(x) needs x ≥ 2, got {x}"
        )));
    }
    tables.check_range(x)?;
    let phases = chi.phase_table();
    let mut acc = ComplexSum::new();
    for &n in tables.prime_powers_upto(x) {
        let n = n as u64;
        if phases[(n % chi.modulus()) as usize] != NOT_A_UNIT {
            let w = step_weight(tables.lambda(n), n, x);
            acc.add(chi.evaluate_with(&phases, n) * w);
        }
    }
    Ok(acc.value() / (x - 1.0))
}

/// `Λ(n)(x − n)/n`: the contribution of `n` to `∫_1^x Σ_{m≤t} Λ(m)/m dt`.
#[inline]
pub(crate) fn step_weight(lambda: f64, n: u64, x: f64) -> f64 {
    lambda * (x - n as f64) / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::{enumerate_characters, primitive_characters};
    use std::f64::consts::PI;

    fn leibniz_pi_over_4(terms: usize) -> f64 {
        // alternating series with the averaged last two partial sums
        let mut s = 0.0;
        let mut prev = 0.0;
        for k in 0..terms {
            prev = s;
            let t = 1.0 / (2 * k + 1) as f64;
            s += if k % 2 == 0 { t } else { -t };
        }
        0.5 * (s + prev)
    }

    #[test]
    fn quadratic_character_mod_4() {
        let chi = &primitive_characters(4)[0];
        let l1 = l_at_one(chi).unwrap();
        assert!((l1.re - PI / 4.0).abs() < 1e-12);
        assert!(l1.im.abs() < 1e-15);
        assert!((leibniz_pi_over_4(1_000_000) - l1.re).abs() < 1e-11);
        // L'/L(1, χ_{-4}) = γ + 2 log 2 + 3 log π − 4 log Γ(1/4), from mpmath
        let ld = l_prime_at_one(chi).unwrap() / l1;
        assert!((ld.re - 0.245_609_584_777_314_17).abs() < 1e-11);
    }

    #[test]
    fn principal_character_is_rejected() {
        let g = CharacterGroup::new(5);
        let chars = enumerate_characters(&g);
        assert!(matches!(
            l_at_one(&chars[0]),
            Err(Error::PrincipalCharacter { modulus: 5 })
        ));
    }

    #[test]
    fn conjugate_symmetry_and_real_characters() {
        let g = CharacterGroup::new(5);
        let table = HurwitzTable::new(&g, DEFAULT_SHIFT).unwrap();
        for chi in enumerate_characters(&g).iter().skip(1) {
            let a = l_values(chi, &table).unwrap();
            let b = l_values(&chi.conj(), &table).unwrap();
            assert!((a.l1 - b.l1.conj()).norm() < 1e-14);
            assert!((a.l1_prime - b.l1_prime.conj()).norm() < 1e-13);
        }
        for q in 3..=100u64 {
            let g = CharacterGroup::new(q);
            let table = HurwitzTable::new(&g, DEFAULT_SHIFT).unwrap();
            for chi in enumerate_characters(&g)
                .iter()
                .filter(|c| c.is_real() && !c.is_principal())
            {
                let r = l_values(chi, &table).unwrap();
                assert!(r.l1.re > 0.0, "L(1,χ) ≤ 0 mod {q}");
                assert!(r.l1.im.abs() < 1e-9 && r.l1_prime.im.abs() < 1e-9);
                assert!(r.log_deriv.im.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn log_derivative_finite_and_consistent() {
        for q in 3..=50u64 {
            let g = CharacterGroup::new(q);
            let table = HurwitzTable::new(&g, DEFAULT_SHIFT).unwrap();
            for chi in primitive_characters(q) {
                let chi = DirichletCharacter::new(g.clone(), chi.exponents().to_vec());
                let r = l_values(&chi, &table).unwrap();
                assert!(r.log_deriv.re.is_finite() && r.log_deriv.im.is_finite());
                let back = r.log_deriv * r.l1;
                assert!((back - r.l1_prime).norm() <= 1e-9 * r.l1_prime.norm().max(1e-300));
                assert!(r.err_estimate < 1e-9);
            }
        }
    }

    #[test]
    fn phi_small_cases() {
        let t = ArithmeticTables::build(10_000).unwrap();
        let chi = &primitive_characters(4)[0];
        assert_eq!(phi_chi(chi, 2.0, &t).unwrap(), Complex64::new(0.0, 0.0));
        // only n = 3 contributes below 4
        let want = -(3f64.ln()) * (3.5 - 3.0) / 3.0 / 2.5;
        assert!((phi_chi(chi, 3.5, &t).unwrap().re - want).abs() < 1e-15);
        assert!(phi_chi(chi, 1.5, &t).is_err());
        assert!(matches!(
            phi_chi(chi, 20_000.0, &t),
            Err(Error::OutOfRange { .. })
        ));
    }

    /// Cell-by-cell quadrature of the defining integral.
    fn phi_by_quadrature(chi: &DirichletCharacter, x: f64, t: &ArithmeticTables) -> Complex64 {
        // the integrand is constant on [k, k+1), so midpoint rule per cell is exact
        let mut acc = ComplexSum::new();
        let mut partial = Complex64::new(0.0, 0.0);
        let mut k = 1u64;
        while (k as f64) < x {
            if k >= 2 {
                partial += chi.evaluate(k) * t.lambda(k) / k as f64;
            }
            let hi = ((k + 1) as f64).min(x);
            acc.add(partial * (hi - k as f64));
            k += 1;
        }
        acc.value() / (x - 1.0)
    }

    #[test]
    fn phi_matches_quadrature() {
        let t = ArithmeticTables::build(2_000).unwrap();
        for q in [4u64, 5, 7, 12] {
            for chi in primitive_characters(q) {
                for x in [1000.0, 1000.5] {
                    let a = phi_chi(&chi, x, &t).unwrap();
                    let b = phi_by_quadrature(&chi, x, &t);
                    assert!((a - b).norm() < 1e-9, "q={q} x={x}");
                }
            }
        }
    }

    #[test]
    fn phi_is_order_robust() {
        let t = ArithmeticTables::build(100_000).unwrap();
        let chi = &primitive_characters(7)[1];
        let x = 100_000.0;
        let fwd = phi_chi(chi, x, &t).unwrap();
        let mut rev = ComplexSum::new();
        for &n in t.prime_powers_upto(x).iter().rev() {
            let n = n as u64;
            rev.add(chi.evaluate(n) * step_weight(t.lambda(n), n, x));
        }
        let rev = rev.value() / (x - 1.0);
        assert!((fwd - rev).norm() < 1e-12);
    }
}
