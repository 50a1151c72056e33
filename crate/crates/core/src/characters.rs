//! Dirichlet characters with exact values.
//!
//! The unit group `(ℤ/q)^×` is split by the Chinese remainder theorem into
//! cyclic components: one per odd prime power (generated by the smallest
//! primitive root) and up to two for the power of two (`-1` and `5`). A
//! character is an exponent vector `e` with `χ(g_i) = exp(2πi e_i / d_i)`.
//!
//! Values are carried as a phase `k` modulo the group exponent `L` (the lcm of
//! the component orders) and only turned into a complex number by a lookup in
//! a shared table of `L`-th roots of unity.

use std::sync::Arc;

use num_complex::Complex64;

use crate::arith::{factorize, gcd, lcm, pow_mod};

/// Marker in [`DirichletCharacter::phase_table`] for residues sharing a factor with `q`.
pub const NOT_A_UNIT: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicComponent {
    pub prime: u64,
    /// Modulus `p^k` of the local factor this generator lives in.
    pub prime_power: u64,
    /// Generator lifted to a residue mod `q` (≡ 1 on the other factors).
    pub generator: u64,
    pub order: u64,
    /// Residue mod `prime_power` → discrete log, `u32::MAX` off the units.
    local_dlog: Vec<u32>,
}

#[derive(Debug)]
pub struct CharacterGroup {
    modulus: u64,
    components: Vec<CyclicComponent>,
    exponent: u64,
    size: u64,
    roots: Vec<Complex64>,
}

impl CharacterGroup {
    pub fn new(q: u64) -> Arc<Self> {
        assert!(q >= 1, "modulus must be positive");
        let mut components = Vec::new();
        for (p, k) in factorize(q) {
            if p == 2 {
                components.extend(two_power_components(k, q));
            } else {
                components.push(odd_prime_power_component(p, k, q));
            }
        }
        let exponent = components.iter().fold(1, |acc, c| lcm(acc, c.order));
        let size = components.iter().map(|c| c.order).product();
        let roots = (0..exponent).map(|k| root_of_unity(k, exponent)).collect();
        Arc::new(Self {
            modulus: q,
            components,
            exponent,
            size,
            roots,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn components(&self) -> &[CyclicComponent] {
        &self.components
    }

    /// Orders `d_i` of the cyclic components.
    pub fn orders(&self) -> Vec<u64> {
        self.components.iter().map(|c| c.order).collect()
    }

    /// `φ(q)`.
    pub fn size(&self) -> u64 {
        self.size
    }

    /// Exponent of the group: lcm of the component orders.
    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    /// Discrete-log vector of `n`, or `None` when `gcd(n, q) > 1`.
    pub fn dlog(&self, n: u64) -> Option<Vec<u64>> {
        if gcd(n % self.modulus, self.modulus) != 1 && self.modulus != 1 {
            return None;
        }
        Some(
            self.components
                .iter()
                .map(|c| {
                    let e = c.local_dlog[(n % c.prime_power) as usize];
                    debug_assert_ne!(e, u32::MAX);
                    e as u64
                })
                .collect(),
        )
    }

    /// Units mod `q` listed in mixed-radix order of their exponent vectors,
    /// last component varying fastest. Position `j` holds
    /// `Π g_i^{x_i}` where `j = Σ x_i · stride_i`.
    pub fn units_by_exponent(&self) -> Vec<u64> {
        let q = self.modulus;
        let mut out = Vec::with_capacity(self.size as usize);
        let k = self.components.len();
        let mut digits = vec![0u64; k];
        let mut value = 1 % q.max(2);
        if q == 1 {
            value = 0;
        }
        for _ in 0..self.size {
            out.push(value);
            let mut i = k;
            while i > 0 {
                i -= 1;
                let c = &self.components[i];
                digits[i] += 1;
                value = value * c.generator % q;
                if digits[i] < c.order {
                    break;
                }
                // g_i^{d_i} ≡ 1 (mod q), so `value` is already back in place
                digits[i] = 0;
            }
        }
        out
    }

    #[inline]
    pub(crate) fn root(&self, phase: u64) -> Complex64 {
        self.roots[phase as usize]
    }
}

fn two_power_components(k: u32, q: u64) -> Vec<CyclicComponent> {
    let m = 1u64 << k;
    match k {
        1 => Vec::new(),
        2 => {
            let mut dlog = vec![u32::MAX; 4];
            dlog[1] = 0;
            dlog[3] = 1;
            vec![CyclicComponent {
                prime: 2,
                prime_power: 4,
                generator: crt_lift(3, 4, q),
                order: 2,
                local_dlog: dlog,
            }]
        }
        _ => {
            let order5 = m / 4;
            let mut sign = vec![u32::MAX; m as usize];
            let mut five = vec![u32::MAX; m as usize];
            let mut v = 1u64;
            for b in 0..order5 {
                sign[v as usize] = 0;
                five[v as usize] = b as u32;
                sign[(m - v) as usize] = 1;
                five[(m - v) as usize] = b as u32;
                v = v * 5 % m;
            }
            vec![
                CyclicComponent {
                    prime: 2,
                    prime_power: m,
                    generator: crt_lift(m - 1, m, q),
                    order: 2,
                    local_dlog: sign,
                },
                CyclicComponent {
                    prime: 2,
                    prime_power: m,
                    generator: crt_lift(5, m, q),
                    order: order5,
                    local_dlog: five,
                },
            ]
        }
    }
}

fn odd_prime_power_component(p: u64, k: u32, q: u64) -> CyclicComponent {
    let m = p.pow(k);
    let order = m / p * (p - 1);
    let g = primitive_root(p, k);
    let mut dlog = vec![u32::MAX; m as usize];
    let mut v = 1u64;
    for e in 0..order {
        dlog[v as usize] = e as u32;
        v = v * g % m;
    }
    CyclicComponent {
        prime: p,
        prime_power: m,
        generator: crt_lift(g, m, q),
        order,
        local_dlog: dlog,
    }
}

/// Smallest primitive root modulo an odd prime power `p^k`.
pub fn primitive_root(p: u64, k: u32) -> u64 {
    let m = p.pow(k);
    let order = m / p * (p - 1);
    let mut divisors_of_order: Vec<u64> = factorize(p - 1).into_iter().map(|(r, _)| r).collect();
    if k >= 2 {
        divisors_of_order.push(p);
    }
    (2..m)
        .find(|&g| {
            g % p != 0
                && divisors_of_order
                    .iter()
                    .all(|&r| pow_mod(g, order / r, m) != 1)
        })
        .expect("odd prime powers have primitive roots")
}

/// Residue mod `q` congruent to `g` mod `m` and to 1 mod `q / m`.
fn crt_lift(g: u64, m: u64, q: u64) -> u64 {
    let rest = q / m;
    if rest == 1 {
        return g % q;
    }
    // 1 + rest·t ≡ g (mod m)
    let inv = mod_inverse(rest % m, m).expect("coprime CRT factors");
    let t = ((g % m + m - 1) % m) as u128 * inv as u128 % m as u128;
    (1 + rest as u128 * t) as u64 % q
}

fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (m as i128, a as i128);
    while new_r != 0 {
        let quot = r / new_r;
        (t, new_t) = (new_t, t - quot * new_t);
        (r, new_r) = (new_r, r - quot * new_r);
    }
    if r != 1 {
        return None;
    }
    Some(t.rem_euclid(m as i128) as u64)
}

/// `exp(2πi k/n)` with exact values on the four axes.
pub fn root_of_unity(k: u64, n: u64) -> Complex64 {
    let k = k % n;
    if (4 * k) % n == 0 {
        return match 4 * k / n {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    // symmetric reduction keeps the angle in (-π, π]
    let signed = if 2 * k > n {
        k as f64 - n as f64
    } else {
        k as f64
    };
    let theta = std::f64::consts::TAU * signed / n as f64;
    let (s, c) = theta.sin_cos();
    Complex64::new(c, s)
}

#[derive(Debug, Clone)]
pub struct DirichletCharacter {
    group: Arc<CharacterGroup>,
    exponents: Vec<u64>,
    /// Per-component phase increment `e_i · L/d_i mod L`.
    steps: Vec<u64>,
    order: u64,
    conductor: u64,
    parity: i8,
}

impl PartialEq for DirichletCharacter {
    fn eq(&self, other: &Self) -> bool {
        self.modulus() == other.modulus() && self.exponents == other.exponents
    }
}

impl DirichletCharacter {
    pub fn new(group: Arc<CharacterGroup>, exponents: Vec<u64>) -> Self {
        assert_eq!(exponents.len(), group.components.len());
        let big_l = group.exponent;
        let exponents: Vec<u64> = exponents
            .iter()
            .zip(&group.components)
            .map(|(&e, c)| e % c.order)
            .collect();
        let steps = exponents
            .iter()
            .zip(&group.components)
            .map(|(&e, c)| e * (big_l / c.order) % big_l)
            .collect();
        let order = exponents
            .iter()
            .zip(&group.components)
            .fold(1, |acc, (&e, c)| lcm(acc, c.order / gcd(e, c.order)));
        let conductor = conductor_of(&group, &exponents);
        let mut chi = Self {
            group,
            exponents,
            steps,
            order,
            conductor,
            parity: 1,
        };
        let q = chi.modulus();
        if q > 2 {
            let ph = chi.phase(q - 1).expect("-1 is a unit");
            chi.parity = if ph == 0 { 1 } else { -1 };
        }
        chi
    }

    pub fn group(&self) -> &Arc<CharacterGroup> {
        &self.group
    }

    pub fn modulus(&self) -> u64 {
        self.group.modulus
    }

    pub fn exponents(&self) -> &[u64] {
        &self.exponents
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    /// `χ(-1)`.
    pub fn parity(&self) -> i8 {
        self.parity
    }

    pub fn is_principal(&self) -> bool {
        self.exponents.iter().all(|&e| e == 0)
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor == self.modulus()
    }

    /// Takes only the values ±1 and 0.
    pub fn is_real(&self) -> bool {
        self.order <= 2
    }

    pub fn conj(&self) -> Self {
        let negated = self
            .exponents
            .iter()
            .zip(&self.group.components)
            .map(|(&e, c)| (c.order - e) % c.order)
            .collect();
        Self::new(self.group.clone(), negated)
    }

    /// Phase of `χ(n)` modulo the group exponent, `None` off the units.
    pub fn phase(&self, n: u64) -> Option<u64> {
        let g = &self.group;
        if g.modulus > 1 && gcd(n % g.modulus, g.modulus) != 1 {
            return None;
        }
        let big_l = g.exponent;
        let mut acc = 0;
        for (c, &s) in g.components.iter().zip(&self.steps) {
            let x = c.local_dlog[(n % c.prime_power) as usize] as u64;
            acc = (acc + x * s) % big_l;
        }
        Some(acc)
    }

    /// Phase of `χ(r)` for every residue `r < q`, [`NOT_A_UNIT`] off the units.
    pub fn phase_table(&self) -> Vec<u32> {
        (0..self.modulus())
            .map(|r| self.phase(r).map_or(NOT_A_UNIT, |p| p as u32))
            .collect()
    }

    /// `χ(n)` from a precomputed [`phase_table`](Self::phase_table).
    #[inline]
    pub fn evaluate_with(&self, table: &[u32], n: u64) -> Complex64 {
        match table[(n % self.modulus()) as usize] {
            NOT_A_UNIT => Complex64::new(0.0, 0.0),
            p => self.group.root(p as u64),
        }
    }

    /// `χ(n) = exp(2πi k / ord)` as the reduced pair `(k, ord)`.
    pub fn exact_value(&self, n: u64) -> Option<(u64, u64)> {
        let ph = self.phase(n)?;
        let big_l = self.group.exponent;
        let scale = big_l / self.order;
        Some((ph / scale, self.order))
    }

    pub fn evaluate(&self, n: u64) -> Complex64 {
        match self.phase(n) {
            Some(ph) => self.group.root(ph),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Phases of `χ` along [`CharacterGroup::units_by_exponent`], walking the
    /// exponent odometer without any discrete logs.
    pub fn phases_by_exponent(&self) -> Vec<u64> {
        let comps = &self.group.components;
        let big_l = self.group.exponent;
        let k = comps.len();
        let mut out = Vec::with_capacity(self.group.size as usize);
        let mut digits = vec![0u64; k];
        let mut phase = 0u64;
        for _ in 0..self.group.size {
            out.push(phase);
            let mut i = k;
            while i > 0 {
                i -= 1;
                digits[i] += 1;
                phase = (phase + self.steps[i]) % big_l;
                if digits[i] < comps[i].order {
                    break;
                }
                digits[i] = 0;
            }
        }
        out
    }
}

/// Conductor assembled prime by prime from the local components.
fn conductor_of(group: &CharacterGroup, exponents: &[u64]) -> u64 {
    let mut f = 1u64;
    let comps = &group.components;
    let mut i = 0;
    while i < comps.len() {
        let c = &comps[i];
        if c.prime == 2 {
            if c.prime_power == 4 {
                if exponents[i] != 0 {
                    f *= 4;
                }
                i += 1;
            } else {
                let sign = exponents[i];
                let b = exponents[i + 1];
                let order5 = comps[i + 1].order;
                if b == 0 {
                    if sign != 0 {
                        f *= 4;
                    }
                } else {
                    // trivial on 1 + 2^c ℤ iff b · 2^{c-2} ≡ 0 (mod 2^{k-2})
                    let mut level = 3u32;
                    while (b << (level - 2)) % order5 != 0 {
                        level += 1;
                    }
                    f *= 1 << level;
                }
                i += 2;
            }
        } else {
            let e = exponents[i];
            if e != 0 {
                let p = c.prime;
                let d = c.order;
                // trivial on 1 + p^c ℤ iff d | e · φ(p^c)
                let mut level = 1u32;
                let mut phi_pc = p - 1;
                while (e as u128 * phi_pc as u128) % d as u128 != 0 {
                    level += 1;
                    phi_pc *= p;
                }
                f *= p.pow(level);
            }
            i += 1;
        }
    }
    f
}

/// All `φ(q)` characters mod `q`; the principal character comes first.
pub fn enumerate_characters(group: &Arc<CharacterGroup>) -> Vec<DirichletCharacter> {
    let orders = group.orders();
    let mut out = Vec::with_capacity(group.size() as usize);
    let mut digits = vec![0u64; orders.len()];
    loop {
        out.push(DirichletCharacter::new(group.clone(), digits.clone()));
        let mut i = orders.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < orders[i] {
                break;
            }
            digits[i] = 0;
        }
    }
}

/// Primitive characters mod `q`. Empty when `q ≡ 2 (mod 4)`; for `q = 1` the
/// trivial character is returned.
pub fn primitive_characters(q: u64) -> Vec<DirichletCharacter> {
    if q % 4 == 2 {
        return Vec::new();
    }
    let group = CharacterGroup::new(q);
    enumerate_characters(&group)
        .into_iter()
        .filter(DirichletCharacter::is_primitive)
        .collect()
}

/// Number of primitive characters mod `q`: the Dirichlet convolution `μ * φ`.
pub fn primitive_count(q: u64) -> u64 {
    factorize(q).into_iter().fold(1, |acc, (p, k)| {
        let local = match k {
            1 => p - 2,
            _ => p.pow(k - 2) * (p - 1) * (p - 1),
        };
        acc * local
    })
}
