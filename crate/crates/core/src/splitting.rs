//! Splitting of rational primes in abelian fields.
//!
//! A field of conductor `M` is described by its group `X` of Dirichlet
//! characters mod `M`; the Galois group is `(Z/M)^* / H` with `H` the joint
//! kernel. Characters are exponent vectors on the cyclic factors of
//! `(Z/M)^*` (a primitive root for each odd prime power; `-1` and `5` for
//! a power of 2). For a prime `l`, with `Y ⊂ X` the characters unramified at
//! `l`: `e = |X|/|Y|`, `f` is the order of `l` on `Y`, and `g = |Y|/f`.

use std::collections::{BTreeSet, HashSet, VecDeque};

use num_integer::Integer;
use serde::Serialize;

use crate::arith::{factorize, is_prime, pow_mod, squarefree_part};
use crate::error::{Error, Result};

const MAX_GROUP: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CyclicFactor {
    pub prime: u64,
    /// Modulus of the local component (`l^a`).
    pub modulus: u64,
    pub order: u64,
    /// Generator modulo `modulus`.
    pub generator: u64,
}

/// Cyclic decomposition of `(Z/M)^*`.
fn unit_group_factors(m: u64) -> Vec<CyclicFactor> {
    let mut out = Vec::new();
    for (l, a) in factorize(m) {
        let modulus = l.pow(a);
        if l == 2 {
            if a >= 2 {
                out.push(CyclicFactor { prime: 2, modulus, order: 2, generator: modulus - 1 });
            }
            if a >= 3 {
                out.push(CyclicFactor { prime: 2, modulus, order: modulus / 4, generator: 5 });
            }
        } else {
            let order = modulus / l * (l - 1);
            out.push(CyclicFactor { prime: l, modulus, order, generator: primitive_root(l, a) });
        }
    }
    out
}

fn primitive_root(l: u64, a: u32) -> u64 {
    let phi = l - 1;
    let ps: Vec<u64> = factorize(phi).into_iter().map(|(q, _)| q).collect();
    let g = (2..l).find(|&g| ps.iter().all(|&q| pow_mod(g, phi / q, l) != 1)).expect("primitive root exists");
    // g generates mod l^a unless g^(l-1) ≡ 1 mod l²
    if a >= 2 && pow_mod(g, l - 1, l * l) == 1 {
        g + l
    } else {
        g
    }
}

/// Discrete logarithm of `a` on each factor (`a` coprime to the modulus).
fn dlog(factors: &[CyclicFactor], a: u64) -> Vec<u64> {
    factors
        .iter()
        .map(|f| {
            let x = a % f.modulus;
            if f.prime == 2 {
                if f.order == 2 && f.generator == f.modulus - 1 {
                    // sign component
                    return u64::from(x % 4 == 3);
                }
                let y = if x % 4 == 1 { x } else { f.modulus - x };
                let mut acc = 1u64;
                for k in 0..f.order {
                    if acc == y {
                        return k;
                    }
                    acc = acc * 5 % f.modulus;
                }
                unreachable!("5 generates the 1 mod 4 classes")
            } else {
                let mut acc = 1u64;
                for k in 0..f.order {
                    if acc == x {
                        return k;
                    }
                    acc = (acc as u128 * f.generator as u128 % f.modulus as u128) as u64;
                }
                unreachable!("{a} not a unit mod {}", f.modulus)
            }
        })
        .collect()
}

/// Description of an abelian field as a compositum of quadratic fields and
/// a 2-power cyclotomic field, optionally cut down to its real subfield.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldSpec {
    pub radicands: Vec<i64>,
    /// `Some(n)` adjoins `ζ_{2^{n+2}}`.
    pub level: Option<u32>,
    pub real: bool,
}

impl FieldSpec {
    pub fn quadratic(radicands: &[i64]) -> Self {
        FieldSpec { radicands: radicands.to_vec(), level: None, real: false }
    }

    pub fn cyclotomic(n: u32, real: bool) -> Self {
        FieldSpec { radicands: Vec::new(), level: Some(n), real }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AbelianField {
    pub conductor: u64,
    pub factors: Vec<CyclicFactor>,
    /// All characters of the field, each an exponent vector on `factors`.
    pub characters: Vec<Vec<u64>>,
}

fn quadratic_conductor(d: i64) -> u64 {
    let d = squarefree_part(d);
    if d.rem_euclid(4) == 1 {
        d.unsigned_abs()
    } else {
        4 * d.unsigned_abs()
    }
}

/// `field_for`: conductor and character group of the described field.
pub fn field_for(spec: &FieldSpec) -> Result<AbelianField> {
    let mut m = 1u64;
    for &d in &spec.radicands {
        if d == 0 || squarefree_part(d) == 1 {
            return Err(Error::InvalidRadicand(d));
        }
        m = m.lcm(&quadratic_conductor(d));
    }
    if let Some(n) = spec.level {
        if n > 40 {
            return Err(Error::ConductorTooLarge(1 << 42));
        }
        m = m.lcm(&(1u64 << (n + 2)));
    }
    let factors = unit_group_factors(m);
    let mut gens: Vec<Vec<u64>> = Vec::new();
    for &d in &spec.radicands {
        gens.push(quadratic_character(&factors, d));
    }
    if let Some(n) = spec.level {
        let k = n + 2;
        for (i, f) in factors.iter().enumerate() {
            if f.prime != 2 {
                continue;
            }
            let mut c = vec![0u64; factors.len()];
            if f.order == 2 && f.generator == f.modulus - 1 {
                c[i] = 1;
                gens.push(c);
            } else if k >= 3 {
                // ψ(5) = exp(2πi / 2^{k-2})
                c[i] = f.order >> (k - 2);
                gens.push(c);
            }
        }
    }
    let mut characters = closure(&factors, &gens)?;
    if spec.real {
        let minus = dlog(&factors, m - 1);
        characters.retain(|c| eval_is_trivial(&factors, c, &minus));
    }
    characters.sort();
    Ok(AbelianField { conductor: m, factors, characters })
}

fn quadratic_character(factors: &[CyclicFactor], d: i64) -> Vec<u64> {
    let d = squarefree_part(d);
    let mut c = vec![0u64; factors.len()];
    let mut star: i64 = 1;
    for (l, _) in factorize(d.unsigned_abs()) {
        if l == 2 {
            continue;
        }
        let i = factors.iter().position(|f| f.prime == l).expect("odd prime divides conductor");
        c[i] = factors[i].order / 2;
        star *= if l % 4 == 1 { l as i64 } else { -(l as i64) };
    }
    // d = star · rest with rest ∈ {1, -1, 2, -2}
    let rest = d / star;
    let (sign, two) = (rest < 0, rest.abs() == 2);
    for (i, f) in factors.iter().enumerate() {
        if f.prime != 2 {
            continue;
        }
        if f.order == 2 && f.generator == f.modulus - 1 {
            if sign {
                c[i] = 1;
            }
        } else if two {
            c[i] = f.order / 2;
        }
    }
    c
}

fn add_chars(factors: &[CyclicFactor], a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).zip(factors).map(|((x, y), f)| (x + y) % f.order).collect()
}

fn closure(factors: &[CyclicFactor], gens: &[Vec<u64>]) -> Result<Vec<Vec<u64>>> {
    let zero = vec![0u64; factors.len()];
    let mut seen: HashSet<Vec<u64>> = HashSet::from([zero.clone()]);
    let mut queue = VecDeque::from([zero]);
    while let Some(c) = queue.pop_front() {
        for g in gens {
            let n = add_chars(factors, &c, g);
            if seen.insert(n.clone()) {
                if seen.len() as u64 > MAX_GROUP {
                    return Err(Error::ConductorTooLarge(0));
                }
                queue.push_back(n);
            }
        }
    }
    Ok(seen.into_iter().collect())
}

fn lcm_orders(factors: &[CyclicFactor]) -> u64 {
    factors.iter().fold(1u64, |acc, f| acc.lcm(&f.order))
}

/// `χ(a)` as `s/L` with `L` the lcm of the factor orders.
fn eval(factors: &[CyclicFactor], chi: &[u64], logs: &[u64]) -> (u64, u64) {
    let l = lcm_orders(factors);
    let mut s: u128 = 0;
    for ((k, e), f) in chi.iter().zip(logs).zip(factors) {
        s += *k as u128 * *e as u128 * (l / f.order) as u128;
    }
    ((s % l as u128) as u64, l)
}

fn eval_is_trivial(factors: &[CyclicFactor], chi: &[u64], logs: &[u64]) -> bool {
    eval(factors, chi, logs).0 == 0
}

impl AbelianField {
    pub fn degree(&self) -> u64 {
        self.characters.len() as u64
    }

    pub fn phi(&self) -> u64 {
        self.factors.iter().map(|f| f.order).product()
    }

    pub fn is_real(&self) -> bool {
        let minus = dlog(&self.factors, self.conductor - 1);
        self.characters.iter().all(|c| eval_is_trivial(&self.factors, c, &minus))
    }

    /// Whether `a mod M` lies in `H`.
    pub fn contains(&self, a: u64) -> bool {
        if a.gcd(&self.conductor) != 1 {
            return false;
        }
        let logs = dlog(&self.factors, a);
        self.characters.iter().all(|c| eval_is_trivial(&self.factors, c, &logs))
    }

    /// The elements of `H`, listed when `φ(M) < 2^20`.
    pub fn subgroup(&self) -> Result<Vec<u64>> {
        if self.phi() >= MAX_GROUP {
            return Err(Error::ConductorTooLarge(self.conductor));
        }
        if self.conductor == 1 {
            return Ok(vec![0]);
        }
        Ok((1..self.conductor).filter(|&a| self.contains(a)).collect())
    }

    /// A generating set of `H`, picked greedily from its elements.
    pub fn subgroup_generators(&self) -> Result<Vec<u64>> {
        let elems = self.subgroup()?;
        let m = self.conductor;
        let mut span: BTreeSet<u64> = BTreeSet::from([1 % m.max(2)]);
        let mut gens = Vec::new();
        for &a in &elems {
            if span.contains(&a) {
                continue;
            }
            gens.push(a);
            let mut frontier: Vec<u64> = span.iter().copied().collect();
            while let Some(x) = frontier.pop() {
                for &g in &gens {
                    let y = (x as u128 * g as u128 % m as u128) as u64;
                    if span.insert(y) {
                        frontier.push(y);
                    }
                }
            }
        }
        Ok(gens)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SplittingData {
    pub prime: u64,
    pub e: u64,
    pub f: u64,
    pub g: u64,
}

/// Decomposition `(e, f, g)` of the rational prime `l` in `field`.
pub fn split_prime(field: &AbelianField, l: u64) -> Result<SplittingData> {
    if !is_prime(l) {
        return Err(Error::NotPrime(l));
    }
    let fs = &field.factors;
    let unram: Vec<&Vec<u64>> = field
        .characters
        .iter()
        .filter(|c| c.iter().zip(fs).all(|(k, f)| f.prime != l || *k == 0))
        .collect();
    let e = field.degree() / unram.len() as u64;
    // Frobenius: l on the factors prime to l
    let logs: Vec<u64> = {
        let rest: Vec<CyclicFactor> = fs.iter().filter(|f| f.prime != l).cloned().collect();
        let mut it = dlog(&rest, l).into_iter();
        fs.iter().map(|f| if f.prime == l { 0 } else { it.next().expect("aligned") }).collect()
    };
    let mut f_ord = 1u64;
    for c in &unram {
        let (s, big_l) = eval(fs, c, &logs);
        f_ord = f_ord.lcm(&(big_l / big_l.gcd(&s)));
    }
    let g = unram.len() as u64 / f_ord;
    let data = SplittingData { prime: l, e, f: f_ord, g };
    if e * f_ord * g != field.degree() {
        return Err(Error::Consistency(format!("e f g = {} != degree {}", e * f_ord * g, field.degree())));
    }
    Ok(data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LayerVariant {
    /// `F_n = Q(√p, √q, ζ_{2^{n+2}})`
    Full,
    /// Its maximal real subfield.
    Plus,
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerSplitting {
    pub p: u64,
    pub q: u64,
    pub n: u32,
    pub variant: LayerVariant,
    pub data: SplittingData,
    pub degree: u64,
    /// `g` is constant on `[stable_from, scanned_to]`.
    pub stable_from: u32,
    pub scanned_to: u32,
}

pub fn layer_field(p: u64, q: u64, n: u32, variant: LayerVariant) -> Result<AbelianField> {
    field_for(&FieldSpec { radicands: vec![p as i64, q as i64], level: Some(n), real: variant == LayerVariant::Plus })
}

/// Splitting of `p` in the `n`-th layer over `Q(√p, √q, i)` (or its real
/// subfield), with the level from which `g` stops changing among the levels
/// scanned.
pub fn layer_splitting(p: u64, q: u64, n: u32, variant: LayerVariant) -> Result<LayerSplitting> {
    let cls = crate::conditions::check_conditions(p, q)?;
    if cls.condition().is_none() {
        return Err(Error::ConditionsNotSatisfied { p, q, what: "conditions (1) or (2)".into() });
    }
    if n == 0 {
        return Err(Error::Invalid("layer level must be at least 1".into()));
    }
    let field = layer_field(p, q, n, variant)?;
    let data = split_prime(&field, p)?;
    let scanned_to = n.max(8) + 2;
    let gs: Vec<u64> = (1..=scanned_to).map(|k| layer_field(p, q, k, variant).and_then(|f| split_prime(&f, p)).map(|d| d.g)).collect::<Result<_>>()?;
    let last = *gs.last().expect("nonempty");
    let mut stable_from = scanned_to;
    while stable_from > 1 && gs[stable_from as usize - 2] == last {
        stable_from -= 1;
    }
    Ok(LayerSplitting { p, q, n, variant, data, degree: field.degree(), stable_from, scanned_to })
}
