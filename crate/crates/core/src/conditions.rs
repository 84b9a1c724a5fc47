//! The two congruence/Legendre families of prime pairs `(p, q)`.

use serde::Serialize;

use crate::arith::{is_prime, legendre};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Condition {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Condition {
    pub fn number(self) -> u8 {
        match self {
            Condition::One => 1,
            Condition::Two => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionClass {
    pub p: u64,
    pub q: u64,
    pub cond1: bool,
    pub cond2: bool,
    pub p_mod8: u64,
    pub q_mod8: u64,
    pub q_mod16: u64,
    /// `(p/q)`
    pub legendre_p_q: i8,
    /// `(2/p)`
    pub legendre_2_p: i8,
}

impl ConditionClass {
    pub fn condition(&self) -> Option<Condition> {
        match (self.cond1, self.cond2) {
            (true, _) => Some(Condition::One),
            (_, true) => Some(Condition::Two),
            _ => None,
        }
    }
}

/// Classifies a pair of distinct odd primes.
///
/// cond1: `q ≡ 7 (mod 8)`, `(p/q) = 1`, `(2/p) = -1`.
/// cond2: `q ≡ 7 (mod 8)`, `p ≡ 5 (mod 8)`, `(p/q) = -1`.
pub fn check_conditions(p: u64, q: u64) -> Result<ConditionClass> {
    for n in [p, q] {
        if !is_prime(n) {
            return Err(Error::NotPrime(n));
        }
        if n == 2 {
            return Err(Error::NotOddPrime(n));
        }
    }
    if p == q {
        return Err(Error::Invalid(format!("p and q must be distinct, got {p} twice")));
    }
    let lpq = legendre(p as i64, q)?;
    let l2p = legendre(2, p)?;
    let q7 = q % 8 == 7;
    let cond1 = q7 && lpq == 1 && l2p == -1;
    let cond2 = q7 && p % 8 == 5 && lpq == -1;
    debug_assert!(!(cond1 && cond2));
    Ok(ConditionClass {
        p,
        q,
        cond1,
        cond2,
        p_mod8: p % 8,
        q_mod8: q % 8,
        q_mod16: q % 16,
        legendre_p_q: lpq,
        legendre_2_p: l2p,
    })
}

/// All pairs `(p, q)` of odd primes up to `bound` in the requested families,
/// ordered by `(p, q)`.
pub fn qualifying_pairs(bound: u64, want1: bool, want2: bool) -> Vec<(u64, u64, Condition)> {
    let primes: Vec<u64> = crate::arith::primes_up_to(bound).into_iter().filter(|&p| p > 2).collect();
    let mut out = Vec::new();
    for &p in &primes {
        for &q in &primes {
            if p == q {
                continue;
            }
            let c = check_conditions(p, q).expect("odd primes");
            match c.condition() {
                Some(Condition::One) if want1 => out.push((p, q, Condition::One)),
                Some(Condition::Two) if want2 => out.push((p, q, Condition::Two)),
                _ => {}
            }
        }
    }
    out
}
