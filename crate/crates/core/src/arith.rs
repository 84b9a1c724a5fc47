//! Integer helpers shared by every other module: square detection, squarefree
//! parts, primality, and quadratic residue symbols.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Signed;

use crate::error::{Error, Result};

/// Exact integer square root of a non-negative big integer, if it is a perfect square.
pub fn big_sqrt_exact(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    if &r * &r == *n {
        Some(r)
    } else {
        None
    }
}

/// Square root of a non-negative rational if it is the square of a rational.
pub fn rational_sqrt_exact(q: &BigRational) -> Option<BigRational> {
    let n = big_sqrt_exact(q.numer())?;
    let d = big_sqrt_exact(q.denom())?;
    Some(BigRational::new(n, d))
}

pub fn isqrt_u64(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

pub fn is_square_u64(n: u64) -> bool {
    let r = isqrt_u64(n);
    r * r == n
}

pub fn isqrt_i128(n: i128) -> i128 {
    debug_assert!(n >= 0);
    let mut r = (n as f64).sqrt() as i128;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Prime factorisation by trial division. Fine for the conductor and
/// radicand sizes used here.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Squarefree part of a non-zero integer, keeping the sign.
pub fn squarefree_part(n: i64) -> i64 {
    assert!(n != 0, "squarefree part of zero");
    let sign = n.signum();
    let mut sf = 1i64;
    for (p, e) in factorize(n.unsigned_abs()) {
        if e % 2 == 1 {
            sf *= p as i64;
        }
    }
    sign * sf
}

pub fn is_squarefree(n: i64) -> bool {
    n != 0 && squarefree_part(n) == n
}

pub fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

pub fn lcm_u64(a: u64, b: u64) -> u64 {
    a.lcm(&b)
}

pub fn pow_mod(base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u128;
    let m128 = m as u128;
    let mut b = (base % m) as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m128;
        }
        b = b * b % m128;
        exp >>= 1;
    }
    acc as u64
}

/// Deterministic Miller-Rabin for 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &p in &SMALL {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &SMALL {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = ((x as u128 * x as u128) % n as u128) as u64;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn primes_up_to(bound: u64) -> Vec<u64> {
    (2..=bound).filter(|&n| is_prime(n)).collect()
}

/// Legendre symbol `(a/p)` for an odd prime `p`, via quadratic reciprocity.
pub fn legendre(a: i64, p: u64) -> Result<i8> {
    if p == 2 || !is_prime(p) {
        return Err(Error::NotOddPrime(p));
    }
    Ok(jacobi(a, p))
}

/// Jacobi symbol for odd positive `n`.
pub fn jacobi(a: i64, n: u64) -> i8 {
    debug_assert!(n % 2 == 1);
    let mut a = a.rem_euclid(n as i64) as u64;
    let mut n = n;
    let mut t = 1i8;
    while a != 0 {
        while a.is_multiple_of(2) {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// Legendre symbol by Euler's criterion; kept independent of [`jacobi`].
pub fn legendre_euler(a: i64, p: u64) -> i8 {
    let r = pow_mod(a.rem_euclid(p as i64) as u64, (p - 1) / 2, p);
    if r == 0 {
        0
    } else if r == 1 {
        1
    } else {
        -1
    }
}

/// 2-adic valuation.
pub fn v2(n: u64) -> u32 {
    n.trailing_zeros()
}

/// Largest power of two dividing `n`.
pub fn two_part(n: u64) -> u64 {
    1u64 << n.trailing_zeros()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_matches_euler() {
        for p in primes_up_to(400).into_iter().filter(|&p| p > 2) {
            for a in -50i64..50 {
                assert_eq!(legendre(a, p).unwrap(), legendre_euler(a, p), "a={a} p={p}");
            }
        }
    }

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre(5, 31).unwrap(), 1);
        assert_eq!(legendre(5, 7).unwrap(), -1);
        assert_eq!(legendre(1, 101).unwrap(), 1);
        assert!(legendre(3, 9).is_err());
        assert!(legendre(3, 2).is_err());
    }

    #[test]
    fn miller_rabin_agrees_with_trial_division() {
        for n in 0u64..5000 {
            let trial = n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0);
            assert_eq!(is_prime(n), trial, "n={n}");
        }
        assert!(is_prime(18446744073709551557));
        assert!(!is_prime(3215031751));
    }

    #[test]
    fn squarefree() {
        assert_eq!(squarefree_part(12), 3);
        assert_eq!(squarefree_part(-50), -2);
        assert_eq!(squarefree_part(155), 155);
        assert!(is_squarefree(30));
        assert!(!is_squarefree(18));
    }
}
