//! Exact arithmetic in real multiquadratic fields `Q(√d1, ..., √dt)`.
//!
//! An element is stored on the radical basis `{√r_S}` indexed by subsets `S`
//! of the generating radicands (bit masks, so the order is
//! `1, √d1, √d2, √(d1 d2)*, √d3, ...` with `*` the squarefree part). All
//! coordinates share one denominator, which keeps products cheap.
//!
//! Square roots are extracted exactly by descending the tower
//! `Q ⊂ Q(√d1) ⊂ Q(√d1, √d2) ⊂ ...`: writing `a = u + v√d` over the previous
//! layer, a square root `s + t√d` must satisfy `s² = (u ± √N(a))/2` where
//! `N(a) = u² - d v²`. Every candidate is verified by squaring, so a returned
//! root is always exact and a `None` is never caused by rounding.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{rational_sqrt_exact, squarefree_part};
use crate::error::{Error, Result};

/// A real multiquadratic field given by independent squarefree radicands.
#[derive(Debug, PartialEq, Eq)]
pub struct MQField {
    radicands: Vec<i64>,
    /// `basis[S]` is the squarefree radicand `r_S` of the basis radical for mask `S`.
    basis: Vec<i64>,
    /// `√r_S · √r_T = mul_coeff[S][T] · √r_{S xor T}`.
    mul_coeff: Vec<Vec<BigInt>>,
    /// `∏_{i∈S} √d_i = scale[S] · √r_S`.
    scale: Vec<i64>,
    /// Field of the first `t - 1` radicands.
    sub: Option<FieldRef>,
}

pub type FieldRef = Arc<MQField>;

impl MQField {
    /// Builds `Q(√d1, ..., √dt)`. Radicands are reduced to their squarefree
    /// parts; ones whose square class is already generated are dropped.
    pub fn new(radicands: &[i64]) -> Result<FieldRef> {
        let mut gens: Vec<i64> = Vec::new();
        let mut basis: Vec<i128> = vec![1];
        for &d in radicands {
            if d <= 1 {
                return Err(Error::InvalidRadicand(d));
            }
            let sf = squarefree_part(d);
            if sf <= 1 {
                return Err(Error::InvalidRadicand(d));
            }
            if basis.contains(&(sf as i128)) {
                continue;
            }
            let next: Vec<i128> = basis.iter().map(|&r| sf_product(r, sf as i128)).collect();
            basis.extend(next);
            gens.push(sf);
        }
        if gens.is_empty() {
            return Err(Error::InvalidRadicand(radicands.first().copied().unwrap_or(0)));
        }
        let basis: Vec<i64> = basis
            .into_iter()
            .map(|r| i64::try_from(r).map_err(|_| Error::Invalid("radicand product too large".into())))
            .collect::<Result<_>>()?;
        Ok(Arc::new(Self::from_parts(gens, basis)))
    }

    /// The rational numbers, as the zero-generator field.
    pub fn rationals() -> FieldRef {
        Arc::new(Self::from_parts(Vec::new(), vec![1]))
    }

    fn from_parts(gens: Vec<i64>, basis: Vec<i64>) -> Self {
        let n = basis.len();
        let mut mul_coeff = vec![vec![BigInt::zero(); n]; n];
        for s in 0..n {
            for t in 0..n {
                let prod = BigInt::from(basis[s]) * BigInt::from(basis[t]);
                let q = prod / BigInt::from(basis[s ^ t]);
                mul_coeff[s][t] = q.sqrt();
            }
        }
        let mut scale = vec![1i64; n];
        for (s, sc) in scale.iter_mut().enumerate() {
            let mut prod: i128 = 1;
            for (i, &d) in gens.iter().enumerate() {
                if s >> i & 1 == 1 {
                    prod *= d as i128;
                }
            }
            let sq = prod / basis[s] as i128;
            *sc = crate::arith::isqrt_i128(sq) as i64;
        }
        let sub = if gens.is_empty() {
            None
        } else {
            let t = gens.len();
            Some(Arc::new(Self::from_parts(gens[..t - 1].to_vec(), basis[..n / 2].to_vec())))
        };
        MQField { radicands: gens, basis, mul_coeff, scale, sub }
    }

    /// Independent generating radicands.
    pub fn radicands(&self) -> &[i64] {
        &self.radicands
    }

    pub fn generator_count(&self) -> usize {
        self.radicands.len()
    }

    pub fn degree(&self) -> usize {
        self.basis.len()
    }

    /// Squarefree radicands of the basis, in coordinate order.
    pub fn basis_radicands(&self) -> &[i64] {
        &self.basis
    }

    /// Field generated by the first `k` radicands.
    pub fn prefix(&self, k: usize) -> FieldRef {
        assert!(k < self.radicands.len(), "prefix must be a proper subfield");
        let mut f = self.sub.clone().expect("proper prefix exists");
        while f.radicands.len() > k {
            f = f.sub.clone().expect("chain reaches Q");
        }
        f
    }

    fn parent(&self) -> &FieldRef {
        self.sub.as_ref().expect("Q has no subfield")
    }

    /// Mask of the basis radical in the square class of `d`, if any.
    pub fn mask_of(&self, d: i64) -> Option<usize> {
        if d <= 0 {
            return None;
        }
        let sf = squarefree_part(d);
        self.basis.iter().position(|&r| r == sf)
    }

    pub fn contains_radical(&self, d: i64) -> bool {
        self.mask_of(d).is_some()
    }

    /// Real quadratic subfields `Q(√r)` of this field, as their radicands.
    pub fn quadratic_radicands(&self) -> Vec<i64> {
        self.basis[1..].to_vec()
    }
}

fn sf_product(a: i128, b: i128) -> i128 {
    let g = gcd_i128(a, b);
    (a / g) * (b / g)
}

fn gcd_i128(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.abs()
}

/// One sign per generating radicand; `-1` sends `√d_i` to `-√d_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignPattern {
    signs: Vec<i8>,
}

impl SignPattern {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Invalid(format!("signs must be +1 or -1, got {signs:?}")));
        }
        Ok(SignPattern { signs })
    }

    pub fn identity(t: usize) -> Self {
        SignPattern { signs: vec![1; t] }
    }

    /// Pattern negating exactly the generators in `mask`.
    pub fn from_mask(t: usize, mask: usize) -> Self {
        SignPattern { signs: (0..t).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect() }
    }

    /// All `2^t` patterns, identity first.
    pub fn all(t: usize) -> impl Iterator<Item = SignPattern> {
        (0..1usize << t).map(move |m| SignPattern::from_mask(t, m))
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn negated_mask(&self) -> usize {
        self.signs.iter().enumerate().filter(|(_, &s)| s < 0).fold(0, |m, (i, _)| m | 1 << i)
    }

    pub fn compose(&self, other: &SignPattern) -> Result<SignPattern> {
        if self.len() != other.len() {
            return Err(Error::SignPatternLength { expected: self.len(), got: other.len() });
        }
        Ok(SignPattern { signs: self.signs.iter().zip(&other.signs).map(|(a, b)| a * b).collect() })
    }

    pub fn is_identity(&self) -> bool {
        self.signs.iter().all(|&s| s == 1)
    }
}

/// Closed interval with rational endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Interval {
    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        match BigRational::from_float(x) {
            Some(r) => self.contains(&r),
            None => false,
        }
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn midpoint_f64(&self) -> f64 {
        ((&self.lo + &self.hi) / BigRational::from_integer(2.into())).to_f64().unwrap_or(f64::NAN)
    }

    /// `Greater`/`Less` when the interval excludes zero.
    pub fn sign(&self) -> Option<Ordering> {
        if self.lo.is_positive() {
            Some(Ordering::Greater)
        } else if self.hi.is_negative() {
            Some(Ordering::Less)
        } else if self.lo.is_zero() && self.hi.is_zero() {
            Some(Ordering::Equal)
        } else {
            None
        }
    }
}

/// An element of a multiquadratic field.
#[derive(Clone)]
pub struct MQElement {
    field: FieldRef,
    nums: Vec<BigInt>,
    den: BigInt,
}

impl PartialEq for MQElement {
    fn eq(&self, other: &Self) -> bool {
        self.field.radicands == other.field.radicands && self.nums == other.nums && self.den == other.den
    }
}

impl Eq for MQElement {}

impl fmt::Debug for MQElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MQElement({} in Q{:?})", self, self.field.radicands)
    }
}

impl MQElement {
    fn normalized(field: FieldRef, mut nums: Vec<BigInt>, mut den: BigInt) -> Self {
        if den.is_negative() {
            den = -den;
            for n in nums.iter_mut() {
                *n = -&*n;
            }
        }
        let mut g = den.clone();
        for n in &nums {
            if g.is_one() {
                break;
            }
            g = g.gcd(n);
        }
        if !g.is_one() && !g.is_zero() {
            for n in nums.iter_mut() {
                *n /= &g;
            }
            den /= &g;
        }
        MQElement { field, nums, den }
    }

    pub fn zero(field: &FieldRef) -> Self {
        MQElement { field: field.clone(), nums: vec![BigInt::zero(); field.degree()], den: BigInt::one() }
    }

    pub fn one(field: &FieldRef) -> Self {
        Self::from_rational(field, BigRational::one())
    }

    pub fn from_integer(field: &FieldRef, n: impl Into<BigInt>) -> Self {
        Self::from_rational(field, BigRational::from_integer(n.into()))
    }

    pub fn from_rational(field: &FieldRef, q: BigRational) -> Self {
        let mut nums = vec![BigInt::zero(); field.degree()];
        nums[0] = q.numer().clone();
        Self::normalized(field.clone(), nums, q.denom().clone())
    }

    /// Builds an element from its coordinates on the radical basis.
    pub fn from_coords(field: &FieldRef, coords: &[BigRational]) -> Result<Self> {
        if coords.len() != field.degree() {
            return Err(Error::Invalid(format!(
                "expected {} coordinates, got {}",
                field.degree(),
                coords.len()
            )));
        }
        let den = coords.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let nums = coords.iter().map(|c| c.numer() * (&den / c.denom())).collect();
        Ok(Self::normalized(field.clone(), nums, den))
    }

    pub fn from_int_coords(field: &FieldRef, coords: &[i64]) -> Result<Self> {
        let c: Vec<BigRational> = coords.iter().map(|&x| BigRational::from_integer(x.into())).collect();
        Self::from_coords(field, &c)
    }

    /// `c · √d` for `d` in the field.
    pub fn radical(field: &FieldRef, d: i64) -> Result<Self> {
        let mask = field.mask_of(d).ok_or(Error::InvalidRadicand(d))?;
        let sf = field.basis[mask];
        let m = crate::arith::isqrt_i128((d / sf) as i128) as i64;
        let mut nums = vec![BigInt::zero(); field.degree()];
        nums[mask] = BigInt::from(m);
        Ok(Self::normalized(field.clone(), nums, BigInt::one()))
    }

    /// `x + y√d` with rational `x`, `y`.
    pub fn quadratic(field: &FieldRef, d: i64, x: &BigRational, y: &BigRational) -> Result<Self> {
        let r = Self::radical(field, d)?;
        Ok(&Self::from_rational(field, x.clone()) + &r.scale(y))
    }

    pub fn field(&self) -> &FieldRef {
        &self.field
    }

    pub fn coords(&self) -> Vec<BigRational> {
        self.nums.iter().map(|n| BigRational::new(n.clone(), self.den.clone())).collect()
    }

    pub fn coord(&self, mask: usize) -> BigRational {
        BigRational::new(self.nums[mask].clone(), self.den.clone())
    }

    pub fn denominator(&self) -> &BigInt {
        &self.den
    }

    pub fn numerators(&self) -> &[BigInt] {
        &self.nums
    }

    pub fn is_zero(&self) -> bool {
        self.nums.iter().all(|n| n.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one() && self.nums[0].is_one() && self.nums[1..].iter().all(|n| n.is_zero())
    }

    pub fn is_rational(&self) -> bool {
        self.nums[1..].iter().all(|n| n.is_zero())
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        self.is_rational().then(|| self.coord(0))
    }

    fn same_field(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.field, &other.field) || self.field.radicands == other.field.radicands {
            Ok(())
        } else {
            Err(Error::FieldMismatch(self.field.radicands.clone(), other.field.radicands.clone()))
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        let nums = self
            .nums
            .iter()
            .zip(&other.nums)
            .map(|(a, b)| a * &other.den + b * &self.den)
            .collect();
        Ok(Self::normalized(self.field.clone(), nums, &self.den * &other.den))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&-other)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        let n = self.field.degree();
        let mut nums = vec![BigInt::zero(); n];
        for (s, a) in self.nums.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (t, b) in other.nums.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let c = &self.field.mul_coeff[s][t];
                let term = a * b;
                if c.is_one() {
                    nums[s ^ t] += term;
                } else {
                    nums[s ^ t] += term * c;
                }
            }
        }
        Ok(Self::normalized(self.field.clone(), nums, &self.den * &other.den))
    }

    pub fn square(&self) -> Self {
        self.checked_mul(self).expect("same field")
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        let nums = self.nums.iter().map(|n| n * q.numer()).collect();
        Self::normalized(self.field.clone(), nums, &self.den * q.denom())
    }

    /// `a^k`; negative exponents go through [`MQElement::inverse`].
    pub fn pow(&self, k: i64) -> Result<Self> {
        let base = if k < 0 { self.inverse()? } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Self::one(&self.field);
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &b;
            }
            e >>= 1;
            if e > 0 {
                b = b.square();
            }
        }
        Ok(acc)
    }

    /// Applies the automorphism `√d_i ↦ s_i √d_i`.
    pub fn apply_automorphism(&self, s: &SignPattern) -> Result<Self> {
        if s.len() != self.field.generator_count() {
            return Err(Error::SignPatternLength { expected: self.field.generator_count(), got: s.len() });
        }
        let neg = s.negated_mask();
        let nums = self
            .nums
            .iter()
            .enumerate()
            .map(|(mask, n)| if (mask & neg).count_ones() % 2 == 1 { -n } else { n.clone() })
            .collect();
        Ok(MQElement { field: self.field.clone(), nums, den: self.den.clone() })
    }

    /// Splits `a = u + v√d` over the field generated by all but the last radicand.
    fn split_last(&self, sub: &FieldRef) -> (Self, Self) {
        let half = self.field.degree() / 2;
        let u = Self::normalized(sub.clone(), self.nums[..half].to_vec(), self.den.clone());
        // √r_{S+t} = √r_S √d_t / c_S, so coefficient c on √r_{S+t} contributes c / c_S to v.
        let top = half;
        let mut den = self.den.clone();
        let coeffs: Vec<&BigInt> = (0..half).map(|s| &self.field.mul_coeff[s][top]).collect();
        let l = coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c));
        den *= &l;
        let nums = (0..half).map(|s| &self.nums[half + s] * (&l / coeffs[s])).collect();
        let v = Self::normalized(sub.clone(), nums, den);
        (u, v)
    }

    fn join_last(field: &FieldRef, u: &Self, v: &Self) -> Self {
        let half = field.degree() / 2;
        let den = &u.den * &v.den;
        let mut nums = Vec::with_capacity(field.degree());
        for s in 0..half {
            nums.push(&u.nums[s] * &v.den);
        }
        for s in 0..half {
            nums.push(&v.nums[s] * &u.den * &field.mul_coeff[s][half]);
        }
        Self::normalized(field.clone(), nums, den)
    }

    /// Embeds this element into a field containing all of its radicals.
    pub fn lift_to(&self, target: &FieldRef) -> Result<Self> {
        let mut acc = Self::zero(target);
        for (mask, n) in self.nums.iter().enumerate() {
            if n.is_zero() {
                continue;
            }
            let r = Self::radical(target, self.field.basis[mask])?;
            acc = &acc + &r.scale(&BigRational::from_integer(n.clone()));
        }
        Ok(acc.scale(&BigRational::new(BigInt::one(), self.den.clone())))
    }

    /// Multiplicative inverse.
    pub fn inverse(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self.inverse_rec())
    }

    fn inverse_rec(&self) -> Self {
        let t = self.field.generator_count();
        if t == 0 {
            let q = self.coord(0);
            return Self::from_rational(&self.field, q.recip());
        }
        let sub = self.field.parent().clone();
        let d = self.field.radicands[t - 1];
        let (u, v) = self.split_last(&sub);
        // (u + v√d)^-1 = (u - v√d) / (u² - d v²)
        let norm = &u.square() - &v.square().scale(&BigRational::from_integer(d.into()));
        let ninv = norm.inverse_rec();
        let nu = &u * &ninv;
        let nv = -&(&v * &ninv);
        Self::join_last(&self.field, &nu, &nv)
    }

    /// Relative norm to the field of the first `t - 1` radicands.
    pub fn norm_down(&self) -> Self {
        let t = self.field.generator_count();
        assert!(t > 0, "norm_down on Q");
        let sub = self.field.parent().clone();
        let d = self.field.radicands[t - 1];
        let (u, v) = self.split_last(&sub);
        &u.square() - &v.square().scale(&BigRational::from_integer(d.into()))
    }

    /// Absolute norm to `Q`.
    pub fn norm(&self) -> BigRational {
        let mut x = self.clone();
        while x.field.generator_count() > 0 {
            x = x.norm_down();
        }
        x.coord(0)
    }

    /// Square root inside the field, normalised so its first non-zero
    /// coordinate is positive. `None` means `a` is not a square here.
    pub fn sqrt(&self) -> Option<Self> {
        if self.is_zero() {
            return Some(self.clone());
        }
        let root = self.sqrt_rec()?;
        debug_assert!(root.square() == *self);
        Some(root.sign_normalized())
    }

    fn sqrt_rec(&self) -> Option<Self> {
        let t = self.field.generator_count();
        if t == 0 {
            let q = self.coord(0);
            if q.is_negative() {
                return None;
            }
            return rational_sqrt_exact(&q).map(|r| Self::from_rational(&self.field, r));
        }
        let sub = self.field.parent().clone();
        let d = self.field.radicands[t - 1];
        let (u, v) = self.split_last(&sub);
        if v.is_zero() {
            if let Some(s) = u.sqrt_rec() {
                return Some(Self::join_last(&self.field, &s, &Self::zero(&sub)));
            }
            // x = t√d with d t² = u
            let w = u.scale(&BigRational::new(BigInt::one(), BigInt::from(d)));
            let tt = w.sqrt_rec()?;
            return Some(Self::join_last(&self.field, &Self::zero(&sub), &tt));
        }
        let norm = &u.square() - &v.square().scale(&BigRational::from_integer(d.into()));
        let n = norm.sqrt_rec()?;
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        for cand in [&u + &n, &u - &n] {
            let w = cand.scale(&half);
            if w.is_zero() {
                continue;
            }
            if let Some(s) = w.sqrt_rec() {
                let tt = (&v * &s.inverse_rec()).scale(&half);
                let x = Self::join_last(&self.field, &s, &tt);
                if x.square() == *self {
                    return Some(x);
                }
            }
        }
        None
    }

    fn sign_normalized(self) -> Self {
        match self.nums.iter().find(|n| !n.is_zero()) {
            Some(n) if n.is_negative() => -&self,
            _ => self,
        }
    }

    /// Rigorous enclosure of the real embedding `√d_i ↦ s_i √d_i`, using
    /// `precision` fractional bits for every radical.
    pub fn embed(&self, s: &SignPattern, precision: u32) -> Result<Interval> {
        let image = self.apply_automorphism(s)?;
        Ok(image.embed_identity(precision.max(1)))
    }

    fn embed_identity(&self, bits: u32) -> Interval {
        let scale = BigInt::one() << bits;
        let mut lo = BigInt::zero();
        let mut hi = BigInt::zero();
        for (mask, n) in self.nums.iter().enumerate() {
            if n.is_zero() {
                continue;
            }
            let r = self.field.basis[mask];
            if r == 1 {
                lo += n * &scale;
                hi += n * &scale;
                continue;
            }
            // floor(√r · 2^bits) ≤ √r · 2^bits < floor(...) + 1
            let f = (BigInt::from(r) << (2 * bits)).sqrt();
            let (a, b) = (n * &f, n * (&f + 1));
            if n.is_positive() {
                lo += a;
                hi += b;
            } else {
                lo += b;
                hi += a;
            }
        }
        let den = &self.den * &scale;
        Interval { lo: BigRational::new(lo, den.clone()), hi: BigRational::new(hi, den) }
    }

    /// Exact sign under an embedding, refining precision until the enclosure
    /// excludes zero. Non-zero elements have non-zero embeddings, so this terminates.
    pub fn sign_at(&self, s: &SignPattern) -> Result<Ordering> {
        if self.is_zero() {
            return Ok(Ordering::Equal);
        }
        let image = self.apply_automorphism(s)?;
        let mut bits = 64 + self.magnitude_bits();
        loop {
            if let Some(o) = image.embed_identity(bits).sign() {
                return Ok(o);
            }
            bits *= 2;
        }
    }

    fn magnitude_bits(&self) -> u32 {
        self.nums.iter().map(|n| n.bits()).max().unwrap_or(0) as u32
    }

    /// Approximate value of an embedding, for display.
    pub fn to_f64(&self, s: &SignPattern) -> f64 {
        let bits = 64 + self.magnitude_bits();
        self.embed(s, bits).map(|i| i.midpoint_f64()).unwrap_or(f64::NAN)
    }

    /// `log |σ(a)|` for an embedding, robust to huge coefficients.
    pub fn log_abs_at(&self, s: &SignPattern) -> f64 {
        let bits = 64 + self.magnitude_bits();
        let mut b = bits;
        let image = match self.apply_automorphism(s) {
            Ok(i) => i,
            Err(_) => return f64::NAN,
        };
        loop {
            let iv = image.embed_identity(b);
            if iv.sign().is_some() {
                let mid = (&iv.lo + &iv.hi) / BigRational::from_integer(2.into());
                return log_abs_rational(&mid);
            }
            b *= 2;
        }
    }

    /// Image under the ring homomorphism to `F_ell` sending `√d_i ↦ roots[i]`,
    /// where `roots[i]² ≡ d_i (mod ell)`. `None` if the denominator is not
    /// invertible mod `ell`.
    pub fn reduce_mod(&self, ell: u64, roots: &[u64]) -> Option<u64> {
        let m = BigInt::from(ell);
        let den = self.den.mod_floor(&m).to_u64()?;
        if den == 0 {
            return None;
        }
        let mut acc: u128 = 0;
        let l = ell as u128;
        for (mask, n) in self.nums.iter().enumerate() {
            if n.is_zero() {
                continue;
            }
            let mut img: u128 = 1;
            for (i, &r) in roots.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    img = img * r as u128 % l;
                }
            }
            let sc = self.field.scale[mask].rem_euclid(ell as i64) as u64;
            let inv_sc = mod_inverse(sc, ell)?;
            img = img * inv_sc as u128 % l;
            let c = n.mod_floor(&m).to_u64().unwrap() as u128;
            acc = (acc + c * img) % l;
        }
        let inv_den = mod_inverse(den, ell)? as u128;
        Some((acc * inv_den % l) as u64)
    }
}

fn log_abs_rational(q: &BigRational) -> f64 {
    let n = q.numer().abs();
    let d = q.denom().clone();
    big_log(&n) - big_log(&d)
}

fn big_log(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 900;
    let top: BigInt = n >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

pub(crate) fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (m as i128, (a % m) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if r != 1 {
        return None;
    }
    Some(t.rem_euclid(m as i128) as u64)
}

/// Free-function form of multiplication with field checking.
pub fn mq_mul(a: &MQElement, b: &MQElement) -> Result<MQElement> {
    a.checked_mul(b)
}

pub fn apply_automorphism(a: &MQElement, s: &SignPattern) -> Result<MQElement> {
    a.apply_automorphism(s)
}

pub fn embed(a: &MQElement, s: &SignPattern, precision: u32) -> Result<Interval> {
    a.embed(s, precision.max(64))
}

pub fn sqrt_in_field(a: &MQElement) -> Option<MQElement> {
    a.sqrt()
}

impl<'a> Add<&'a MQElement> for &'a MQElement {
    type Output = MQElement;
    fn add(self, rhs: &MQElement) -> MQElement {
        self.checked_add(rhs).expect("field mismatch in add")
    }
}

impl<'a> Sub<&'a MQElement> for &'a MQElement {
    type Output = MQElement;
    fn sub(self, rhs: &MQElement) -> MQElement {
        self.checked_sub(rhs).expect("field mismatch in sub")
    }
}

impl<'a> Mul<&'a MQElement> for &'a MQElement {
    type Output = MQElement;
    fn mul(self, rhs: &MQElement) -> MQElement {
        self.checked_mul(rhs).expect("field mismatch in mul")
    }
}

impl Neg for &MQElement {
    type Output = MQElement;
    fn neg(self) -> MQElement {
        MQElement { field: self.field.clone(), nums: self.nums.iter().map(|n| -n).collect(), den: self.den.clone() }
    }
}

impl fmt::Display for MQElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (mask, c) in self.coords().into_iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let r = self.field.basis[mask];
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            first = false;
            let coeff = if a.is_integer() { a.numer().to_string() } else { format!("{}/{}", a.numer(), a.denom()) };
            if r == 1 {
                write!(f, "{coeff}")?;
            } else if a.is_one() {
                write!(f, "sqrt({r})")?;
            } else {
                write!(f, "{coeff}*sqrt({r})")?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn basis_order_and_reduction() {
        let k = MQField::new(&[2, 5, 31]).unwrap();
        assert_eq!(k.basis_radicands(), &[1, 2, 5, 10, 31, 62, 155, 310]);
        let k = MQField::new(&[6, 10]).unwrap();
        assert_eq!(k.basis_radicands(), &[1, 6, 10, 15]);
        // √15 is already generated by √6, √10
        let k = MQField::new(&[6, 10, 15, 12]).unwrap();
        assert_eq!(k.degree(), 8);
        assert_eq!(k.radicands(), &[6, 10, 3]);
        assert!(MQField::new(&[4]).is_err());
        assert!(MQField::new(&[1]).is_err());
    }

    #[test]
    fn radical_products() {
        let k = MQField::new(&[5, 31]).unwrap();
        let r5 = MQElement::radical(&k, 5).unwrap();
        let r31 = MQElement::radical(&k, 31).unwrap();
        assert_eq!(r5.square(), MQElement::from_integer(&k, 5));
        let p = &r5 * &r31;
        assert_eq!(p.coord(3), q(1, 1));
        assert_eq!(p, MQElement::radical(&k, 155).unwrap());
        let k = MQField::new(&[6, 10]).unwrap();
        let p = &MQElement::radical(&k, 6).unwrap() * &MQElement::radical(&k, 10).unwrap();
        assert_eq!(p, MQElement::radical(&k, 15).unwrap().scale(&q(2, 1)));
    }

    #[test]
    fn eps2_times_conjugate() {
        let k = MQField::new(&[2]).unwrap();
        let a = MQElement::from_int_coords(&k, &[1, 1]).unwrap();
        let b = MQElement::from_int_coords(&k, &[-1, 1]).unwrap();
        assert!((&a * &b).is_one());
    }

    #[test]
    fn automorphisms() {
        let k = MQField::new(&[2, 5, 31]).unwrap();
        let a = MQElement::quadratic(&k, 2, &q(1, 1), &q(1, 1)).unwrap();
        let tau1 = SignPattern::new(vec![-1, 1, 1]).unwrap();
        assert_eq!(a.apply_automorphism(&tau1).unwrap(), MQElement::quadratic(&k, 2, &q(1, 1), &q(-1, 1)).unwrap());
        assert_eq!(a.apply_automorphism(&SignPattern::identity(3)).unwrap(), a);
        let pq = &MQElement::radical(&k, 5).unwrap() * &MQElement::radical(&k, 31).unwrap();
        let t23 = SignPattern::new(vec![1, -1, -1]).unwrap();
        assert_eq!(pq.apply_automorphism(&t23).unwrap(), pq);
        assert!(a.apply_automorphism(&SignPattern::identity(2)).is_err());
    }

    #[test]
    fn embeddings() {
        let k = MQField::new(&[2]).unwrap();
        let a = MQElement::from_int_coords(&k, &[1, 1]).unwrap();
        let iv = embed(&a, &SignPattern::identity(1), 64).unwrap();
        let outer = Interval { lo: q(241421356, 100000000), hi: q(241421357, 100000000) };
        assert!(iv.is_subset_of(&outer));
        let finer = embed(&a, &SignPattern::identity(1), 128).unwrap();
        assert!(finer.is_subset_of(&iv));
        let z = MQElement::zero(&k);
        let iv = embed(&z, &SignPattern::identity(1), 64).unwrap();
        assert!(iv.lo.is_zero() && iv.hi.is_zero());
        let k7 = MQField::new(&[7]).unwrap();
        let e7 = MQElement::from_int_coords(&k7, &[8, 3]).unwrap();
        let iv = embed(&e7, &SignPattern::new(vec![-1]).unwrap(), 64).unwrap();
        assert!(iv.lo.is_positive());
        assert!(iv.is_subset_of(&Interval { lo: q(627, 10000), hi: q(628, 10000) }));
        assert_eq!(e7.sign_at(&SignPattern::new(vec![-1]).unwrap()).unwrap(), Ordering::Greater);
    }

    #[test]
    fn square_roots() {
        let k7 = MQField::new(&[7]).unwrap();
        let two_e7 = MQElement::from_int_coords(&k7, &[16, 6]).unwrap();
        assert_eq!(two_e7.sqrt().unwrap(), MQElement::from_int_coords(&k7, &[3, 1]).unwrap());
        let k = MQField::new(&[2, 3]).unwrap();
        assert_eq!(MQElement::from_integer(&k, 4).sqrt().unwrap(), MQElement::from_integer(&k, 2));
        let k2 = MQField::new(&[2]).unwrap();
        assert!(MQElement::from_int_coords(&k2, &[1, 1]).unwrap().sqrt().is_none());
        // √2 itself is a square root of 2 but 3 is not a square in Q(√2)
        assert_eq!(MQElement::from_integer(&k2, 2).sqrt().unwrap(), MQElement::radical(&k2, 2).unwrap());
        assert!(MQElement::from_integer(&k2, 3).sqrt().is_none());
        // eps_155 = (5√5 + 2√31)^2 in Q(√5, √31)
        let k = MQField::new(&[5, 31]).unwrap();
        let e = MQElement::quadratic(&k, 155, &q(249, 1), &q(20, 1)).unwrap();
        let r = e.sqrt().unwrap();
        assert_eq!(r.coords(), vec![q(0, 1), q(5, 1), q(2, 1), q(0, 1)]);
    }

    #[test]
    fn inverse_and_norm() {
        let k = MQField::new(&[2, 5, 31]).unwrap();
        let a = MQElement::from_int_coords(&k, &[3, -1, 4, 1, -5, 9, 2, 6]).unwrap();
        let inv = a.inverse().unwrap();
        assert!((&a * &inv).is_one());
        let prod = SignPattern::all(3).fold(MQElement::one(&k), |acc, s| &acc * &a.apply_automorphism(&s).unwrap());
        assert_eq!(prod.as_rational().unwrap(), a.norm());
        assert!(MQElement::zero(&k).inverse().is_err());
    }

    #[test]
    fn reduction_mod_prime_is_multiplicative() {
        let k = MQField::new(&[2, 7]).unwrap();
        // 2 ≡ 3² and 7 ≡ 6²... find roots mod 31: 8² = 64 ≡ 2, 10² = 100 ≡ 7
        let roots = [8u64, 10];
        let a = MQElement::from_coords(&k, &[q(1, 2), q(3, 1), q(-2, 1), q(5, 4)]).unwrap();
        let b = MQElement::from_int_coords(&k, &[7, 0, 1, -3]).unwrap();
        let lhs = (&a * &b).reduce_mod(31, &roots).unwrap();
        let rhs = a.reduce_mod(31, &roots).unwrap() * b.reduce_mod(31, &roots).unwrap() % 31;
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn mismatched_fields() {
        let a = MQElement::one(&MQField::new(&[2]).unwrap());
        let b = MQElement::one(&MQField::new(&[3]).unwrap());
        assert!(mq_mul(&a, &b).is_err());
    }
}
