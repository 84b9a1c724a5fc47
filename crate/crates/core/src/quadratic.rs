//! Fundamental units and class numbers of quadratic fields.
//!
//! Units come from the PQa continued-fraction recurrence on `(σ + √D)/2`,
//! class numbers from exact reduced-form counts: reduced forms directly for
//! `D < 0`, cycles of reduced indefinite forms under the ρ operator for `D > 0`.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::arith::{is_squarefree, isqrt_i128, two_part};
use crate::error::{Error, Result};
use crate::field::{FieldRef, MQElement};

/// `ε = x + y√d` with `x = x2/2`, `y = y2/2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadUnit {
    pub d: i64,
    x2: BigInt,
    y2: BigInt,
    pub norm: i8,
}

impl QuadUnit {
    /// Builds a unit from its rational coordinates and checks `x² - d y² = ±1`.
    pub fn new(d: i64, x: BigRational, y: BigRational) -> Result<Self> {
        let two = BigRational::from_integer(2.into());
        let (x2, y2) = (&x * &two, &y * &two);
        if !x2.is_integer() || !y2.is_integer() {
            return Err(Error::Invalid("unit coordinates must be integers or half-integers".into()));
        }
        let n = &x * &x - BigRational::from_integer(d.into()) * &y * &y;
        let norm = if n.is_one() {
            1
        } else if n == -BigRational::one() {
            -1
        } else {
            return Err(Error::Invalid(format!("x^2 - {d} y^2 = {n} is not a unit norm")));
        };
        let (x2, y2) = (x2.to_integer(), y2.to_integer());
        if x2.is_odd() && d.rem_euclid(4) != 1 {
            return Err(Error::Invalid(format!("half-integer unit requires d = 1 mod 4, got {d}")));
        }
        Ok(QuadUnit { d, x2, y2, norm })
    }

    pub fn x(&self) -> BigRational {
        BigRational::new(self.x2.clone(), 2.into())
    }

    pub fn y(&self) -> BigRational {
        BigRational::new(self.y2.clone(), 2.into())
    }

    /// Doubled coordinates `(2x, 2y)`.
    pub fn doubled(&self) -> (&BigInt, &BigInt) {
        (&self.x2, &self.y2)
    }

    pub fn is_half_integral(&self) -> bool {
        self.x2.is_odd()
    }

    /// The unit as an element of a multiquadratic field containing `√d`.
    pub fn in_field(&self, field: &FieldRef) -> Result<MQElement> {
        MQElement::quadratic(field, self.d, &self.x(), &self.y())
    }

    pub fn display(&self) -> String {
        let fmt = |v: &BigRational| if v.is_integer() { v.to_integer().to_string() } else { format!("{}/{}", v.numer(), v.denom()) };
        format!("{} + {}*sqrt({})", fmt(&self.x()), fmt(&self.y()), self.d)
    }
}

impl Serialize for QuadUnit {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("QuadUnit", 4)?;
        st.serialize_field("d", &self.d)?;
        st.serialize_field("x", &self.x().to_string())?;
        st.serialize_field("y", &self.y().to_string())?;
        st.serialize_field("norm", &self.norm)?;
        st.end()
    }
}

/// Fundamental unit `ε_d > 1` of the maximal order of `Q(√d)`.
pub fn fundamental_unit(d: i64) -> Result<QuadUnit> {
    if d <= 1 {
        return Err(Error::Invalid(format!("fundamental_unit needs d > 1, got {d}")));
    }
    if !is_squarefree(d) {
        return Err(Error::NotSquarefree(d));
    }
    let disc = if d % 4 == 1 { d } else { 4 * d };
    let (g, b, norm) = order_unit(disc);
    // ε = (g + b√D)/2; for D = 4d that is g/2 + b√d.
    let (x2, y2) = if disc == d { (g, b) } else { (g, 2 * b) };
    Ok(QuadUnit { d, x2, y2, norm })
}

/// Fundamental unit of the order of discriminant `disc > 0`, as
/// `(g, b, norm)` with `ε = (g + b√disc)/2`.
fn order_unit(disc: i64) -> (BigInt, BigInt, i8) {
    let big_d = disc as i128;
    let s = isqrt_i128(big_d);
    let p0 = big_d.rem_euclid(2);
    let q0: i128 = 2;
    let (mut p, mut q) = (p0, q0);
    let (mut g_prev2, mut g_prev) = (BigInt::from(-p0), BigInt::from(q0));
    let (mut b_prev2, mut b_prev) = (BigInt::one(), BigInt::zero());
    let mut i: u64 = 0;
    loop {
        let a = (p + s).div_euclid(q);
        let g = &g_prev * a + &g_prev2;
        let b = &b_prev * a + &b_prev2;
        let p_next = a * q - p;
        let q_next = (big_d - p_next * p_next) / q;
        if q_next == q0 {
            // g² - D b² = (-1)^(i+1) q0²
            let norm = if i.is_multiple_of(2) { -1 } else { 1 };
            return (g, b, norm);
        }
        g_prev2 = std::mem::replace(&mut g_prev, g);
        b_prev2 = std::mem::replace(&mut b_prev, b);
        p = p_next;
        q = q_next;
        i += 1;
    }
}

/// A primitive binary quadratic form `a x² + b x y + c y²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Form {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl Form {
    pub fn discriminant(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FormClassGroup {
    pub discriminant: i64,
    /// One reduced form per (narrow) class.
    pub representatives: Vec<Form>,
    pub h_narrow: u64,
    pub h: u64,
    pub h2: u64,
    /// Norm of the fundamental unit (positive discriminants only).
    pub unit_norm: Option<i8>,
}

const MAX_ABS_DISC: i64 = 1 << 40;

/// Class group data of the quadratic order of discriminant `disc`.
pub fn class_group(disc: i64) -> Result<FormClassGroup> {
    let m4 = disc.rem_euclid(4);
    if (m4 != 0 && m4 != 1) || disc.abs() > MAX_ABS_DISC {
        return Err(Error::InvalidDiscriminant(disc));
    }
    if disc >= 0 {
        let s = isqrt_i128(disc as i128) as i64;
        if s * s == disc {
            return Err(Error::InvalidDiscriminant(disc));
        }
        Ok(indefinite_class_group(disc))
    } else {
        Ok(definite_class_group(disc))
    }
}

fn gcd3(a: i64, b: i64, c: i64) -> i64 {
    a.gcd(&b).gcd(&c)
}

fn definite_class_group(disc: i64) -> FormClassGroup {
    let mut reps = Vec::new();
    let mut a = 1i64;
    while 3 * a * a <= -disc {
        for b in -a + 1..=a {
            if (b - disc).rem_euclid(2) != 0 {
                continue;
            }
            let num = b * b - disc;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            if c < a {
                continue;
            }
            if (b.abs() == a || a == c) && b < 0 {
                continue;
            }
            if gcd3(a, b, c) != 1 {
                continue;
            }
            reps.push(Form { a, b, c });
        }
        a += 1;
    }
    let h = reps.len() as u64;
    FormClassGroup { discriminant: disc, representatives: reps, h_narrow: h, h, h2: two_part(h), unit_norm: None }
}

/// Reduced indefinite forms: `0 < b < √D` and `√D - b < 2|a| < √D + b`.
pub fn reduced_indefinite_forms(disc: i64) -> Vec<Form> {
    let s = isqrt_i128(disc as i128) as i64;
    let mut out = Vec::new();
    let mut b = if disc % 2 == 0 { 2 } else { 1 };
    while b <= s {
        let m = (disc - b * b) / 4;
        let mut a0 = 1i64;
        while a0 * a0 <= m {
            if m % a0 == 0 {
                for d in [a0, m / a0] {
                    if let Some(f) = reduced_pair(disc, b, d, m) {
                        out.extend(f);
                    }
                    if a0 * a0 == m {
                        break;
                    }
                }
            }
            a0 += 1;
        }
        b += 2;
    }
    out.sort_by_key(|f| (f.a, f.b));
    out.dedup();
    out
}

fn reduced_pair(disc: i64, b: i64, a_abs: i64, m: i64) -> Option<[Form; 2]> {
    let lo = 2 * a_abs + b;
    if (lo as i128) * (lo as i128) <= disc as i128 {
        return None;
    }
    let hi = 2 * a_abs - b;
    if hi >= 0 && (hi as i128) * (hi as i128) >= disc as i128 {
        return None;
    }
    let c = m / a_abs;
    if gcd3(a_abs, b, c) != 1 {
        return None;
    }
    Some([Form { a: a_abs, b, c: -c }, Form { a: -a_abs, b, c }])
}

/// ρ(a, b, c) = (c, b', a') with `b' ≡ -b (mod 2c)` and `√D - 2|c| < b' < √D`.
pub fn rho(f: Form, disc: i64) -> Form {
    let s = isqrt_i128(disc as i128) as i64;
    let m = 2 * f.c.abs();
    let b2 = s - (s + f.b).rem_euclid(m);
    let a2 = (b2 * b2 - disc) / (4 * f.c);
    Form { a: f.c, b: b2, c: a2 }
}

fn indefinite_class_group(disc: i64) -> FormClassGroup {
    let forms = reduced_indefinite_forms(disc);
    let index: HashMap<Form, usize> = forms.iter().enumerate().map(|(i, f)| (*f, i)).collect();
    let mut seen = vec![false; forms.len()];
    let mut reps = Vec::new();
    for start in 0..forms.len() {
        if seen[start] {
            continue;
        }
        reps.push(forms[start]);
        let mut f = forms[start];
        loop {
            let i = *index.get(&f).expect("rho keeps forms reduced");
            if seen[i] {
                break;
            }
            seen[i] = true;
            f = rho(f, disc);
        }
    }
    let h_narrow = reps.len() as u64;
    let (_, _, norm) = order_unit(disc);
    let h = if norm == -1 { h_narrow } else { h_narrow / 2 };
    FormClassGroup { discriminant: disc, representatives: reps, h_narrow, h, h2: two_part(h), unit_norm: Some(norm) }
}

/// Discriminant of the maximal order of `Q(√d)`.
pub fn field_discriminant(d: i64) -> i64 {
    if d.rem_euclid(4) == 1 {
        d
    } else {
        4 * d
    }
}

/// 2-part of the class number of `Q(√d)`.
pub fn h2_of(d: i64) -> Result<u64> {
    Ok(class_group_of(d)?.h2)
}

/// Class group of `Q(√d)` for squarefree `d ≠ 0, 1`.
pub fn class_group_of(d: i64) -> Result<FormClassGroup> {
    if d == 0 || d == 1 {
        return Err(Error::Invalid(format!("Q(sqrt({d})) is not quadratic")));
    }
    if !is_squarefree(d) {
        return Err(Error::NotSquarefree(d));
    }
    class_group(field_discriminant(d))
}

/// Cache of fundamental units, shared across a computation.
#[derive(Debug, Default, Clone)]
pub struct UnitTable {
    units: HashMap<i64, Arc<QuadUnit>>,
}

impl UnitTable {
    pub fn get(&mut self, d: i64) -> Result<Arc<QuadUnit>> {
        if let Some(u) = self.units.get(&d) {
            return Ok(u.clone());
        }
        let u = Arc::new(fundamental_unit(d)?);
        self.units.insert(d, u.clone());
        Ok(u)
    }
}
