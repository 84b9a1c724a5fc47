//! Fundamental systems of units of real multiquadratic fields by 2-descent.
//!
//! Start from the fundamental units of the quadratic subfields and adjoin
//! square roots of `{0,1}`-products that are squares in the field until no
//! nontrivial product is a square. Every unit carries its exponent vector
//! over the quadratic units, so the unit index is the inverse determinant of
//! the final exponent matrix.
//!
//! Candidate products are first screened by characters that must vanish on
//! squares (signs at the real embeddings and quadratic residue symbols at
//! split primes); only the common kernel is tested by exact square roots.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{is_prime, pow_mod, two_part};
use crate::conditions::check_conditions;
use crate::error::{Error, Result};
use crate::field::{FieldRef, MQElement, MQField, SignPattern};
use crate::quadratic::{fundamental_unit, h2_of, QuadUnit};

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// The fundamental units of all quadratic subfields of a field.
#[derive(Debug, Clone)]
pub struct QuadBasis {
    pub field: FieldRef,
    pub ds: Vec<i64>,
    pub units: Vec<QuadUnit>,
    pub elems: Vec<MQElement>,
}

impl QuadBasis {
    pub fn new(field: &FieldRef) -> Result<Self> {
        let ds = field.quadratic_radicands();
        let mut units = Vec::new();
        let mut elems = Vec::new();
        for &d in &ds {
            let u = fundamental_unit(d)?;
            elems.push(u.in_field(field)?);
            units.push(u);
        }
        Ok(QuadBasis { field: field.clone(), ds, units, elems })
    }

    pub fn rank(&self) -> usize {
        self.ds.len()
    }

    pub fn index_of(&self, d: i64) -> Option<usize> {
        self.ds.iter().position(|&x| x == d)
    }

    /// The unit `ε_d` with its exponent vector.
    pub fn tracked(&self, i: usize) -> TrackedUnit {
        let mut exps = vec![BigRational::zero(); self.rank()];
        exps[i] = BigRational::one();
        TrackedUnit { elem: self.elems[i].clone(), exps }
    }

    /// `±∏ ε_d^{e_d}` for rational exponents with 2-power denominators, if
    /// such a unit lies in the field.
    pub fn unit_with_exponents(&self, exps: &[BigRational]) -> Result<Option<MQElement>> {
        let den = exps.iter().fold(BigInt::one(), |acc, e| acc.lcm(e.denom()));
        let k = den.to_u64().filter(|&d| d.is_power_of_two()).ok_or_else(|| Error::Invalid("exponent denominators must be powers of two".into()))?.trailing_zeros();
        let mut acc = MQElement::one(&self.field);
        for (e, g) in exps.iter().zip(&self.elems) {
            let n = (e * BigRational::from_integer(den.clone())).to_integer();
            let n = n.to_i64().ok_or_else(|| Error::Invalid("exponent too large".into()))?;
            if n != 0 {
                acc = &acc * &g.pow(n)?;
            }
        }
        for _ in 0..k {
            acc = match acc.sqrt().or_else(|| (-&acc).sqrt()) {
                Some(r) => r,
                None => return Ok(None),
            };
        }
        Ok(Some(acc))
    }

    pub fn label(&self, exps: &[BigRational]) -> String {
        exponent_label(&self.ds, exps)
    }
}

fn exponent_label(ds: &[i64], exps: &[BigRational]) -> String {
    let den = exps.iter().fold(BigInt::one(), |acc, e| acc.lcm(e.denom()));
    let mut parts = Vec::new();
    for (d, e) in ds.iter().zip(exps) {
        let n = (e * BigRational::from_integer(den.clone())).to_integer();
        if n.is_zero() {
            continue;
        }
        if n.is_one() {
            parts.push(format!("eps_{d}"));
        } else {
            parts.push(format!("eps_{d}^{n}"));
        }
    }
    if parts.is_empty() {
        return "1".into();
    }
    let body = parts.join("*");
    if den.is_one() {
        body
    } else if den == BigInt::from(2) {
        format!("sqrt({body})")
    } else {
        format!("({body})^(1/{den})")
    }
}

/// A unit with its exponent vector over the quadratic fundamental units
/// (equality up to sign).
#[derive(Clone, PartialEq, Eq)]
pub struct TrackedUnit {
    pub elem: MQElement,
    pub exps: Vec<BigRational>,
}

impl fmt::Debug for TrackedUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e: Vec<String> = self.exps.iter().map(|x| x.to_string()).collect();
        write!(f, "TrackedUnit[{}]", e.join(", "))
    }
}

impl TrackedUnit {
    fn mul(&self, other: &Self) -> Self {
        TrackedUnit { elem: &self.elem * &other.elem, exps: self.exps.iter().zip(&other.exps).map(|(a, b)| a + b).collect() }
    }

    fn pow(&self, k: i64) -> Result<Self> {
        Ok(TrackedUnit { elem: self.elem.pow(k)?, exps: self.exps.iter().map(|a| a * rat(k)).collect() })
    }

    fn lift(&self, target: &FieldRef, from: &[i64], to: &QuadBasis) -> Result<Self> {
        let mut exps = vec![BigRational::zero(); to.rank()];
        for (d, e) in from.iter().zip(&self.exps) {
            let i = to.index_of(*d).ok_or_else(|| Error::Consistency(format!("eps_{d} is not a quadratic unit of the target field")))?;
            exps[i] = e.clone();
        }
        Ok(TrackedUnit { elem: self.elem.lift_to(target)?, exps })
    }
}

/// Characters of the unit group that vanish on squares.
struct Characters {
    patterns: Vec<SignPattern>,
    /// `(ell, roots)`: one homomorphism to `F_ell` per choice of square roots.
    residues: Vec<(u64, Vec<u64>)>,
}

impl Characters {
    fn new(field: &FieldRef, primes_wanted: usize) -> Self {
        let t = field.generator_count();
        let patterns: Vec<SignPattern> = SignPattern::all(t).collect();
        let mut residues = Vec::new();
        let mut ell = 3u64;
        let mut found = 0;
        while found < primes_wanted {
            ell += 2;
            if !is_prime(ell) {
                continue;
            }
            let roots: Option<Vec<u64>> = field.radicands().iter().map(|&d| sqrt_mod(d, ell)).collect();
            let Some(roots) = roots else { continue };
            found += 1;
            for mask in 0..(1usize << t) {
                let r: Vec<u64> = roots.iter().enumerate().map(|(i, &x)| if mask >> i & 1 == 1 { ell - x } else { x }).collect();
                residues.push((ell, r));
            }
        }
        Characters { patterns, residues }
    }

    fn len(&self) -> usize {
        self.patterns.len() + self.residues.len()
    }

    /// Bit vector: 1 where the character is nontrivial; `None` where the
    /// reduction is undefined.
    fn of(&self, e: &MQElement) -> Vec<Option<bool>> {
        let mut out = Vec::with_capacity(self.len());
        for s in &self.patterns {
            out.push(Some(e.sign_at(s).expect("pattern length matches") == std::cmp::Ordering::Less));
        }
        for (ell, roots) in &self.residues {
            out.push(match e.reduce_mod(*ell, roots) {
                Some(v) if v != 0 => Some(pow_mod(v, (ell - 1) / 2, *ell) != 1),
                _ => None,
            });
        }
        out
    }

    fn of_minus_one(&self) -> Vec<Option<bool>> {
        let mut out = vec![Some(true); self.patterns.len()];
        for (ell, _) in &self.residues {
            out.push(Some(ell % 4 == 3));
        }
        out
    }

    /// Character matrix restricted to the columns defined on every row.
    fn matrix(&self, elems: &[MQElement]) -> Vec<Vec<bool>> {
        let mut rows = vec![self.of_minus_one()];
        rows.extend(elems.iter().map(|g| self.of(g)));
        let keep: Vec<usize> = (0..self.len()).filter(|&c| rows.iter().all(|r| r[c].is_some())).collect();
        rows.iter().map(|r| keep.iter().map(|&c| r[c].expect("kept")).collect()).collect()
    }
}

fn sqrt_mod(d: i64, ell: u64) -> Option<u64> {
    let a = d.rem_euclid(ell as i64) as u64;
    if a == 0 {
        return None;
    }
    (1..ell).find(|&x| x * x % ell == a)
}

/// All nonzero `c ∈ F_2^n` with `Σ c_i rows_i = 0`, in increasing order of
/// their bit encoding.
fn f2_kernel(rows: &[Vec<bool>]) -> Vec<u64> {
    let n = rows.len();
    assert!(n <= 40, "too many generators for the F2 kernel enumeration");
    let mut work: Vec<(Vec<bool>, u64)> = rows.iter().enumerate().map(|(i, r)| (r.clone(), 1u64 << i)).collect();
    let width = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..width {
        let Some(p) = (rank..n).find(|&i| work[i].0[col]) else { continue };
        work.swap(rank, p);
        let (pr, pc) = work[rank].clone();
        for (i, w) in work.iter_mut().enumerate() {
            if i != rank && w.0[col] {
                for (a, b) in w.0.iter_mut().zip(&pr) {
                    *a ^= *b;
                }
                w.1 ^= pc;
            }
        }
        rank += 1;
    }
    let basis: Vec<u64> = work[rank..].iter().map(|w| w.1).collect();
    let mut all: Vec<u64> = (1u64..(1u64 << basis.len()))
        .map(|m| basis.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).fold(0, |acc, (_, &b)| acc ^ b))
        .collect();
    all.sort_unstable();
    all
}

/// A square class found during the descent.
#[derive(Debug, Clone, Serialize)]
pub struct DescentStep {
    /// `±∏ g_i` that turned out to be a square.
    pub product: String,
    pub negated: bool,
    /// The adjoined root.
    pub root: String,
    /// The generator it replaced.
    pub replaced: String,
}

/// Statistics of one exhaustive pass over `{0,1}`-products.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PassStats {
    pub candidates: u64,
    pub screened_out: u64,
    pub exact_tests: u64,
    pub squares: u64,
}

/// Products `(-1)^{c_0} ∏ g_i^{c_i}` that are squares, each as the bit
/// encoding of `c` (bit 0 is the sign) together with its square root.
pub fn square_products(field: &FieldRef, gens: &[MQElement]) -> Result<(Vec<(u64, MQElement)>, PassStats)> {
    let chars = Characters::new(field, 8);
    let rows = chars.matrix(gens);
    let kernel = f2_kernel(&rows);
    let n = gens.len() as u32 + 1;
    let mut stats = PassStats { candidates: (1u64 << n) - 1, ..Default::default() };
    stats.screened_out = stats.candidates - kernel.len() as u64;
    let mut out = Vec::new();
    for c in kernel {
        let mut p = MQElement::one(field);
        for (i, g) in gens.iter().enumerate() {
            if c >> (i + 1) & 1 == 1 {
                p = &p * g;
            }
        }
        if c & 1 == 1 {
            p = -&p;
        }
        stats.exact_tests += 1;
        if let Some(r) = p.sqrt() {
            stats.squares += 1;
            out.push((c, r));
        }
    }
    Ok((out, stats))
}

fn saturate(basis: &QuadBasis, gens: &mut [TrackedUnit], steps: &mut Vec<DescentStep>, stats: &mut Vec<PassStats>) -> Result<()> {
    loop {
        let elems: Vec<MQElement> = gens.iter().map(|g| g.elem.clone()).collect();
        let (squares, st) = square_products(&basis.field, &elems)?;
        stats.push(st);
        let Some((c, root)) = squares.into_iter().find(|(c, _)| c >> 1 != 0) else { return Ok(()) };
        let members: Vec<usize> = (0..gens.len()).filter(|i| c >> (i + 1) & 1 == 1).collect();
        let j = *members.last().expect("nonempty product");
        let mut sum = vec![BigRational::zero(); basis.rank()];
        for &i in &members {
            for (s, e) in sum.iter_mut().zip(&gens[i].exps) {
                *s += e;
            }
        }
        let half = BigRational::new(1.into(), 2.into());
        let exps: Vec<BigRational> = sum.iter().map(|s| s * &half).collect();
        let product = members.iter().map(|&i| basis.label(&gens[i].exps)).collect::<Vec<_>>().join(" * ");
        steps.push(DescentStep { product, negated: c & 1 == 1, root: basis.label(&exps), replaced: basis.label(&gens[j].exps) });
        gens[j] = TrackedUnit { elem: root, exps };
    }
}

/// Integer row reduction of the exponent lattice, applying the same moves
/// multiplicatively to the units. Rows reduced to zero must be `±1`.
fn lattice_basis(mut units: Vec<TrackedUnit>) -> Result<Vec<TrackedUnit>> {
    let r = units.first().map_or(0, |u| u.exps.len());
    let den = units.iter().flat_map(|u| u.exps.iter()).fold(BigInt::one(), |acc, e| acc.lcm(e.denom()));
    let int = |u: &TrackedUnit, c: usize| -> BigInt { (&u.exps[c] * BigRational::from_integer(den.clone())).to_integer() };
    let mut pivot = 0;
    for col in 0..r {
        loop {
            let nz: Vec<usize> = (pivot..units.len()).filter(|&i| !int(&units[i], col).is_zero()).collect();
            if nz.is_empty() {
                break;
            }
            let m = *nz.iter().min_by_key(|&&i| int(&units[i], col).abs()).expect("nonempty");
            units.swap(pivot, m);
            let pv = int(&units[pivot], col);
            if nz.len() == 1 {
                if pv.is_negative() {
                    units[pivot] = units[pivot].pow(-1)?;
                }
                break;
            }
            for i in pivot + 1..units.len() {
                let v = int(&units[i], col);
                if v.is_zero() {
                    continue;
                }
                let k = v.div_floor(&pv).to_i64().ok_or_else(|| Error::Consistency("lattice reduction overflow".into()))?;
                if k != 0 {
                    let corr = units[pivot].pow(-k)?;
                    units[i] = units[i].mul(&corr);
                }
            }
        }
        if (pivot..units.len()).any(|i| !int(&units[i], col).is_zero()) {
            pivot += 1;
        }
    }
    for u in &units[pivot..] {
        if !(u.elem.is_one() || (-&u.elem).is_one()) {
            return Err(Error::Consistency("a unit with zero exponent vector is not ±1".into()));
        }
    }
    units.truncate(pivot);
    Ok(units)
}

/// Determinant of a square rational matrix.
fn det(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    let mut d = BigRational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else { return BigRational::zero() };
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        let pv = m[c][c].clone();
        d *= &pv;
        for i in c + 1..n {
            if m[i][c].is_zero() {
                continue;
            }
            let f = &m[i][c] / &pv;
            for k in c..n {
                let t = &f * &m[c][k];
                m[i][k] -= t;
            }
        }
    }
    d
}

/// Solves `x · rows = target` for `x` (rows square and invertible).
fn solve_left(rows: &[Vec<BigRational>], target: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = rows.len();
    // augmented system: columns of `rows` become equations
    let mut a: Vec<Vec<BigRational>> = (0..n).map(|j| {
        let mut r: Vec<BigRational> = (0..n).map(|i| rows[i][j].clone()).collect();
        r.push(target[j].clone());
        r
    }).collect();
    for c in 0..n {
        let p = (c..n).find(|&i| !a[i][c].is_zero())?;
        a.swap(p, c);
        let pv = a[c][c].clone();
        for k in c..=n {
            a[c][k] = &a[c][k] / &pv;
        }
        for i in 0..n {
            if i != c && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for k in c..=n {
                    let t = &f * &a[c][k];
                    a[i][k] -= t;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n].clone()).collect())
}

#[derive(Debug, Clone)]
pub struct FsuResult {
    pub field: FieldRef,
    pub basis: QuadBasis,
    pub generators: Vec<TrackedUnit>,
    pub q_index: u64,
    /// 2-class number from the class number formula, when computed.
    pub h2: Option<BigRational>,
    pub steps: Vec<DescentStep>,
    pub passes: Vec<PassStats>,
}

impl FsuResult {
    fn finish(basis: QuadBasis, generators: Vec<TrackedUnit>, steps: Vec<DescentStep>, passes: Vec<PassStats>) -> Result<Self> {
        if generators.len() != basis.rank() {
            return Err(Error::Consistency(format!("found {} generators for unit rank {}", generators.len(), basis.rank())));
        }
        let m: Vec<Vec<BigRational>> = generators.iter().map(|g| g.exps.clone()).collect();
        let d = det(m).abs();
        if d.is_zero() || !d.recip().is_integer() {
            return Err(Error::Consistency(format!("exponent determinant {d} is not 1/integer")));
        }
        let q = d.recip().to_integer().to_u64().ok_or_else(|| Error::Consistency("unit index overflow".into()))?;
        if !q.is_power_of_two() {
            return Err(Error::Consistency(format!("unit index {q} is not a power of 2")));
        }
        Ok(FsuResult { field: basis.field.clone(), basis, generators, q_index: q, h2: None, steps, passes })
    }

    pub fn labels(&self) -> Vec<String> {
        self.generators.iter().map(|g| self.basis.label(&g.exps)).collect()
    }

    /// Attaches the 2-class number via the class number formula.
    pub fn with_class_number(mut self) -> Result<Self> {
        let h2s: Vec<u64> = self.basis.ds.iter().map(|&d| h2_of(d)).collect::<Result<_>>()?;
        self.h2 = Some(class_number_formula(&self.field, self.q_index, &h2s));
        Ok(self)
    }

    /// Whether the group generated by `elems` (with exponent vectors) equals
    /// the computed unit group modulo `±1`.
    pub fn same_group(&self, others: &[TrackedUnit]) -> bool {
        lattice_equal(&self.generators, others)
    }
}

impl Serialize for FsuResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("FsuResult", 5)?;
        st.serialize_field("field", self.field.radicands())?;
        st.serialize_field("generators", &self.labels())?;
        st.serialize_field("q_index", &self.q_index)?;
        st.serialize_field("h2", &self.h2.as_ref().map(|h| h.to_string()))?;
        st.serialize_field("steps", &self.steps)?;
        st.end()
    }
}

fn lattice_equal(a: &[TrackedUnit], b: &[TrackedUnit]) -> bool {
    let rows = |v: &[TrackedUnit]| -> Vec<Vec<BigRational>> { v.iter().map(|u| u.exps.clone()).collect() };
    let (ra, rb) = (rows(a), rows(b));
    if ra.len() != rb.len() {
        return false;
    }
    let inside = |rows: &[Vec<BigRational>], others: &[Vec<BigRational>]| {
        others.iter().all(|t| solve_left(rows, t).is_some_and(|x| x.iter().all(|c| c.is_integer())))
    };
    inside(&ra, &rb) && inside(&rb, &ra)
}

/// Integer coordinates of `target` on `gens`, and an exact check that
/// `±∏ gens^x` reproduces the element.
pub fn express(gens: &[TrackedUnit], target: &TrackedUnit) -> Result<Option<Vec<i64>>> {
    let rows: Vec<Vec<BigRational>> = gens.iter().map(|u| u.exps.clone()).collect();
    let Some(x) = solve_left(&rows, &target.exps) else { return Ok(None) };
    if !x.iter().all(|c| c.is_integer()) {
        return Ok(None);
    }
    let x: Vec<i64> = x.iter().map(|c| c.to_integer().to_i64().expect("small coordinates")).collect();
    let mut acc = MQElement::one(target.elem.field());
    for (g, &k) in gens.iter().zip(&x) {
        if k != 0 {
            acc = &acc * &g.elem.pow(k)?;
        }
    }
    if acc == target.elem || -&acc == target.elem {
        Ok(Some(x))
    } else {
        Err(Error::Consistency("exponent coordinates do not reproduce the unit".into()))
    }
}

fn real_field(radicands: &[i64]) -> Result<FieldRef> {
    if let Some(&d) = radicands.iter().find(|&&d| d <= 1) {
        return Err(Error::InvalidRadicand(d));
    }
    MQField::new(radicands)
}

/// FSU of a real multiquadratic field, descending directly from all
/// quadratic units.
pub fn fsu_of(radicands: &[i64]) -> Result<FsuResult> {
    let field = real_field(radicands)?;
    let basis = QuadBasis::new(&field)?;
    let mut gens: Vec<TrackedUnit> = (0..basis.rank()).map(|i| basis.tracked(i)).collect();
    let (mut steps, mut passes) = (Vec::new(), Vec::new());
    saturate(&basis, &mut gens, &mut steps, &mut passes)?;
    FsuResult::finish(basis, gens, steps, passes)
}

/// FSU of `Q(√d1, √d2)`.
pub fn biquadratic_fsu(d1: i64, d2: i64) -> Result<FsuResult> {
    let field = real_field(&[d1, d2])?;
    if field.generator_count() != 2 {
        return Err(Error::Invalid(format!("Q(sqrt({d1}), sqrt({d2})) is not biquadratic")));
    }
    fsu_of(&[d1, d2])
}

/// FSU of `K = Q(√2, √p, √q)` for a first-family pair: the FSUs of the three
/// biquadratic subfields containing `√2` are merged and one more descent pass
/// is run in `K`.
pub fn triquadratic_fsu(p: u64, q: u64) -> Result<FsuResult> {
    let cls = check_conditions(p, q)?;
    if !cls.cond1 {
        return Err(Error::ConditionsNotSatisfied { p, q, what: "conditions (1)".into() });
    }
    staged_fsu(p as i64, q as i64)
}

/// The staged descent for `Q(√2, √a, √b)`, without the family check.
pub fn staged_fsu(a: i64, b: i64) -> Result<FsuResult> {
    let field = real_field(&[2, a, b])?;
    if field.generator_count() != 3 {
        return Err(Error::Invalid("radicands do not generate a triquadratic field".into()));
    }
    let basis = QuadBasis::new(&field)?;
    let ab = crate::arith::squarefree_part(a * b);
    let mut pooled = Vec::new();
    let mut steps = Vec::new();
    let mut passes = Vec::new();
    for other in [a, b, ab] {
        let sub = biquadratic_fsu(2, other)?;
        for s in &sub.steps {
            steps.push(s.clone());
        }
        passes.extend(sub.passes.iter().cloned());
        for g in &sub.generators {
            pooled.push(g.lift(&field, &sub.basis.ds, &basis)?);
        }
    }
    let mut gens = lattice_basis(pooled)?;
    if gens.len() != basis.rank() {
        return Err(Error::Consistency(format!("biquadratic units span rank {}, expected {}", gens.len(), basis.rank())));
    }
    saturate(&basis, &mut gens, &mut steps, &mut passes)?;
    // steps are relabelled in K's coordinates for the final pass; the
    // biquadratic ones keep their subfield labels.
    FsuResult::finish(basis, gens, steps, passes)
}

/// `u · s(u)`, the relative norm to the fixed field of the involution `s`.
pub fn norm_to_subfield(u: &MQElement, s: &SignPattern) -> Result<MQElement> {
    Ok(u * &u.apply_automorphism(s)?)
}

/// `h_2 = q · ∏ h_2(k_i) / 2^v` with `v = m(2^{m-1} - 1)` for a field of
/// degree `2^m`. A non-integral value means the inputs are inconsistent.
pub fn class_number_formula(field: &MQField, q_index: u64, subfield_h2s: &[u64]) -> BigRational {
    let m = field.generator_count() as u32;
    class_number_formula_degree(1 << m, q_index, subfield_h2s)
}

pub fn class_number_formula_degree(degree: u64, q_index: u64, subfield_h2s: &[u64]) -> BigRational {
    let m = degree.trailing_zeros();
    let v = m * ((1u32 << m.saturating_sub(1)) - 1);
    let num: BigInt = subfield_h2s.iter().fold(BigInt::from(q_index), |acc, &h| acc * h);
    BigRational::new(num, BigInt::one() << v)
}

/// The power-of-two unit index that makes the formula odd, if any.
pub fn index_for_odd_class_number(degree: u64, subfield_h2s: &[u64]) -> Option<u64> {
    (0..64).map(|k| 1u64 << k).find(|&q| class_number_formula_degree(degree, q, subfield_h2s).is_one())
}

/// One generator of a published FSU, as exponents over `ε_d`.
#[derive(Debug, Clone)]
pub struct ExpectedGenerator {
    pub label: &'static str,
    pub exps: Vec<(i64, BigRational)>,
}

fn frac(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// The unit group asserted for `Q(√2, √p, √q)`, first family.
pub fn expected_fsu(p: u64, q: u64) -> Vec<ExpectedGenerator> {
    let (p, q) = (p as i64, q as i64);
    let g = |label, v: Vec<(i64, BigRational)>| ExpectedGenerator { label, exps: v };
    let (h, f, one) = (frac(1, 2), frac(1, 4), frac(1, 1));
    if p % 8 == 5 {
        vec![
            g("eps_2", vec![(2, one.clone())]),
            g("eps_p", vec![(p, one)]),
            g("sqrt(eps_q)", vec![(q, h.clone())]),
            g("sqrt(eps_2q)", vec![(2 * q, h.clone())]),
            g("sqrt(eps_pq)", vec![(p * q, h.clone())]),
            g("sqrt(eps_2 eps_p eps_2p)", vec![(2, h.clone()), (p, h.clone()), (2 * p, h)]),
            g("(eps_2q eps_pq eps_2pq)^(1/4)", vec![(2 * q, f.clone()), (p * q, f.clone()), (2 * p * q, f)]),
        ]
    } else {
        vec![
            g("eps_2", vec![(2, one)]),
            g("sqrt(eps_q)", vec![(q, h.clone())]),
            g("sqrt(eps_2q)", vec![(2 * q, h.clone())]),
            g("sqrt(eps_p)", vec![(p, h.clone())]),
            g("sqrt(eps_2pq)", vec![(2 * p * q, h)]),
            g("(eps_2q eps_pq eps_2pq)^(1/4)", vec![(2 * q, f.clone()), (p * q, f.clone()), (2 * p * q, f.clone())]),
            g("(eps_2^2 eps_q eps_2q eps_p eps_2p)^(1/4)", vec![(2, frac(1, 2)), (q, f.clone()), (2 * q, f.clone()), (p, f.clone()), (2 * p, f)]),
        ]
    }
}

/// Realizes the expected generators as elements of the field of `basis`.
/// Generators that are not units of the field come back as `None`.
pub fn realize(basis: &QuadBasis, expected: &[ExpectedGenerator]) -> Result<Vec<(String, Option<TrackedUnit>)>> {
    let mut out = Vec::new();
    for e in expected {
        let mut exps = vec![BigRational::zero(); basis.rank()];
        for (d, x) in &e.exps {
            let i = basis.index_of(*d).ok_or_else(|| Error::Invalid(format!("eps_{d} not in field")))?;
            exps[i] = x.clone();
        }
        let elem = basis.unit_with_exponents(&exps)?;
        out.push((e.label.to_string(), elem.map(|elem| TrackedUnit { elem, exps })));
    }
    Ok(out)
}

/// Comparison of a computed FSU against an expected generator list.
#[derive(Debug, Clone, Serialize)]
pub struct FsuComparison {
    /// Every expected generator exists in the field.
    pub all_realized: bool,
    pub missing: Vec<String>,
    /// The two groups coincide modulo `±1`.
    pub same_group: bool,
    /// Index of the expected generators' group over the quadratic units.
    pub expected_index: Option<u64>,
    /// Integer coordinates of each expected generator on the computed FSU,
    /// verified by exact multiplication.
    pub coordinates: Vec<(String, Option<Vec<i64>>)>,
}

pub fn compare_fsu(fsu: &FsuResult, expected: &[ExpectedGenerator]) -> Result<FsuComparison> {
    let realized = realize(&fsu.basis, expected)?;
    let missing: Vec<String> = realized.iter().filter(|(_, u)| u.is_none()).map(|(l, _)| l.clone()).collect();
    let units: Vec<TrackedUnit> = realized.iter().filter_map(|(_, u)| u.clone()).collect();
    let all_realized = missing.is_empty();
    let expected_index = if all_realized && units.len() == fsu.basis.rank() {
        let d = det(units.iter().map(|u| u.exps.clone()).collect()).abs();
        if d.is_zero() {
            None
        } else {
            d.recip().to_integer().to_u64()
        }
    } else {
        None
    };
    let same_group = all_realized && fsu.same_group(&units);
    let mut coordinates = Vec::new();
    for (label, u) in &realized {
        let c = match u {
            Some(u) => express(&fsu.generators, u)?,
            None => None,
        };
        coordinates.push((label.clone(), c));
    }
    Ok(FsuComparison { all_realized, missing, same_group, expected_index, coordinates })
}

/// The generators of `E_{k1} E_{k2} E_{k3}` whose `{0,1}`-products are
/// tested in the final descent step, in the order used by the exponent
/// tuples of [`descent_square_classes`].
pub fn descent_generators(p: u64, q: u64) -> Vec<ExpectedGenerator> {
    let (p, q) = (p as i64, q as i64);
    let g = |label, v: Vec<(i64, BigRational)>| ExpectedGenerator { label, exps: v };
    let (h, one) = (frac(1, 2), frac(1, 1));
    if p % 8 == 5 {
        vec![
            g("eps_2", vec![(2, one.clone())]),
            g("eps_p", vec![(p, one)]),
            g("sqrt(eps_q)", vec![(q, h.clone())]),
            g("sqrt(eps_2q)", vec![(2 * q, h.clone())]),
            g("sqrt(eps_pq eps_2pq)", vec![(p * q, h.clone()), (2 * p * q, h.clone())]),
            g("sqrt(eps_2 eps_p eps_2p)", vec![(2, h.clone()), (p, h.clone()), (2 * p, h)]),
        ]
    } else {
        vec![
            g("eps_2", vec![(2, one)]),
            g("sqrt(eps_q)", vec![(q, h.clone())]),
            g("sqrt(eps_2q)", vec![(2 * q, h.clone())]),
            g("sqrt(eps_p)", vec![(p, h.clone())]),
            g("sqrt(eps_2p)", vec![(2 * p, h.clone())]),
            g("sqrt(eps_pq eps_2pq)", vec![(p * q, h.clone()), (2 * p * q, h)]),
        ]
    }
}

/// Exponent tuples `(a, b, c, ...)` in `{0,1}` for which `±∏ g_i^{e_i}`
/// over [`descent_generators`] is a square in `K`.
#[derive(Debug, Clone, Serialize)]
pub struct SquareClasses {
    pub generators: Vec<String>,
    pub squares: Vec<Vec<u8>>,
}

impl SquareClasses {
    /// Whether some square has the given values at the given positions.
    pub fn has(&self, constraints: &[(usize, u8)]) -> bool {
        self.squares.iter().any(|v| constraints.iter().all(|&(i, x)| v[i] == x))
    }
}

pub fn descent_square_classes(p: u64, q: u64) -> Result<SquareClasses> {
    let field = real_field(&[2, p as i64, q as i64])?;
    let basis = QuadBasis::new(&field)?;
    let gens = descent_generators(p, q);
    let realized = realize(&basis, &gens)?;
    let mut elems = Vec::new();
    for (label, u) in &realized {
        let u = u.as_ref().ok_or_else(|| Error::Consistency(format!("{label} is not in K")))?;
        elems.push(u.elem.clone());
    }
    let (found, _) = square_products(&field, &elems)?;
    let squares = found
        .into_iter()
        .filter(|(c, _)| c >> 1 != 0)
        .map(|(c, _)| (0..elems.len()).map(|i| (c >> (i + 1) & 1) as u8).collect())
        .collect();
    Ok(SquareClasses { generators: realized.into_iter().map(|(l, _)| l).collect(), squares })
}

/// Exhaustive saturation check: no nontrivial `±∏ g_i^{c_i}` is a square.
/// Only total positivity is used to skip candidates; everything else is an
/// exact square root test.
pub fn is_saturated(field: &FieldRef, gens: &[MQElement]) -> Result<bool> {
    let n = gens.len();
    let patterns: Vec<SignPattern> = SignPattern::all(field.generator_count()).collect();
    let signs: Vec<Vec<bool>> = gens
        .iter()
        .map(|g| patterns.iter().map(|s| g.sign_at(s).map(|o| o == std::cmp::Ordering::Less)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    for c in 1u64..(1 << n) {
        let neg: Vec<bool> = (0..patterns.len()).map(|k| (0..n).filter(|&i| c >> i & 1 == 1).fold(false, |acc, i| acc ^ signs[i][k])).collect();
        let all_neg = neg.iter().all(|&b| b);
        let all_pos = neg.iter().all(|&b| !b);
        if !all_neg && !all_pos {
            continue;
        }
        let mut p = MQElement::one(field);
        for (i, g) in gens.iter().enumerate() {
            if c >> i & 1 == 1 {
                p = &p * g;
            }
        }
        if all_neg {
            p = -&p;
        }
        if p.sqrt().is_some() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `2`-part bookkeeping used by reports: `q(K)` as an exponent of 2.
pub fn log2_index(q: u64) -> u32 {
    debug_assert_eq!(two_part(q), q);
    q.trailing_zeros()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_enumeration() {
        let rows = vec![vec![true, false], vec![true, false], vec![false, true]];
        assert_eq!(f2_kernel(&rows), vec![0b011]);
        let rows = vec![vec![false], vec![false]];
        assert_eq!(f2_kernel(&rows), vec![1, 2, 3]);
    }

    #[test]
    fn biquadratic_examples() {
        let f = biquadratic_fsu(2, 31).unwrap();
        assert_eq!(f.q_index, 4);
        let mut l = f.labels();
        l.sort();
        assert_eq!(l, ["eps_2", "sqrt(eps_31)", "sqrt(eps_62)"]);

        assert_eq!(biquadratic_fsu(5, 31).unwrap().q_index, 2);

        let f = biquadratic_fsu(2, 5).unwrap();
        assert_eq!(f.q_index, 2);
        let mut l = f.labels();
        l.sort();
        assert_eq!(l, ["eps_2", "eps_5", "sqrt(eps_2*eps_5*eps_10)"]);
    }

    #[test]
    fn generators_are_units_and_saturated() {
        for (a, b) in [(2, 31), (5, 31), (2, 7), (3, 23)] {
            let f = biquadratic_fsu(a, b).unwrap();
            for g in &f.generators {
                assert_eq!(g.elem.norm().abs(), BigRational::one());
            }
            let elems: Vec<_> = f.generators.iter().map(|g| g.elem.clone()).collect();
            assert!(is_saturated(&f.field, &elems).unwrap());
        }
    }

    #[test]
    fn direct_and_staged_descent_agree() {
        let staged = staged_fsu(5, 31).unwrap();
        let direct = fsu_of(&[2, 5, 31]).unwrap();
        assert_eq!(staged.q_index, direct.q_index);
        assert!(staged.same_group(&direct.generators));
    }

    #[test]
    fn class_number_formula_examples() {
        assert_eq!(class_number_formula_degree(8, 64, &[1, 1, 1, 2, 1, 2, 2]), BigRational::one());
        assert_eq!(class_number_formula_degree(8, 32, &[1, 1, 1, 2, 1, 2, 2]), frac(1, 2));
        assert_eq!(class_number_formula_degree(4, 2, &[1, 1, 2]), BigRational::one());
        assert_eq!(index_for_odd_class_number(8, &[1, 1, 1, 2, 1, 2, 2]), Some(64));
    }

    #[test]
    fn norm_tables() {
        let k = MQField::new(&[2, 5, 31]).unwrap();
        let e2 = fundamental_unit(2).unwrap().in_field(&k).unwrap();
        let tau2 = SignPattern::new(vec![1, -1, 1]).unwrap();
        assert_eq!(norm_to_subfield(&e2, &tau2).unwrap(), e2.square());
        let e5 = fundamental_unit(5).unwrap().in_field(&k).unwrap();
        let tau1 = SignPattern::new(vec![-1, 1, 1]).unwrap();
        assert_eq!(norm_to_subfield(&e5, &tau1).unwrap(), e5.square());
        // ε5 has norm -1, so ε5^{1+τ2} = -1
        assert_eq!(norm_to_subfield(&e5, &tau2).unwrap(), -&MQElement::one(&k));

        let k2 = MQField::new(&[2, 7]).unwrap();
        let e7 = fundamental_unit(7).unwrap().in_field(&k2).unwrap();
        let r = e7.sqrt().unwrap();
        let n = norm_to_subfield(&r, &SignPattern::new(vec![-1, 1]).unwrap()).unwrap();
        assert!(n == e7 || n == -&e7);
        assert_eq!(n, -&e7);
    }

    #[test]
    fn exponent_labels() {
        let ds = [2, 5, 10];
        assert_eq!(exponent_label(&ds, &[frac(1, 2), frac(1, 2), frac(1, 2)]), "sqrt(eps_2*eps_5*eps_10)");
        assert_eq!(exponent_label(&ds, &[frac(1, 2), frac(1, 4), BigRational::zero()]), "(eps_2^2*eps_5)^(1/4)");
        assert_eq!(exponent_label(&ds, &[frac(-1, 1), BigRational::zero(), BigRational::zero()]), "eps_2^-1");
    }
}
