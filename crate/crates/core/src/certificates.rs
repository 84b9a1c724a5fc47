//! Square-root certificates for norm-one quadratic units.
//!
//! For `ε = x + y√d` with `N(ε) = 1` we have `(x+1)(x-1) = d·y²`, so
//! `x+1 = u·s²` and `x-1 = v·t²` with squarefree `u, v` and `uv ≡ d` modulo
//! squares. The pair `(u, v)` decides which multiple `m·ε` (`m ∈ {1, 2}`) is
//! a square in a biquadratic field, and the root is written down explicitly.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::arith::{big_sqrt_exact, factorize, is_prime, jacobi, rational_sqrt_exact};
use crate::conditions::check_conditions;
use crate::error::{Error, Result};
use crate::field::{MQElement, MQField};
use crate::quadratic::{fundamental_unit, QuadUnit};

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

fn rat_str(v: &BigRational) -> String {
    if v.is_integer() {
        v.to_integer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

/// Square class of a positive rational relative to a finite prime set:
/// `value = radicand · root²` when the part coprime to the set is a square.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SquareClass {
    pub radicand: i64,
    pub root: BigRational,
}

/// Squarefree class of `value > 0`, removing only primes from `primes`.
/// Returns `None` when the leftover cofactor is not a perfect square.
pub fn square_class(value: &BigRational, primes: &[u64]) -> Option<SquareClass> {
    if !value.is_positive() {
        return None;
    }
    let mut n: BigInt = value.numer() * value.denom();
    let mut radicand = 1i64;
    for &l in primes {
        let lb = BigInt::from(l);
        let mut e = 0u32;
        while (&n % &lb).is_zero() {
            n /= &lb;
            e += 1;
        }
        if e % 2 == 1 {
            radicand *= l as i64;
        }
    }
    big_sqrt_exact(&n)?;
    let root = rational_sqrt_exact(&(value / rat(radicand)))?;
    Some(SquareClass { radicand, root })
}

/// Squarefree part of `a·b` for squarefree `a, b`.
fn sqfree_product(a: i64, b: i64) -> i64 {
    let g = a.gcd(&b);
    (a / g) * (b / g)
}

fn declared_primes(d: i64, extra: &[u64]) -> Result<Vec<u64>> {
    let mut primes: Vec<u64> = vec![2];
    for &l in extra {
        if !is_prime(l) {
            return Err(Error::NotPrime(l));
        }
        if !primes.contains(&l) {
            primes.push(l);
        }
    }
    for (l, _) in factorize(d.unsigned_abs()) {
        if !primes.contains(&l) {
            return Err(Error::Invalid(format!("{d} has prime factor {l} outside the declared set {primes:?}")));
        }
    }
    primes.sort_unstable();
    Ok(primes)
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceQuantity {
    pub label: &'static str,
    pub value: String,
    /// Squarefree part with respect to the primes dividing `2d`.
    pub obstruction: i64,
    /// Whether the part coprime to `2d` is a perfect square.
    pub cofactor_square: bool,
    pub is_square: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceVerdict {
    pub d: i64,
    pub quantities: Vec<TraceQuantity>,
    pub holds: bool,
}

/// For `N(ε_d) = 1`: none of `2(x+1)`, `2(x-1)`, `2d(x+1)`, `2d(x-1)` is a
/// rational square.
pub fn check_trace_non_squares(unit: &QuadUnit) -> Result<TraceVerdict> {
    if unit.norm != 1 {
        return Err(Error::Inapplicable(format!("N(eps_{}) = -1", unit.d)));
    }
    let d = unit.d;
    let primes: Vec<u64> = {
        let mut v: Vec<u64> = factorize(2 * d as u64).into_iter().map(|(l, _)| l).collect();
        v.sort_unstable();
        v
    };
    let x = unit.x();
    let one = BigRational::one();
    let two = rat(2);
    let two_d = rat(2 * d);
    let items: [(&'static str, BigRational); 4] = [
        ("2(x+1)", &two * (&x + &one)),
        ("2(x-1)", &two * (&x - &one)),
        ("2d(x+1)", &two_d * (&x + &one)),
        ("2d(x-1)", &two_d * (&x - &one)),
    ];
    let mut quantities = Vec::new();
    for (label, value) in items {
        let is_square = rational_sqrt_exact(&value).is_some();
        let mut n: BigInt = value.numer() * value.denom();
        let mut obstruction = 1i64;
        for &l in &primes {
            let lb = BigInt::from(l);
            let mut e = 0;
            while (&n % &lb).is_zero() {
                n /= &lb;
                e += 1;
            }
            if e % 2 == 1 {
                obstruction *= l as i64;
            }
        }
        let cofactor_square = big_sqrt_exact(&n).is_some();
        quantities.push(TraceQuantity { label, value: rat_str(&value), obstruction, cofactor_square, is_square });
    }
    let holds = quantities.iter().all(|q| !q.is_square);
    Ok(TraceVerdict { d, quantities, holds })
}

/// `x+1 = plus·s²`, `x-1 = minus·t²` with squarefree `plus`, `minus`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct DecompositionPattern {
    pub plus: i64,
    pub minus: i64,
}

impl DecompositionPattern {
    pub fn describe(&self) -> String {
        format!("x+1 = {}*s^2, x-1 = {}*t^2", self.plus, self.minus)
    }
}

/// `sqrt(m·ε) = a·√ra + b·√rb` with `ra·rb = d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqrtForm {
    pub multiplier: i64,
    pub a: BigRational,
    pub ra: i64,
    pub b: BigRational,
    pub rb: i64,
}

fn term(c: &BigRational, r: i64) -> String {
    if r == 1 {
        rat_str(c)
    } else if c.is_one() {
        format!("sqrt({r})")
    } else {
        format!("{}*sqrt({r})", rat_str(c))
    }
}

impl SqrtForm {
    pub fn describe(&self, d: i64) -> String {
        let lhs = if self.multiplier == 1 { format!("sqrt(eps_{d})") } else { format!("sqrt({}*eps_{d})", self.multiplier) };
        format!("{lhs} = {} + {}", term(&self.a, self.ra), term(&self.b, self.rb))
    }

    pub fn pell_relation(&self) -> String {
        format!("{} = {}*{}^2 - {}*{}^2", self.multiplier, self.ra, rat_str(&self.a), self.rb, rat_str(&self.b))
    }

    /// The root as an element of `Q(√ra, √rb)`.
    pub fn root(&self) -> Result<MQElement> {
        let rads: Vec<i64> = [self.ra, self.rb].into_iter().filter(|&r| r != 1).collect();
        let field = MQField::new(&rads)?;
        let t = |c: &BigRational, r: i64| -> Result<MQElement> {
            if r == 1 {
                Ok(MQElement::from_rational(&field, c.clone()))
            } else {
                Ok(MQElement::radical(&field, r)?.scale(c))
            }
        };
        t(&self.a, self.ra)?.checked_add(&t(&self.b, self.rb)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Candidate {
    pub pattern: DecompositionPattern,
    pub eliminated_by: Option<String>,
}

#[derive(Debug, Clone)]
pub struct DecompositionCertificate {
    pub d: i64,
    pub unit: QuadUnit,
    pub pattern: DecompositionPattern,
    pub s: BigRational,
    pub t: BigRational,
    pub sqrt_form: SqrtForm,
    /// Every factorization candidate with the congruence argument that rules it out, if any.
    pub candidates: Vec<Candidate>,
}

impl DecompositionCertificate {
    pub fn survivors(&self) -> Vec<DecompositionPattern> {
        self.candidates.iter().filter(|c| c.eliminated_by.is_none()).map(|c| c.pattern).collect()
    }

    /// The congruence eliminations alone single out the pattern.
    pub fn eliminations_decisive(&self) -> bool {
        self.survivors() == vec![self.pattern]
    }

    /// Re-checks all identities of the certificate from scratch.
    pub fn recheck(&self) -> Result<()> {
        let x = self.unit.x();
        let one = BigRational::one();
        let x2m1 = &x * &x - &one;
        let lhs = rat(self.pattern.plus) * &self.s * &self.s * rat(self.pattern.minus) * &self.t * &self.t;
        if lhs != x2m1 {
            return Err(Error::Consistency(format!("u s^2 v t^2 != x^2 - 1 for eps_{}", self.d)));
        }
        let f = &self.sqrt_form;
        if rat(f.ra) * &f.a * &f.a - rat(f.rb) * &f.b * &f.b != rat(f.multiplier) {
            return Err(Error::Consistency(format!("relation {} fails", f.pell_relation())));
        }
        let root = f.root()?;
        let eps = self.unit.in_field(root.field())?;
        if root.square() != eps.scale(&rat(f.multiplier)) {
            return Err(Error::Consistency(format!("{} does not square correctly", f.describe(self.d))));
        }
        Ok(())
    }
}

impl Serialize for DecompositionCertificate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("DecompositionCertificate", 9)?;
        st.serialize_field("d", &self.d)?;
        st.serialize_field("unit", &self.unit)?;
        st.serialize_field("pattern", &self.pattern.describe())?;
        st.serialize_field("cofactors", &(self.pattern.plus, self.pattern.minus))?;
        st.serialize_field("roots", &(rat_str(&self.s), rat_str(&self.t)))?;
        st.serialize_field("sqrt_form", &self.sqrt_form.describe(self.d))?;
        st.serialize_field("pell_relation", &self.sqrt_form.pell_relation())?;
        st.serialize_field("eliminations_decisive", &self.eliminations_decisive())?;
        st.serialize_field("candidates", &self.candidates)?;
        st.end()
    }
}

fn eliminate(pattern: DecompositionPattern, d: i64, primes: &[u64]) -> Option<String> {
    let (u, v) = (pattern.plus, pattern.minus);
    let two_d = sqfree_product(2, d);
    for (name, r) in [("x+1", u), ("x-1", v)] {
        if r == 2 || r == two_d {
            return Some(format!("{name} = {r}*square contradicts the non-square lemma"));
        }
    }
    for &l in primes.iter().filter(|&&l| l != 2) {
        let li = l as i64;
        let (in_u, in_v) = (u % li == 0, v % li == 0);
        if in_u && in_v {
            return Some(format!("{l} divides both x+1 and x-1"));
        }
        // x ≡ 1 (mod l) forces (u/l) = (2/l); x ≡ -1 forces (v/l) = (-2/l)
        if in_v && jacobi(u, l) != jacobi(2, l) {
            return Some(format!("({u}/{l}) != (2/{l})"));
        }
        if in_u && jacobi(v, l) != jacobi(-2, l) {
            return Some(format!("({v}/{l}) != (-2/{l})"));
        }
    }
    None
}

/// All positive squarefree `(u, v)` over `primes` with `uv ≡ d` modulo squares.
fn candidate_patterns(d: i64, primes: &[u64]) -> Vec<DecompositionPattern> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << primes.len()) {
        let u: i64 = primes.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &l)| l as i64).product();
        out.push(DecompositionPattern { plus: u, minus: sqfree_product(u, d) });
    }
    out
}

/// Determines the factorization pattern of `ε = x + y√d` (norm `+1`) over the
/// declared primes (2 is always included) and builds its square-root certificate.
pub fn classify_decomposition(unit: &QuadUnit, primes: &[u64]) -> Result<DecompositionCertificate> {
    let d = unit.d;
    if unit.norm != 1 {
        return Err(Error::Inapplicable(format!("N(eps_{d}) = -1")));
    }
    let primes = declared_primes(d, primes)?;
    let x = unit.x();
    let one = BigRational::one();
    let (xp, xm) = (&x + &one, &x - &one);

    let candidates: Vec<Candidate> = candidate_patterns(d, &primes)
        .into_iter()
        .map(|pattern| Candidate { pattern, eliminated_by: eliminate(pattern, d, &primes) })
        .collect();

    let mut matches = Vec::new();
    for c in &candidates {
        let s = rational_sqrt_exact(&(&xp / rat(c.pattern.plus)));
        let t = rational_sqrt_exact(&(&xm / rat(c.pattern.minus)));
        if let (Some(s), Some(t)) = (s, t) {
            matches.push((c.pattern, s, t));
        }
    }
    if matches.len() != 1 {
        let detail = if matches.is_empty() {
            let cp = square_class(&xp, &primes);
            let cm = square_class(&xm, &primes);
            format!("x+1 and x-1 are not of the form (prime set {primes:?})*square: {:?} / {:?}", cp.map(|c| c.radicand), cm.map(|c| c.radicand))
        } else {
            format!("{} systems hold simultaneously", matches.len())
        };
        return Err(Error::NoSystemMatches { d, detail });
    }
    let (pattern, s, t) = matches.pop().expect("one match");
    if candidates.iter().any(|c| c.pattern == pattern && c.eliminated_by.is_some()) {
        let why = candidates.iter().find(|c| c.pattern == pattern).and_then(|c| c.eliminated_by.clone());
        return Err(Error::Consistency(format!("eps_{d}: actual pattern {} was eliminated by {:?}", pattern.describe(), why)));
    }

    let sqrt_form = sqrt_form_for(d, pattern, &s, &t)?;
    let cert = DecompositionCertificate { d, unit: unit.clone(), pattern, s, t, sqrt_form, candidates };
    cert.recheck()?;
    Ok(cert)
}

/// `m(x+1)/2 = ra·a²`, `m(x-1)/2 = rb·b²`, with `m` chosen so that `ra·rb = d`.
/// For even `d` both multipliers qualify; `m = 2` keeps the coefficients integral.
fn sqrt_form_for(d: i64, pattern: DecompositionPattern, s: &BigRational, t: &BigRational) -> Result<SqrtForm> {
    let half = |r: i64, c: &BigRational| -> (i64, BigRational) {
        // r·c²/2 = (r/2 or 2r)·(…)²
        if r % 2 == 0 {
            (r / 2, c.clone())
        } else {
            (2 * r, c / rat(2))
        }
    };
    for m in [2i64, 1] {
        let ((ra, a), (rb, b)) = if m == 2 {
            ((pattern.plus, s.clone()), (pattern.minus, t.clone()))
        } else {
            (half(pattern.plus, s), half(pattern.minus, t))
        };
        if ra * rb == d {
            return Ok(SqrtForm { multiplier: m, a, ra, b, rb });
        }
    }
    Err(Error::Consistency(format!("no multiplier m in {{1,2}} gives a square root of m*eps_{d}")))
}

/// What the unit lemmas assert for one unit of the family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LemmaClaim {
    pub label: &'static str,
    pub d: i64,
    pub pattern: DecompositionPattern,
    pub multiplier: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClaimCheck {
    pub claim: LemmaClaim,
    pub certificate: DecompositionCertificate,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaFamilyReport {
    pub p: u64,
    pub q: u64,
    pub p_mod8: u64,
    pub checks: Vec<ClaimCheck>,
}

impl LemmaFamilyReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn certificates(&self) -> impl Iterator<Item = &DecompositionCertificate> {
        self.checks.iter().map(|c| &c.certificate)
    }
}

/// The asserted patterns for a first-family pair.
pub fn lemma_claims(p: u64, q: u64) -> Vec<LemmaClaim> {
    let (p, q) = (p as i64, q as i64);
    let c = |label, d, plus, minus, multiplier| LemmaClaim { label, d, pattern: DecompositionPattern { plus, minus }, multiplier };
    let mut v = if p % 8 == 5 {
        vec![
            c("eps_2pq", 2 * p * q, p, 2 * q, 2),
            c("eps_pq", p * q, 2 * p, 2 * q, 1),
        ]
    } else {
        vec![
            c("eps_pq", p * q, 2 * p, 2 * q, 1),
            c("eps_2pq", 2 * p * q, p, 2 * q, 2),
        ]
    };
    v.push(c("eps_2q", 2 * q, 1, 2 * q, 2));
    v.push(c("eps_q", q, 1, q, 2));
    if p % 8 == 3 {
        v.push(c("eps_p", p, p, 1, 2));
        v.push(c("eps_2p", 2 * p, 2 * p, 1, 2));
    }
    v
}

/// Certificates for every unit covered by the lemmas, checked against the
/// asserted patterns.
pub fn verify_lemma_families(p: u64, q: u64) -> Result<LemmaFamilyReport> {
    let cls = check_conditions(p, q)?;
    if !cls.cond1 {
        return Err(Error::ConditionsNotSatisfied { p, q, what: "conditions (1)".into() });
    }
    let mut checks = Vec::new();
    for claim in lemma_claims(p, q) {
        let unit = fundamental_unit(claim.d)?;
        let certificate = classify_decomposition(&unit, &[p, q])?;
        let holds = certificate.pattern == claim.pattern && certificate.sqrt_form.multiplier == claim.multiplier;
        checks.push(ClaimCheck { claim, certificate, holds });
    }
    Ok(LemmaFamilyReport { p, q, p_mod8: p % 8, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> BigRational {
        rat(n)
    }

    #[test]
    fn trace_examples() {
        let v = check_trace_non_squares(&fundamental_unit(3).unwrap()).unwrap();
        assert!(v.holds);
        let vals: Vec<_> = v.quantities.iter().map(|q| q.value.clone()).collect();
        assert_eq!(vals, ["6", "2", "18", "6"]);
        let v = check_trace_non_squares(&fundamental_unit(14).unwrap()).unwrap();
        let vals: Vec<_> = v.quantities.iter().map(|q| q.value.clone()).collect();
        assert_eq!(vals, ["32", "28", "448", "392"]);
        assert!(v.holds);
        assert!(matches!(check_trace_non_squares(&fundamental_unit(2).unwrap()), Err(Error::Inapplicable(_))));
    }

    #[test]
    fn trace_holds_broadly() {
        for d in 2..3000i64 {
            if !crate::arith::is_squarefree(d) {
                continue;
            }
            let u = fundamental_unit(d).unwrap();
            if u.norm == 1 {
                assert!(check_trace_non_squares(&u).unwrap().holds, "d={d}");
            }
        }
    }

    #[test]
    fn eps155() {
        let cert = classify_decomposition(&fundamental_unit(155).unwrap(), &[5, 31]).unwrap();
        assert_eq!(cert.pattern, DecompositionPattern { plus: 10, minus: 62 });
        assert_eq!((cert.s.clone(), cert.t.clone()), (r(5), r(2)));
        let f = &cert.sqrt_form;
        assert_eq!((f.multiplier, f.a.clone(), f.ra, f.b.clone(), f.rb), (1, r(5), 5, r(2), 31));
        assert_eq!(f.describe(155), "sqrt(eps_155) = 5*sqrt(5) + 2*sqrt(31)");
        assert_eq!(f.pell_relation(), "1 = 5*5^2 - 31*2^2");
        // 2p(x+1) = 2500 = 50^2
        assert_eq!(r(10) * (cert.unit.x() + r(1)), r(2500));
    }

    #[test]
    fn eps7_and_eps14() {
        let cert = classify_decomposition(&fundamental_unit(7).unwrap(), &[7]).unwrap();
        assert_eq!(cert.sqrt_form.describe(7), "sqrt(2*eps_7) = 3 + sqrt(7)");
        assert_eq!(cert.sqrt_form.pell_relation(), "2 = 1*3^2 - 7*1^2");
        let cert = classify_decomposition(&fundamental_unit(14).unwrap(), &[7]).unwrap();
        assert_eq!(cert.sqrt_form.describe(14), "sqrt(2*eps_14) = 4 + sqrt(14)");
        assert_eq!(cert.pattern, DecompositionPattern { plus: 1, minus: 14 });
    }

    #[test]
    fn eps3() {
        let cert = classify_decomposition(&fundamental_unit(3).unwrap(), &[3]).unwrap();
        assert_eq!(cert.sqrt_form.describe(3), "sqrt(2*eps_3) = sqrt(3) + 1");
        assert_eq!(cert.pattern, DecompositionPattern { plus: 3, minus: 1 });
    }

    #[test]
    fn undeclared_primes_rejected() {
        assert!(classify_decomposition(&fundamental_unit(155).unwrap(), &[5]).is_err());
    }

    #[test]
    fn family_examples() {
        let rep = verify_lemma_families(5, 31).unwrap();
        assert_eq!(rep.checks.len(), 4);
        assert!(rep.all_hold());
        let rep = verify_lemma_families(3, 23).unwrap();
        assert_eq!(rep.checks.len(), 6);
        assert!(rep.all_hold());
        let ep = rep.checks.iter().find(|c| c.claim.label == "eps_p").unwrap();
        assert_eq!(ep.certificate.sqrt_form.describe(3), "sqrt(2*eps_3) = sqrt(3) + 1");
        assert!(matches!(verify_lemma_families(5, 7), Err(Error::ConditionsNotSatisfied { .. })));
    }

    #[test]
    fn square_class_strips_only_declared_primes() {
        let c = square_class(&r(250), &[2, 5]).unwrap();
        assert_eq!((c.radicand, c.root), (10, r(5)));
        assert!(square_class(&r(3 * 4), &[2]).is_none());
        let c = square_class(&BigRational::new(9.into(), 2.into()), &[2]).unwrap();
        assert_eq!((c.radicand, c.root), (2, BigRational::new(3.into(), 2.into())));
    }
}
