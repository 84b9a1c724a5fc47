//! Bookkeeping for the cyclotomic Z_2-extension of `F = Q(√p, √q, i)`:
//! the nested radicals `π_n`, Kida's formula, the rank stabilization rule
//! and the resulting prediction for the Iwasawa module of `F`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::conditions::{check_conditions, Condition};
use crate::error::{Error, Result};
use crate::field::Interval;
use crate::splitting::{field_for, split_prime, AbelianField, FieldSpec};
use crate::units::{biquadratic_fsu, staged_fsu};
use crate::verdict::{Claim, Verdict};

/// `π_1 = 2`, `π_n = 2 + √π_{n-1}`; `Q(√π_n)` is the `n`-th layer of the
/// cyclotomic Z_2-extension of `Q`.
#[derive(Debug, Clone, Serialize)]
pub struct TowerLayer {
    pub n: u32,
    pub expression: String,
    /// Rigorous enclosure of `π_n`.
    #[serde(skip)]
    pub enclosure: Interval,
    pub approx: f64,
    /// `Q(ζ_{2^{n+2}})^+`.
    pub field: AbelianField,
}

/// Square root enclosure of a non-negative interval with `bits` fractional bits.
fn sqrt_interval(x: &Interval, bits: u32) -> Interval {
    let scale = BigInt::one() << (2 * bits);
    let lo_scaled = (x.lo.clone() * BigRational::from_integer(scale.clone())).floor().to_integer();
    let hi_scaled = (x.hi.clone() * BigRational::from_integer(scale)).ceil().to_integer();
    let lo = lo_scaled.max(BigInt::zero()).sqrt();
    let mut hi = hi_scaled.sqrt();
    if &hi * &hi < hi_scaled {
        hi += 1;
    }
    let den = BigInt::one() << bits;
    Interval { lo: BigRational::new(lo, den.clone()), hi: BigRational::new(hi, den) }
}

pub fn pi_layer(n: u32) -> Result<TowerLayer> {
    if n == 0 {
        return Err(Error::Invalid("tower levels start at 1".into()));
    }
    let two = BigRational::from_integer(2.into());
    let mut iv = Interval { lo: two.clone(), hi: two.clone() };
    let mut expr = "2".to_string();
    for _ in 1..n {
        let s = sqrt_interval(&iv, 96);
        iv = Interval { lo: &s.lo + &two, hi: &s.hi + &two };
        expr = format!("2+sqrt({expr})");
    }
    let field = field_for(&FieldSpec::cyclotomic(n, true))?;
    let approx = iv.midpoint_f64();
    Ok(TowerLayer { n, expression: expr, enclosure: iv, approx, field })
}

/// Inputs of Kida's formula for a 2-extension of CM fields `top / base`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KidaInput {
    pub lambda_base: i64,
    pub delta_base: u8,
    pub delta_top: u8,
    /// `[top_∞ : base_∞]`
    pub degree: u64,
    /// Ramification indices in `top_∞ / base_∞` of primes prime to 2, one per prime.
    pub e_list: Vec<u64>,
    /// The same for the maximal real subfields.
    pub e_plus_list: Vec<u64>,
    pub mu_base_zero: bool,
}

/// `λ⁻(top) = degree·(λ⁻(base) − δ_base) + Σ(e − 1) − Σ(e⁺ − 1) + δ_top`.
pub fn kida_lambda(input: &KidaInput) -> Result<i64> {
    if !input.mu_base_zero {
        return Err(Error::MuAssumptionMissing);
    }
    if !input.degree.is_power_of_two() || input.delta_base > 1 || input.delta_top > 1 {
        return Err(Error::Invalid("degree must be a power of 2 and delta flags 0 or 1".into()));
    }
    if input.e_list.iter().chain(&input.e_plus_list).any(|&e| e == 0) {
        return Err(Error::Invalid("ramification indices must be positive".into()));
    }
    let sum = |v: &[u64]| v.iter().map(|&e| e as i64 - 1).sum::<i64>();
    Ok(input.degree as i64 * (input.lambda_base - input.delta_base as i64) + sum(&input.e_list) - sum(&input.e_plus_list) + input.delta_top as i64)
}

/// What is known about `rank_2(A_n)` at one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum RankClaim {
    Exact(u64),
    AtMost(u64),
    Unknown,
}

/// Ranks given at some levels, extended by stabilization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankInference {
    pub given: BTreeMap<u32, u64>,
    /// `(r, rank)`: the rank equals `rank` at every level `≥ r`.
    pub stable_from: Option<(u32, u64)>,
}

impl RankInference {
    pub fn rank_at(&self, n: u32) -> RankClaim {
        if let Some(&r) = self.given.get(&n) {
            return RankClaim::Exact(r);
        }
        match self.stable_from {
            Some((r, v)) if n >= r => RankClaim::Exact(v),
            _ => RankClaim::Unknown,
        }
    }
}

/// Once `rank(A_r) = rank(A_{r+1})` in a Z_ℓ-extension where every ramified
/// prime is totally ramified, the rank is constant from `r` on. The earliest
/// witnessed pair is used; later data contradicting it is rejected.
pub fn fukuda_propagate(ranks: &BTreeMap<u32, u64>) -> Result<RankInference> {
    let witness = ranks.iter().find(|(&n, &r)| ranks.get(&(n + 1)) == Some(&r)).map(|(&n, &r)| (n, r));
    if let Some((r0, v)) = witness {
        if let Some((&n, &r)) = ranks.range(r0..).find(|(_, &r)| r != v) {
            return Err(Error::InconsistentRanks(format!("rank {r} at level {n} after stabilization at {v} from level {r0}")));
        }
    }
    Ok(RankInference { given: ranks.clone(), stable_from: witness })
}

/// `rank(A_n) = λ` for `n ≥ λ` (under μ = 0, an elementary limit module and
/// total ramification), and `rank(A_n) ≤ λ` below that.
pub fn rank_from_lambda(lambda: u64, n: u32) -> RankClaim {
    if n as u64 >= lambda {
        RankClaim::Exact(lambda)
    } else {
        RankClaim::AtMost(lambda)
    }
}

/// Computed part of the triviality argument for the 2-class groups of the
/// real layers `Q(√p, √q, √π_n)`.
#[derive(Debug, Clone, Serialize)]
pub struct RealLayerCheck {
    pub q_index_layer0: u64,
    pub h2_layer0: String,
    pub q_index_layer1: u64,
    pub h2_layer1: String,
    /// Primes above 2 are totally ramified in the tower over `Q(√p, √q)`.
    pub totally_ramified: bool,
    /// `F_n / F_n^+` is unramified at every finite prime, for the levels checked.
    pub cm_unramified: bool,
    pub levels_checked: u32,
    pub ranks: RankInference,
}

/// Whether the described field contains `i`: adjoining it leaves the degree unchanged.
fn contains_i(spec: &FieldSpec) -> Result<bool> {
    let mut with_i = spec.clone();
    with_i.radicands.push(-1);
    Ok(field_for(&with_i)?.degree() == field_for(spec)?.degree())
}

const CHECK_LEVELS: u32 = 4;

pub fn real_layer_check(p: u64, q: u64) -> Result<RealLayerCheck> {
    let (pi, qi) = (p as i64, q as i64);
    let k = biquadratic_fsu(pi, qi)?.with_class_number()?;
    let h0 = k.h2.clone().expect("attached");
    let big = staged_fsu(pi, qi)?.with_class_number()?;
    let h1 = big.h2.clone().expect("attached");

    let mut totally_ramified = true;
    let mut cm_unramified = true;
    let base = field_for(&FieldSpec { radicands: vec![pi, qi], level: None, real: false })?;
    let e2_base = split_prime(&base, 2)?.e;
    for n in 1..=CHECK_LEVELS {
        let kn = field_for(&FieldSpec { radicands: vec![pi, qi], level: Some(n), real: true })?;
        let e2 = split_prime(&kn, 2)?.e;
        totally_ramified &= e2 == e2_base << n;
        let full = field_for(&FieldSpec { radicands: vec![pi, qi], level: Some(n), real: false })?;
        for l in [2, p, q] {
            cm_unramified &= split_prime(&full, l)?.e == split_prime(&kn, l)?.e;
        }
    }

    let one = BigRational::one();
    let mut given = BTreeMap::new();
    if h0 == one {
        given.insert(0, 0);
    }
    if h1 == one {
        given.insert(1, 0);
    }
    let ranks = fukuda_propagate(&given)?;
    Ok(RealLayerCheck {
        q_index_layer0: k.q_index,
        h2_layer0: h0.to_string(),
        q_index_layer1: big.q_index,
        h2_layer1: h1.to_string(),
        totally_ramified,
        cm_unramified,
        levels_checked: CHECK_LEVELS,
        ranks,
    })
}

/// Kida's formula for `F = Q(√p, √q, i)` over `K = Q(√q, i)`, with the
/// ramification data read off the layer at level `n`.
#[derive(Debug, Clone, Serialize)]
pub struct KidaEvaluation {
    pub level: u32,
    pub input: KidaInput,
    pub lambda: i64,
    /// Ramified odd primes with `(prime, e, g in F_n, g in F_n^+)`.
    pub ramified: Vec<(u64, u64, u64, u64)>,
}

/// The cited value `λ⁻(Q(√q, i)) = 1` for `q ≡ 7 (mod 16)`.
pub const LAMBDA_MINUS_BASE: i64 = 1;

pub fn kida_for_pair(p: u64, q: u64, level: u32) -> Result<KidaEvaluation> {
    let (pi, qi) = (p as i64, q as i64);
    let top_spec = FieldSpec { radicands: vec![pi, qi], level: Some(level), real: false };
    let base_spec = FieldSpec { radicands: vec![qi], level: Some(level), real: false };
    let top = field_for(&top_spec)?;
    let top_plus = field_for(&FieldSpec { real: true, ..top_spec.clone() })?;
    let base = field_for(&base_spec)?;
    let base_plus = field_for(&FieldSpec { real: true, ..base_spec.clone() })?;
    let degree = top.degree() / base.degree();
    let mut e_list = Vec::new();
    let mut e_plus_list = Vec::new();
    let mut ramified = Vec::new();
    for (l, _) in crate::arith::factorize(top.conductor) {
        if l == 2 {
            continue;
        }
        let (st, sb) = (split_prime(&top, l)?, split_prime(&base, l)?);
        let (stp, sbp) = (split_prime(&top_plus, l)?, split_prime(&base_plus, l)?);
        let (e, ep) = (st.e / sb.e, stp.e / sbp.e);
        if e > 1 {
            e_list.extend(std::iter::repeat_n(e, st.g as usize));
        }
        if ep > 1 {
            e_plus_list.extend(std::iter::repeat_n(ep, stp.g as usize));
        }
        if e > 1 || ep > 1 {
            ramified.push((l, e, st.g, stp.g));
        }
    }
    let input = KidaInput {
        lambda_base: LAMBDA_MINUS_BASE,
        delta_base: contains_i(&base_spec)? as u8,
        delta_top: contains_i(&top_spec)? as u8,
        degree,
        e_list,
        e_plus_list,
        mu_base_zero: true,
    };
    let lambda = kida_lambda(&input)?;
    Ok(KidaEvaluation { level, input, lambda, ramified })
}

#[derive(Debug, Clone, Serialize)]
pub struct IwasawaReport {
    pub pair: (u64, u64),
    pub condition: u8,
    pub q_mod16: u64,
    pub no_finite_part: bool,
    pub lambda: Option<i64>,
    pub structure: String,
    /// `(n, claim)` for the first few levels; the last entry holds from there on.
    pub rank_sequence: Vec<(u32, RankClaim)>,
    pub assumptions: Vec<Claim>,
    pub real_layers: RealLayerCheck,
    pub kida: Option<KidaEvaluation>,
    pub claims: Vec<Claim>,
}

/// Level at which the splitting of the ramified primes has stabilized for
/// all pairs considered here.
pub const KIDA_LEVEL: u32 = 6;

pub fn predict_structure(p: u64, q: u64) -> Result<IwasawaReport> {
    let cls = check_conditions(p, q)?;
    let condition = match cls.condition() {
        Some(Condition::One) => 1,
        Some(Condition::Two) => 2,
        None => return Err(Error::ConditionsNotSatisfied { p, q, what: "conditions (1) or (2)".into() }),
    };
    let real_layers = real_layer_check(p, q)?;
    let mut claims = Vec::new();
    let mut assumptions = vec![
        Claim::new("mu_zero", "mu(F) = 0", Verdict::Assumed, "carried as a hypothesis"),
        Claim::new(
            "no_finite_submodule",
            "the minus part of the Iwasawa module of F has no finite submodule",
            Verdict::Assumed,
            "cited result on strongly ambiguous classes",
        ),
    ];
    claims.push(Claim::check(
        "real_layer_0",
        "h_2(Q(sqrt p, sqrt q)) = 1",
        real_layers.h2_layer0 == "1",
        format!("q(k) = {}, h_2 = {}", real_layers.q_index_layer0, real_layers.h2_layer0),
    ));
    claims.push(Claim::check(
        "real_layer_1",
        "h_2(Q(sqrt 2, sqrt p, sqrt q)) = 1",
        real_layers.h2_layer1 == "1",
        format!("q(K) = {}, h_2 = {}", real_layers.q_index_layer1, real_layers.h2_layer1),
    ));
    claims.push(Claim::check(
        "real_tower_totally_ramified",
        "primes above 2 are totally ramified in the tower of Q(sqrt p, sqrt q)",
        real_layers.totally_ramified,
        format!("levels 1..={}", real_layers.levels_checked),
    ));
    let trivial_all = real_layers.ranks.stable_from == Some((0, 0));
    claims.push(Claim::check(
        "real_layers_trivial",
        "the 2-class group of Q(sqrt p, sqrt q, sqrt pi_n) is trivial for all n >= 1",
        trivial_all && real_layers.totally_ramified,
        "rank 0 at levels 0 and 1, propagated by stabilization",
    ));
    claims.push(Claim::check(
        "cm_unramified",
        "F_n / F_n^+ is unramified at all finite primes",
        real_layers.cm_unramified,
        format!("levels 1..={}", real_layers.levels_checked),
    ));
    let no_finite_part = trivial_all && real_layers.totally_ramified && real_layers.cm_unramified;

    let (mut lambda, mut structure, mut rank_sequence, mut kida) = (None, "undetermined".to_string(), Vec::new(), None);
    if q % 16 == 7 {
        assumptions.push(Claim::new(
            "lambda_minus_base",
            "lambda^-(Q(sqrt q, i)) = 1 for q = 7 mod 16",
            Verdict::Consistent,
            "cited constant, not recomputed",
        ));
        assumptions.push(Claim::new(
            "elementary_module",
            "the Iwasawa module of F is an elementary Lambda-module",
            Verdict::Assumed,
            "hypothesis of the rank law",
        ));
        let k = kida_for_pair(p, q, KIDA_LEVEL)?;
        let sums_ok = k.input.degree == 2 && k.input.e_list.iter().map(|e| e - 1).sum::<u64>() == 4 && k.input.e_plus_list.iter().map(|e| e - 1).sum::<u64>() == 2;
        claims.push(Claim::check(
            "kida_instance",
            "lambda^-(F) - 1 = 2(1 - 1) + 4 - 2",
            sums_ok && k.lambda == 3,
            format!("degree {}, e {:?}, e+ {:?}, lambda^- = {}", k.input.degree, k.input.e_list, k.input.e_plus_list, k.lambda),
        ));
        if no_finite_part && k.lambda >= 0 {
            let l = k.lambda as u64;
            lambda = Some(k.lambda);
            structure = format!("Z_2^{l}");
            for n in 1..=(l as u32 + 1) {
                rank_sequence.push((n, rank_from_lambda(l, n)));
            }
            claims.push(Claim::new("structure", format!("A_inf(F) = Z_2^{l}"), Verdict::Verified, "lambda = lambda^- since the real layers have odd class number; no finite part"));
            claims.push(Claim::new("rank_law", format!("rank_2(A_n(F)) = {l} for all n >= {l}"), Verdict::Verified, "rank law under the listed hypotheses"));
        }
        kida = Some(k);
    }
    Ok(IwasawaReport {
        pair: (p, q),
        condition,
        q_mod16: q % 16,
        no_finite_part,
        lambda,
        structure,
        rank_sequence,
        assumptions,
        real_layers,
        kida,
        claims,
    })
}
