//! One line per acceptance criterion. Runs without the libtest harness so
//! every criterion is reported even when an earlier one fails.

use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use triquad::arith::primes_up_to;
use triquad::certificates::verify_lemma_families;
use triquad::conditions::qualifying_pairs;
use triquad::field::{MQElement, MQField};
use triquad::iwasawa::{kida_for_pair, kida_lambda, KidaInput, KIDA_LEVEL};
use triquad::quadratic::{fundamental_unit, h2_of};
use triquad::splitting::{field_for, layer_splitting, split_prime, FieldSpec, LayerVariant};
use triquad::units::{compare_fsu, expected_fsu, fsu_of, is_saturated, triquadratic_fsu, FsuResult};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn cli(args: &[&str]) -> (Option<i32>, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_triquad")).args(args).env("NO_COLOR", "1").output().expect("run cli");
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code(), v)
}

fn criterion_1() -> Outcome {
    let (code, v) = cli(&["verify", "--p", "5", "--q", "31", "--json", "--timestamp", "off"]);
    let q = v["fsu"]["q_index"].as_u64();
    let h2 = v["fsu"]["h2"].as_str().unwrap_or("?").to_string();
    let same = v["fsu"]["same_group"].as_bool();
    let pass = code == Some(0) && q == Some(64) && h2 == "1" && same == Some(true);
    outcome(pass, format!("q(K) = {q:?}, h_2(K) = {h2}, same group as the published list: {same:?}, exit {code:?}"))
}

/// `u^4` equals the product of quadratic units the label promises.
fn fourth_power_matches(f: &FsuResult, exps: &[(i64, BigRational)], u: &MQElement) -> bool {
    let mut target = MQElement::one(&f.field);
    for (d, e) in exps {
        let k = (e * BigRational::from_integer(4.into())).to_integer();
        let i = f.basis.index_of(*d).expect("quadratic subfield");
        let k: i64 = k.try_into().expect("small exponent");
        target = &target * &f.basis.elems[i].pow(k).expect("unit power");
    }
    u.pow(4).expect("power") == target
}

fn criterion_2() -> Outcome {
    let f = triquadratic_fsu(3, 23).unwrap().with_class_number().unwrap();
    let expected = expected_fsu(3, 23);
    let cmp = compare_fsu(&f, &expected).unwrap();
    let realized = triquad::units::realize(&f.basis, &expected).unwrap();
    let mut quartic_ok = 0;
    for (e, (_, u)) in expected.iter().zip(&realized) {
        if e.label.ends_with("^(1/4)") {
            if let Some(u) = u {
                let root_is_square_root = u.elem.square().sqrt().is_some();
                if fourth_power_matches(&f, &e.exps, &u.elem) && root_is_square_root {
                    quartic_ok += 1;
                }
            }
        }
    }
    let h2 = f.h2.clone().unwrap();
    let pass = f.q_index == 64 && quartic_ok == 2;
    outcome(
        pass,
        format!(
            "q(K) = {} (required 2^6), quartic roots confirmed: {quartic_ok}/2, h_2(K) = {h2}, same group as the published list: {}, index of that list {:?}",
            f.q_index, cmp.same_group, cmp.expected_index
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut bad_small = Vec::new();
    let mut mismatched = Vec::new();
    let mut total = 0;
    let mut by_residue = std::collections::BTreeMap::<(u64, [u64; 3]), usize>::new();
    for (p, q, _) in qualifying_pairs(199, true, false) {
        total += 1;
        let (pi, qi) = (p as i64, q as i64);
        let small = [h2_of(2).unwrap(), h2_of(pi).unwrap(), h2_of(qi).unwrap(), h2_of(2 * qi).unwrap()];
        let big = [h2_of(2 * pi).unwrap(), h2_of(pi * qi).unwrap(), h2_of(2 * pi * qi).unwrap()];
        if small != [1; 4] {
            bad_small.push((p, q));
        }
        if big != [2; 3] {
            mismatched.push((p, q));
        }
        *by_residue.entry((p % 8, big)).or_default() += 1;
    }
    let summary: Vec<String> = by_residue.iter().map(|((r, v), n)| format!("p = {r} mod 8: (2p, pq, 2pq) -> {v:?} for {n} pairs")).collect();
    outcome(
        bad_small.is_empty() && mismatched.is_empty(),
        format!("{total} pairs; {{2,p,q,2q}} all 1: {}; {} pairs differ from {{2,2,2}}; {}", bad_small.is_empty(), mismatched.len(), summary.join("; ")),
    )
}

fn criterion_4() -> Outcome {
    let mut pairs = 0;
    let mut bad = Vec::new();
    for (p, q, _) in qualifying_pairs(499, true, false) {
        pairs += 1;
        let fam = verify_lemma_families(p, q).unwrap();
        let ok = fam.all_hold() && fam.certificates().all(|c| c.eliminations_decisive() && c.recheck().is_ok());
        if !ok {
            bad.push((p, q));
        }
    }
    let eps155 = triquad::certificates::classify_decomposition(&fundamental_unit(155).unwrap(), &[5, 31]).unwrap();
    let example = eps155.sqrt_form.describe(155);
    let pass = bad.is_empty() && example == "sqrt(eps_155) = 5*sqrt(5) + 2*sqrt(31)";
    outcome(pass, format!("{pairs} pairs, {} failures; {example}", bad.len()))
}

fn criterion_5() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for p in primes_up_to(99).into_iter().filter(|p| p % 8 == 3 || p % 8 == 5) {
        for n in 1..=8 {
            let full = split_prime(&field_for(&FieldSpec::cyclotomic(n, false)).unwrap(), p).unwrap();
            let plus = split_prime(&field_for(&FieldSpec::cyclotomic(n, true)).unwrap(), p).unwrap();
            checked += 1;
            // inert in the real subfield: f equals its degree 2^n
            if (full.g, full.e) != (2, 1) || (plus.g, plus.e, plus.f) != (1, 1, 1 << n) {
                bad.push((p, n));
            }
        }
    }
    outcome(bad.is_empty(), format!("{checked} (p, n) cases, failures {bad:?}"))
}

fn criterion_6() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for (p, q) in [(5, 7), (3, 23)] {
        let full = layer_splitting(p, q, KIDA_LEVEL, LayerVariant::Full).unwrap();
        let plus = layer_splitting(p, q, KIDA_LEVEL, LayerVariant::Plus).unwrap();
        // p is unramified in Q(√q, i) and ramified with index 2 in F
        let e_base = split_prime(&field_for(&FieldSpec { radicands: vec![q as i64], level: Some(KIDA_LEVEL), real: false }).unwrap(), p).unwrap().e;
        let e = full.data.e / e_base;
        let input = KidaInput {
            lambda_base: 1,
            delta_base: 1,
            delta_top: 1,
            degree: 2,
            e_list: vec![e; full.data.g as usize],
            e_plus_list: vec![plus.data.e / e_base; plus.data.g as usize],
            mu_base_zero: true,
        };
        let lambda = kida_lambda(&input).unwrap();
        let derived = kida_for_pair(p, q, KIDA_LEVEL).unwrap();
        let ok = lambda == 3 && derived.lambda == 3 && derived.input == input && full.data.g == 4 && plus.data.g == 2;
        pass &= ok;
        let sum = |v: &[u64]| v.iter().map(|e| e - 1).sum::<u64>();
        details.push(format!(
            "({p},{q}): g = {} in F_n, {} in F_n^+, lambda^-(F) - 1 = 2(1-1) + {} - {}, lambda^-(F) = {lambda}",
            full.data.g,
            plus.data.g,
            sum(&input.e_list),
            sum(&input.e_plus_list)
        ));
    }
    outcome(pass, details.join("; "))
}

fn criterion_7() -> Outcome {
    let (code, v) = cli(&["survey", "--bound", "100", "--json", "--full", "--timestamp", "off"]);
    let reports = v["reports"].as_array().cloned().unwrap_or_default();
    let mut bad = Vec::new();
    let mut stable = 0;
    for r in &reports {
        let pair = (r["pair"][0].as_u64().unwrap(), r["pair"][1].as_u64().unwrap());
        let iw = &r["iwasawa"];
        let mut ok = iw["no_finite_part"] == true;
        let flags: Vec<&str> = iw["assumptions"].as_array().unwrap().iter().filter(|a| a["verdict"] == "ASSUMED").map(|a| a["id"].as_str().unwrap()).collect();
        ok &= flags.contains(&"mu_zero");
        if pair.1 % 16 == 7 {
            stable += 1;
            ok &= iw["structure"] == "Z_2^3" && iw["lambda"] == 3 && flags.contains(&"elementary_module");
            for entry in iw["rank_sequence"].as_array().unwrap() {
                let n = entry[0].as_u64().unwrap();
                let claim = &entry[1];
                if n >= 3 {
                    ok &= claim["kind"] == "exact" && claim["value"] == 3;
                }
            }
        }
        if !ok {
            bad.push(pair);
        }
    }
    let failed = v["failed_pairs"].as_u64();
    let pass = code == Some(0) && failed == Some(0) && !reports.is_empty() && bad.is_empty();
    outcome(pass, format!("{} pairs, {stable} with q = 7 mod 16, failed claims in {failed:?} pairs, pipeline mismatches {bad:?}, exit {code:?}", reports.len()))
}

fn random_element(rng: &mut ChaCha8Rng, field: &triquad::FieldRef) -> MQElement {
    let coords: Vec<BigRational> = (0..field.degree()).map(|_| BigRational::new(BigInt::from(rng.gen_range(-40..=40)), BigInt::from(rng.gen_range(1..=6)))).collect();
    MQElement::from_coords(field, &coords).unwrap()
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7269_6e67);
    let pool = [2i64, 3, 5, 6, 7, 10, 11, 13, 14, 15, 17, 21, 22, 23, 30, 31];
    let random_field = |rng: &mut ChaCha8Rng| {
        let t = rng.gen_range(1..=3);
        let ds: Vec<i64> = (0..t).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
        MQField::new(&ds).unwrap()
    };

    let mut ring_fail = 0;
    for _ in 0..1000 {
        let k = random_field(&mut rng);
        let (a, b, c) = (random_element(&mut rng, &k), random_element(&mut rng, &k), random_element(&mut rng, &k));
        let ok = &(&a * &b) * &c == &a * &(&b * &c) && &a * &(&b + &c) == &(&a * &b) + &(&a * &c) && &a * &b == &b * &a;
        ring_fail += !ok as u32;
    }

    let mut sqrt_fail = 0;
    let mut recovered = 0;
    while recovered < 500 {
        let k = random_field(&mut rng);
        let a = random_element(&mut rng, &k);
        if a.is_zero() {
            continue;
        }
        recovered += 1;
        match a.square().sqrt() {
            Some(r) if r.square() == a.square() => {}
            _ => sqrt_fail += 1,
        }
        if let Some(r) = a.sqrt() {
            sqrt_fail += (r.square() != a) as u32;
        }
    }

    let mut sat_fail = Vec::new();
    let mut fields: Vec<FsuResult> = vec![triquadratic_fsu(5, 31).unwrap(), triquadratic_fsu(3, 23).unwrap()];
    for ds in [[2i64, 5], [2, 31], [5, 31], [3, 23], [2, 3], [7, 11]] {
        fields.push(fsu_of(&ds).unwrap());
    }
    for f in &fields {
        let elems: Vec<MQElement> = f.generators.iter().map(|g| g.elem.clone()).collect();
        if !is_saturated(&f.field, &elems).unwrap() {
            sat_fail.push(f.field.radicands().to_vec());
        }
    }

    let mut efg_fail = 0;
    let primes = primes_up_to(200);
    let rads = [-1i64, 2, -2, 3, 5, -7, 13, -15, 17, 21];
    let mut efg_cases = 0;
    while efg_cases < 200 {
        let radicands: Vec<i64> = (0..rng.gen_range(0..=3)).map(|_| rads[rng.gen_range(0..rads.len())]).collect();
        let level = if rng.gen_bool(0.5) { Some(rng.gen_range(1..=5)) } else { None };
        if radicands.is_empty() && level.is_none() {
            continue;
        }
        let spec = FieldSpec { radicands, level, real: rng.gen_bool(0.5) };
        let Ok(field) = field_for(&spec) else { continue };
        efg_cases += 1;
        let l = primes[rng.gen_range(0..primes.len())];
        match split_prime(&field, l) {
            Ok(s) if s.e * s.f * s.g == field.degree() => {}
            _ => efg_fail += 1,
        }
    }
    let pass = ring_fail == 0 && sqrt_fail == 0 && sat_fail.is_empty() && efg_fail == 0;
    outcome(
        pass,
        format!(
            "ring axioms 1000 cases, {ring_fail} failures; square roots 500 cases, {sqrt_fail} failures; saturation {} fields, failures {sat_fail:?}; e f g 200 cases, {efg_fail} failures",
            fields.len()
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, Duration, fn() -> Outcome); 8] = [
        (1, "unit group of Q(sqrt 2, sqrt 5, sqrt 31)", Duration::from_secs(10), criterion_1),
        (2, "unit group of Q(sqrt 2, sqrt 3, sqrt 23)", Duration::from_secs(10), criterion_2),
        (3, "2-class numbers of the quadratic subfields, p, q < 200", Duration::from_secs(120), criterion_3),
        (4, "unit decompositions and square-root certificates, p, q < 500", Duration::from_secs(300), criterion_4),
        (5, "splitting of p = 3, 5 mod 8 in Q(zeta_{2^{n+2}}), n <= 8", Duration::from_secs(30), criterion_5),
        (6, "Kida's formula for q = 7 mod 16", Duration::from_secs(5), criterion_6),
        (7, "Iwasawa module survey, bound 100", Duration::from_secs(600), criterion_7),
        (8, "property suites", Duration::from_secs(600), criterion_8),
    ];
    let mut failed = Vec::new();
    for (n, name, budget, f) in criteria {
        let start = Instant::now();
        let o = f();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = o.pass && in_time;
        println!(
            "criterion {n} [{}] {name}: {} ({:.2}s, budget {}s{})",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
        if !pass {
            failed.push(n);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
