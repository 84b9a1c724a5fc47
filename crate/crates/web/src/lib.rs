//! Browser bindings. Every function returns a JSON document; failures come
//! back as `{"error": "..."}` so the page never has to catch exceptions.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use triquad::report::{run_verification, Verification};
use triquad::splitting::{field_for, split_prime, FieldSpec};
use triquad::units::fsu_of;

fn wrap(r: triquad::Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

fn parse_radicands(s: &str) -> triquad::Result<Vec<i64>> {
    let v: Vec<i64> = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<i64>().map_err(|_| triquad::Error::Invalid(format!("not an integer: {t}"))))
        .collect::<Result<_, _>>()?;
    if v.is_empty() || v.len() > 3 {
        return Err(triquad::Error::Invalid("give one to three radicands".into()));
    }
    Ok(v)
}

/// Condition class, unit group, class numbers and Iwasawa prediction for a pair.
#[wasm_bindgen]
pub fn verify_pair(p: u32, q: u32) -> String {
    wrap((|| {
        let v = run_verification(p as u64, q as u64)?;
        let mut out = serde_json::to_value(&v).map_err(|e| triquad::Error::Invalid(e.to_string()))?;
        if let Verification::Report(r) = &v {
            out["passed"] = json!(r.passed());
        }
        Ok(out)
    })())
}

/// Fundamental system of units of `Q(√d1, ..., √dk)`, radicands comma separated.
#[wasm_bindgen]
pub fn unit_group(radicands: &str) -> String {
    wrap((|| {
        let f = fsu_of(&parse_radicands(radicands)?)?.with_class_number()?;
        serde_json::to_value(&f).map_err(|e| triquad::Error::Invalid(e.to_string()))
    })())
}

/// `e, f, g` of a prime in `Q(√d..., ζ_{2^{level+2}})`, or its real subfield.
#[wasm_bindgen]
pub fn split(prime: u32, radicands: &str, level: u32, real: bool) -> String {
    wrap((|| {
        let radicands = if radicands.trim().is_empty() { Vec::new() } else { parse_radicands(radicands)? };
        let spec = FieldSpec { radicands, level: (level > 0).then_some(level), real };
        if spec.radicands.is_empty() && spec.level.is_none() {
            return Err(triquad::Error::Invalid("give radicands or a positive level".into()));
        }
        let field = field_for(&spec)?;
        let s = split_prime(&field, prime as u64)?;
        Ok(json!({ "conductor": field.conductor, "degree": field.degree(), "e": s.e, "f": s.f, "g": s.g }))
    })())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn verify_examples() {
        let v = parse(&verify_pair(5, 31));
        assert_eq!(v["fsu"]["q_index"], 64);
        assert_eq!(v["passed"], true);
        let v = parse(&verify_pair(11, 13));
        assert_eq!(v["out_of_family"], true);
        assert!(parse(&verify_pair(9, 7))["error"].is_string());
    }

    #[test]
    fn unit_group_examples() {
        let v = parse(&unit_group("2, 5"));
        assert_eq!(v["q_index"], 2);
        assert_eq!(v["generators"].as_array().unwrap().len(), 3);
        assert!(parse(&unit_group("2,x"))["error"].is_string());
        assert!(parse(&unit_group(""))["error"].is_string());
    }

    #[test]
    fn split_examples() {
        let v = parse(&split(5, "", 2, false));
        assert_eq!((v["e"].as_u64(), v["f"].as_u64(), v["g"].as_u64()), (Some(1), Some(4), Some(2)));
        let v = parse(&split(3, "-1", 0, false));
        assert_eq!(v["f"], 2);
        assert!(parse(&split(4, "5", 0, false))["error"].is_string());
        assert!(parse(&split(5, "", 0, false))["error"].is_string());
    }
}
