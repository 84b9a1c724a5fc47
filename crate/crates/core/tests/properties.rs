use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use triquad::arith::primes_up_to;
use triquad::field::{FieldRef, MQElement, MQField, SignPattern};
use triquad::splitting::{field_for, split_prime, FieldSpec};
use triquad::units::{fsu_of, is_saturated};

const RADICANDS: [i64; 16] = [2, 3, 5, 6, 7, 10, 11, 13, 14, 15, 17, 21, 22, 23, 30, 31];

fn field_strategy() -> impl Strategy<Value = FieldRef> {
    prop::sample::subsequence(RADICANDS.to_vec(), 1..=3).prop_map(|ds| MQField::new(&ds).unwrap())
}

fn element(field: &FieldRef, nums: &[i64], dens: &[i64]) -> MQElement {
    let coords: Vec<BigRational> = (0..field.degree()).map(|i| BigRational::new(BigInt::from(nums[i]), BigInt::from(dens[i]))).collect();
    MQElement::from_coords(field, &coords).unwrap()
}

prop_compose! {
    fn elements(n: usize)(field in field_strategy())
        (nums in prop::collection::vec(prop::collection::vec(-40i64..=40, 8), n),
         dens in prop::collection::vec(prop::collection::vec(1i64..=6, 8), n),
         field in Just(field)) -> Vec<MQElement> {
        nums.iter().zip(&dens).map(|(a, b)| element(&field, a, b)).collect()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn ring_axioms(v in elements(3)) {
        let (a, b, c) = (&v[0], &v[1], &v[2]);
        prop_assert_eq!(&(a * b) * c, a * &(b * c));
        prop_assert_eq!(&(a + b) + c, a + &(b + c));
        prop_assert_eq!(a * &(b + c), &(a * b) + &(a * c));
        prop_assert_eq!(a * b, b * a);
        prop_assert_eq!(a + b, b + a);
        prop_assert_eq!(&(a - a) + b, b.clone());
        prop_assert_eq!(a * &MQElement::one(a.field()), a.clone());
        if !a.is_zero() {
            prop_assert!((a * &a.inverse().unwrap()).is_one());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn square_roots_recovered(v in elements(1)) {
        let a = &v[0];
        prop_assume!(!a.is_zero());
        let sq = a.square();
        let r = sq.sqrt();
        prop_assert!(r.is_some(), "square of {} not recognised", a);
        let r = r.unwrap();
        prop_assert_eq!(r.square(), sq);
        prop_assert!(r == *a || r == -a);
    }

    #[test]
    fn square_roots_sound(v in elements(1)) {
        let a = &v[0];
        prop_assume!(!a.is_zero());
        if let Some(r) = a.sqrt() {
            prop_assert_eq!(&r.square(), a);
        }
        // a times a non-square rational is a square only if that rational
        // is a square in the field, which 3 * 37 never is here
        let b = a.square().scale(&BigRational::from_integer(BigInt::from(111)));
        prop_assert!(b.sqrt().is_none());
    }

    #[test]
    fn automorphisms_commute_with_embeddings(v in elements(1), mask in 0usize..8) {
        let a = &v[0];
        let t = a.field().generator_count();
        let s = SignPattern::from_mask(t, mask % (1 << t));
        let lhs = a.apply_automorphism(&s).unwrap().embed(&SignPattern::identity(t), 96).unwrap();
        let rhs = a.embed(&s, 96).unwrap();
        prop_assert!(lhs.overlaps(&rhs));
    }
}

fn spec_strategy() -> impl Strategy<Value = FieldSpec> {
    let rads = prop::sample::subsequence(vec![-1i64, 2, -2, 3, 5, -7, 13, -15, 17, 21], 0..=3);
    (rads, prop::option::of(1u32..=5), any::<bool>()).prop_filter_map("empty field", |(radicands, level, real)| {
        if radicands.is_empty() && level.is_none() {
            None
        } else {
            Some(FieldSpec { radicands, level, real })
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn efg_is_degree(spec in spec_strategy(), idx in 0usize..46) {
        let field = field_for(&spec).unwrap();
        let l = primes_up_to(200)[idx];
        let s = split_prime(&field, l).unwrap();
        prop_assert_eq!(s.e * s.f * s.g, field.degree());
        // |H| · [L : Q] = φ(M)
        let h = field.subgroup().unwrap();
        prop_assert_eq!(h.len() as u64 * field.degree(), field.phi());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn fsu_is_saturated(ds in prop::sample::subsequence(vec![2i64, 3, 5, 7, 11, 13, 6, 10], 2..=3)) {
        let f = fsu_of(&ds).unwrap();
        let elems: Vec<MQElement> = f.generators.iter().map(|g| g.elem.clone()).collect();
        prop_assert!(is_saturated(&f.field, &elems).unwrap());
        prop_assert!(f.q_index.is_power_of_two());
    }
}
