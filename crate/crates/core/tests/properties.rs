//! Property tests for operator algebra, round trips and the phase grid.

use digitstate::digits::{reinsert, restore, DigitString};
use digitstate::phase::{omega_root, operator_pow, rotation_operator, BlockOperator, PAdicRational};
use digitstate::reduction::project;
use digitstate::states::{composite, extract_channel, subsystem, BlochPoint, StateConfig};
use digitstate::angle::Angle;
use digitstate::Error;
use proptest::prelude::*;

fn off_grid<T>(r: &Result<T, Error>) -> bool {
    matches!(r, Err(Error::OffGrid { .. }))
}

fn digit_string(max_base: u32, max_len: usize) -> impl Strategy<Value = DigitString> {
    (2..=max_base).prop_flat_map(move |b| {
        prop::collection::vec(0..b, 1..max_len).prop_map(move |d| DigitString::new(b, &d).unwrap())
    })
}

fn binary_block_string(depth: u32, blocks: usize) -> impl Strategy<Value = DigitString> {
    let len = blocks << depth;
    prop::collection::vec(0..2u32, len).prop_map(|d| DigitString::new(2, &d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn square_root_laws(n in 1u32..=8, s in binary_block_string(8, 2)) {
        let root = omega_root(2, n);
        let twice = root.apply(&root.apply(&s).unwrap()).unwrap();
        prop_assert_eq!(twice, omega_root(2, n - 1).apply(&s).unwrap());
    }

    #[test]
    fn powers_add(n in 0u32..=8, a in 0u64..600, b in 0u64..600) {
        let op = omega_root(2, n);
        let lhs = operator_pow(&op, a).compose(&operator_pow(&op, b));
        prop_assert_eq!(lhs, operator_pow(&op, a + b));
    }

    #[test]
    fn rotations_add(k in 0u32..=9, m1 in 0u64..512, m2 in 0u64..512) {
        let q1 = PAdicRational::new(2, m1 % (1 << k), k);
        let q2 = PAdicRational::new(2, m2 % (1 << k), k);
        let lhs = rotation_operator(&q1).compose(&rotation_operator(&q2));
        prop_assert!(lhs.equivalent(&rotation_operator(&q1.add(&q2))));
    }

    #[test]
    fn base3_cube_roots(n in 1u32..=5) {
        let cube = operator_pow(&omega_root(3, n), 3);
        prop_assert!(cube.equivalent(&omega_root(3, n - 1)));
        prop_assert!(operator_pow(&omega_root(3, n), 3u64.pow(n + 1)).is_identity());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn project_reinsert_round_trip(s in digit_string(6, 120), pick in 0u32..6) {
        let j = pick % s.base();
        prop_assume!(s.constant_digit() != Some(j));
        let (p, log) = project(&s, j).unwrap();
        prop_assert_eq!(p.count(j), 0);
        prop_assert_eq!(reinsert(&p, &log, j).unwrap(), s.clone());
        prop_assert_eq!(restore(&p, &log).unwrap(), s);
    }

    #[test]
    fn composite_subsystem_round_trip(
        qubits in (1u32..=5, 1usize..100).prop_flat_map(|(n, len)| {
            prop::collection::vec(prop::collection::vec(0..2u32, len), n as usize)
        })
    ) {
        let qs: Vec<DigitString> = qubits.iter().map(|d| DigitString::new(2, d).unwrap()).collect();
        let c = composite(&qs).unwrap();
        let channels = qs.len() as u32;
        for (k, q) in qs.iter().enumerate() {
            prop_assert_eq!(&extract_channel(&c, channels, k as u32).unwrap(), q);
        }
        let all: Vec<u32> = (0..c.base()).collect();
        prop_assert_eq!(subsystem(&c, &all).unwrap(), c);
    }

    #[test]
    fn serialization_round_trip(s in digit_string(16, 150), depth in 0u32..3) {
        let json = serde_json::to_string(&s).unwrap();
        prop_assert_eq!(serde_json::from_str::<DigitString>(&json).unwrap(), s.clone());
        let op = omega_root(s.base().min(5), depth);
        let back: BlockOperator = serde_json::from_str(&serde_json::to_string(&op).unwrap()).unwrap();
        prop_assert_eq!(back, op);
    }

    #[test]
    fn non_dyadic_longitudes_rejected(odd in 1i64..5000, pow in 0u32..10, numer in 1i64..1_000_000) {
        let odd = 2 * odd + 1;
        let denom = odd << pow;
        let numer = numer % denom;
        prop_assume!(numer % odd != 0);
        let r = BlochPoint::from_turns(Angle::HALF_PI, numer, denom, 12);
        prop_assert!(off_grid(&r), "{}/{} accepted", numer, denom);
    }

    #[test]
    fn dyadic_longitudes_accepted(k in 0u32..=12, m in any::<u64>()) {
        let m = (m % (1u64 << k)) as i64;
        let p = BlochPoint::from_turns(Angle::HALF_PI, m, 1 << k, 12).unwrap();
        prop_assert!(StateConfig::default().check_lambda(&p.lambda).is_ok());
    }

    #[test]
    fn too_deep_dyadic_longitudes_rejected(k in 13u32..30, m in any::<u64>()) {
        let m = ((m % (1u64 << (k - 1))) * 2 + 1) as i64;
        let r = BlochPoint::from_turns(Angle::HALF_PI, m, 1 << k, 12);
        prop_assert!(off_grid(&r));
    }
}
