use bottlab::model::TruncatedFourierSpace;
use bottlab::pairing::{
    bott_loop, pairing_index, pairing_index_on_window, roundtrip_check, winding_number, LoopSpec, LoopUnitary,
    ProjectionMatrix,
};
use bottlab::symbols::default_triple;
use bottlab::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn monomials_pair_to_minus_winding(m in -3i64..=3) {
        let v = LoopUnitary::<f64>::monomial(m);
        let r = pairing_index(&v, 24.0, &default_triple()).unwrap();
        let w = winding_number(&v, 512).unwrap();
        prop_assert_eq!(w, m);
        prop_assert_eq!(r.result.index, -w);
    }

    #[test]
    fn bott_loops_of_random_projections(rank in 0usize..=3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = ProjectionMatrix::<f64>::random(4, rank, &mut rng).unwrap();
        prop_assert_eq!(p.rank(), rank as i64);
        prop_assert!(roundtrip_check(&p, 24.0, &default_triple()).unwrap());
        prop_assert_eq!(winding_number(&bott_loop(&p), 128).unwrap(), -(rank as i64));
    }
}

#[test]
fn direct_sums_add() {
    let triple = default_triple::<f64>();
    let loops = [
        LoopUnitary::<f64>::bott_generator(),
        LoopUnitary::monomial(2),
        LoopUnitary::constant_identity(2),
        bott_loop(&ProjectionMatrix::coordinate(2, 1)),
    ];
    for a in &loops {
        for b in &loops {
            let lhs = pairing_index(&a.direct_sum(b), 24.0, &triple).unwrap().result.index;
            let ia = pairing_index(a, 24.0, &triple).unwrap().result.index;
            let ib = pairing_index(b, 24.0, &triple).unwrap().result.index;
            assert_eq!(lhs, ia + ib);
        }
    }
}

#[test]
fn constant_in_t_once_certified() {
    let triple = default_triple::<f64>();
    let b = LoopUnitary::<f64>::bott_generator();
    for t in [12.0, 16.0, 24.0] {
        let a = pairing_index(&b, t, &triple).unwrap().result.index;
        let c = pairing_index(&b, 2.0 * t, &triple).unwrap().result.index;
        assert_eq!((a, c), (1, 1), "t={t}");
    }
}

#[test]
fn explicit_windows_agree_and_small_ones_are_rejected() {
    let triple = default_triple::<f64>();
    let b = LoopUnitary::<f64>::bott_generator();
    let wide = TruncatedFourierSpace::new(-20, 50).unwrap();
    assert_eq!(pairing_index_on_window(&b, 16.0, wide, &triple, 0.05).unwrap().index, 1);
    let narrow = TruncatedFourierSpace::new(0, 16).unwrap();
    assert!(matches!(
        pairing_index_on_window(&b, 16.0, narrow, &triple, 0.05),
        Err(Error::Window(_))
    ));
}

#[test]
fn loop_specs_roundtrip_through_json() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let p = ProjectionMatrix::<f64>::random(3, 2, &mut rng).unwrap();
    let v = bott_loop(&p);
    let text = serde_json::to_string(&v.to_spec()).unwrap();
    let spec: LoopSpec = serde_json::from_str(&text).unwrap();
    let back = LoopUnitary::<f64>::from_spec(&spec).unwrap();
    assert_eq!(back.k(), 3);
    assert_eq!(back.coeffs().keys().copied().collect::<Vec<_>>(), vec![-1, 0]);
    for (m, c) in v.coeffs() {
        assert!(c.sub_checked(&back.coeffs()[m]).unwrap().max_abs() < 1e-15);
    }
}

#[test]
fn malformed_loops_are_rejected() {
    let not_unitary = r#"{"k":1,"coeffs":[{"mode":-1,"matrix":[[[-1.0,0.0]]]},{"mode":0,"matrix":[[[2.0,0.0]]]}]}"#;
    let not_based = r#"{"k":1,"coeffs":[{"mode":-1,"matrix":[[[2.0,0.0]]]}]}"#;
    let spec: LoopSpec = serde_json::from_str(not_based).unwrap();
    assert!(matches!(LoopUnitary::<f64>::from_spec(&spec), Err(Error::LoopNotBased { .. })));
    let spec: LoopSpec = serde_json::from_str(not_unitary).unwrap();
    assert!(matches!(LoopUnitary::<f64>::from_spec(&spec), Err(Error::NonUnitaryLoop { .. })));
    let unknown = r#"{"k":1,"coeffs":[],"extra":0}"#;
    assert!(serde_json::from_str::<LoopSpec>(unknown).is_err());
}
