use bottlab::approx::{nearest_commuting, obstruction_lower_bound, NearestOptions};
use bottlab::matrix::{commutator, operator_norm, random_unitary, UnitaryMatrix};
use bottlab::model::voiculescu_pair;
use bottlab::symbols::SymbolTriple;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn conj(w: &UnitaryMatrix<f64>, u: &UnitaryMatrix<f64>) -> UnitaryMatrix<f64> {
    UnitaryMatrix::new(w.conjugate(u.matrix()).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn approximants_commute(n in 2usize..=10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_unitary::<f64, _>(n, &mut rng);
        let v = random_unitary::<f64, _>(n, &mut rng);
        let opts = NearestOptions { restarts: 2, seed, ..NearestOptions::default() };
        let r = nearest_commuting(&u, &v, &opts).unwrap();
        prop_assert!(r.pair.commutator_norm().unwrap() < 1e-10);
        let du = operator_norm(&u.matrix().sub_checked(&r.pair.u()).unwrap()).unwrap();
        let dv = operator_norm(&v.matrix().sub_checked(&r.pair.v()).unwrap()).unwrap();
        prop_assert!((r.distance - du.max(dv)).abs() < 1e-12);
    }

    #[test]
    fn canonical_start_is_unitarily_invariant(n in 3usize..=6, seed in any::<u64>()) {
        let (u, v) = voiculescu_pair::<f64>(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_unitary::<f64, _>(n, &mut rng);
        let opts = NearestOptions { restarts: 1, ..NearestOptions::default() };
        let a = nearest_commuting(&u, &v, &opts).unwrap();
        let b = nearest_commuting(&conj(&w, &u), &conj(&w, &v), &opts).unwrap();
        prop_assert!((a.distance - b.distance).abs() < 1e-6, "{} vs {}", a.distance, b.distance);
    }
}

#[test]
fn bound_never_exceeds_heuristic_distance() {
    let triple = SymbolTriple::<f64>::smoothstep();
    for n in [8, 12, 16] {
        let (u, v) = voiculescu_pair::<f64>(n).unwrap();
        let bound = obstruction_lower_bound(&u, &v, &triple).unwrap();
        assert_eq!(bound.index, -1);
        assert!(bound.epsilon_lower > 0.0);
        let near = nearest_commuting(&u, &v, &NearestOptions::default()).unwrap();
        assert!(near.distance >= bound.epsilon_lower, "n={n}");
        let c = operator_norm(&commutator(u.matrix(), v.matrix()).unwrap()).unwrap();
        // a commuting pair within d of (u, v) forces the commutator below 4d
        assert!(c <= 4.0 * near.distance + 1e-12);
    }
}
