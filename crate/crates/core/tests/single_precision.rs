use bottlab::loring::bott_index;
use bottlab::model::{clock, cyclic_shift, ShiftOrientation};
use bottlab::pairing::{pairing_index, LoopUnitary};
use bottlab::single;
use bottlab::symbols::default_triple;

#[test]
fn index_and_pairing_in_f32() {
    let triple: single::Triple = default_triple();
    for n in [8, 16, 32] {
        let u: single::Unitary = clock(n);
        let b: single::Unitary = cyclic_shift(n, ShiftOrientation::Backward);
        let r: single::Index = bott_index(&u, &b, &triple, 0.05).unwrap();
        assert_eq!(r.index, 1, "N={n}");
    }
    let r = pairing_index(&LoopUnitary::<f32>::bott_generator(), 16.0, &triple).unwrap();
    assert_eq!(r.result.index, 1);
}
