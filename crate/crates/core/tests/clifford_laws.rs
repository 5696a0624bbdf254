use proptest::prelude::*;
use sspec::clifford::{Multivector, Paravector};

fn mv(n: usize) -> impl Strategy<Value = Multivector> {
    prop::collection::vec(-4.0f64..4.0, 1 << n)
        .prop_map(move |c| Multivector::from_coeffs(n, c).unwrap())
}

fn pv(n: usize) -> impl Strategy<Value = Paravector> {
    (-4.0f64..4.0, prop::collection::vec(-4.0f64..4.0, n))
        .prop_map(|(s0, v)| Paravector::new(s0, v).unwrap())
}

fn close(a: &Multivector, b: &Multivector, scale: f64) -> bool {
    (a - b).max_abs() <= 1e-11 * (1.0 + scale)
}

proptest! {
    #[test]
    fn associative(n in 1usize..=4, seed in any::<u64>()) {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let (a, b, c) = (Multivector::random(n, &mut rng), Multivector::random(n, &mut rng), Multivector::random(n, &mut rng));
        let l = a.mul(&b).unwrap().mul(&c).unwrap();
        let r = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert!(close(&l, &r, l.max_abs()));
    }

    #[test]
    fn conjugation_reverses_products((a, b) in (mv(3), mv(3))) {
        let l = a.mul(&b).unwrap().conjugate();
        let r = b.conjugate().mul(&a.conjugate()).unwrap();
        prop_assert!(close(&l, &r, l.max_abs()));
        prop_assert!(close(&a.conjugate().conjugate(), &a, 0.0));
    }

    #[test]
    fn norm_is_scalar_part_of_conjugate_product(a in mv(4)) {
        let sc = a.conjugate().mul(&a).unwrap().scalar_part();
        prop_assert!((sc - a.norm_sq()).abs() <= 1e-11 * (1.0 + a.norm_sq()));
    }

    #[test]
    fn paravector_multiplicative_norm((x, y) in (pv(3), mv(3))) {
        let xy = x.to_multivector().mul(&y).unwrap();
        prop_assert!((xy.norm() - x.modulus() * y.norm()).abs() <= 1e-11 * (1.0 + xy.norm()));
        let xx = x.to_multivector().mul(&x.conjugate().to_multivector()).unwrap();
        prop_assert!(close(&xx, &Multivector::scalar(3, x.modulus_sq()), x.modulus_sq()));
    }

    #[test]
    fn norm_triangle_and_submultiplicative((a, b) in (mv(2), mv(2))) {
        prop_assert!((&a + &b).norm() <= a.norm() + b.norm() + 1e-12);
        // |ab| <= 2^{n/2} |a| |b|
        prop_assert!(a.mul(&b).unwrap().norm() <= 2.0 * a.norm() * b.norm() + 1e-12);
    }
}

#[test]
fn generators_square_to_minus_one_and_anticommute() {
    for n in 1..=5 {
        for i in 1..=n {
            let ei = Multivector::generator(n, i);
            assert_eq!(ei.mul(&ei).unwrap(), Multivector::scalar(n, -1.0));
            for j in (i + 1)..=n {
                let ej = Multivector::generator(n, j);
                let sum = &ei.mul(&ej).unwrap() + &ej.mul(&ei).unwrap();
                assert!(sum.is_zero());
            }
        }
    }
}
