use std::rc::Rc;

use ihall_core::generators::{GeneratorSet, Vertex};
use ihall_core::groundfield::{Gf, PointId};
use ihall_core::ihallcore::{CohClass, Engine};
use ihall_core::lattice::{K0Class, LVec, WeightData};
use ihall_core::tube::{TorsionClass, Tube};
use ihall_core::verifier::{aut_partition_formula, associativity_residual, rp_product};
use ihall_core::Scalar;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn scalar(q: u32) -> impl Strategy<Value = Scalar> {
    (-20i64..20, 1i64..6, -20i64..20, 1i64..6).prop_map(move |(a, b, c, d)| {
        let r = |n: i64, m: i64| BigRational::new(BigInt::from(n), BigInt::from(m));
        Scalar::new(q, r(a, b), r(c, d)).unwrap()
    })
}

fn engine(q: u32, p: &[u32]) -> Engine {
    let gf = Gf::ground(q).unwrap();
    let w = WeightData::new(&gf, p).unwrap();
    Engine::new(gf, w).unwrap()
}

fn tube_module(n: u32, max_parts: usize) -> impl Strategy<Value = TorsionClass> {
    prop::collection::vec((0..n as i64, 1u32..3), 1..=max_parts).prop_map(move |v| TorsionClass::new(n, &v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scalar_field_laws(a in scalar(3), b in scalar(3), c in scalar(3)) {
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        if !b.is_zero() {
            prop_assert_eq!(&(&a / &b) * &b, a.clone());
        }
    }

    #[test]
    fn euler_form_is_bilinear(x in prop::collection::vec(-3i64..4, 5), y in prop::collection::vec(-3i64..4, 5), z in prop::collection::vec(-3i64..4, 5)) {
        let gf = Gf::ground(3).unwrap();
        let w = WeightData::new(&gf, &[2, 3]).unwrap();
        let k = |v: &[i64]| K0Class { o: v[0], oc: v[1], s: v[2..].to_vec() };
        let (a, b, c) = (k(&x), k(&y), k(&z));
        prop_assert_eq!(a.add(&b).euler(&w, &c), a.euler(&w, &c) + b.euler(&w, &c));
        prop_assert_eq!(c.euler(&w, &a.add(&b)), c.euler(&w, &a) + c.euler(&w, &b));
    }

    #[test]
    fn class_is_additive(l in -3i64..4, top in 0i64..3, len in 1u32..5) {
        let e = engine(3, &[3, 2]);
        let a = e.line(LVec::c(e.w(), l));
        let b = e.exc(1, top, len);
        prop_assert_eq!(e.class(&a.direct_sum(&b)), e.class(&a).add(&e.class(&b)));
    }

    #[test]
    fn aut_order_matches_partition_formula(parts in prop::collection::vec(1u32..4, 1..4), q in prop::sample::select(vec![2u32, 3, 5])) {
        let tube = Tube::new(1, Gf::ground(q).unwrap());
        let m = TorsionClass::new(1, &parts.iter().map(|&x| (0, x)).collect::<Vec<_>>());
        prop_assert_eq!(tube.aut_order(&m), aut_partition_formula(q, &parts));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tube_product_matches_hall_numbers(a in tube_module(3, 2), b in tube_module(3, 2)) {
        let e = engine(2, &[3, 1]);
        let at = |t: &TorsionClass| CohClass::torsion_at(PointId::Exc(1), t.clone());
        let lhs = e.basis_product(&at(&a), &at(&b)).unwrap();
        prop_assert_eq!(&*lhs, &rp_product(&e, 1, &a, &b).unwrap());
    }

    #[test]
    fn products_are_associative(l in -2i64..3, t1 in tube_module(2, 1), t2 in tube_module(2, 1), pick in 0usize..3) {
        let e = engine(2, &[2, 2]);
        let line = e.line(LVec::c(e.w(), l));
        let x = CohClass::torsion_at(PointId::Exc(1), t1);
        let y = CohClass::torsion_at(PointId::Exc(2), t2);
        let (a, b, c) = match pick {
            0 => (line, x, y),
            1 => (x, line, y),
            _ => (x, y, line),
        };
        prop_assert!(associativity_residual(&e, &a, &b, &c).unwrap().is_zero());
    }

    #[test]
    fn theta_star_ignores_twist(m in 1u32..3, s in -2i64..3) {
        let g = GeneratorSet::new(Rc::new(engine(2, &[2, 1])));
        prop_assert_eq!(g.theta_star(m, s).unwrap(), g.theta_star(m, 0).unwrap());
    }

    #[test]
    fn exp_inverts_log(m in 1u32..4, branch in prop::bool::ANY) {
        let g = GeneratorSet::new(Rc::new(engine(2, &[2, 2])));
        let v = if branch { Vertex::Branch(1, 1) } else { Vertex::Star };
        prop_assert_eq!(g.theta_from_h(v, m).unwrap(), (*g.theta(v, m as i64).unwrap()).clone());
    }
}
