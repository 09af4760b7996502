mod common;

use proptest::prelude::*;

use common::{gamma_all, Arith};
use sumsetlab::codes::build_code;
use sumsetlab::elliptic::{Curve, Point};
use sumsetlab::obstruct::normalize_translate;
use sumsetlab::sumset::{check_witness, dsh_bound, Multiset, SumsetTable};
use sumsetlab::{ElementSet, GroupSpec};

const SPECS: [&str; 10] = ["Z2", "Z7", "Z9", "Z12", "Z2xZ6", "Z3xZ3", "Z2xZ2xZ4", "Z15", "Z5xZ5", "Z70"];

fn group_and_set() -> impl Strategy<Value = (GroupSpec, ElementSet)> {
    (0..SPECS.len()).prop_flat_map(|i| {
        let g: GroupSpec = SPECS[i].parse().unwrap();
        let n = g.order();
        proptest::collection::vec(any::<bool>(), n).prop_map(move |bits| {
            let set = ElementSet::from_predicate(n, |x| bits[x]);
            (g.clone(), set)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn monotone_in_the_set((g, a) in group_and_set(), extra in any::<prop::sample::Index>()) {
        let mut b = a.clone();
        b.insert(extra.index(g.order()));
        let ta = SumsetTable::build(&g, &a, a.len()).unwrap();
        let tb = SumsetTable::build(&g, &b, a.len()).unwrap();
        for k in 0..=a.len() {
            prop_assert!(ta.layer(k).unwrap().is_subset(tb.layer(k).unwrap()));
        }
    }

    #[test]
    fn translation_covariance((g, a) in group_and_set(), t in any::<prop::sample::Index>()) {
        let t = t.index(g.order());
        let shifted = g.translate(&a, t);
        let ta = SumsetTable::build(&g, &a, a.len()).unwrap();
        let ts = SumsetTable::build(&g, &shifted, a.len()).unwrap();
        for k in 0..=a.len() {
            prop_assert_eq!(&g.translate(ta.layer(k).unwrap(), g.smul(k as i64, t)), ts.layer(k).unwrap());
        }
    }

    #[test]
    fn complement_identity((g, a) in group_and_set()) {
        let full = SumsetTable::build(&g, &a, a.len()).unwrap();
        let half = SumsetTable::build(&g, &a, a.len() / 2).unwrap();
        for k in 0..=a.len() {
            prop_assert_eq!(&half.gamma(k).unwrap(), full.layer(k).unwrap());
            prop_assert_eq!(&full.complement_transform(k).unwrap(), full.layer(k).unwrap());
        }
    }

    #[test]
    fn matches_subset_enumeration((g, a) in group_and_set()) {
        prop_assume!(a.len() <= 16);
        let ar = Arith::new(g.factors());
        let brute = gamma_all(&ar, &ar.table(), &a.to_vec());
        let table = SumsetTable::build(&g, &a, a.len()).unwrap();
        for (k, row) in brute.iter().enumerate() {
            let expect: Vec<usize> = (0..g.order()).filter(|&x| row[x]).collect();
            prop_assert_eq!(table.layer(k).unwrap().to_vec(), expect);
        }
    }

    #[test]
    fn witnesses_are_valid((g, a) in group_and_set(), k in 0usize..12, t in any::<prop::sample::Index>()) {
        prop_assume!(k <= a.len());
        let t = t.index(g.order());
        let table = SumsetTable::build(&g, &a, k.min(a.len() - k)).unwrap();
        match table.witness(k, t).unwrap() {
            Some(w) => {
                prop_assert!(table.contains(k, t).unwrap());
                prop_assert!(check_witness(&g, &a, k, t, &w).is_ok());
            }
            None => prop_assert!(!table.contains(k, t).unwrap()),
        }
    }

    #[test]
    fn hex_and_json_round_trip((g, a) in group_and_set()) {
        let back = ElementSet::from_hex(g.order(), &a.to_hex()).unwrap();
        prop_assert_eq!(&back, &a);
        let json = serde_json::to_string(&a).unwrap();
        let parsed: ElementSet = serde_json::from_str(&json).unwrap();
        // index lists recover the order from the largest member
        prop_assert_eq!(parsed.to_vec(), a.to_vec());
    }

    #[test]
    fn group_arithmetic_matches_coordinates(i in 0..SPECS.len(), x in any::<prop::sample::Index>(), y in any::<prop::sample::Index>()) {
        let g: GroupSpec = SPECS[i].parse().unwrap();
        let ar = Arith::new(g.factors());
        let (x, y) = (x.index(g.order()), y.index(g.order()));
        prop_assert_eq!(g.add(x, y), ar.add(x, y));
        prop_assert_eq!(g.add(g.neg(x), x), 0);
        prop_assert_eq!(g.sub(g.add(x, y), y), x);
    }

    #[test]
    fn dsh_holds_in_prime_order(p in prop::sample::select(vec![5u64, 7, 11, 13, 17]), bits in proptest::collection::vec(any::<bool>(), 17)) {
        let g = GroupSpec::cyclic(p).unwrap();
        let a = ElementSet::from_predicate(p as usize, |x| bits[x]);
        let table = SumsetTable::build(&g, &a, a.len()).unwrap();
        for k in 1..=a.len() {
            prop_assert!(table.layer(k).unwrap().len() as u64 >= dsh_bound(p, a.len() as u64, k as u64).unwrap());
        }
    }

    #[test]
    fn subsum_witness_consistent(p in prop::sample::select(vec![3u64, 5, 7, 11]), mult in proptest::collection::vec(0usize..4, 11), t in 0u64..11) {
        let u = Multiset::new(p, mult[..p as usize].to_vec()).unwrap();
        let t = t % p;
        for len in 1..=u.total() {
            let member = u.sigma(len).unwrap().contains(t as usize);
            match u.sigma_witness(len, t).unwrap() {
                Some(c) => {
                    prop_assert!(member);
                    prop_assert_eq!(c.iter().sum::<usize>(), len);
                    prop_assert!(c.iter().zip(u.multiplicities()).all(|(x, v)| x <= v));
                    prop_assert_eq!(c.iter().enumerate().map(|(a, x)| a as u64 * *x as u64).sum::<u64>() % p, t);
                }
                None => prop_assert!(!member),
            }
        }
    }

    #[test]
    fn normalization_moves_a_densest_fiber_into_the_kernel((g, a) in group_and_set()) {
        prop_assume!(!a.is_empty());
        for (p, _) in sumsetlab::arith::factorize(g.order() as u64) {
            for pi in g.quotient_maps(p).unwrap() {
                let norm = normalize_translate(&g, &pi, &a).unwrap();
                prop_assert_eq!(&norm.translated, &g.translate(&a, g.neg(norm.shift)));
                let kernel_part = norm.translated.intersection(pi.kernel().members()).len();
                let densest = (0..p).map(|r| a.intersection(&pi.fiber(r)).len()).max().unwrap();
                prop_assert_eq!(kernel_part, densest);
            }
        }
    }

    #[test]
    fn code_translation_consistency(a in 0i64..23, b in 0i64..23, k in 1usize..6, pick in any::<prop::sample::Index>()) {
        let Ok(c) = Curve::new(23, a, b) else { return Ok(()) };
        let pts = c.enumerate_points().unwrap();
        let q = pts[pick.index(pts.len())];
        let eval: Vec<Point> = pts.iter().copied().filter(|p| *p != q && *p != Point::Inf).take(8).collect();
        prop_assume!(k < eval.len() && q != Point::Inf);
        let moved: Vec<Point> = eval.iter().map(|p| c.sub(p, &q)).collect();
        prop_assume!(!moved.contains(&Point::Inf));
        let code_q = build_code(&c, &eval, q, k).unwrap();
        let code_o = build_code(&c, &moved, Point::Inf, k).unwrap();
        prop_assert_eq!(code_q.gen, code_o.gen);
    }
}
