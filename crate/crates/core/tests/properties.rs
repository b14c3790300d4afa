use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;

use lattice_spectra::eigen::full_spectrum;
use lattice_spectra::inequalities::{
    alt_weights, chebyshev_gap, check_bipartite_symmetry, check_hp, check_ppw, check_yang2,
    recursion_constant,
};
use lattice_spectra::operator::{
    green_residual, lattice_laplacian_at, weighted_inner, DirichletOperator, LatticeFunction,
};
use lattice_spectra::region::{random_connected_region, Point, Region};

fn region() -> impl Strategy<Value = Region> {
    (1usize..=3, 2usize..=40, any::<u64>())
        .prop_map(|(n, size, seed)| random_connected_region(n, size, seed).unwrap())
}

fn region_with_functions() -> impl Strategy<Value = (Arc<Region>, Vec<f64>, Vec<f64>)> {
    region().prop_flat_map(|r| {
        let len = r.len();
        (
            Just(Arc::new(r)),
            prop::collection::vec(-1.0f64..1.0, len),
            prop::collection::vec(-1.0f64..1.0, len),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chebyshev_sum_inequality(mut a in prop::collection::vec(-5.0f64..5.0, 1..30), seed in any::<u64>()) {
        let mut b: Vec<f64> = a.iter().enumerate().map(|(i, x)| x * 0.3 + ((seed >> (i % 64)) & 1) as f64).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert!(chebyshev_gap(&a, &b) >= -1e-12);
    }

    #[test]
    fn operator_is_self_adjoint((r, f, g) in region_with_functions()) {
        let op = DirichletOperator::assemble(r.clone()).unwrap();
        let f = LatticeFunction::new(r.clone(), f).unwrap();
        let g = LatticeFunction::new(r.clone(), g).unwrap();
        let lf = op.apply(&f).unwrap();
        let lg = op.apply(&g).unwrap();
        let a = weighted_inner(&lf, &g).unwrap();
        let b = weighted_inner(&f, &lg).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn green_identity((r, f, g) in region_with_functions()) {
        let f = LatticeFunction::new(r.clone(), f).unwrap();
        let g = LatticeFunction::new(r.clone(), g).unwrap();
        prop_assert!(green_residual(&r, &f, &g).unwrap().abs() <= 1e-11);
    }

    #[test]
    fn apply_matches_stencil((r, f, _) in region_with_functions()) {
        let op = DirichletOperator::assemble(r.clone()).unwrap();
        let f = LatticeFunction::new(r.clone(), f).unwrap();
        let lf = op.apply(&f).unwrap();
        for (x, v) in r.points().iter().zip(lf.values()) {
            let stencil = -lattice_laplacian_at(x, |p| f.at(p)).unwrap();
            prop_assert!((v - stencil).abs() <= 1e-13);
        }
    }

    #[test]
    fn spectrum_is_symmetric_about_one(r in region()) {
        let spec = full_spectrum(&DirichletOperator::assemble(r).unwrap()).unwrap();
        prop_assert!(check_bipartite_symmetry(spec.values()) <= 1e-9);
    }

    #[test]
    fn strongest_bound_implies_weaker_ones(r in region()) {
        let spec = full_spectrum(&DirichletOperator::assemble(r).unwrap()).unwrap();
        let ev = spec.values();
        for k in 1..ev.len() {
            let y2 = check_yang2(ev, k).unwrap();
            if y2.precondition_met && y2.pass {
                prop_assert!(check_hp(ev, k).unwrap().pass, "hp at k={}", k);
                prop_assert!(check_ppw(ev, k).unwrap().pass, "ppw at k={}", k);
            }
        }
    }

    #[test]
    fn weights_sum_to_one(r in region()) {
        let spec = full_spectrum(&DirichletOperator::assemble(r).unwrap()).unwrap();
        let ev = spec.values();
        for k in 1..=ev.len() {
            if let Ok(w) = alt_weights(ev, k) {
                prop_assert!((w.mu.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                prop_assert!(w.a >= 1.0);
            }
        }
    }

    #[test]
    fn recursion_constant_contracts(n in 1usize..=5, k in 1usize..500, b in 0.5f64..50.0) {
        let c = recursion_constant(n as f64, k, b);
        prop_assert!(c < 1.0);
    }

    #[test]
    fn boundary_matches_brute_force(r in region()) {
        let n = r.dim();
        let lo: Vec<i32> = (0..n).map(|a| r.points().iter().map(|p| p.coords()[a]).min().unwrap() - 1).collect();
        let hi: Vec<i32> = (0..n).map(|a| r.points().iter().map(|p| p.coords()[a]).max().unwrap() + 1).collect();
        let mut expected = BTreeSet::new();
        let mut cur = lo.clone();
        loop {
            let p = Point::new(cur.clone());
            if !r.contains(&p) && r.points().iter().any(|q| q.is_adjacent(&p)) {
                expected.insert(p);
            }
            let mut axis = 0;
            while axis < n && cur[axis] == hi[axis] {
                cur[axis] = lo[axis];
                axis += 1;
            }
            if axis == n {
                break;
            }
            cur[axis] += 1;
        }
        let got: BTreeSet<Point> = r.boundary().unwrap().points().iter().cloned().collect();
        prop_assert_eq!(got, expected);
    }
}
