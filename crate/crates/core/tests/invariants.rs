//! Property tests over the public API.

use horolab::boundary::{horofunction_eval, rho_b, Horofunction, VisualConfig};
use horolab::groups::{convolve, orbit_net, wasserstein_alpha, FiniteSupportMeasure, GroupMetric};
use horolab::rng::stream_rng;
use horolab::spaces::{four_point_defect, Bord, FreeGroupTree, InfiniteWord, Space, UpperHalfPlane, Word};
use proptest::prelude::*;

fn f2() -> FreeGroupTree {
    FreeGroupTree::new(2).unwrap()
}

fn word() -> impl Strategy<Value = Word> {
    prop::collection::vec(prop::sample::select(vec![1i8, -1, 2, -2]), 0..12).prop_map(Word::from_letters)
}

fn ideal() -> impl Strategy<Value = InfiniteWord> {
    (word(), prop::sample::select(vec!["a", "A", "b", "B", "ab", "aB"]))
        .prop_map(|(prefix, period)| InfiniteWord::new(&prefix, &Word::parse(period, 2).unwrap()).unwrap())
}

fn measure() -> impl Strategy<Value = FiniteSupportMeasure<FreeGroupTree>> {
    prop::collection::btree_map(word(), 1u32..10, 1..4).prop_map(|atoms| {
        let total: u32 = atoms.values().sum();
        let (words, weights) = atoms.into_iter().map(|(g, w)| (g, f64::from(w) / f64::from(total))).unzip();
        FiniteSupportMeasure::new(&f2(), words, weights).unwrap()
    })
}

proptest! {
    #[test]
    fn tree_metric_is_symmetric_and_triangular(x in word(), y in word(), z in word()) {
        let t = f2();
        prop_assert_eq!(t.distance(&x, &y), t.distance(&y, &x));
        prop_assert!(t.distance(&x, &z) <= t.distance(&x, &y) + t.distance(&y, &z));
    }

    #[test]
    fn tree_is_zero_hyperbolic(x in word(), y in word(), z in word(), w in word()) {
        prop_assert!(four_point_defect(&f2(), &x, &y, &z, &w) <= 0.0);
    }

    #[test]
    fn tree_isometries_preserve_distance(g in word(), x in word(), y in word()) {
        let t = f2();
        prop_assert_eq!(t.distance(&t.apply(&g, &x), &t.apply(&g, &y)), t.distance(&x, &y));
        prop_assert!(t.is_identity(&t.compose(&g, &t.inverse(&g))));
    }

    #[test]
    fn busemann_functions_are_one_lipschitz(xi in ideal(), x in word(), y in word()) {
        let t = f2();
        let h = Horofunction::<FreeGroupTree>::boundary(xi);
        let gap = (horofunction_eval(&t, &h, &x) - horofunction_eval(&t, &h, &y)).abs();
        prop_assert!(gap <= t.distance(&x, &y));
    }

    #[test]
    fn boundary_quasi_metric_is_symmetric(a in ideal(), b in ideal()) {
        let t = f2();
        let config = VisualConfig::for_space(&t);
        let (a, b) = (Bord::Ideal(a), Bord::Ideal(b));
        prop_assert_eq!(rho_b(&t, &config, &a, &b), rho_b(&t, &config, &b, &a));
    }

    #[test]
    fn half_plane_isometries_preserve_distance(seed in any::<u64>()) {
        let s = UpperHalfPlane::default();
        let mut rng = stream_rng(seed, 0);
        let (g, x, y) = (s.random_isometry(&mut rng), s.random_point(&mut rng), s.random_point(&mut rng));
        let d = s.distance(&x, &y);
        prop_assert!((s.distance(&s.apply(&g, &x), &s.apply(&g, &y)) - d).abs() <= 1e-7 * (1.0 + d));
    }

    #[test]
    fn convolution_keeps_mass_and_is_subadditive(mu in measure(), nu in measure()) {
        let t = f2();
        let c = convolve(&t, &mu, &nu);
        prop_assert!((c.total_mass() - 1.0).abs() < 1e-12);
        prop_assert!(c.mean_displacement(&t) <= mu.mean_displacement(&t) + nu.mean_displacement(&t) + 1e-12);
    }

    #[test]
    fn wasserstein_vanishes_on_the_diagonal_and_is_symmetric(mu in measure(), nu in measure()) {
        let t = f2();
        let base = FiniteSupportMeasure::uniform(&t, t.generators()).unwrap();
        let metric = GroupMetric::new(&t, VisualConfig::for_space(&t), orbit_net(&t, &base, 1)).unwrap();
        prop_assert!(wasserstein_alpha(&metric, &mu, &mu, 0.5).unwrap().abs() < 1e-9);
        let ab = wasserstein_alpha(&metric, &mu, &nu, 0.5).unwrap();
        let ba = wasserstein_alpha(&metric, &nu, &mu, 0.5).unwrap();
        prop_assert!((ab - ba).abs() < 1e-9);
    }
}
