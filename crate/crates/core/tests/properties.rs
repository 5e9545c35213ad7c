use hgx::equiv::{check_equivalence_conditions, clique_graph, clique_walk_matrix, DEFAULT_TOL};
use hgx::fixtures::{self, RandomKind, RandomSpec};
use hgx::models::{forward, Hyperparameters, ModelParams, Operator, Variant};
use hgx::partition::cut_objective;
use hgx::spectral;
use hgx::walk::{self, IsolatedPolicy};
use hgx::{Hypergraph, RhoSpec};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = RandomKind> {
    prop_oneof![
        Just(RandomKind::Binary),
        Just(RandomKind::EdgeIndependent),
        Just(RandomKind::Proportional),
        Just(RandomKind::General),
    ]
}

fn max_abs(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

/// Rebuilds `h` with vertices listed in the order `perm` (new index `i` holds
/// old vertex `perm[i]`).
fn permuted(h: &Hypergraph, perm: &[usize]) -> Hypergraph {
    let mut b = Hypergraph::builder(h.rho().clone());
    for &v in perm {
        b.add_vertex(&h.vertex_ids()[v]);
    }
    for e in 0..h.n_edges() {
        let id = &h.edge_ids()[e];
        b.add_edge(id, Some(h.weight(e)));
        for m in h.members(e) {
            b.add_incidence(&h.vertex_ids()[m.vertex], id, m.q1, m.q2).unwrap();
        }
    }
    b.build().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn equal_step_weights_give_equal_degrees(seed in any::<u64>(), kind in kind()) {
        let h = fixtures::random_hypergraph(seed, &RandomSpec::new(kind)).with_q1_from_q2();
        let deg = h.degree_profile().unwrap();
        for (d, dh) in deg.d.iter().zip(&deg.d_hat) {
            prop_assert!((d - dh).abs() <= 1e-12 * d.max(1.0));
        }
    }

    #[test]
    fn transition_matrix_matches_two_step_oracle(seed in any::<u64>(), kind in kind()) {
        let spec = RandomSpec { max_vertices: 8, ..RandomSpec::new(kind) };
        let h = fixtures::random_hypergraph(seed, &spec);
        prop_assert!(walk::oracle_max_abs_diff(&h).unwrap() < 1e-13);
    }

    #[test]
    fn uniform_hypergraph_walk_ignores_rho(seed in any::<u64>(), size in 2usize..5, sigma in -3.0f64..3.0) {
        let spec = RandomSpec { uniform_size: Some(size), ..RandomSpec::new(RandomKind::Binary) };
        let h = fixtures::random_hypergraph(seed, &spec);
        let a = walk::transition_matrix(&h.with_rho(RhoSpec::power(sigma)).unwrap()).unwrap().to_dense();
        let b = walk::transition_matrix(&h.with_rho(RhoSpec::Exp).unwrap()).unwrap().to_dense();
        prop_assert!(max_abs(&a, &b) < 1e-12);
    }

    #[test]
    fn sufficient_conditions_imply_clique_equivalence(seed in any::<u64>(), kind in kind()) {
        let h = fixtures::random_hypergraph(seed, &RandomSpec::new(kind));
        let r = check_equivalence_conditions(&h, DEFAULT_TOL);
        if r.condition1 || r.condition2.holds {
            prop_assert!(r.general_equation_holds);
            let g = clique_graph(&h).unwrap();
            let q = clique_walk_matrix(&g, IsolatedPolicy::Reject).unwrap().to_dense();
            let p = walk::transition_matrix(&h).unwrap().to_dense();
            prop_assert!(max_abs(&p, &q) < 1e-12);
        }
        if kind == RandomKind::EdgeIndependent {
            prop_assert!(r.condition1);
        }
        if kind == RandomKind::Proportional {
            prop_assert!(r.condition2.holds);
        }
    }

    #[test]
    fn json_round_trip_is_exact(seed in any::<u64>(), kind in kind()) {
        let h = fixtures::random_hypergraph(seed, &RandomSpec::new(kind));
        prop_assert_eq!(Hypergraph::from_json(&h.to_json().unwrap()).unwrap(), h);
    }

    #[test]
    fn cut_is_symmetric_under_complement(seed in any::<u64>(), pick in any::<u64>()) {
        let h = fixtures::random_hypergraph(seed, &RandomSpec::new(RandomKind::EdgeIndependent));
        let n = h.n_vertices();
        let mut s: Vec<usize> = (0..n).filter(|v| pick >> (v % 64) & 1 == 1).collect();
        if s.is_empty() { s.push(0); }
        if s.len() == n { s.pop(); }
        let comp: Vec<usize> = (0..n).filter(|v| !s.contains(v)).collect();
        let a = cut_objective(&h, &s).unwrap();
        let b = cut_objective(&h, &comp).unwrap();
        prop_assert_eq!(a.c, b.c);
        prop_assert!(a.c >= 0.0);
        prop_assert!((a.vol_s + a.vol_sc - 1.0).abs() < 1e-12);
        prop_assert_eq!(a.c == 0.0, a.boundary_edges.is_empty());
    }

    #[test]
    fn ssgc_is_permutation_equivariant(seed in any::<u64>()) {
        let h = fixtures::random_hypergraph(seed, &RandomSpec::new(RandomKind::General));
        let n = h.n_vertices();
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + seed as usize % n) % n).collect();
        prop_assume!({ let mut p = perm.clone(); p.sort_unstable(); p.dedup(); p.len() == n });
        let hp = permuted(&h, &perm);
        let x = DMatrix::from_fn(n, 3, |i, j| ((i * 3 + j) as f64 * 0.7).sin());
        let xp = DMatrix::from_fn(n, 3, |i, j| x[(perm[i], j)]);
        let params = ModelParams::init(Variant::HSsgc, Hyperparameters::for_variant(Variant::HSsgc), 3, 2, seed).unwrap();
        let z = forward(&params, &Operator::from_hypergraph(&h, true), &x).unwrap();
        let zp = forward(&params, &Operator::from_hypergraph(&hp, true), &xp).unwrap();
        for i in 0..n {
            for j in 0..2 {
                prop_assert!((zp[(i, j)] - z[(perm[i], j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn renormalization_preserves_isolated_features(seed in any::<u64>()) {
        let h = fixtures::random_hypergraph(seed, &RandomSpec::new(RandomKind::General));
        let mut b = h.to_builder();
        b.add_vertex("lonely");
        let h = b.build().unwrap();
        let v = h.vertex_index("lonely").unwrap();
        let x = DMatrix::from_fn(h.n_vertices(), 4, |i, j| (i + 2 * j) as f64 - 3.5);
        let kept = Operator::from_hypergraph(&h, true).apply(&x);
        let dropped = Operator::from_hypergraph(&h, false).apply(&x);
        prop_assert!(kept.row(v) == x.row(v));
        prop_assert!(dropped.row(v).iter().all(|&z| z == 0.0));
    }
}

/// A graph seen as a 2-uniform hypergraph with `Q1 = Q2 = H` and
/// `rho(x) = 1/x` has clique weights `(A + D) / 2`; the hypergraph network
/// is the plain network on the renormalized version of that graph.
#[test]
fn graph_networks_are_recovered_on_two_uniform_hypergraphs() {
    let spec = RandomSpec {
        uniform_size: Some(2),
        rho: Some(RhoSpec::power(-1.0)),
        ..RandomSpec::new(RandomKind::Binary)
    };
    for seed in 0..30 {
        let h = fixtures::random_hypergraph(seed, &spec);
        let n = h.n_vertices();
        let mut a = DMatrix::<f64>::zeros(n, n);
        for e in 0..h.n_edges() {
            let m = h.members(e);
            a[(m[0].vertex, m[1].vertex)] += h.weight(e);
            a[(m[1].vertex, m[0].vertex)] += h.weight(e);
        }
        let deg = DMatrix::from_diagonal(&a.column_sum());
        let k = (&a + deg) / 2.0 + DMatrix::identity(n, n);
        let inv_sqrt = k.column_sum().map(|d| 1.0 / d.sqrt());
        let expected = DMatrix::from_fn(n, n, |i, j| inv_sqrt[i] * k[(i, j)] * inv_sqrt[j]);
        let op = spectral::renormalized_operator(&h).unwrap();
        assert!(max_abs(&op, &expected) < 1e-12, "seed {seed}");

        let x = DMatrix::from_fn(n, 3, |i, j| ((i + j) as f64).cos());
        for variant in [Variant::HGcn, Variant::HAppnp, Variant::HChebnet, Variant::HGcnii] {
            let params = ModelParams::init(variant, Hyperparameters::for_variant(variant), 3, 2, seed).unwrap();
            let ours = forward(&params, &Operator::from_hypergraph(&h, true), &x).unwrap();
            let graph = forward(&params, &Operator::from_dense(&expected), &x).unwrap();
            assert!(max_abs(&ours, &graph) < 1e-10, "{variant:?} seed {seed}");
        }
    }
}
