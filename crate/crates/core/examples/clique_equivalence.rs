//! When the hypergraph walk satisfies one of the equivalence conditions it is
//! exactly a walk on a weighted clique graph. Compare the two transition
//! matrices and the brute-force two-step walk.

use hgx::equiv::{check_equivalence_conditions, clique_graph, clique_walk_matrix, DEFAULT_TOL};
use hgx::fixtures::{self, RandomKind, RandomSpec};
use hgx::walk::{oracle_max_abs_diff, transition_matrix_with, IsolatedPolicy};

fn main() -> hgx::Result<()> {
    for kind in [RandomKind::EdgeIndependent, RandomKind::Proportional, RandomKind::General] {
        let h = fixtures::random_hypergraph(7, &RandomSpec::new(kind));
        let report = check_equivalence_conditions(&h, DEFAULT_TOL);
        print!(
            "{kind:?}: |V| = {}, condition1 = {}, condition2 = {} (k = {:.3})",
            h.n_vertices(),
            report.condition1,
            report.condition2.holds,
            report.condition2.k
        );
        match clique_graph(&h) {
            Ok(g) => {
                let p = transition_matrix_with(&h, IsolatedPolicy::ZeroRow)?.to_dense();
                let q = clique_walk_matrix(&g, IsolatedPolicy::ZeroRow)?.to_dense();
                println!(", clique walk differs by {:.1e}", (p - q).abs().max());
            }
            Err(e) => println!(", no clique graph: {e}"),
        }
        println!("  two-step oracle differs by {:.1e}", oracle_max_abs_diff(&h)?);
    }
    Ok(())
}
