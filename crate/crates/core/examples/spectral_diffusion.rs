//! Spectrum of the unified Laplacian, the mixing-rate bound on a lazy-walk
//! diffusion, and the over-smoothing energy with its lower bound.

use hgx::fixtures::{self, RandomKind, RandomSpec};
use hgx::spectral::{convergence_bound_check, spectrum, unified_laplacian};

fn main() -> hgx::Result<()> {
    let spec = RandomSpec {
        connected: true,
        min_vertices: 25,
        max_vertices: 30,
        max_edge_size: 3,
        ..RandomSpec::new(RandomKind::Proportional)
    };
    let h = fixtures::random_hypergraph(11, &spec);
    let bundle = unified_laplacian(&h)?;
    let s = spectrum(&bundle.laplacian)?;
    println!(
        "|V| = {}: eigenvalues in [{:.2e}, {:.4}], lambda_H = {:.4}",
        h.n_vertices(),
        s.lambda_min,
        s.lambda_max,
        s.lambda_h.unwrap_or(f64::NAN)
    );

    let trace = convergence_bound_check(&h, 0, 20)?;
    println!("bound holds: {} (worst margin {:.2e})", trace.bound_holds, trace.worst_margin);
    for step in trace.steps.iter().step_by(4) {
        println!(
            "k = {:>2}  l1 error = {:.3e}  bound = {:.3e}  e = {}  e_low = {}",
            step.k, step.l1_error, step.bound, step.e, step.e_low
        );
    }
    Ok(())
}
