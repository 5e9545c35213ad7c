//! Stationary distributions of the lazy and non-lazy walks, and detailed
//! balance. The 4-state chain below is stationary with respect to a known
//! distribution but not reversible, so it is not a walk on any undirected
//! graph.

use hgx::fixtures;
use hgx::walk::{
    closed_form_stationary, is_reversible, power_iteration, stationary_distribution,
    transition_matrix_nonlazy, PowerOptions, StationaryMode,
};

fn main() -> hgx::Result<()> {
    let p = fixtures::cx4();
    let st = power_iteration(&p, PowerOptions::default())?;
    let pi17: Vec<f64> = st.pi.iter().map(|x| x * 17.0).collect();
    println!("counterexample pi * 17 = {pi17:.6?} (residual {:.1e})", st.residual);
    let rev = is_reversible(&p, &st.pi, 1e-12)?;
    let w = rev.worst_violation;
    println!(
        "reversible = {}; worst pair ({}, {}): {:.6} vs {:.6}",
        rev.reversible, w.u, w.v, w.forward, w.backward
    );

    let h = fixtures::r5();
    let closed = closed_form_stationary(&h)?;
    let power = stationary_distribution(&h, StationaryMode::PowerIteration, PowerOptions::default())?;
    let gap = closed.pi.iter().zip(&power.pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("R5 closed form {:.6?}, power iteration agrees to {gap:.1e}", closed.pi);

    let tri = fixtures::triangle(-1.0);
    let nl = transition_matrix_nonlazy(&tri)?;
    println!("non-lazy walk on the triangle:\n{}", nl.to_dense());
    Ok(())
}
