//! Build a hypergraph with edge-dependent vertex weights, inspect its degrees
//! and structure, and round-trip it through JSON.

use hgx::{Hypergraph, RhoSpec};

fn main() -> hgx::Result<()> {
    let mut b = Hypergraph::builder(RhoSpec::power(-1.0));
    b.add_edge("paper1", Some(2.0));
    b.add_incidence("alice", "paper1", 2.0, 2.0)?;
    b.add_incidence("bob", "paper1", 1.0, 1.0)?;
    b.add_incidence("bob", "paper2", 1.0, 1.0)?;
    b.add_incidence("carol", "paper2", 3.0, 3.0)?;
    b.add_incidence("dave", "paper2", 1.0, 1.0)?;
    b.add_vertex("erin");
    let h = b.build()?;

    let deg = h.degree_profile()?;
    for (v, id) in h.vertex_ids().iter().enumerate() {
        println!("{id:>6}  d = {:.4}  d_hat = {:.4}", deg.d[v], deg.d_hat[v]);
    }
    for (e, id) in h.edge_ids().iter().enumerate() {
        println!("{id:>6}  delta = {}  w = {}", deg.delta[e], h.weight(e));
    }

    let report = h.validate();
    println!("structure: {}", serde_json::to_string(&report)?);

    let text = h.to_json()?;
    assert_eq!(Hypergraph::from_json(&text)?, h);
    println!("JSON round trip ok ({} bytes)", text.len());
    Ok(())
}
