//! Build hypergraphs from data: k-nearest-neighbour hyperedges with
//! Gaussian-kernel vertex weights (two modalities concatenated), and a
//! residue hypergraph of a synthetic helix with sequence and spatial edges.

use hgx::edvw::{
    concat_modalities, knn_gaussian_hypergraph, protein_hypergraph, FeatureTable, ProteinChain, Residue,
    DEFAULT_EPSILON, DEFAULT_TAU,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> hgx::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ids: Vec<String> = (0..12).map(|i| format!("obj{i}")).collect();
    let mut modality = |dim: usize| {
        let rows = (0..ids.len())
            .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        FeatureTable::new(ids.clone(), rows)
    };
    let view_a = knn_gaussian_hypergraph(&modality(4)?, 3, 1.0)?;
    let view_b = knn_gaussian_hypergraph(&modality(8)?, 3, 1.0)?;
    println!("view a: mean distance {:.3}", view_a.metadata.mean_distance);
    let both = concat_modalities(&[view_a.hypergraph, view_b.hypergraph])?;
    println!("two views: {} vertices, {} hyperedges", both.n_vertices(), both.n_edges());
    let first = &both.members(0);
    let weights: Vec<String> = first.iter().map(|m| format!("{:.3}", m.q2)).collect();
    println!("{} weights: [{}]", both.edge_ids()[0], weights.join(", "));

    // an alpha helix: 3.6 residues per turn, 1.5 A rise, 2.3 A radius
    let residues = (0..30)
        .map(|i| {
            let t = i as f64 * 2.0 * std::f64::consts::PI / 3.6;
            Residue {
                index: i,
                aa: "A".into(),
                coord: [2.3 * t.cos(), 2.3 * t.sin(), 1.5 * i as f64],
                features: Vec::new(),
            }
        })
        .collect();
    let chain = ProteinChain::new(residues)?;
    let h = protein_hypergraph(&chain, DEFAULT_TAU, DEFAULT_EPSILON, 1.0)?;
    let seq = h.edge_ids().iter().filter(|id| id.starts_with("seq")).count();
    println!(
        "helix: {} residues, {seq} sequence windows, {} spatial hyperedges",
        h.n_vertices(),
        h.n_edges() - seq
    );
    Ok(())
}
