//! Seeded two-community node-classification benchmark.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::train::Split;
use crate::edvw::{knn_gaussian_hypergraph, FeatureTable};
use crate::error::Result;
use crate::hypergraph::{Hypergraph, RhoSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOptions {
    pub per_block: usize,
    pub dim: usize,
    /// Class means are `+signal` and `-signal` in every coordinate.
    pub signal: f64,
    pub noise: f64,
    pub k: usize,
    pub gamma: f64,
    /// Unit-weight hyperedges with two members from each block.
    pub cross_edges: usize,
    pub train_per_block: usize,
    pub val_per_block: usize,
    pub test_per_block: usize,
    /// Append a vertex without incident hyperedges (outside every split).
    pub isolated_vertex: bool,
    pub seed: u64,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self {
            per_block: 30,
            dim: 16,
            signal: 0.2,
            noise: 1.0,
            k: 5,
            gamma: 1.0,
            cross_edges: 6,
            train_per_block: 10,
            val_per_block: 5,
            test_per_block: 15,
            isolated_vertex: false,
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub hypergraph: Hypergraph,
    pub features: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub split: Split,
}

/// Two blocks of noisy Gaussian features; every vertex spans a hyperedge over
/// its `k` nearest neighbours inside its own block (Gaussian-kernel weights),
/// plus a few hyperedges bridging the blocks.
pub fn two_block_benchmark(opts: &BenchmarkOptions) -> Result<Benchmark> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let noise = Normal::new(0.0, opts.noise)
        .map_err(|e| crate::HgxError::InvalidArgument(e.to_string()))?;
    let n_blocks = 2;
    let n = n_blocks * opts.per_block;
    let total = n + usize::from(opts.isolated_vertex);
    let labels: Vec<usize> = (0..total).map(|i| (i / opts.per_block).min(1)).collect();
    let features = DMatrix::from_fn(total, opts.dim, |i, _| {
        let mean = if labels[i] == 0 { opts.signal } else { -opts.signal };
        mean + noise.sample(&mut rng)
    });
    let ids: Vec<String> = (0..total).map(|i| format!("n{i}")).collect();

    let mut b = Hypergraph::builder(RhoSpec::default());
    for id in &ids {
        b.add_vertex(id);
    }
    for block in 0..n_blocks {
        let rows: Vec<usize> = (block * opts.per_block..(block + 1) * opts.per_block).collect();
        let table = FeatureTable::new(
            rows.iter().map(|&i| ids[i].clone()).collect(),
            rows.iter().map(|&i| features.row(i).iter().copied().collect()).collect(),
        )?;
        let knn = knn_gaussian_hypergraph(&table, opts.k, opts.gamma)?.hypergraph;
        for e in 0..knn.n_edges() {
            let id = knn.edge_ids()[e].clone();
            b.add_edge(&id, Some(knn.weight(e)));
            for m in knn.members(e) {
                b.add_incidence(&knn.vertex_ids()[m.vertex], &id, m.q1, m.q2)?;
            }
        }
    }
    for c in 0..opts.cross_edges {
        let id = format!("bridge{c}");
        for block in 0..n_blocks {
            let mut pool: Vec<usize> = (block * opts.per_block..(block + 1) * opts.per_block).collect();
            pool.shuffle(&mut rng);
            let mut pick = pool[..2].to_vec();
            pick.sort_unstable();
            for v in pick {
                b.add_incidence(&ids[v], &id, 1.0, 1.0)?;
            }
        }
    }

    let mut split = Split::default();
    for block in 0..n_blocks {
        let mut rows: Vec<usize> = (block * opts.per_block..(block + 1) * opts.per_block).collect();
        rows.shuffle(&mut rng);
        let (t, v, s) = (opts.train_per_block, opts.val_per_block, opts.test_per_block);
        split.train.extend(&rows[..t]);
        split.val.extend(&rows[t..t + v]);
        split.test.extend(&rows[t + v..(t + v + s).min(rows.len())]);
    }
    for part in [&mut split.train, &mut split.val, &mut split.test] {
        part.sort_unstable();
    }
    Ok(Benchmark {
        hypergraph: b.build()?,
        features,
        labels,
        split,
    })
}
