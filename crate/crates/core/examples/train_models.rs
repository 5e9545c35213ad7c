//! Train every model variant on the seeded two-block benchmark and report
//! accuracies. Pass `--layers N` to change the depth of the layered models.

use hgx::models::{train, two_block_benchmark, BenchmarkOptions, Hyperparameters, TrainConfig, Variant};

fn main() -> hgx::Result<()> {
    let layers: Option<usize> = std::env::args()
        .skip_while(|a| a != "--layers")
        .nth(1)
        .and_then(|s| s.parse().ok());
    let bm = two_block_benchmark(&BenchmarkOptions::default())?;
    println!(
        "benchmark: {} vertices, {} hyperedges, {} features",
        bm.hypergraph.n_vertices(),
        bm.hypergraph.n_edges(),
        bm.features.ncols()
    );
    let config = TrainConfig::default();
    for variant in Variant::ALL {
        let mut hyper = Hyperparameters::for_variant(variant);
        if let Some(l) = layers {
            hyper.layers = l;
        }
        let (params, m) = train(variant, hyper, &bm.hypergraph, &bm.features, &bm.labels, &bm.split, &config)?;
        println!(
            "{:<14} params {:>5}  train {:.3}  val {:.3}  test {:.3}  (best epoch {})",
            variant.name(),
            params.n_parameters(),
            m.train_accuracy,
            m.val_accuracy,
            m.test_accuracy.unwrap_or(f64::NAN),
            m.best_epoch
        );
    }
    Ok(())
}
