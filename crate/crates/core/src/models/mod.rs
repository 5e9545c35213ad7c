//! Spectral convolution models driven by the unified hypergraph Laplacian:
//! each variant is a standard graph network whose propagation operator is
//! replaced by the hypergraph operator `D~^-1/2 (K + I) D~^-1/2`.
//!
//! Gradients are written out by hand per variant and validated with central
//! finite differences ([`gradient_check`]).

mod network;
mod synthetic;
mod train;

use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{HgxError, Result};
use crate::hypergraph::Hypergraph;
use crate::sparse::CsrMatrix;
use crate::spectral;

pub use network::{backward, forward, forward_cached, Cache};
pub use synthetic::{two_block_benchmark, Benchmark, BenchmarkOptions};
pub use train::{
    accuracy, gradient_check, loss_and_gradients, train, train_with_operator, EpochLog, Metrics,
    Optimizer, Split, TrainConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    HGcn,
    HSsgc,
    HAppnp,
    HChebnet,
    HGcnii,
    HgnnBaseline,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::HGcn,
        Variant::HSsgc,
        Variant::HAppnp,
        Variant::HChebnet,
        Variant::HGcnii,
        Variant::HgnnBaseline,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::HGcn => "h_gcn",
            Variant::HSsgc => "h_ssgc",
            Variant::HAppnp => "h_appnp",
            Variant::HChebnet => "h_chebnet",
            Variant::HGcnii => "h_gcnii",
            Variant::HgnnBaseline => "hgnn_baseline",
        }
    }
}

impl FromStr for Variant {
    type Err = HgxError;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| HgxError::InvalidArgument(format!("unknown variant {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

/// Polynomial basis of the Chebyshev-style filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChebBasis {
    /// Plain powers `T^k X`.
    Monomial,
    /// Three-term recurrence `B_k = 2 T B_(k-1) - B_(k-2)`.
    Chebyshev,
}

/// Identity-mapping strength per layer of the initial-residual model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaSchedule {
    Fixed,
    /// `beta_l = ln(lambda / l + 1)`
    LogDecay { lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hyperparameters {
    /// Propagation layers (networks) or MLP depth (`h_appnp`).
    pub layers: usize,
    pub hidden: usize,
    /// Diffusion steps (`h_ssgc`, `h_appnp`) or polynomial order (`h_chebnet`).
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub beta_schedule: BetaSchedule,
    pub dropout: f64,
    pub use_renormalization: bool,
    pub activation: Activation,
    pub cheb_basis: ChebBasis,
}

impl Hyperparameters {
    pub fn for_variant(variant: Variant) -> Self {
        let mut h = Hyperparameters {
            layers: 2,
            hidden: 16,
            k: 2,
            alpha: 0.1,
            beta: 0.5,
            beta_schedule: BetaSchedule::Fixed,
            dropout: 0.0,
            use_renormalization: true,
            activation: Activation::Relu,
            cheb_basis: ChebBasis::Monomial,
        };
        match variant {
            Variant::HSsgc => {
                h.k = 16;
                h.alpha = 0.05;
            }
            Variant::HAppnp => h.k = 10,
            Variant::HgnnBaseline => h.use_renormalization = false,
            _ => {}
        }
        h
    }

    fn validate(&self, variant: Variant) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(HgxError::InvalidArgument(format!("dropout {} not in [0,1)", self.dropout)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(HgxError::InvalidArgument(format!("alpha {} not in [0,1]", self.alpha)));
        }
        if self.layers == 0 {
            return Err(HgxError::InvalidArgument("at least one layer is required".into()));
        }
        if matches!(variant, Variant::HSsgc) && self.k == 0 {
            return Err(HgxError::InvalidArgument("h_ssgc needs k >= 1".into()));
        }
        Ok(())
    }

    /// `beta_l` for layer `l` (1-based).
    pub fn beta_at(&self, l: usize) -> f64 {
        match self.beta_schedule {
            BetaSchedule::Fixed => self.beta,
            BetaSchedule::LogDecay { lambda } => (lambda / l as f64 + 1.0).ln(),
        }
    }
}

/// Weight matrices of one model plus its hyperparameters. Models are bias-free.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelParams {
    pub variant: Variant,
    pub hyper: Hyperparameters,
    pub input_dim: usize,
    pub output_dim: usize,
    #[serde(skip)]
    pub weights: Vec<DMatrix<f64>>,
}

impl ModelParams {
    /// Glorot-uniform initialization from `seed`.
    pub fn init(
        variant: Variant,
        hyper: Hyperparameters,
        input_dim: usize,
        output_dim: usize,
        seed: u64,
    ) -> Result<Self> {
        hyper.validate(variant)?;
        let shapes = weight_shapes(variant, &hyper, input_dim, output_dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = shapes
            .into_iter()
            .map(|(r, c)| {
                let limit = (6.0 / (r + c) as f64).sqrt();
                DMatrix::from_fn(r, c, |_, _| rng.gen_range(-limit..limit))
            })
            .collect();
        Ok(Self {
            variant,
            hyper,
            input_dim,
            output_dim,
            weights,
        })
    }

    pub fn n_parameters(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum()
    }
}

/// Shapes of the weight matrices in the order the network consumes them.
pub fn weight_shapes(variant: Variant, hyper: &Hyperparameters, input: usize, output: usize) -> Vec<(usize, usize)> {
    let chain = |layers: usize| -> Vec<(usize, usize)> {
        (0..layers)
            .map(|l| {
                let r = if l == 0 { input } else { hyper.hidden };
                let c = if l + 1 == layers { output } else { hyper.hidden };
                (r, c)
            })
            .collect()
    };
    match variant {
        Variant::HGcn | Variant::HgnnBaseline | Variant::HAppnp => chain(hyper.layers),
        Variant::HSsgc => vec![(input, output)],
        Variant::HChebnet => chain(hyper.layers)
            .into_iter()
            .flat_map(|s| std::iter::repeat_n(s, hyper.k + 1))
            .collect(),
        Variant::HGcnii => {
            let mut v = vec![(input, hyper.hidden)];
            v.extend(std::iter::repeat_n((hyper.hidden, hyper.hidden), hyper.layers));
            v.push((hyper.hidden, output));
            v
        }
    }
}

/// A symmetric propagation operator with its transpose cached for backprop.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    pub a: CsrMatrix,
    at: CsrMatrix,
}

impl Operator {
    pub fn new(a: CsrMatrix) -> Self {
        let at = a.transpose();
        Self { a, at }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        Self::new(CsrMatrix::from_dense(m))
    }

    /// Renormalized operator, or `D^-1/2 K D^-1/2` when `renormalize` is off.
    pub fn from_hypergraph(h: &Hypergraph, renormalize: bool) -> Self {
        Self::new(spectral::propagation_operator(h, renormalize))
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.a.mul_dense(x)
    }

    pub fn apply_transpose(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.at.mul_dense(x)
    }
}

/// Per-graph mean of node embeddings; `assignment[i]` is the graph of row `i`.
pub fn readout_mean_pool(embeddings: &DMatrix<f64>, assignment: &[usize]) -> Result<DMatrix<f64>> {
    if assignment.len() != embeddings.nrows() {
        return Err(HgxError::Dimension(format!(
            "{} assignments for {} rows",
            assignment.len(),
            embeddings.nrows()
        )));
    }
    let graphs = assignment.iter().max().map_or(0, |m| m + 1);
    let mut out = DMatrix::zeros(graphs, embeddings.ncols());
    let mut counts = vec![0usize; graphs];
    for (row, &g) in assignment.iter().enumerate() {
        counts[g] += 1;
        let mut target = out.row_mut(g);
        target += embeddings.row(row);
    }
    for (g, &c) in counts.iter().enumerate() {
        if c == 0 {
            return Err(HgxError::InvalidArgument(format!("graph {g} has no nodes")));
        }
        out.row_mut(g).scale_mut(1.0 / c as f64);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
            assert_eq!(serde_json::to_string(&v).unwrap(), format!("\"{}\"", v.name()));
        }
        assert!("gat".parse::<Variant>().is_err());
    }

    #[test]
    fn init_is_seeded_and_shaped() {
        let hyper = Hyperparameters::for_variant(Variant::HChebnet);
        let a = ModelParams::init(Variant::HChebnet, hyper.clone(), 5, 3, 1).unwrap();
        let b = ModelParams::init(Variant::HChebnet, hyper, 5, 3, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.weights.len(), 2 * 3);
        assert_eq!(a.weights[0].shape(), (5, 16));
        assert_eq!(a.weights[5].shape(), (16, 3));
        let mut bad = Hyperparameters::for_variant(Variant::HGcn);
        bad.dropout = 1.0;
        assert!(ModelParams::init(Variant::HGcn, bad, 5, 3, 1).is_err());
    }

    #[test]
    fn mean_pool() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let same = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 1.0, 2.0]);
        assert_eq!(readout_mean_pool(&same, &[0, 0]).unwrap(), DMatrix::from_row_slice(1, 2, &[1.0, 2.0]));
        assert_eq!(readout_mean_pool(&x, &[0, 1, 2]).unwrap(), x);
        let pooled = readout_mean_pool(&x, &[1, 0, 1]).unwrap();
        assert_eq!(pooled, DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 3.0, 4.0]));
        let permuted = DMatrix::from_row_slice(3, 2, &[5.0, 6.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(readout_mean_pool(&permuted, &[1, 1, 0]).unwrap(), pooled);
        assert!(readout_mean_pool(&x, &[0, 2, 2]).is_err());
    }
}
