//! Small reference hypergraphs and seeded random generators shared by tests,
//! examples and the acceptance suite.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hypergraph::{Hypergraph, RhoSpec};
use crate::walk::{TransitionMatrix, WalkKind};

/// Seed of the `r5` generator.
pub const R5_SEED: u64 = 5;

fn from_edges(rho: RhoSpec, edges: &[(&str, &[&str])]) -> Hypergraph {
    let mut b = Hypergraph::builder(rho);
    for (id, members) in edges {
        for v in *members {
            b.add_incidence(v, id, 1.0, 1.0).unwrap();
        }
    }
    b.build().unwrap()
}

/// Two vertices joined by one edge, unit weights, `rho = x^-1`.
pub fn t1() -> Hypergraph {
    from_edges(RhoSpec::power(-1.0), &[("e", &["a", "b"])])
}

/// The triangle graph as a 2-uniform hypergraph with `rho = x^sigma`.
pub fn triangle(sigma: f64) -> Hypergraph {
    from_edges(
        RhoSpec::power(sigma),
        &[("ab", &["a", "b"]), ("bc", &["b", "c"]), ("ac", &["a", "c"])],
    )
}

/// Edges `{a,b}` and `{c,d}` with no connection between them.
pub fn two_disjoint_edges() -> Hypergraph {
    from_edges(
        RhoSpec::power(-1.0),
        &[("ab", &["a", "b"]), ("cd", &["c", "d"])],
    )
}

/// Five vertices, edges of sizes 3, 3 and 4, `Q2 ~ U(0.5, 1.5)`, `Q1 = 2 Q2`,
/// `rho = x`. Structures are redrawn until the result is connected and every
/// vertex is covered.
pub fn r5() -> Hypergraph {
    let mut rng = ChaCha8Rng::seed_from_u64(R5_SEED);
    let ids = ["v1", "v2", "v3", "v4", "v5"];
    loop {
        let mut b = Hypergraph::builder(RhoSpec::power(1.0));
        for v in ids {
            b.add_vertex(v);
        }
        for (e, size) in [3usize, 3, 4].into_iter().enumerate() {
            let mut pool: Vec<usize> = (0..ids.len()).collect();
            pool.shuffle(&mut rng);
            let mut chosen = pool[..size].to_vec();
            chosen.sort_unstable();
            for v in chosen {
                let q2 = rng.gen_range(0.5..1.5);
                b.add_incidence(ids[v], &format!("e{}", e + 1), 2.0 * q2, q2)
                    .unwrap();
            }
        }
        let h = b.build().unwrap();
        let report = h.validate();
        if report.connected && report.isolated.is_empty() {
            return h;
        }
    }
}

/// The irreversible four-state chain whose stationary distribution is
/// `[3, 7, 5, 2] / 17`.
pub fn cx4() -> TransitionMatrix {
    let rows = cx4_rows();
    TransitionMatrix::from_dense(WalkKind::Lazy, &DMatrix::from_row_slice(4, 4, &rows.concat()))
        .unwrap()
}

/// Rows of [`cx4`]. The last row is the unique stochastic row consistent with
/// the chain's stationary distribution.
pub fn cx4_rows() -> [[f64; 4]; 4] {
    [
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0],
        [1.0 / 6.0, 5.0 / 12.0, 7.0 / 24.0, 1.0 / 8.0],
        [1.0 / 6.0, 5.0 / 12.0, 7.0 / 24.0, 1.0 / 8.0],
        [0.0, 1.0 / 2.0, 1.0 / 4.0, 1.0 / 4.0],
    ]
}

/// The frequently reproduced variant of the last row of [`cx4`]; it sums to 7/6.
pub const CX4_PRINTED_LAST_ROW: [f64; 4] = [0.0, 1.0 / 2.0, 1.0 / 3.0, 1.0 / 3.0];

pub const CX4_STATIONARY: [f64; 4] = [3.0 / 17.0, 7.0 / 17.0, 5.0 / 17.0, 2.0 / 17.0];

/// Vertex-weight regimes for [`random_hypergraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomKind {
    /// `Q1 = Q2 = H`.
    Binary,
    /// Edge-independent `Q1` and `Q2`, drawn independently per vertex.
    EdgeIndependent,
    /// Edge-dependent `Q2` with `Q1 = k Q2` for a random `k`.
    Proportional,
    /// Edge-dependent `Q1` and `Q2` drawn independently per incidence.
    General,
}

#[derive(Debug, Clone)]
pub struct RandomSpec {
    pub kind: RandomKind,
    pub min_vertices: usize,
    pub max_vertices: usize,
    pub max_edge_size: usize,
    pub rho: Option<RhoSpec>,
    /// Use unit edge weights instead of `U(0.5, 2)`.
    pub unit_weights: bool,
    /// Fixed edge size; `None` draws sizes in `2..=max_edge_size`.
    pub uniform_size: Option<usize>,
    pub connected: bool,
}

impl RandomSpec {
    pub fn new(kind: RandomKind) -> Self {
        Self {
            kind,
            min_vertices: 3,
            max_vertices: 30,
            max_edge_size: 6,
            rho: None,
            unit_weights: false,
            uniform_size: None,
            connected: false,
        }
    }
}

/// Random hypergraph in which every vertex lies in at least one edge of size
/// at least two. Vertices are `v0..`, edges `e0..`.
pub fn random_hypergraph(seed: u64, spec: &RandomSpec) -> Hypergraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let h = draw(&mut rng, spec);
        if !spec.connected || h.validate().connected {
            return h;
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, spec: &RandomSpec) -> Hypergraph {
    let n = rng.gen_range(spec.min_vertices..=spec.max_vertices);
    let max_size = spec.max_edge_size.min(n).max(2);
    let mut edges: Vec<Vec<usize>> = Vec::new();
    let mut covered = vec![false; n];
    let target = rng.gen_range(1..=n);
    while edges.len() < target || covered.iter().any(|c| !c) {
        let size = spec.uniform_size.unwrap_or_else(|| rng.gen_range(2..=max_size)).min(n);
        let mut pool: Vec<usize> = (0..n).collect();
        pool.shuffle(rng);
        let mut members = pool[..size].to_vec();
        if edges.len() >= target {
            // force an uncovered vertex in
            let missing = covered.iter().position(|c| !c).unwrap();
            if !members.contains(&missing) {
                members[0] = missing;
            }
        }
        members.sort_unstable();
        for &v in &members {
            covered[v] = true;
        }
        edges.push(members);
    }

    let rho = spec
        .rho
        .clone()
        .unwrap_or_else(|| RhoSpec::power(rng.gen_range(-2.0..1.0)));
    let k = rng.gen_range(0.25..4.0);
    let vq1: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    let vq2: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();

    let mut b = Hypergraph::builder(rho);
    for v in 0..n {
        b.add_vertex(&format!("v{v}"));
    }
    for (e, members) in edges.iter().enumerate() {
        let id = format!("e{e}");
        let w = if spec.unit_weights {
            1.0
        } else {
            rng.gen_range(0.5..2.0)
        };
        b.add_edge(&id, Some(w));
        for &v in members {
            let (q1, q2) = match spec.kind {
                RandomKind::Binary => (1.0, 1.0),
                RandomKind::EdgeIndependent => (vq1[v], vq2[v]),
                RandomKind::Proportional => {
                    let q2 = rng.gen_range(0.5..1.5);
                    (k * q2, q2)
                }
                RandomKind::General => (rng.gen_range(0.5..1.5), rng.gen_range(0.5..1.5)),
            };
            b.add_incidence(&format!("v{v}"), &id, q1, q2).unwrap();
        }
    }
    b.build().unwrap()
}
