//! Equivalence between the unified walk on a hypergraph and a random walk on
//! a weighted undirected clique graph.
//!
//! The walk is equivalent to a clique-graph walk when `Q1` and `Q2` are both
//! edge-independent (condition 1) or when `Q1 = k Q2` (condition 2). In both
//! cases the clique weights are `K = Q2 W rho(D_e) Q2^T`. More generally the
//! walk is reversible iff
//! `T2(u) T1(v) F(u,v) = T2(v) T1(u) F(v,u)` for all pairs, with
//! `T_Q(u) = sum_e w(e) delta(e) rho(delta(e)) Q(u,e)` and
//! `F(u,v) = sum_e w(e) rho(delta(e)) Q1(u,e) Q2(v,e)`.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{HgxError, Result};
use crate::hypergraph::Hypergraph;
use crate::sparse::CsrMatrix;
use crate::walk::{IsolatedPolicy, TransitionMatrix, WalkKind};

pub const DEFAULT_TOL: f64 = 1e-9;
/// Above this many vertices the pairwise equation is checked on a sample.
pub const EXHAUSTIVE_LIMIT: usize = 200;
pub const SAMPLED_PAIRS: usize = 1000;
const SAMPLE_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Condition2 {
    pub holds: bool,
    /// Median of `Q1/Q2` over all incidences.
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition1: bool,
    pub condition2: Condition2,
    pub general_equation_holds: bool,
    pub tolerance: f64,
    pub pairs_checked: usize,
    pub sampled: bool,
    /// A pair violating the general equation, if one was found.
    pub violating_pair: Option<(String, String)>,
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

fn edge_independent(h: &Hypergraph, q1: bool, tol: f64) -> bool {
    (0..h.n_vertices()).all(|v| {
        let mut it = h.incident(v).map(|(_, m)| if q1 { m.q1 } else { m.q2 });
        match it.next() {
            None => true,
            Some(first) => it.all(|q| rel_close(q, first, tol)),
        }
    })
}

/// `T_Q(u)` for `Q1` and `Q2`.
pub fn t_vectors(h: &Hypergraph) -> (Vec<f64>, Vec<f64>) {
    let mut t1 = vec![0.0; h.n_vertices()];
    let mut t2 = vec![0.0; h.n_vertices()];
    for e in 0..h.n_edges() {
        let scale = h.weight(e) * h.delta(e) * h.rho_delta(e);
        for m in h.members(e) {
            t1[m.vertex] += scale * m.q1;
            t2[m.vertex] += scale * m.q2;
        }
    }
    (t1, t2)
}

/// `F = Q1 W rho(D_e) Q2^T` as a sparse matrix.
pub fn f_matrix(h: &Hypergraph) -> CsrMatrix {
    let mut triplets = Vec::new();
    for e in 0..h.n_edges() {
        let scale = h.weight(e) * h.rho_delta(e);
        for a in h.members(e) {
            for b in h.members(e) {
                triplets.push((a.vertex, b.vertex, scale * a.q1 * b.q2));
            }
        }
    }
    CsrMatrix::from_triplets(h.n_vertices(), h.n_vertices(), triplets)
}

pub fn check_equivalence_conditions(h: &Hypergraph, tol: f64) -> ConditionReport {
    let condition1 = edge_independent(h, true, tol) && edge_independent(h, false, tol);

    let mut ratios: Vec<f64> = (0..h.n_edges())
        .flat_map(|e| h.members(e).iter().map(|m| m.q1 / m.q2))
        .collect();
    ratios.sort_by(f64::total_cmp);
    let condition2 = if ratios.is_empty() {
        Condition2 { holds: true, k: 1.0 }
    } else {
        let mid = ratios.len() / 2;
        let k = if ratios.len() % 2 == 1 {
            ratios[mid]
        } else {
            0.5 * (ratios[mid - 1] + ratios[mid])
        };
        Condition2 {
            holds: ratios.iter().all(|&r| rel_close(r, k, tol)),
            k,
        }
    };

    let (t1, t2) = t_vectors(h);
    let f = f_matrix(h);
    let mut pairs: Vec<(usize, usize)> = f
        .triplets()
        .filter(|&(u, v, _)| u < v)
        .map(|(u, v, _)| (u, v))
        .collect();
    let sampled = h.n_vertices() > EXHAUSTIVE_LIMIT && pairs.len() > SAMPLED_PAIRS;
    if sampled {
        let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
        pairs.shuffle(&mut rng);
        pairs.truncate(SAMPLED_PAIRS);
    }
    let violating = pairs.iter().copied().find(|&(u, v)| {
        let lhs = t2[u] * t1[v] * f.get(u, v);
        let rhs = t2[v] * t1[u] * f.get(v, u);
        !rel_close(lhs, rhs, tol)
    });

    ConditionReport {
        condition1,
        condition2,
        general_equation_holds: violating.is_none(),
        tolerance: tol,
        pairs_checked: pairs.len(),
        sampled,
        violating_pair: violating
            .map(|(u, v)| (h.vertex_ids()[u].clone(), h.vertex_ids()[v].clone())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CliqueConstruction {
    /// `Q2 W rho(D_e) Q2^T`
    Product,
    /// `T2(u) F(u,v) / T1(u)`, symmetrized after a tolerance check.
    General,
}

/// Weighted undirected clique graph; self-loops are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct CliqueGraph {
    pub vertices: Vec<String>,
    pub weights: CsrMatrix,
    pub construction: CliqueConstruction,
}

impl CliqueGraph {
    pub fn to_dense(&self) -> DMatrix<f64> {
        self.weights.to_dense()
    }

    /// Copy with the diagonal removed, for display.
    pub fn without_self_loops(&self) -> CliqueGraph {
        let n = self.weights.nrows();
        CliqueGraph {
            vertices: self.vertices.clone(),
            weights: CsrMatrix::from_triplets(
                n,
                n,
                self.weights.triplets().filter(|&(r, c, _)| r != c).collect(),
            ),
            construction: self.construction,
        }
    }
}

/// `K = Q2 W rho(D_e) Q2^T`, exactly symmetric.
pub fn clique_weights(h: &Hypergraph) -> CsrMatrix {
    let mut triplets = Vec::new();
    for e in 0..h.n_edges() {
        let scale = h.weight(e) * h.rho_delta(e);
        for a in h.members(e) {
            for b in h.members(e) {
                triplets.push((a.vertex, b.vertex, scale * (a.q2 * b.q2)));
            }
        }
    }
    CsrMatrix::from_triplets(h.n_vertices(), h.n_vertices(), triplets)
}

/// Clique graph whose random walk reproduces the unified walk on `h`.
pub fn clique_graph(h: &Hypergraph) -> Result<CliqueGraph> {
    let report = check_equivalence_conditions(h, DEFAULT_TOL);
    if report.condition1 || report.condition2.holds {
        return Ok(CliqueGraph {
            vertices: h.vertex_ids().to_vec(),
            weights: clique_weights(h),
            construction: CliqueConstruction::Product,
        });
    }
    if !report.general_equation_holds {
        let (u, v) = report.violating_pair.unwrap_or_default();
        return Err(HgxError::ConditionNotMet(format!(
            "walk is not reversible (pair {u}, {v}); use the directed Laplacian instead"
        )));
    }
    let (t1, t2) = t_vectors(h);
    let f = f_matrix(h);
    let omega = CsrMatrix::from_triplets(
        h.n_vertices(),
        h.n_vertices(),
        f.triplets()
            .map(|(u, v, x)| (u, v, t2[u] * x / t1[u]))
            .collect(),
    );
    let scale = omega.triplets().map(|(_, _, x)| x.abs()).fold(0.0, f64::max);
    let asym = omega.max_asymmetry();
    if asym > 1e-12 * scale.max(1.0) {
        return Err(HgxError::Asymmetric(asym));
    }
    let sym = CsrMatrix::from_triplets(
        omega.nrows(),
        omega.ncols(),
        omega
            .triplets()
            .map(|(u, v, x)| (u, v, 0.5 * (x + omega.get(v, u))))
            .collect(),
    );
    Ok(CliqueGraph {
        vertices: h.vertex_ids().to_vec(),
        weights: sym,
        construction: CliqueConstruction::General,
    })
}

/// `P(u,v) = Wc(u,v) / sum_b Wc(u,b)`.
pub fn clique_walk_matrix(g: &CliqueGraph, policy: IsolatedPolicy) -> Result<TransitionMatrix> {
    let n = g.weights.nrows();
    let mut triplets = Vec::new();
    let mut isolated = Vec::new();
    for u in 0..n {
        let s = g.weights.row_sum(u);
        if s <= 0.0 {
            if policy == IsolatedPolicy::Reject {
                return Err(HgxError::IsolatedVertex(g.vertices[u].clone()));
            }
            isolated.push(u);
            continue;
        }
        triplets.extend(g.weights.row(u).map(|(v, x)| (u, v, x / s)));
    }
    Ok(TransitionMatrix {
        matrix: CsrMatrix::from_triplets(n, n, triplets),
        kind: WalkKind::CliqueWalk,
        isolated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::walk::transition_matrix;

    #[test]
    fn t1_conditions_and_clique() {
        let h = fixtures::t1();
        let r = check_equivalence_conditions(&h, DEFAULT_TOL);
        assert!(r.condition1 && r.condition2.holds && r.general_equation_holds);
        assert_eq!(r.condition2.k, 1.0);
        let g = clique_graph(&h).unwrap();
        assert_eq!(g.to_dense(), DMatrix::from_element(2, 2, 0.5));
        let p = clique_walk_matrix(&g, IsolatedPolicy::Reject).unwrap();
        assert_eq!(p.to_dense(), DMatrix::from_element(2, 2, 0.5));
        assert_eq!(g.without_self_loops().weights.get(0, 0), 0.0);
    }

    #[test]
    fn triangle_clique_weights() {
        let g = clique_graph(&fixtures::triangle(-1.0)).unwrap();
        let expected = DMatrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.5 });
        assert_eq!(g.to_dense(), expected);
        let p = clique_walk_matrix(&g, IsolatedPolicy::Reject).unwrap().to_dense();
        assert_eq!(p[(0, 0)], 0.5);
        assert_eq!(p[(0, 1)], 0.25);
    }

    #[test]
    fn r5_condition2_with_k2() {
        let h = fixtures::r5();
        let r = check_equivalence_conditions(&h, DEFAULT_TOL);
        assert!(!r.condition1);
        assert!(r.condition2.holds);
        assert!((r.condition2.k - 2.0).abs() < 1e-15);
        let g = clique_graph(&h).unwrap();
        let pc = clique_walk_matrix(&g, IsolatedPolicy::Reject).unwrap().to_dense();
        let ph = transition_matrix(&h).unwrap().to_dense();
        assert!((pc - ph).abs().max() < 1e-12);
    }

    #[test]
    fn edge_dependent_second_step_breaks_equivalence() {
        // Q1 = H, Q2 edge-dependent and not proportional to Q1
        let mut b = Hypergraph::builder(crate::RhoSpec::default());
        b.add_incidence("a", "e1", 1.0, 1.0).unwrap();
        b.add_incidence("b", "e1", 1.0, 2.0).unwrap();
        b.add_incidence("c", "e1", 1.0, 1.0).unwrap();
        b.add_incidence("b", "e2", 1.0, 1.0).unwrap();
        b.add_incidence("c", "e2", 1.0, 3.0).unwrap();
        b.add_incidence("d", "e2", 1.0, 1.0).unwrap();
        let h = b.build().unwrap();
        let r = check_equivalence_conditions(&h, DEFAULT_TOL);
        assert!(!r.condition1 && !r.condition2.holds && !r.general_equation_holds);
        assert!(r.violating_pair.is_some());
        assert!(matches!(clique_graph(&h), Err(HgxError::ConditionNotMet(_))));
    }

    #[test]
    fn general_equation_beyond_the_two_conditions() {
        // Q1(u,e) = s(u) Q2(u,e) with a per-vertex scale s: T1 = s T2 and
        // F(u,v) = s(u) K(u,v), so both sides equal s(u) s(v) T2(u) T2(v) K(u,v).
        let scale = [("a", 1.0), ("b", 2.0), ("c", 0.5), ("d", 3.0)];
        let inc = [("a", "e1", 1.0), ("b", "e1", 2.0), ("c", "e1", 1.5), ("b", "e2", 0.7), ("c", "e2", 1.2), ("d", "e2", 1.0)];
        let mut b = Hypergraph::builder(crate::RhoSpec::default());
        for (v, e, q2) in inc {
            let s = scale.iter().find(|(x, _)| *x == v).unwrap().1;
            b.add_incidence(v, e, s * q2, q2).unwrap();
        }
        let h = b.build().unwrap();
        let r = check_equivalence_conditions(&h, DEFAULT_TOL);
        assert!(!r.condition1 && !r.condition2.holds);
        assert!(r.general_equation_holds);
        let g = clique_graph(&h).unwrap();
        assert_eq!(g.construction, CliqueConstruction::General);
        let pc = clique_walk_matrix(&g, IsolatedPolicy::Reject).unwrap().to_dense();
        let ph = transition_matrix(&h).unwrap().to_dense();
        assert!((pc - ph).abs().max() < 1e-12);
    }

    #[test]
    fn disconnected_clique_walk_is_block_diagonal() {
        let g = clique_graph(&fixtures::two_disjoint_edges()).unwrap();
        let p = clique_walk_matrix(&g, IsolatedPolicy::Reject).unwrap().to_dense();
        for (u, v) in [(0, 2), (0, 3), (1, 2), (1, 3)] {
            assert_eq!(p[(u, v)], 0.0);
            assert_eq!(p[(v, u)], 0.0);
        }
        for u in 0..4 {
            assert!((p.row(u).sum() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn clique_weights_are_exactly_symmetric() {
        for seed in 0..10 {
            let h = fixtures::random_hypergraph(seed, &fixtures::RandomSpec::new(fixtures::RandomKind::General));
            assert_eq!(clique_weights(&h).max_asymmetry(), 0.0);
        }
    }
}
