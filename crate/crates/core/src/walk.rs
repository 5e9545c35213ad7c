//! Lazy and non-lazy unified random walks, stationary distributions,
//! reversibility checks and a brute-force two-step oracle.
//!
//! The lazy walk first picks an incident hyperedge `e` of the current vertex
//! `u` with probability proportional to `w(e) delta(e) rho(delta(e)) Q1(u,e)`
//! and then a member `v` of `e` with probability `Q2(v,e) / delta(e)`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::equiv;
use crate::error::{HgxError, Result};
use crate::hypergraph::{residual_mass, Hypergraph};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkKind {
    Lazy,
    NonLazy,
    CliqueWalk,
}

/// Row-stochastic transition matrix. Rows of isolated vertices are zero and
/// listed in `isolated`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub matrix: CsrMatrix,
    pub kind: WalkKind,
    pub isolated: Vec<usize>,
}

/// How to treat vertices without incident edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IsolatedPolicy {
    #[default]
    Reject,
    ZeroRow,
}

const ROW_SUM_TOL: f64 = 1e-12;

impl TransitionMatrix {
    /// Wraps a dense matrix, checking that every row is stochastic or zero.
    pub fn from_dense(kind: WalkKind, m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(HgxError::Dimension(format!(
                "transition matrix is {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let matrix = CsrMatrix::from_dense(m);
        let mut isolated = Vec::new();
        for r in 0..matrix.nrows() {
            if matrix.row(r).any(|(_, v)| v < 0.0) {
                return Err(HgxError::InvalidArgument(format!("row {r} has negative entries")));
            }
            let s = matrix.row_sum(r);
            if s == 0.0 {
                isolated.push(r);
            } else if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(HgxError::InvalidArgument(format!("row {r} sums to {s}")));
            }
        }
        Ok(Self {
            matrix,
            kind,
            isolated,
        })
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.matrix.get(u, v)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.matrix.to_dense()
    }
}

fn isolated_error(h: &Hypergraph, v: usize) -> HgxError {
    HgxError::IsolatedVertex(h.vertex_ids()[v].clone())
}

/// Lazy unified walk `P = D_v^-1 Q1 W rho(D_e) Q2^T`; rejects isolated vertices.
pub fn transition_matrix(h: &Hypergraph) -> Result<TransitionMatrix> {
    transition_matrix_with(h, IsolatedPolicy::Reject)
}

pub fn transition_matrix_with(h: &Hypergraph, policy: IsolatedPolicy) -> Result<TransitionMatrix> {
    let profile = h.degree_profile()?;
    let mut triplets = Vec::new();
    let mut isolated = Vec::new();
    for u in 0..h.n_vertices() {
        let du = profile.d[u];
        if du <= 0.0 {
            if policy == IsolatedPolicy::Reject {
                return Err(isolated_error(h, u));
            }
            isolated.push(u);
            continue;
        }
        for (e, mu) in h.incident(u) {
            let coef = h.weight(e) * h.rho_delta(e) * mu.q1 / du;
            for m in h.members(e) {
                triplets.push((u, m.vertex, coef * m.q2));
            }
        }
    }
    Ok(TransitionMatrix {
        matrix: CsrMatrix::from_triplets(h.n_vertices(), h.n_vertices(), triplets),
        kind: WalkKind::Lazy,
        isolated,
    })
}

/// Non-lazy walk: the second step excludes the current vertex, and the edge
/// choice is shaped by `rho(delta(e) - Q2(u,e))`.
pub fn transition_matrix_nonlazy(h: &Hypergraph) -> Result<TransitionMatrix> {
    transition_matrix_nonlazy_with(h, IsolatedPolicy::Reject)
}

pub fn transition_matrix_nonlazy_with(
    h: &Hypergraph,
    policy: IsolatedPolicy,
) -> Result<TransitionMatrix> {
    let mut memo: HashMap<u64, f64> = HashMap::new();
    let mut triplets = Vec::new();
    let mut isolated = Vec::new();
    for u in 0..h.n_vertices() {
        if h.is_isolated(u) {
            if policy == IsolatedPolicy::Reject {
                return Err(isolated_error(h, u));
            }
            isolated.push(u);
            continue;
        }
        let mut row = Vec::new();
        let mut d_nl = 0.0;
        for (e, mu) in h.incident(u) {
            let rest = residual_mass(h, e, mu).ok_or_else(|| HgxError::DegenerateEdge {
                edge: h.edge_ids()[e].clone(),
                vertex: h.vertex_ids()[u].clone(),
            })?;
            let r = match memo.get(&rest.to_bits()) {
                Some(&r) => r,
                None => {
                    let r = h.rho().eval(rest)?;
                    memo.insert(rest.to_bits(), r);
                    r
                }
            };
            let coef = h.weight(e) * r * mu.q1;
            d_nl += coef * rest;
            for m in h.members(e) {
                if m.vertex != u {
                    row.push((u, m.vertex, coef * m.q2));
                }
            }
        }
        triplets.extend(row.into_iter().map(|(a, b, v)| (a, b, v / d_nl)));
    }
    Ok(TransitionMatrix {
        matrix: CsrMatrix::from_triplets(h.n_vertices(), h.n_vertices(), triplets),
        kind: WalkKind::NonLazy,
        isolated,
    })
}

/// Probability of moving from `u` to `v` in one lazy step, computed as the
/// sum over hyperedges of edge-choice times vertex-choice probabilities from
/// dense incidence matrices, independently of [`transition_matrix`].
pub fn two_step_oracle(h: &Hypergraph, u: usize, v: usize) -> Result<f64> {
    let q1 = h.q1_dense()?;
    let q2 = h.q2_dense()?;
    oracle_entry(h, &q1, &q2, u, v)
}

fn oracle_entry(h: &Hypergraph, q1: &DMatrix<f64>, q2: &DMatrix<f64>, u: usize, v: usize) -> Result<f64> {
    let n_edges = q1.ncols();
    let mut mass = Vec::with_capacity(n_edges);
    let mut deltas = Vec::with_capacity(n_edges);
    for e in 0..n_edges {
        let delta: f64 = q2.column(e).iter().sum();
        let r = h.rho().eval(delta)?;
        deltas.push(delta);
        mass.push(h.weight(e) * delta * r * q1[(u, e)]);
    }
    let total: f64 = mass.iter().sum();
    if total <= 0.0 {
        return Err(isolated_error(h, u));
    }
    Ok((0..n_edges)
        .map(|e| (mass[e] / total) * (q2[(v, e)] / deltas[e]))
        .sum())
}

/// The full oracle matrix.
pub fn oracle_matrix(h: &Hypergraph) -> Result<DMatrix<f64>> {
    let q1 = h.q1_dense()?;
    let q2 = h.q2_dense()?;
    let n = h.n_vertices();
    let mut m = DMatrix::zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            m[(u, v)] = oracle_entry(h, &q1, &q2, u, v)?;
        }
    }
    Ok(m)
}

/// Largest `|P(u,v) - oracle(u,v)|` over all pairs.
pub fn oracle_max_abs_diff(h: &Hypergraph) -> Result<f64> {
    let p = transition_matrix(h)?.to_dense();
    let o = oracle_matrix(h)?;
    Ok((p - o).abs().max())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StationaryMethod {
    ClosedForm,
    PowerIteration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDistribution {
    pub pi: Vec<f64>,
    pub method: StationaryMethod,
    /// `||pi P - pi||_1`
    pub residual: f64,
    /// Vertices without incident edges; they carry zero mass.
    pub isolated: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StationaryMode {
    /// Closed form when the equivalence conditions hold, power iteration otherwise.
    #[default]
    Auto,
    ClosedForm,
    PowerIteration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    pub tol: f64,
    pub max_iters: usize,
    /// Iterates averaged per block to cancel periodic oscillation.
    pub block: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iters: 100_000,
            block: 100,
        }
    }
}

/// `||x P - x||_1`
pub fn stationary_residual(p: &TransitionMatrix, x: &[f64]) -> f64 {
    let y = p.matrix.left_mul(x);
    y.iter().zip(x).map(|(a, b)| (a - b).abs()).sum()
}

fn normalize_l1(x: &mut [f64]) {
    let s: f64 = x.iter().sum();
    if s > 0.0 {
        for v in x.iter_mut() {
            *v /= s;
        }
    }
}

/// Left power iteration from the uniform distribution over non-isolated
/// vertices. Every `block` iterations the block average is also tested, which
/// resolves periodic chains.
pub fn power_iteration(p: &TransitionMatrix, opts: PowerOptions) -> Result<StationaryDistribution> {
    let n = p.n();
    let active = n - p.isolated.len();
    if active == 0 {
        return Err(HgxError::InvalidArgument("chain has no active states".into()));
    }
    let mut x = vec![1.0 / active as f64; n];
    for &v in &p.isolated {
        x[v] = 0.0;
    }
    let block = opts.block.max(1);
    let mut sum = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iters {
        let mut y = p.matrix.left_mul(&x);
        normalize_l1(&mut y);
        residual = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = y;
        if residual <= opts.tol {
            let residual = stationary_residual(p, &x);
            if residual <= opts.tol {
                return Ok(StationaryDistribution {
                    pi: x,
                    method: StationaryMethod::PowerIteration,
                    residual,
                    isolated: p.isolated.clone(),
                });
            }
        }
        for (s, v) in sum.iter_mut().zip(&x) {
            *s += v;
        }
        if it % block == 0 {
            let mut avg = std::mem::replace(&mut sum, vec![0.0; n]);
            normalize_l1(&mut avg);
            let r = stationary_residual(p, &avg);
            if r <= opts.tol {
                return Ok(StationaryDistribution {
                    pi: avg,
                    method: StationaryMethod::PowerIteration,
                    residual: r,
                    isolated: p.isolated.clone(),
                });
            }
        }
    }
    Err(HgxError::NotConverged {
        iterations: opts.max_iters,
        residual,
    })
}

/// `pi = d_hat / sum(d_hat)`; requires one of the equivalence conditions.
pub fn closed_form_stationary(h: &Hypergraph) -> Result<StationaryDistribution> {
    let report = equiv::check_equivalence_conditions(h, equiv::DEFAULT_TOL);
    if !(report.condition1 || report.condition2.holds) {
        return Err(HgxError::ConditionNotMet(
            "closed-form stationary distribution needs edge-independent weights or Q1 = k Q2".into(),
        ));
    }
    let d_hat = h.degree_profile()?.d_hat;
    let total: f64 = d_hat.iter().sum();
    let pi: Vec<f64> = d_hat.iter().map(|d| d / total).collect();
    let p = transition_matrix_with(h, IsolatedPolicy::ZeroRow)?;
    let residual = stationary_residual(&p, &pi);
    Ok(StationaryDistribution {
        pi,
        method: StationaryMethod::ClosedForm,
        residual,
        isolated: p.isolated,
    })
}

/// Stationary distribution of the lazy walk on `h`.
pub fn stationary_distribution(
    h: &Hypergraph,
    mode: StationaryMode,
    opts: PowerOptions,
) -> Result<StationaryDistribution> {
    let closed = match mode {
        StationaryMode::ClosedForm => true,
        StationaryMode::PowerIteration => false,
        StationaryMode::Auto => {
            let r = equiv::check_equivalence_conditions(h, equiv::DEFAULT_TOL);
            r.condition1 || r.condition2.holds
        }
    };
    if closed {
        return closed_form_stationary(h);
    }
    // isolated vertices are excluded rather than counted as components
    let (_, label) = crate::hypergraph::components(h);
    let active: std::collections::BTreeSet<usize> = (0..h.n_vertices())
        .filter(|&v| !h.is_isolated(v))
        .map(|v| label[v])
        .collect();
    if active.len() > 1 {
        return Err(HgxError::Disconnected);
    }
    let p = transition_matrix_with(h, IsolatedPolicy::ZeroRow)?;
    power_iteration(&p, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BalanceViolation {
    pub u: usize,
    pub v: usize,
    /// `pi(u) P(u,v)`
    pub forward: f64,
    /// `pi(v) P(v,u)`
    pub backward: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReversibilityReport {
    pub reversible: bool,
    /// Largest violation; the earliest pair wins ties.
    pub worst_violation: BalanceViolation,
    /// First pair in row-major order exceeding the tolerance.
    pub first_violation: Option<BalanceViolation>,
}

/// Default absolute tolerance on `pi(u) P(u,v) - pi(v) P(v,u)`.
pub const DEFAULT_BALANCE_TOL: f64 = 1e-9;

/// Detailed-balance check over all pairs `u < v` with absolute tolerance `tol`
/// (see [`DEFAULT_BALANCE_TOL`]).
pub fn is_reversible(p: &TransitionMatrix, pi: &[f64], tol: f64) -> Result<ReversibilityReport> {
    let n = p.n();
    if pi.len() != n {
        return Err(HgxError::Dimension(format!("pi has {} entries, P has {n} rows", pi.len())));
    }
    let residual = stationary_residual(p, pi);
    if residual > tol {
        return Err(HgxError::NotStationary(residual));
    }
    let mut worst = BalanceViolation {
        u: 0,
        v: 0,
        forward: 0.0,
        backward: 0.0,
        magnitude: 0.0,
    };
    let mut first = None;
    for u in 0..n {
        for v in (u + 1)..n {
            let forward = pi[u] * p.get(u, v);
            let backward = pi[v] * p.get(v, u);
            let magnitude = (forward - backward).abs();
            let candidate = BalanceViolation {
                u,
                v,
                forward,
                backward,
                magnitude,
            };
            if magnitude > worst.magnitude + 1e-15 {
                worst = candidate;
            }
            if first.is_none() && magnitude > tol {
                first = Some(candidate);
            }
        }
    }
    Ok(ReversibilityReport {
        reversible: first.is_none(),
        worst_violation: worst,
        first_violation: first,
    })
}

/// `p^(k) = e_source P^k`.
pub fn step_distribution(p: &TransitionMatrix, source: usize, k: usize) -> Result<Vec<f64>> {
    if source >= p.n() {
        return Err(HgxError::UnknownVertex(source.to_string()));
    }
    let mut x = vec![0.0; p.n()];
    x[source] = 1.0;
    for _ in 0..k {
        x = p.matrix.left_mul(&x);
    }
    Ok(x)
}

/// Every step distribution `p^(0), ..., p^(k)`.
pub fn step_distributions(p: &TransitionMatrix, source: usize, k: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![step_distribution(p, source, 0)?];
    for _ in 0..k {
        let next = p.matrix.left_mul(out.last().unwrap());
        out.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn assert_close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) {
        assert_eq!(a.shape(), b.shape());
        let diff = (a - b).abs().max();
        assert!(diff <= tol, "max diff {diff:e}\n{a}\n{b}");
    }

    #[test]
    fn t1_lazy_and_nonlazy() {
        let h = fixtures::t1();
        let p = transition_matrix(&h).unwrap();
        assert_eq!(p.to_dense(), DMatrix::from_element(2, 2, 0.5));
        let q = transition_matrix_nonlazy(&h).unwrap();
        assert_eq!(q.to_dense(), DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(two_step_oracle(&h, 0, 1).unwrap(), 0.5);
    }

    #[test]
    fn triangle_walk_is_rho_invariant() {
        let expected = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.5 } else { 0.25 });
        for sigma in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            let h = fixtures::triangle(sigma);
            assert_close(&transition_matrix(&h).unwrap().to_dense(), &expected, 1e-15);
            let q = transition_matrix_nonlazy(&h).unwrap().to_dense();
            let half = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 0.5 });
            assert_close(&q, &half, 1e-15);
            assert!((two_step_oracle(&h, 0, 0).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn r5_matches_oracle() {
        let h = fixtures::r5();
        assert!(oracle_max_abs_diff(&h).unwrap() < 1e-14);
        let o = oracle_matrix(&h).unwrap();
        for u in 0..5 {
            assert!((o.row(u).sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn isolated_vertices() {
        let mut b = fixtures::t1().to_builder();
        b.add_vertex("c");
        let h = b.build().unwrap();
        assert!(matches!(transition_matrix(&h), Err(HgxError::IsolatedVertex(_))));
        let p = transition_matrix_with(&h, IsolatedPolicy::ZeroRow).unwrap();
        assert_eq!(p.isolated, vec![2]);
        assert_eq!(p.matrix.row_sum(2), 0.0);
        let s = stationary_distribution(&h, StationaryMode::PowerIteration, PowerOptions::default()).unwrap();
        assert_eq!(s.pi[2], 0.0);
        assert!((s.pi[0] - 0.5).abs() < 1e-12);
        assert!(two_step_oracle(&h, 2, 0).is_err());
    }

    #[test]
    fn degenerate_nonlazy_edge() {
        let mut b = Hypergraph::builder(crate::RhoSpec::default());
        b.add_incidence("a", "single", 1.0, 1.0).unwrap();
        b.add_incidence("a", "pair", 1.0, 1.0).unwrap();
        b.add_incidence("b", "pair", 1.0, 1.0).unwrap();
        let h = b.build().unwrap();
        assert!(matches!(
            transition_matrix_nonlazy(&h),
            Err(HgxError::DegenerateEdge { .. })
        ));
    }

    #[test]
    fn stationary_t1_and_r5() {
        let t1 = fixtures::t1();
        let s = stationary_distribution(&t1, StationaryMode::ClosedForm, PowerOptions::default()).unwrap();
        assert_eq!(s.pi, vec![0.5, 0.5]);
        assert_eq!(s.method, StationaryMethod::ClosedForm);

        let r5 = fixtures::r5();
        let c = closed_form_stationary(&r5).unwrap();
        let p = stationary_distribution(&r5, StationaryMode::PowerIteration, PowerOptions::default()).unwrap();
        for (a, b) in c.pi.iter().zip(&p.pi) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(c.residual < 1e-12);
    }

    #[test]
    fn closed_form_refused_without_conditions() {
        let h = fixtures::random_hypergraph(3, &fixtures::RandomSpec::new(fixtures::RandomKind::General));
        assert!(matches!(
            closed_form_stationary(&h),
            Err(HgxError::ConditionNotMet(_))
        ));
    }

    #[test]
    fn cx4_is_irreversible() {
        let p = fixtures::cx4();
        let s = power_iteration(&p, PowerOptions::default()).unwrap();
        for (a, b) in s.pi.iter().zip(fixtures::CX4_STATIONARY) {
            assert!((a - b).abs() < 1e-10);
        }
        let r = is_reversible(&p, &s.pi, DEFAULT_BALANCE_TOL).unwrap();
        assert!(!r.reversible);
        let w = r.first_violation.unwrap();
        assert_eq!((w.u, w.v), (0, 1));
        assert!((w.forward - 1.0 / 17.0).abs() < 1e-10);
        assert!((w.backward - 7.0 / 102.0).abs() < 1e-10);
        assert_eq!((r.worst_violation.u, r.worst_violation.v), (0, 1));
    }

    #[test]
    fn cx4_step_distribution_mixes() {
        let p = fixtures::cx4();
        let x = step_distribution(&p, 0, 50).unwrap();
        for (a, b) in x.iter().zip(fixtures::CX4_STATIONARY) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(step_distribution(&p, 2, 0).unwrap(), vec![0.0, 0.0, 1.0, 0.0]);
        assert!(step_distribution(&p, 9, 1).is_err());
    }

    #[test]
    fn periodic_chain_uses_block_average() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let p = TransitionMatrix::from_dense(WalkKind::NonLazy, &m).unwrap();
        let s = power_iteration(&p, PowerOptions::default()).unwrap();
        assert_eq!(s.pi, vec![0.5, 0.5]);
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.5, 0.0, 0.5, 0.0, 1.0, 0.0]);
        let p = TransitionMatrix::from_dense(WalkKind::NonLazy, &m).unwrap();
        let s = power_iteration(&p, PowerOptions::default()).unwrap();
        assert!((s.pi[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reversible_t1_and_not_stationary() {
        let p = transition_matrix(&fixtures::t1()).unwrap();
        assert!(is_reversible(&p, &[0.5, 0.5], 1e-9).unwrap().reversible);
        assert!(matches!(
            is_reversible(&fixtures::cx4(), &[0.25; 4], 1e-9),
            Err(HgxError::NotStationary(_))
        ));
    }

    #[test]
    fn zhou_walk_reduction() {
        // rho = 1/x, Q = H: P(u,v) = sum_e w(e) h(u,e) h(v,e) / (d(u) delta(e))
        for seed in 0..10 {
            let mut spec = fixtures::RandomSpec::new(fixtures::RandomKind::Binary);
            spec.rho = Some(crate::RhoSpec::power(-1.0));
            let h = fixtures::random_hypergraph(seed, &spec);
            let hm = h.incidence_pattern().unwrap();
            let n = h.n_vertices();
            let d: Vec<f64> = (0..n)
                .map(|u| (0..h.n_edges()).map(|e| h.weight(e) * hm[(u, e)]).sum())
                .collect();
            let size: Vec<f64> = (0..h.n_edges()).map(|e| hm.column(e).sum()).collect();
            let zhou = DMatrix::from_fn(n, n, |u, v| {
                (0..h.n_edges())
                    .map(|e| h.weight(e) * hm[(u, e)] * hm[(v, e)] / (d[u] * size[e]))
                    .sum()
            });
            assert_close(&transition_matrix(&h).unwrap().to_dense(), &zhou, 1e-14);
        }
    }
}
