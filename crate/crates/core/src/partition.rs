//! Normalized-cut objective on generalized hypergraphs:
//! `c(S) = vol(dS) (1/vol(S) + 1/vol(S^c))`, where vertex volumes are
//! stationary masses and a boundary edge contributes
//! `w(e) rho(delta(e)) m(e & S) m(e & S^c) / vol(V)` with `m` the `Q2` mass.

use serde::Serialize;

use crate::equiv::{check_equivalence_conditions, DEFAULT_TOL};
use crate::error::{HgxError, Result};
use crate::hypergraph::Hypergraph;
use crate::spectral::{self, unified_laplacian};
use crate::walk::{stationary_distribution, PowerOptions, StationaryMode};

/// Source of the vertex volumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeSource {
    /// `d_hat / vol(V)`; only valid when an equivalence condition holds.
    #[default]
    ClosedForm,
    /// Power-iteration stationary distribution. Accepted for any connected
    /// hypergraph, without the guarantees of the closed form.
    PowerIteration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutReport {
    pub subset: Vec<String>,
    pub vol_s: f64,
    pub vol_sc: f64,
    pub vol_boundary: f64,
    pub c: f64,
    pub boundary_edges: Vec<String>,
    pub volumes: VolumeSource,
}

/// Precomputed volumes shared by every cut of one hypergraph.
struct CutContext<'a> {
    h: &'a Hypergraph,
    mass: Vec<f64>,
    /// `vol(V) = sum of d_hat`
    total: f64,
    source: VolumeSource,
}

impl<'a> CutContext<'a> {
    fn new(h: &'a Hypergraph, source: VolumeSource) -> Result<Self> {
        let d_hat = h.degree_profile()?.d_hat;
        let total: f64 = d_hat.iter().sum();
        let mass = match source {
            VolumeSource::ClosedForm => {
                let r = check_equivalence_conditions(h, DEFAULT_TOL);
                if !(r.condition1 || r.condition2.holds) {
                    return Err(HgxError::ConditionNotMet(
                        "closed-form volumes need edge-independent weights or Q1 = k Q2; \
                         use power-iteration volumes instead"
                            .into(),
                    ));
                }
                d_hat.iter().map(|d| d / total).collect()
            }
            VolumeSource::PowerIteration => {
                stationary_distribution(h, StationaryMode::PowerIteration, PowerOptions::default())?.pi
            }
        };
        Ok(Self { h, mass, total, source })
    }

    fn evaluate(&self, in_s: &[bool]) -> Result<CutReport> {
        let h = self.h;
        let size = in_s.iter().filter(|&&b| b).count();
        if size == 0 || size == h.n_vertices() {
            return Err(HgxError::InvalidArgument(
                "cut subset must be non-empty and proper".into(),
            ));
        }
        let side_mass = |side: bool| -> f64 {
            (0..h.n_vertices())
                .filter(|&v| in_s[v] == side)
                .map(|v| self.mass[v])
                .sum()
        };
        let (vol_s, vol_sc) = (side_mass(true), side_mass(false));

        let mut boundary = 0.0;
        let mut boundary_edges = Vec::new();
        for e in 0..h.n_edges() {
            let (mut m_in, mut m_out) = (0.0, 0.0);
            for m in h.members(e) {
                if in_s[m.vertex] {
                    m_in += m.q2;
                } else {
                    m_out += m.q2;
                }
            }
            if m_in > 0.0 && m_out > 0.0 {
                boundary += h.weight(e) * h.rho_delta(e) * (m_in * m_out);
                boundary_edges.push(h.edge_ids()[e].clone());
            }
        }
        let vol_boundary = boundary / self.total;
        let c = if vol_boundary == 0.0 {
            0.0
        } else {
            vol_boundary * (1.0 / vol_s + 1.0 / vol_sc)
        };
        Ok(CutReport {
            subset: (0..h.n_vertices())
                .filter(|&v| in_s[v])
                .map(|v| h.vertex_ids()[v].clone())
                .collect(),
            vol_s,
            vol_sc,
            vol_boundary,
            c,
            boundary_edges,
            volumes: self.source,
        })
    }
}

fn membership(h: &Hypergraph, subset: &[usize]) -> Result<Vec<bool>> {
    let mut in_s = vec![false; h.n_vertices()];
    for &v in subset {
        if v >= h.n_vertices() {
            return Err(HgxError::InvalidArgument(format!("vertex index {v} out of range")));
        }
        in_s[v] = true;
    }
    Ok(in_s)
}

/// Cut objective of `subset` (vertex indices) with closed-form volumes.
pub fn cut_objective(h: &Hypergraph, subset: &[usize]) -> Result<CutReport> {
    cut_objective_with(h, subset, VolumeSource::ClosedForm)
}

pub fn cut_objective_with(h: &Hypergraph, subset: &[usize], source: VolumeSource) -> Result<CutReport> {
    let ctx = CutContext::new(h, source)?;
    ctx.evaluate(&membership(h, subset)?)
}

/// Cut objective of a subset given by vertex ids.
pub fn cut_objective_by_ids(h: &Hypergraph, ids: &[&str], source: VolumeSource) -> Result<CutReport> {
    let subset = ids
        .iter()
        .map(|id| h.vertex_index(id))
        .collect::<Result<Vec<_>>>()?;
    cut_objective_with(h, &subset, source)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    /// Vertex ids in sweep order.
    pub order: Vec<String>,
    /// `c` of every prefix cut; entry `i` is the cut of the first `i + 1`
    /// vertices.
    pub objectives: Vec<f64>,
    pub best: CutReport,
}

/// Heuristic bipartition: orders vertices by `D^-1/2 u2` (`u2` the eigenvector
/// of the second-smallest eigenvalue of the unified Laplacian) and returns the
/// prefix cut with the smallest objective. Not guaranteed optimal.
pub fn cut_sweep(h: &Hypergraph, source: VolumeSource) -> Result<SweepReport> {
    let n = h.n_vertices();
    if n < 2 {
        return Err(HgxError::InvalidArgument("a cut needs at least two vertices".into()));
    }
    let ctx = CutContext::new(h, source)?;
    let bundle = unified_laplacian(h)?;
    let spec = spectral::spectrum(&bundle.laplacian)?;
    let score: Vec<f64> = (0..n)
        .map(|v| {
            let d = bundle.d_hat[v];
            if d > 0.0 {
                spec.eigenvectors[(v, 1)] / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| score[a].total_cmp(&score[b]).then(a.cmp(&b)));

    let mut in_s = vec![false; n];
    let mut objectives = Vec::with_capacity(n - 1);
    let mut best: Option<CutReport> = None;
    for &v in &order[..n - 1] {
        in_s[v] = true;
        let report = ctx.evaluate(&in_s)?;
        objectives.push(report.c);
        if best.as_ref().is_none_or(|b| report.c < b.c) {
            best = Some(report);
        }
    }
    Ok(SweepReport {
        order: order.iter().map(|&v| h.vertex_ids()[v].clone()).collect(),
        objectives,
        best: best.expect("at least one prefix cut"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::hypergraph::RhoSpec;

    #[test]
    fn single_edge_cut() {
        let r = cut_objective(&fixtures::t1(), &[0]).unwrap();
        assert_eq!((r.vol_s, r.vol_sc, r.vol_boundary, r.c), (0.5, 0.5, 0.25, 1.0));
        assert_eq!(r.boundary_edges, vec!["e".to_string()]);
    }

    #[test]
    fn component_cut_is_free() {
        let h = fixtures::two_disjoint_edges();
        let r = cut_objective(&h, &[0, 1]).unwrap();
        assert_eq!(r.vol_boundary, 0.0);
        assert_eq!(r.c, 0.0);
        assert!(r.boundary_edges.is_empty());
    }

    #[test]
    fn complement_symmetry_and_bad_subsets() {
        let h = fixtures::triangle(-1.0);
        for s in [vec![0], vec![0, 1], vec![2], vec![1, 2]] {
            let comp: Vec<usize> = (0..3).filter(|v| !s.contains(v)).collect();
            let a = cut_objective(&h, &s).unwrap();
            let b = cut_objective(&h, &comp).unwrap();
            assert_eq!(a.c, b.c);
            assert!((a.vol_s + a.vol_sc - 1.0).abs() < 1e-12);
        }
        assert!(cut_objective(&h, &[]).is_err());
        assert!(cut_objective(&h, &[0, 1, 2]).is_err());
        assert!(cut_objective(&h, &[7]).is_err());
    }

    fn zhou_ncut(h: &Hypergraph, in_s: &[bool]) -> f64 {
        let mut deg = vec![0.0; h.n_vertices()];
        let mut boundary = 0.0;
        for e in 0..h.n_edges() {
            let members = h.members(e);
            for m in members {
                deg[m.vertex] += h.weight(e);
            }
            let inside = members.iter().filter(|m| in_s[m.vertex]).count() as f64;
            let outside = members.len() as f64 - inside;
            boundary += h.weight(e) * inside * outside / members.len() as f64;
        }
        let vol = |side: bool| -> f64 { (0..deg.len()).filter(|&v| in_s[v] == side).map(|v| deg[v]).sum() };
        boundary * (1.0 / vol(true) + 1.0 / vol(false))
    }

    #[test]
    fn reduces_to_zhou_ncut() {
        use rand::{Rng, SeedableRng};
        let spec = fixtures::RandomSpec {
            rho: Some(RhoSpec::power(-1.0)),
            ..fixtures::RandomSpec::new(fixtures::RandomKind::Binary)
        };
        for seed in 0..20 {
            let h = fixtures::random_hypergraph(seed, &spec);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = h.n_vertices();
            let mut in_s: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            in_s[0] = true;
            in_s[n - 1] = false;
            let subset: Vec<usize> = (0..n).filter(|&v| in_s[v]).collect();
            let ours = cut_objective(&h, &subset).unwrap().c;
            let zhou = zhou_ncut(&h, &in_s);
            assert!((ours - zhou).abs() <= 1e-12 * zhou.max(1.0), "seed {seed}: {ours} vs {zhou}");
        }
    }

    #[test]
    fn sweep_finds_the_free_cut() {
        let h = fixtures::two_disjoint_edges();
        let r = cut_sweep(&h, VolumeSource::ClosedForm).unwrap();
        assert_eq!(r.best.c, 0.0);
        assert_eq!(r.best.subset.len(), 2);
        assert_eq!(r.objectives.len(), 3);
    }

    #[test]
    fn closed_form_needs_conditions() {
        let spec = fixtures::RandomSpec::new(fixtures::RandomKind::General);
        let h = (0..)
            .map(|seed| fixtures::random_hypergraph(seed, &spec))
            .find(|h| {
                let r = check_equivalence_conditions(h, DEFAULT_TOL);
                !(r.condition1 || r.condition2.holds)
            })
            .unwrap();
        assert!(matches!(cut_objective(&h, &[0]), Err(HgxError::ConditionNotMet(_))));
        let r = cut_objective_with(&h, &[0], VolumeSource::PowerIteration).unwrap();
        assert!((r.vol_s + r.vol_sc - 1.0).abs() < 1e-12);
    }
}
