//! Generalized hypergraphs: a vertex set, weighted hyperedges and two
//! weighted incidence matrices `Q1` (first walk step) and `Q2` (second walk
//! step) sharing one sparsity pattern, plus the degree-shaping function `rho`.
//!
//! Storage is column-per-edge: each hyperedge keeps its member list with both
//! vertex weights. A per-vertex index of incident edges is derived on build.

use std::collections::{HashMap, HashSet, VecDeque};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{HgxError, Result};

/// Largest vertex count for which dense matrices are materialized.
pub const DENSE_LIMIT: usize = 5000;

/// Degree-shaping function applied to hyperedge degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhoSpec {
    /// `x^sigma`
    Power { sigma: f64 },
    /// `ln x`; only valid when every degree exceeds one.
    Log,
    /// `e^x`
    Exp,
    /// `e^-x`
    NegExp,
    /// `1 / (1 + e^-x)`
    Sigmoid,
    /// Standard normal density at `x`.
    GaussianPdf,
    /// Exact-key lookup of `(degree, value)` pairs; no interpolation.
    CustomTable { table: Vec<(f64, f64)> },
}

impl Default for RhoSpec {
    fn default() -> Self {
        RhoSpec::Power { sigma: -1.0 }
    }
}

impl RhoSpec {
    pub fn power(sigma: f64) -> Self {
        RhoSpec::Power { sigma }
    }

    /// Evaluates `rho(x)`, rejecting non-finite or non-positive results.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let value = match self {
            RhoSpec::Power { sigma } => x.powf(*sigma),
            RhoSpec::Log => x.ln(),
            RhoSpec::Exp => x.exp(),
            RhoSpec::NegExp => (-x).exp(),
            RhoSpec::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            RhoSpec::GaussianPdf => (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            RhoSpec::CustomTable { table } => {
                let tol = 1e-12 * x.abs().max(1.0);
                table
                    .iter()
                    .find(|(key, _)| (key - x).abs() <= tol)
                    .map(|&(_, v)| v)
                    .ok_or(HgxError::RhoTableMiss(x))?
            }
        };
        if value.is_finite() && value > 0.0 {
            Ok(value)
        } else {
            Err(HgxError::InvalidRho { x, value })
        }
    }
}

/// One member of a hyperedge with its first- and second-step weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Member {
    pub vertex: usize,
    pub q1: f64,
    pub q2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    vertex_ids: Vec<String>,
    edge_ids: Vec<String>,
    weights: Vec<f64>,
    members: Vec<Vec<Member>>,
    rho: RhoSpec,
    vertex_index: HashMap<String, usize>,
    edge_index: HashMap<String, usize>,
    /// Per vertex: `(edge, position within that edge's member list)`.
    incident: Vec<Vec<(usize, usize)>>,
    delta: Vec<f64>,
    rho_delta: Vec<f64>,
}

impl Hypergraph {
    pub fn builder(rho: RhoSpec) -> HypergraphBuilder {
        HypergraphBuilder::new(rho)
    }

    /// A builder pre-filled with this hypergraph's content.
    pub fn to_builder(&self) -> HypergraphBuilder {
        let mut b = HypergraphBuilder::new(self.rho.clone());
        for v in &self.vertex_ids {
            b.add_vertex(v);
        }
        for (e, id) in self.edge_ids.iter().enumerate() {
            b.add_edge(id, Some(self.weights[e]));
            for m in &self.members[e] {
                b.add_incidence(&self.vertex_ids[m.vertex], id, m.q1, m.q2)
                    .expect("existing hypergraph is valid");
            }
        }
        b
    }

    pub fn n_vertices(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edge_ids.len()
    }

    pub fn vertex_ids(&self) -> &[String] {
        &self.vertex_ids
    }

    pub fn edge_ids(&self) -> &[String] {
        &self.edge_ids
    }

    pub fn vertex_index(&self, id: &str) -> Result<usize> {
        self.vertex_index
            .get(id)
            .copied()
            .ok_or_else(|| HgxError::UnknownVertex(id.to_string()))
    }

    pub fn edge_index(&self, id: &str) -> Result<usize> {
        self.edge_index
            .get(id)
            .copied()
            .ok_or_else(|| HgxError::UnknownEdge(id.to_string()))
    }

    pub fn rho(&self) -> &RhoSpec {
        &self.rho
    }

    pub fn weight(&self, e: usize) -> f64 {
        self.weights[e]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn members(&self, e: usize) -> &[Member] {
        &self.members[e]
    }

    /// Incident `(edge, member)` pairs of vertex `v`.
    pub fn incident(&self, v: usize) -> impl Iterator<Item = (usize, &Member)> + '_ {
        self.incident[v]
            .iter()
            .map(move |&(e, pos)| (e, &self.members[e][pos]))
    }

    pub fn vertex_degree_count(&self, v: usize) -> usize {
        self.incident[v].len()
    }

    /// `delta(e)`: column sum of `Q2`.
    pub fn delta(&self, e: usize) -> f64 {
        self.delta[e]
    }

    /// `rho(delta(e))`, evaluated once per edge on build.
    pub fn rho_delta(&self, e: usize) -> f64 {
        self.rho_delta[e]
    }

    pub fn is_isolated(&self, v: usize) -> bool {
        self.incident[v].is_empty()
    }

    pub fn isolated_vertices(&self) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&v| self.is_isolated(v)).collect()
    }

    /// The same hypergraph with `Q1` replaced by `Q2`.
    pub fn with_q1_from_q2(&self) -> Hypergraph {
        let mut h = self.clone();
        for edge in &mut h.members {
            for m in edge.iter_mut() {
                m.q1 = m.q2;
            }
        }
        h
    }

    /// The same hypergraph with a different `rho`.
    pub fn with_rho(&self, rho: RhoSpec) -> Result<Hypergraph> {
        let mut b = self.to_builder();
        b.rho = rho;
        b.build()
    }

    fn dense_check(&self) -> Result<()> {
        if self.n_vertices() > DENSE_LIMIT {
            return Err(HgxError::TooLarge {
                n: self.n_vertices(),
                limit: DENSE_LIMIT,
            });
        }
        Ok(())
    }

    fn incidence_dense(&self, pick: impl Fn(&Member) -> f64) -> Result<DMatrix<f64>> {
        self.dense_check()?;
        let mut m = DMatrix::zeros(self.n_vertices(), self.n_edges());
        for (e, edge) in self.members.iter().enumerate() {
            for mem in edge {
                m[(mem.vertex, e)] = pick(mem);
            }
        }
        Ok(m)
    }

    pub fn q1_dense(&self) -> Result<DMatrix<f64>> {
        self.incidence_dense(|m| m.q1)
    }

    pub fn q2_dense(&self) -> Result<DMatrix<f64>> {
        self.incidence_dense(|m| m.q2)
    }

    /// Binary incidence matrix `H`.
    pub fn incidence_pattern(&self) -> Result<DMatrix<f64>> {
        self.incidence_dense(|_| 1.0)
    }

    pub fn degree_profile(&self) -> Result<DegreeProfile> {
        degree_profile(self)
    }

    pub fn validate(&self) -> StructureReport {
        validate(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&HypergraphDoc::from(self))?)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&HypergraphDoc::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Hypergraph> {
        let doc: HypergraphDoc = serde_json::from_str(s)?;
        doc.into_hypergraph()
    }
}

/// Incremental constructor; vertices and edges are indexed by first appearance.
#[derive(Debug, Clone)]
pub struct HypergraphBuilder {
    rho: RhoSpec,
    default_weight: Option<f64>,
    vertex_ids: Vec<String>,
    vertex_index: HashMap<String, usize>,
    edge_ids: Vec<String>,
    edge_index: HashMap<String, usize>,
    weights: Vec<Option<f64>>,
    members: Vec<Vec<Member>>,
    seen: HashSet<(usize, usize)>,
}

impl HypergraphBuilder {
    pub fn new(rho: RhoSpec) -> Self {
        Self {
            rho,
            default_weight: Some(1.0),
            vertex_ids: Vec::new(),
            vertex_index: HashMap::new(),
            edge_ids: Vec::new(),
            edge_index: HashMap::new(),
            weights: Vec::new(),
            members: Vec::new(),
            seen: HashSet::new(),
        }
    }

    /// Require every edge to carry an explicit weight.
    pub fn without_default_weight(mut self) -> Self {
        self.default_weight = None;
        self
    }

    pub fn add_vertex(&mut self, id: &str) -> usize {
        if let Some(&i) = self.vertex_index.get(id) {
            return i;
        }
        let i = self.vertex_ids.len();
        self.vertex_ids.push(id.to_string());
        self.vertex_index.insert(id.to_string(), i);
        i
    }

    pub fn add_edge(&mut self, id: &str, weight: Option<f64>) -> usize {
        if let Some(&e) = self.edge_index.get(id) {
            if weight.is_some() {
                self.weights[e] = weight;
            }
            return e;
        }
        let e = self.edge_ids.len();
        self.edge_ids.push(id.to_string());
        self.edge_index.insert(id.to_string(), e);
        self.weights.push(weight);
        self.members.push(Vec::new());
        e
    }

    pub fn set_edge_weight(&mut self, id: &str, weight: f64) {
        self.add_edge(id, Some(weight));
    }

    pub fn add_incidence(&mut self, vertex: &str, edge: &str, q1: f64, q2: f64) -> Result<()> {
        for (what, q) in [("q1", q1), ("q2", q2)] {
            if !(q.is_finite() && q > 0.0) {
                return Err(HgxError::NonPositive {
                    what,
                    at: format!("({vertex}, {edge})"),
                    value: q,
                });
            }
        }
        let v = self.add_vertex(vertex);
        let e = self.add_edge(edge, None);
        if !self.seen.insert((v, e)) {
            return Err(HgxError::DuplicateIncidence {
                vertex: vertex.to_string(),
                edge: edge.to_string(),
            });
        }
        self.members[e].push(Member { vertex: v, q1, q2 });
        Ok(())
    }

    pub fn build(self) -> Result<Hypergraph> {
        let n = self.vertex_ids.len();
        let mut weights = Vec::with_capacity(self.edge_ids.len());
        for (e, w) in self.weights.iter().enumerate() {
            let w = w
                .or(self.default_weight)
                .ok_or_else(|| HgxError::MissingEdgeWeight(self.edge_ids[e].clone()))?;
            if !(w.is_finite() && w > 0.0) {
                return Err(HgxError::NonPositive {
                    what: "edge weight",
                    at: self.edge_ids[e].clone(),
                    value: w,
                });
            }
            weights.push(w);
        }
        let mut incident = vec![Vec::new(); n];
        let mut delta = Vec::with_capacity(self.members.len());
        let mut rho_delta = Vec::with_capacity(self.members.len());
        let mut memo: HashMap<u64, f64> = HashMap::new();
        for (e, edge) in self.members.iter().enumerate() {
            if edge.is_empty() {
                return Err(HgxError::EmptyEdge(self.edge_ids[e].clone()));
            }
            for (pos, m) in edge.iter().enumerate() {
                incident[m.vertex].push((e, pos));
            }
            let d: f64 = edge.iter().map(|m| m.q2).sum();
            let r = match memo.get(&d.to_bits()) {
                Some(&r) => r,
                None => {
                    let r = self.rho.eval(d)?;
                    memo.insert(d.to_bits(), r);
                    r
                }
            };
            delta.push(d);
            rho_delta.push(r);
        }
        Ok(Hypergraph {
            vertex_ids: self.vertex_ids,
            edge_ids: self.edge_ids,
            weights,
            members: self.members,
            rho: self.rho,
            vertex_index: self.vertex_index,
            edge_index: self.edge_index,
            incident,
            delta,
            rho_delta,
        })
    }
}

/// Builds a hypergraph from `(vertex, edge, q1, q2)` records. Edges without an
/// entry in `edge_weights` get weight 1.
pub fn build_hypergraph(
    records: &[(String, String, f64, f64)],
    edge_weights: &HashMap<String, f64>,
    rho: RhoSpec,
) -> Result<Hypergraph> {
    let mut b = HypergraphBuilder::new(rho);
    for (v, e, q1, q2) in records {
        b.add_incidence(v, e, *q1, *q2)?;
    }
    for (e, &w) in edge_weights {
        if !b.edge_index.contains_key(e) {
            return Err(HgxError::UnknownEdge(e.clone()));
        }
        b.set_edge_weight(e, w);
    }
    b.build()
}

/// Per-edge and per-vertex degrees of a generalized hypergraph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeProfile {
    /// `delta(e) = sum_v Q2(v,e)`
    pub delta: Vec<f64>,
    /// Walk degree `d(v) = sum_e w(e) delta(e) rho(delta(e)) Q1(v,e)`.
    pub d: Vec<f64>,
    /// Laplacian degree `d_hat(v) = sum_e w(e) delta(e) rho(delta(e)) Q2(v,e)`.
    pub d_hat: Vec<f64>,
    /// Non-lazy degree `sum_e w(e) m rho(m) Q1(v,e)` with `m = delta(e) - Q2(v,e)`.
    /// Incidences with `m = 0` contribute nothing.
    pub d_nl: Vec<f64>,
}

/// Relative threshold below which `delta(e) - Q2(v,e)` counts as zero.
pub(crate) const RESIDUAL_MASS_TOL: f64 = 1e-12;

pub(crate) fn residual_mass(h: &Hypergraph, e: usize, m: &Member) -> Option<f64> {
    let rest = h.delta(e) - m.q2;
    (rest > RESIDUAL_MASS_TOL * h.delta(e)).then_some(rest)
}

pub fn degree_profile(h: &Hypergraph) -> Result<DegreeProfile> {
    let n = h.n_vertices();
    let mut d = vec![0.0; n];
    let mut d_hat = vec![0.0; n];
    let mut d_nl = vec![0.0; n];
    let mut memo: HashMap<u64, f64> = HashMap::new();
    for e in 0..h.n_edges() {
        let scale = h.weight(e) * h.delta(e) * h.rho_delta(e);
        for m in h.members(e) {
            d[m.vertex] += scale * m.q1;
            d_hat[m.vertex] += scale * m.q2;
            if let Some(rest) = residual_mass(h, e, m) {
                let r = match memo.get(&rest.to_bits()) {
                    Some(&r) => r,
                    None => {
                        let r = h.rho().eval(rest)?;
                        memo.insert(rest.to_bits(), r);
                        r
                    }
                };
                d_nl[m.vertex] += h.weight(e) * rest * r * m.q1;
            }
        }
    }
    Ok(DegreeProfile {
        delta: (0..h.n_edges()).map(|e| h.delta(e)).collect(),
        d,
        d_hat,
        d_nl,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub connected: bool,
    pub edge_independent_q1: bool,
    pub edge_independent_q2: bool,
    pub uniform_degree: bool,
    pub components: usize,
    pub isolated: Vec<String>,
}

/// Connected components of the unweighted clique graph, as a component label
/// per vertex.
pub fn components(h: &Hypergraph) -> (usize, Vec<usize>) {
    let n = h.n_vertices();
    let mut label = vec![usize::MAX; n];
    let mut edge_seen = vec![false; h.n_edges()];
    let mut count = 0;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = count;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for (e, _) in h.incident(u) {
                if std::mem::replace(&mut edge_seen[e], true) {
                    continue;
                }
                for m in h.members(e) {
                    if label[m.vertex] == usize::MAX {
                        label[m.vertex] = count;
                        queue.push_back(m.vertex);
                    }
                }
            }
        }
        count += 1;
    }
    (count, label)
}

fn edge_independent(h: &Hypergraph, pick: impl Fn(&Member) -> f64) -> bool {
    (0..h.n_vertices()).all(|v| {
        let mut it = h.incident(v).map(|(_, m)| pick(m));
        match it.next() {
            None => true,
            Some(first) => it.all(|q| (q - first).abs() <= 1e-9 * first.abs().max(q.abs())),
        }
    })
}

pub fn validate(h: &Hypergraph) -> StructureReport {
    let (count, _) = components(h);
    let uniform_degree = match h.delta.first() {
        None => true,
        Some(&first) => h
            .delta
            .iter()
            .all(|&d| (d - first).abs() <= 1e-12 * first.abs().max(1.0)),
    };
    StructureReport {
        connected: count <= 1,
        edge_independent_q1: edge_independent(h, |m| m.q1),
        edge_independent_q2: edge_independent(h, |m| m.q2),
        uniform_degree,
        components: count,
        isolated: h
            .isolated_vertices()
            .into_iter()
            .map(|v| h.vertex_ids[v].clone())
            .collect(),
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MemberDoc {
    v: String,
    q1: f64,
    q2: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    id: String,
    #[serde(default = "unit_weight")]
    w: f64,
    members: Vec<MemberDoc>,
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HypergraphDoc {
    #[serde(default)]
    rho: RhoSpec,
    vertices: Vec<String>,
    edges: Vec<EdgeDoc>,
}

impl From<&Hypergraph> for HypergraphDoc {
    fn from(h: &Hypergraph) -> Self {
        HypergraphDoc {
            rho: h.rho.clone(),
            vertices: h.vertex_ids.clone(),
            edges: (0..h.n_edges())
                .map(|e| EdgeDoc {
                    id: h.edge_ids[e].clone(),
                    w: h.weights[e],
                    members: h.members[e]
                        .iter()
                        .map(|m| MemberDoc {
                            v: h.vertex_ids[m.vertex].clone(),
                            q1: m.q1,
                            q2: m.q2,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl HypergraphDoc {
    fn into_hypergraph(self) -> Result<Hypergraph> {
        let mut b = HypergraphBuilder::new(self.rho);
        for v in &self.vertices {
            if b.vertex_index.contains_key(v) {
                return Err(HgxError::DuplicateId(v.clone()));
            }
            b.add_vertex(v);
        }
        for edge in self.edges {
            if b.edge_index.contains_key(&edge.id) {
                return Err(HgxError::DuplicateId(edge.id));
            }
            b.add_edge(&edge.id, Some(edge.w));
            for m in edge.members {
                if !b.vertex_index.contains_key(&m.v) {
                    return Err(HgxError::UnknownVertex(m.v));
                }
                b.add_incidence(&m.v, &edge.id, m.q1, m.q2)?;
            }
        }
        b.build()
    }
}
