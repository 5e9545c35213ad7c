//! Builders for hypergraphs with edge-dependent vertex weights: k-nearest
//! neighbour hyperedges with Gaussian-kernel weights, protein hypergraphs from
//! residue sequences and coordinates, and multi-modality concatenation.

use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{HgxError, Result};
use crate::hypergraph::{Hypergraph, RhoSpec};

/// Object features, one row per object.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub modality: Option<String>,
}

const BINARY_MAGIC: &[u8; 4] = b"HGXF";

impl FeatureTable {
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(HgxError::Dimension(format!("{} ids for {} rows", ids.len(), rows.len())));
        }
        if let Some(first) = rows.first() {
            let dim = first.len();
            for (i, r) in rows.iter().enumerate() {
                if r.len() != dim {
                    return Err(HgxError::Dimension(format!(
                        "row {} has {} features, expected {dim}",
                        ids[i],
                        r.len()
                    )));
                }
                if r.iter().any(|x| !x.is_finite()) {
                    return Err(HgxError::InvalidArgument(format!("row {} is not finite", ids[i])));
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        for id in &ids {
            if !seen.insert(id) {
                return Err(HgxError::DuplicateId(id.clone()));
            }
        }
        Ok(Self {
            ids,
            rows,
            modality: None,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// CSV with a header row; the first column is the id, the rest are features.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let mut it = rec.iter();
            let id = it
                .next()
                .ok_or_else(|| HgxError::Parse("empty feature record".into()))?;
            ids.push(id.trim().to_string());
            rows.push(
                it.map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| HgxError::Parse(format!("bad feature value {s:?} for {id}")))
                })
                .collect::<Result<Vec<f64>>>()?,
            );
        }
        Self::new(ids, rows)
    }

    pub fn read_csv_file(path: &Path) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    /// Raw binary layout: `HGXF`, row count and dimension as little-endian
    /// `u32`, then row-major little-endian `f64` values. Ids are row numbers.
    pub fn from_binary<R: Read>(mut reader: R) -> Result<Self> {
        let mut header = [0u8; 12];
        reader
            .read_exact(&mut header)
            .map_err(|_| HgxError::Parse("truncated feature header".into()))?;
        if &header[..4] != BINARY_MAGIC {
            return Err(HgxError::Parse("missing HGXF magic".into()));
        }
        let rows = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let dim = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let mut buf = vec![0u8; rows * dim * 8];
        reader
            .read_exact(&mut buf)
            .map_err(|_| HgxError::Parse("truncated feature payload".into()))?;
        let values: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let data = if dim == 0 {
            vec![Vec::new(); rows]
        } else {
            values.chunks(dim).map(<[f64]>::to_vec).collect()
        };
        Self::new((0..rows).map(|i| i.to_string()).collect(), data)
    }

    pub fn write_binary<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(BINARY_MAGIC)?;
        writer.write_all(&(self.len() as u32).to_le_bytes())?;
        writer.write_all(&(self.dim() as u32).to_le_bytes())?;
        for r in &self.rows {
            for x in r {
                writer.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Reads binary files (detected by magic) or CSV.
    pub fn read_file(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(BINARY_MAGIC) {
            Self::from_binary(bytes.as_slice())
        } else {
            Self::from_csv(bytes.as_slice())
        }
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnnMetadata {
    pub k: usize,
    pub gamma: f64,
    /// Mean distance over all unordered object pairs.
    pub mean_distance: f64,
    /// Set when every distance is zero and all weights were set to one.
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct KnnHypergraph {
    pub hypergraph: Hypergraph,
    pub metadata: KnnMetadata,
}

/// One hyperedge per object containing the object and its `k` nearest
/// neighbours, weighted by `exp(-d(v, c) / (gamma * dbar^2))` where `dbar` is
/// the mean pairwise distance. Ties are broken by row order; `Q1 = Q2`.
pub fn knn_gaussian_hypergraph(features: &FeatureTable, k: usize, gamma: f64) -> Result<KnnHypergraph> {
    let n = features.len();
    if k < 1 {
        return Err(HgxError::InvalidArgument("k must be at least 1".into()));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(HgxError::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    if n < k + 1 {
        return Err(HgxError::InvalidArgument(format!(
            "{n} objects cannot form {}-member hyperedges",
            k + 1
        )));
    }
    let mut dist = vec![vec![0.0; n]; n];
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclidean(&features.rows[i], &features.rows[j]);
            dist[i][j] = d;
            dist[j][i] = d;
            total += d;
        }
    }
    let mean_distance = if n > 1 {
        total / (n * (n - 1) / 2) as f64
    } else {
        0.0
    };
    let degenerate = mean_distance == 0.0;
    let scale = gamma * mean_distance * mean_distance;

    let mut b = Hypergraph::builder(RhoSpec::default());
    for id in &features.ids {
        b.add_vertex(id);
    }
    for c in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != c).collect();
        others.sort_by(|&a, &b| dist[c][a].total_cmp(&dist[c][b]).then(a.cmp(&b)));
        let edge = format!("knn:{}", features.ids[c]);
        b.add_edge(&edge, Some(1.0));
        b.add_incidence(&features.ids[c], &edge, 1.0, 1.0)?;
        for &j in &others[..k] {
            let q = if degenerate {
                1.0
            } else {
                (-dist[c][j] / scale).exp()
            };
            // underflow would turn a member into a non-member
            let q = q.max(f64::MIN_POSITIVE);
            b.add_incidence(&features.ids[j], &edge, q, q)?;
        }
    }
    Ok(KnnHypergraph {
        hypergraph: b.build()?,
        metadata: KnnMetadata {
            k,
            gamma,
            mean_distance,
            degenerate,
        },
    })
}

/// Disjoint union of hyperedges over a shared vertex list. With two or more
/// inputs, edge ids are prefixed `m{i}/`.
pub fn concat_modalities(hs: &[Hypergraph]) -> Result<Hypergraph> {
    let first = hs
        .first()
        .ok_or_else(|| HgxError::InvalidArgument("no hypergraphs to concatenate".into()))?;
    if hs.len() == 1 {
        return Ok(first.clone());
    }
    let mut b = Hypergraph::builder(first.rho().clone());
    for v in first.vertex_ids() {
        b.add_vertex(v);
    }
    for (i, h) in hs.iter().enumerate() {
        if h.vertex_ids() != first.vertex_ids() {
            return Err(HgxError::InvalidArgument(format!(
                "modality {i} has a different vertex list"
            )));
        }
        if h.rho() != first.rho() {
            return Err(HgxError::InvalidArgument(format!("modality {i} uses a different rho")));
        }
        for e in 0..h.n_edges() {
            let id = format!("m{i}/{}", h.edge_ids()[e]);
            b.add_edge(&id, Some(h.weight(e)));
            for m in h.members(e) {
                b.add_incidence(&h.vertex_ids()[m.vertex], &id, m.q1, m.q2)?;
            }
        }
    }
    b.build()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residue {
    pub index: i64,
    pub aa: String,
    pub coord: [f64; 3],
    pub features: Vec<f64>,
}

/// Residues in chain order with coordinates in Angstrom.
#[derive(Debug, Clone, PartialEq)]
pub struct ProteinChain {
    pub residues: Vec<Residue>,
}

impl ProteinChain {
    pub fn new(residues: Vec<Residue>) -> Result<Self> {
        for w in residues.windows(2) {
            if w[1].index <= w[0].index {
                return Err(HgxError::InvalidArgument(format!(
                    "residue indices must increase ({} after {})",
                    w[1].index, w[0].index
                )));
            }
        }
        if let Some(r) = residues.iter().find(|r| r.coord.iter().any(|x| !x.is_finite())) {
            return Err(HgxError::InvalidArgument(format!(
                "residue {} has non-finite coordinates",
                r.index
            )));
        }
        Ok(Self { residues })
    }

    /// CSV with header `index,aa,x,y,z` and optional trailing feature columns.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let mut residues = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() < 5 {
                return Err(HgxError::Parse(format!("residue record has {} fields", rec.len())));
            }
            let num = |i: usize| -> Result<f64> {
                rec[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| HgxError::Parse(format!("bad number {:?}", &rec[i])))
            };
            let index = rec[0]
                .trim()
                .parse::<i64>()
                .map_err(|_| HgxError::Parse(format!("bad residue index {:?}", &rec[0])))?;
            let coord = [num(2)?, num(3)?, num(4)?];
            let features = (5..rec.len()).map(num).collect::<Result<Vec<f64>>>()?;
            residues.push(Residue {
                index,
                aa: rec[1].trim().to_string(),
                coord,
                features,
            });
        }
        Self::new(residues)
    }

    pub fn read_csv_file(path: &Path) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    pub fn vertex_id(&self, i: usize) -> String {
        format!("r{}", self.residues[i].index)
    }
}

pub const DEFAULT_TAU: usize = 6;
pub const DEFAULT_EPSILON: f64 = 8.0;

/// Sequence hyperedges over every window of `tau` consecutive residues
/// (unit weights) plus one spatial hyperedge per residue holding every residue
/// closer than `epsilon`, weighted by `exp(-d(v, c) / (gamma * dbar_c^2))`
/// with `dbar_c` the mean distance from the centroid to the other members.
/// Spatial edges with no member besides the centroid are dropped.
pub fn protein_hypergraph(chain: &ProteinChain, tau: usize, epsilon: f64, gamma: f64) -> Result<Hypergraph> {
    let n = chain.residues.len();
    if tau == 0 || n < tau {
        return Err(HgxError::InvalidArgument(format!(
            "chain of {n} residues is shorter than tau = {tau}"
        )));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(HgxError::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(HgxError::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    let ids: Vec<String> = (0..n).map(|i| chain.vertex_id(i)).collect();
    let mut b = Hypergraph::builder(RhoSpec::default());
    for id in &ids {
        b.add_vertex(id);
    }
    for start in 0..=(n - tau) {
        let edge = format!("seq{start}");
        b.add_edge(&edge, Some(1.0));
        for id in &ids[start..start + tau] {
            b.add_incidence(id, &edge, 1.0, 1.0)?;
        }
    }
    for c in 0..n {
        let near: Vec<(usize, f64)> = (0..n)
            .filter(|&j| j != c)
            .map(|j| (j, euclidean(&chain.residues[c].coord, &chain.residues[j].coord)))
            .filter(|&(_, d)| d < epsilon)
            .collect();
        if near.is_empty() {
            continue;
        }
        let mean = near.iter().map(|&(_, d)| d).sum::<f64>() / near.len() as f64;
        let scale = gamma * mean * mean;
        let edge = format!("sp{c}");
        b.add_edge(&edge, Some(1.0));
        b.add_incidence(&ids[c], &edge, 1.0, 1.0)?;
        for (j, d) in near {
            let q = if scale > 0.0 { (-d / scale).exp() } else { 1.0 };
            let q = q.max(f64::MIN_POSITIVE);
            b.add_incidence(&ids[j], &edge, q, q)?;
        }
    }
    b.build()
}
