//! File readers and writers used by the command-line front end: hypergraph
//! JSON, incidence/weight/label CSV tables, features aligned to a
//! hypergraph, and matrix JSON.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::edvw::FeatureTable;
use crate::error::{HgxError, Result};
use crate::hypergraph::{Hypergraph, HypergraphBuilder, RhoSpec};
use crate::models::Split;
use crate::sparse::CsrMatrix;

pub fn read_hypergraph(path: &Path) -> Result<Hypergraph> {
    Hypergraph::from_json(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Deserialize)]
struct IncidenceRow {
    vertex: String,
    edge: String,
    q1: f64,
    q2: f64,
}

#[derive(Debug, Deserialize)]
struct WeightRow {
    edge: String,
    w: f64,
}

/// Builds a hypergraph from an incidence CSV (`vertex,edge,q1,q2`) and an
/// optional edge-weight CSV (`edge,w`). Without `default_weight`, every edge
/// needs a row in the weight table.
pub fn build_from_csv(
    incidence: &Path,
    weights: Option<&Path>,
    rho: RhoSpec,
    default_weight: bool,
) -> Result<Hypergraph> {
    let mut b = HypergraphBuilder::new(rho);
    if !default_weight {
        b = b.without_default_weight();
    }
    let mut reader = csv::Reader::from_path(incidence)?;
    for row in reader.deserialize() {
        let r: IncidenceRow = row?;
        b.add_incidence(&r.vertex, &r.edge, r.q1, r.q2)?;
    }
    if let Some(path) = weights {
        let mut reader = csv::Reader::from_path(path)?;
        let mut seen = HashSet::new();
        for row in reader.deserialize() {
            let r: WeightRow = row?;
            if !seen.insert(r.edge.clone()) {
                return Err(HgxError::DuplicateId(r.edge));
            }
            b.set_edge_weight(&r.edge, r.w);
        }
    }
    b.build()
}

/// Per-vertex labels and split membership.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelTable {
    /// Label of every vertex; unlabelled vertices get 0 and appear in no split.
    pub labels: Vec<usize>,
    pub split: Split,
}

#[derive(Debug, Deserialize)]
struct LabelRow {
    id: String,
    label: usize,
    #[serde(default)]
    split: String,
}

/// Reads `id,label,split` rows, where `split` is `train`, `val`, `test` or empty.
pub fn read_labels(path: &Path, h: &Hypergraph) -> Result<LabelTable> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut labels = vec![0; h.n_vertices()];
    let mut seen = vec![false; h.n_vertices()];
    let mut split = Split::default();
    for row in reader.deserialize() {
        let r: LabelRow = row?;
        let v = h.vertex_index(&r.id)?;
        if std::mem::replace(&mut seen[v], true) {
            return Err(HgxError::DuplicateId(r.id));
        }
        labels[v] = r.label;
        match r.split.as_str() {
            "train" => split.train.push(v),
            "val" => split.val.push(v),
            "test" => split.test.push(v),
            "" => {}
            other => return Err(HgxError::Parse(format!("unknown split {other:?} for {}", r.id))),
        }
    }
    for part in [&mut split.train, &mut split.val, &mut split.test] {
        part.sort_unstable();
    }
    Ok(LabelTable { labels, split })
}

/// Feature matrix with rows in the vertex order of `h`. CSV rows are matched
/// by id; binary files (which carry no ids) must list vertices in order.
pub fn features_for(table: &FeatureTable, h: &Hypergraph) -> Result<DMatrix<f64>> {
    let n = h.n_vertices();
    let positions: HashMap<&str, usize> = table.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let by_id = h.vertex_ids().iter().all(|id| positions.contains_key(id.as_str()));
    let rows: Vec<usize> = if by_id {
        h.vertex_ids().iter().map(|id| positions[id.as_str()]).collect()
    } else if table.len() == n && table.ids.iter().enumerate().all(|(i, id)| *id == i.to_string()) {
        (0..n).collect()
    } else {
        let missing = h
            .vertex_ids()
            .iter()
            .find(|id| !positions.contains_key(id.as_str()))
            .cloned()
            .unwrap_or_default();
        return Err(HgxError::UnknownVertex(format!("{missing} has no feature row")));
    };
    Ok(DMatrix::from_fn(n, table.dim(), |i, j| table.rows[rows[i]][j]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatrixFormat {
    #[default]
    Dense,
    Coo,
}

#[derive(Serialize)]
struct DenseMatrixJson<'a> {
    vertices: &'a [String],
    format: &'static str,
    data: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct CooMatrixJson<'a> {
    vertices: &'a [String],
    format: &'static str,
    nrows: usize,
    ncols: usize,
    /// `[row, col, value]` triples in row-major order.
    entries: Vec<(usize, usize, f64)>,
}

/// Serializes a vertex-indexed square matrix as JSON.
pub fn matrix_json(vertices: &[String], m: &CsrMatrix, format: MatrixFormat) -> Result<String> {
    Ok(match format {
        MatrixFormat::Dense => {
            let d = m.to_dense();
            let data = (0..d.nrows()).map(|i| d.row(i).iter().copied().collect()).collect();
            serde_json::to_string(&DenseMatrixJson {
                vertices,
                format: "dense",
                data,
            })?
        }
        MatrixFormat::Coo => serde_json::to_string(&CooMatrixJson {
            vertices,
            format: "coo",
            nrows: m.nrows(),
            ncols: m.ncols(),
            entries: m.triplets().collect(),
        })?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn temp(name: &str, body: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("hgx-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn incidence_csv_builds_t1() {
        let inc = temp("t1.csv", "vertex,edge,q1,q2\na,e,1,1\nb,e,1,1\n");
        let h = build_from_csv(&inc, None, RhoSpec::default(), true).unwrap();
        assert_eq!(h, fixtures::t1());
        assert!(build_from_csv(&inc, None, RhoSpec::default(), false).is_err());
        let w = temp("w.csv", "edge,w\ne,1.0\n");
        assert_eq!(build_from_csv(&inc, Some(&w), RhoSpec::default(), false).unwrap(), fixtures::t1());
    }

    #[test]
    fn labels_and_splits() {
        let h = fixtures::triangle(-1.0);
        let p = temp("labels.csv", "id,label,split\nc,1,test\na,0,train\nb,1,\n");
        let t = read_labels(&p, &h).unwrap();
        assert_eq!(t.labels, vec![0, 1, 1]);
        assert_eq!((t.split.train.clone(), t.split.val.clone(), t.split.test.clone()), (vec![0], vec![], vec![2]));
        let bad = temp("bad.csv", "id,label,split\na,0,holdout\n");
        assert!(matches!(read_labels(&bad, &h), Err(HgxError::Parse(_))));
    }

    #[test]
    fn features_align_by_id_or_position() {
        let h = fixtures::t1();
        let t = FeatureTable::new(vec!["b".into(), "a".into()], vec![vec![2.0], vec![1.0]]).unwrap();
        assert_eq!(features_for(&t, &h).unwrap(), DMatrix::from_row_slice(2, 1, &[1.0, 2.0]));
        let pos = FeatureTable::new(vec!["0".into(), "1".into()], vec![vec![5.0], vec![6.0]]).unwrap();
        assert_eq!(features_for(&pos, &h).unwrap(), DMatrix::from_row_slice(2, 1, &[5.0, 6.0]));
        let short = FeatureTable::new(vec!["a".into()], vec![vec![5.0]]).unwrap();
        assert!(features_for(&short, &h).is_err());
    }

    #[test]
    fn matrix_formats() {
        let m = CsrMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0]));
        let ids = vec!["a".to_string(), "b".to_string()];
        assert_eq!(
            matrix_json(&ids, &m, MatrixFormat::Dense).unwrap(),
            r#"{"vertices":["a","b"],"format":"dense","data":[[0.5,0.0],[0.0,1.0]]}"#
        );
        assert_eq!(
            matrix_json(&ids, &m, MatrixFormat::Coo).unwrap(),
            r#"{"vertices":["a","b"],"format":"coo","nrows":2,"ncols":2,"entries":[[0,0,0.5],[1,1,1.0]]}"#
        );
    }
}
