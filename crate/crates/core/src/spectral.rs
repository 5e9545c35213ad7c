//! The unified hypergraph Laplacian `L = I - D^-1/2 K D^-1/2` with
//! `K = Q2 W rho(D_e) Q2^T`, its renormalized propagation operator, spectra,
//! mixing-rate and over-smoothing diagnostics, and the symmetrized Laplacian
//! of an arbitrary (possibly irreversible) walk.
//!
//! Spectral analyses are dense and limited to [`DENSE_LIMIT`] vertices; the
//! sparse [`propagation_operator`] serves larger training inputs.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Serialize, Serializer};

use crate::equiv::{self, check_equivalence_conditions};
use crate::error::{HgxError, Result};
use crate::hypergraph::{components, Hypergraph, DENSE_LIMIT};
use crate::sparse::CsrMatrix;
use crate::walk::{self, TransitionMatrix};

/// Eigenvalues at or below this are treated as zero.
pub const ZERO_EIGENVALUE: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-9;

fn dense_check(n: usize) -> Result<()> {
    if n > DENSE_LIMIT {
        return Err(HgxError::TooLarge {
            n,
            limit: DENSE_LIMIT,
        });
    }
    Ok(())
}

/// `1/sqrt(x)`, or zero for zero degrees.
fn inv_sqrt(x: f64) -> f64 {
    if x > 0.0 {
        1.0 / x.sqrt()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianBundle {
    /// Clique weights `Q2 W rho(D_e) Q2^T`.
    pub k: DMatrix<f64>,
    pub laplacian: DMatrix<f64>,
    /// `D~^-1/2 (K + I) D~^-1/2`
    pub t_tilde: DMatrix<f64>,
    pub d_hat: Vec<f64>,
    /// Whether either equivalence condition holds; `L` is computed regardless.
    pub conditions_hold: bool,
}

pub fn clique_weight_matrix(h: &Hypergraph) -> Result<DMatrix<f64>> {
    dense_check(h.n_vertices())?;
    Ok(equiv::clique_weights(h).to_dense())
}

/// `I - D^-1/2 K D^-1/2` with degrees taken as row sums of `K`.
pub fn normalized_laplacian(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows();
    let s: Vec<f64> = (0..n).map(|i| inv_sqrt(k.row(i).sum())).collect();
    DMatrix::from_fn(n, n, |i, j| {
        let off = k[(i, j)] * (s[i] * s[j]);
        if i == j {
            1.0 - off
        } else {
            -off
        }
    })
}

/// `D^-1/2 K D^-1/2` with degrees taken as row sums of `K`.
pub fn normalized_adjacency(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows();
    let s: Vec<f64> = (0..n).map(|i| inv_sqrt(k.row(i).sum())).collect();
    DMatrix::from_fn(n, n, |i, j| k[(i, j)] * (s[i] * s[j]))
}

/// Renormalized operator of an arbitrary symmetric weight matrix.
pub fn renormalize(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows();
    normalized_adjacency(&(k + DMatrix::identity(n, n)))
}

pub fn unified_laplacian(h: &Hypergraph) -> Result<LaplacianBundle> {
    let k = clique_weight_matrix(h)?;
    let report = check_equivalence_conditions(h, equiv::DEFAULT_TOL);
    // row sums of K are exactly the Laplacian degrees d_hat
    let d_hat = h.degree_profile()?.d_hat;
    Ok(LaplacianBundle {
        laplacian: normalized_laplacian(&k),
        t_tilde: renormalize(&k),
        k,
        d_hat,
        conditions_hold: report.condition1 || report.condition2.holds,
    })
}

pub fn renormalized_operator(h: &Hypergraph) -> Result<DMatrix<f64>> {
    Ok(renormalize(&clique_weight_matrix(h)?))
}

/// `D^-1/2 K D^-1/2` without self-loop renormalization.
pub fn hgnn_operator(h: &Hypergraph) -> Result<DMatrix<f64>> {
    Ok(normalized_adjacency(&clique_weight_matrix(h)?))
}

/// Sparse propagation operator for large inputs: `D~^-1/2 (K + I) D~^-1/2`
/// when `renormalize` is set, `D^-1/2 K D^-1/2` otherwise.
pub fn propagation_operator(h: &Hypergraph, renormalize: bool) -> CsrMatrix {
    let n = h.n_vertices();
    let mut k = equiv::clique_weights(h);
    if renormalize {
        let mut t: Vec<_> = k.triplets().collect();
        t.extend((0..n).map(|v| (v, v, 1.0)));
        k = CsrMatrix::from_triplets(n, n, t);
    }
    let s: Vec<f64> = (0..n).map(|v| inv_sqrt(k.row_sum(v))).collect();
    CsrMatrix::from_triplets(
        n,
        n,
        k.triplets().map(|(u, v, x)| (u, v, x * (s[u] * s[v]))).collect(),
    )
}

/// `I - D_v^-1/2 H W D_e^-1 H^T D_v^-1/2` with `d(v) = sum_e w(e) h(v,e)`.
pub fn zhou_laplacian(h: &Hypergraph) -> Result<DMatrix<f64>> {
    dense_check(h.n_vertices())?;
    let hm = h.incidence_pattern()?;
    let w = DMatrix::from_diagonal(&DVector::from_column_slice(h.weights()));
    let de_inv = DMatrix::from_diagonal(&DVector::from_iterator(
        h.n_edges(),
        (0..h.n_edges()).map(|e| 1.0 / hm.column(e).sum()),
    ));
    let dv = &hm * &w * DVector::from_element(h.n_edges(), 1.0);
    let dv_is = DMatrix::from_diagonal(&dv.map(inv_sqrt));
    let n = h.n_vertices();
    Ok(DMatrix::identity(n, n) - &dv_is * &hm * w * de_inv * hm.transpose() * &dv_is)
}

/// `I - D_v^-1/2 H W D_e^sigma H^T D_v^-1/2` with
/// `d(v) = sum_e w(e) delta(e)^(sigma+1) h(v,e)`.
pub fn carletti_laplacian(h: &Hypergraph, sigma: f64) -> Result<DMatrix<f64>> {
    dense_check(h.n_vertices())?;
    let hm = h.incidence_pattern()?;
    let sizes: Vec<f64> = (0..h.n_edges()).map(|e| hm.column(e).sum()).collect();
    let w = DMatrix::from_diagonal(&DVector::from_column_slice(h.weights()));
    let de_sigma = DMatrix::from_diagonal(&DVector::from_iterator(
        h.n_edges(),
        sizes.iter().map(|s| s.powf(sigma)),
    ));
    let dv = DVector::from_iterator(
        h.n_vertices(),
        (0..h.n_vertices()).map(|v| {
            (0..h.n_edges())
                .map(|e| h.weight(e) * sizes[e].powf(sigma + 1.0) * hm[(v, e)])
                .sum::<f64>()
        }),
    );
    let dv_is = DMatrix::from_diagonal(&dv.map(inv_sqrt));
    let n = h.n_vertices();
    Ok(DMatrix::identity(n, n) - &dv_is * &hm * w * de_sigma * hm.transpose() * &dv_is)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub lambda_min: f64,
    /// Smallest eigenvalue above [`ZERO_EIGENVALUE`].
    pub lambda_h: Option<f64>,
    pub lambda_max: f64,
    /// Unit eigenvector of `lambda_min`, signed so its entries sum to a
    /// nonnegative value.
    pub u1: Vec<f64>,
    /// Eigenvectors as columns, ordered like `eigenvalues`.
    #[serde(skip)]
    pub eigenvectors: DMatrix<f64>,
}

/// Full symmetric eigendecomposition.
pub fn spectrum(m: &DMatrix<f64>) -> Result<SpectrumReport> {
    if m.nrows() != m.ncols() {
        return Err(HgxError::Dimension(format!("{}x{} matrix", m.nrows(), m.ncols())));
    }
    dense_check(m.nrows())?;
    let asym = (m - m.transpose()).abs().max();
    if asym > SYMMETRY_TOL {
        return Err(HgxError::Asymmetric(asym));
    }
    let n = m.nrows();
    if n == 0 {
        return Err(HgxError::Dimension("empty matrix".into()));
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(i).into_owned();
        if col.sum() < 0.0 {
            col = -col;
        }
        eigenvectors.set_column(c, &col);
    }
    Ok(SpectrumReport {
        lambda_min: eigenvalues[0],
        lambda_h: eigenvalues.iter().copied().find(|&l| l > ZERO_EIGENVALUE),
        lambda_max: eigenvalues[n - 1],
        u1: eigenvectors.column(0).iter().copied().collect(),
        eigenvalues,
        eigenvectors,
    })
}

/// `x^T M x / x^T x`.
pub fn rayleigh_quotient(m: &DMatrix<f64>, x: &[f64]) -> Result<f64> {
    if x.len() != m.ncols() || m.nrows() != m.ncols() {
        return Err(HgxError::Dimension(format!(
            "vector of length {} for {}x{} matrix",
            x.len(),
            m.nrows(),
            m.ncols()
        )));
    }
    let v = DVector::from_column_slice(x);
    let norm = v.dot(&v);
    if norm == 0.0 {
        return Err(HgxError::InvalidArgument("zero vector".into()));
    }
    Ok(v.dot(&(m * &v)) / norm)
}

/// Absolute cosine between two vectors.
pub fn abs_cosine(a: &[f64], b: &[f64]) -> f64 {
    let a = DVector::from_column_slice(a);
    let b = DVector::from_column_slice(b);
    (a.dot(&b) / (a.norm() * b.norm())).abs()
}

/// A possibly infinite energy value; serializes as a number or as
/// `{"infinite": true}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Energy {
    Finite(f64),
    Infinite,
}

impl Energy {
    fn reciprocal(numerator: f64, denominator: f64) -> Energy {
        if denominator == 0.0 {
            Energy::Infinite
        } else {
            Energy::Finite(numerator / denominator)
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Energy::Infinite)
    }

    pub fn value(&self) -> f64 {
        match self {
            Energy::Finite(v) => *v,
            Energy::Infinite => f64::INFINITY,
        }
    }

    /// `self >= other - slack`, treating infinity as larger than every finite value.
    pub fn at_least(&self, other: &Energy, slack: f64) -> bool {
        match (self, other) {
            (Energy::Infinite, _) => true,
            (Energy::Finite(_), Energy::Infinite) => false,
            (Energy::Finite(a), Energy::Finite(b)) => *a >= b - slack,
        }
    }
}

impl std::fmt::Display for Energy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Energy::Finite(v) => write!(f, "{v}"),
            Energy::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Serialize)]
struct InfiniteTag {
    infinite: bool,
}

impl Serialize for Energy {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Energy::Finite(v) => s.serialize_f64(*v),
            Energy::Infinite => InfiniteTag { infinite: true }.serialize(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffusionStep {
    pub k: usize,
    /// `||f P^k - pi||_1`
    pub l1_error: f64,
    /// `sum_j sqrt(d(j)/d(i)) (1 - lambda_H)^k`
    pub bound: f64,
    /// `N / l1_error`
    pub e: Energy,
    /// `N sqrt(d(i)) / ((1 - lambda_H)^k sum_j sqrt(d(j)))`
    pub e_low: Energy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffusionTrace {
    pub source: usize,
    pub lambda_h: f64,
    pub steps: Vec<DiffusionStep>,
    /// Whether `|p^(k)(j) - pi(j)| <= sqrt(d(j)/d(i)) (1 - lambda_H)^k + 1e-9`
    /// held for every recorded `k` and every `j`.
    pub bound_holds: bool,
    /// Largest `|p^(k)(j) - pi(j)| - sqrt(d(j)/d(i)) (1 - lambda_H)^k`.
    pub worst_margin: f64,
}

impl DiffusionTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,l1_error,bound,e,e_low\n");
        for s in &self.steps {
            out.push_str(&format!("{},{},{},{},{}\n", s.k, s.l1_error, s.bound, s.e, s.e_low));
        }
        out
    }
}

pub const BOUND_SLACK: f64 = 1e-9;

struct DiffusionSetup {
    p: TransitionMatrix,
    pi: Vec<f64>,
    d_hat: Vec<f64>,
    lambda_h: f64,
}

fn diffusion_setup(h: &Hypergraph, source: usize) -> Result<DiffusionSetup> {
    if source >= h.n_vertices() {
        return Err(HgxError::UnknownVertex(source.to_string()));
    }
    let (count, _) = components(h);
    if count != 1 {
        return Err(HgxError::Disconnected);
    }
    let bundle = unified_laplacian(h)?;
    if !bundle.conditions_hold {
        return Err(HgxError::ConditionNotMet(
            "mixing bound needs edge-independent weights or Q1 = k Q2".into(),
        ));
    }
    let spec = spectrum(&bundle.laplacian)?;
    let total: f64 = bundle.d_hat.iter().sum();
    Ok(DiffusionSetup {
        p: walk::transition_matrix(h)?,
        pi: bundle.d_hat.iter().map(|d| d / total).collect(),
        lambda_h: spec.lambda_h.unwrap_or(1.0),
        d_hat: bundle.d_hat,
    })
}

/// Diffuses a unit mass from `source` for `k_max` steps, recording the
/// distance to stationarity against the spectral mixing bound and the
/// over-smoothing energy with its lower bound.
pub fn convergence_bound_check(h: &Hypergraph, source: usize, k_max: usize) -> Result<DiffusionTrace> {
    let s = diffusion_setup(h, source)?;
    let n = h.n_vertices() as f64;
    let ratio: Vec<f64> = s.d_hat.iter().map(|d| (d / s.d_hat[source]).sqrt()).collect();
    let ratio_sum: f64 = ratio.iter().sum();
    let sqrt_sum: f64 = s.d_hat.iter().map(|d| d.sqrt()).sum();
    let rate = 1.0 - s.lambda_h;
    let mut worst_margin = f64::NEG_INFINITY;
    let mut steps = Vec::with_capacity(k_max + 1);
    for (k, p) in walk::step_distributions(&s.p, source, k_max)?.into_iter().enumerate() {
        let decay = rate.powi(k as i32);
        let mut l1 = 0.0;
        for j in 0..p.len() {
            let err = (p[j] - s.pi[j]).abs();
            l1 += err;
            worst_margin = worst_margin.max(err - ratio[j] * decay);
        }
        steps.push(DiffusionStep {
            k,
            l1_error: l1,
            bound: ratio_sum * decay,
            e: Energy::reciprocal(n, l1),
            e_low: Energy::reciprocal(n * s.d_hat[source].sqrt(), decay * sqrt_sum),
        });
    }
    Ok(DiffusionTrace {
        source,
        lambda_h: s.lambda_h,
        steps,
        bound_holds: worst_margin <= BOUND_SLACK,
        worst_margin,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyPoint {
    pub l1_error: f64,
    pub e: Energy,
    pub e_low: Energy,
}

/// Over-smoothing energy `e(i,t)` and its spectral lower bound.
pub fn oversmoothing_energy(h: &Hypergraph, source: usize, t: usize) -> Result<EnergyPoint> {
    let trace = convergence_bound_check(h, source, t)?;
    let last = trace.steps.last().expect("trace includes step 0");
    Ok(EnergyPoint {
        l1_error: last.l1_error,
        e: last.e,
        e_low: last.e_low,
    })
}

/// `I - (Phi^1/2 P Phi^-1/2 + Phi^-1/2 P^T Phi^1/2) / 2`, the symmetric
/// Laplacian of a walk with stationary distribution `pi`.
pub fn digraph_laplacian(p: &TransitionMatrix, pi: &[f64]) -> Result<DMatrix<f64>> {
    let n = p.n();
    dense_check(n)?;
    if pi.len() != n {
        return Err(HgxError::Dimension(format!("pi has {} entries, P has {n} rows", pi.len())));
    }
    if let Some(v) = pi.iter().position(|&x| x <= 0.0) {
        return Err(HgxError::ZeroProbability(v));
    }
    let residual = walk::stationary_residual(p, pi);
    if residual > 1e-9 {
        return Err(HgxError::NotStationary(residual));
    }
    let sq: Vec<f64> = pi.iter().map(|x| x.sqrt()).collect();
    let pd = p.to_dense();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let a = sq[i] * pd[(i, j)] / sq[j];
        let b = sq[j] * pd[(j, i)] / sq[i];
        let off = 0.5 * (a + b);
        if i == j {
            1.0 - off
        } else {
            -off
        }
    }))
}
