//! Graph-structured Gaussian model: structures, Laplacian and precision
//! construction, and the sparsity-penalized posterior score.
//!
//! A structure is an undirected weighted graph over `n_x` observed object
//! nodes and `n_z` latent cluster nodes. Each object attaches to exactly one
//! cluster node; cluster nodes connect to each other in arbitrary patterns.
//! The graph defines a zero-mean Gaussian over all `n_t = n_x + n_z` node
//! values through the precision matrix `J = Δ + (1/σ²)·I`, where `Δ` is the
//! graph Laplacian. Features are independent columns drawn from that
//! Gaussian; only the object coordinates are ever observed.
//!
//! Node indexing convention throughout the crate: objects occupy indices
//! `0..n_x`, cluster node `z` occupies index `n_x + z`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Edge strengths below this are treated as exactly zero (solver round-off).
pub const EDGE_FLOOR: f64 = 1e-12;

const LN_2PI: f64 = 1.8378770664093453;

/// Whether object attachments count toward the edge total `#S`.
///
/// Attachments are edges, so the default counts them; since every object has
/// exactly one attachment the difference is a constant `n_x` and does not
/// affect which structure maximizes the score. The alternative convention is
/// provided so scores can be compared with tools that count only
/// cluster-cluster edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EdgeCount {
    #[default]
    WithAttachments,
    ClusterEdgesOnly,
}

/// A structure hypothesis: object-to-cluster assignment, weighted
/// cluster-cluster edges, per-object attachment strengths, and σ².
#[derive(Debug, Clone, PartialEq)]
pub struct Structure {
    assignment: Vec<usize>,
    cluster_edges: DMatrix<f64>,
    attach_weights: DVector<f64>,
    sigma2: f64,
}

impl Structure {
    /// Validates the structure invariants and floors sub-`EDGE_FLOOR`
    /// cluster-edge strengths to exactly zero.
    pub fn new(
        assignment: Vec<usize>,
        cluster_edges: DMatrix<f64>,
        attach_weights: DVector<f64>,
        sigma2: f64,
    ) -> Result<Self> {
        let n_x = assignment.len();
        let n_z = cluster_edges.nrows();
        if n_x == 0 {
            return Err(Error::InvalidStructure("no objects".into()));
        }
        if cluster_edges.ncols() != n_z {
            return Err(Error::InvalidStructure("cluster_edges not square".into()));
        }
        if attach_weights.len() != n_x {
            return Err(Error::InvalidStructure(
                "attach_weights length != object count".into(),
            ));
        }
        let mut seen = vec![false; n_z];
        for (x, &z) in assignment.iter().enumerate() {
            if z >= n_z {
                return Err(Error::InvalidStructure(format!(
                    "object {x} assigned to cluster {z} but only {n_z} clusters exist"
                )));
            }
            seen[z] = true;
        }
        if let Some(z) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidStructure(format!("cluster {z} has no objects")));
        }
        let mut edges = cluster_edges;
        for i in 0..n_z {
            if edges[(i, i)] != 0.0 {
                return Err(Error::InvalidStructure(format!(
                    "cluster_edges diagonal must be zero (entry {i})"
                )));
            }
            for j in 0..n_z {
                let v = edges[(i, j)];
                if !(v >= 0.0) {
                    return Err(Error::InvalidStructure(format!(
                        "negative or NaN edge strength at ({i},{j}): {v}"
                    )));
                }
                if (v - edges[(j, i)]).abs() > 1e-12 * v.abs().max(1.0) {
                    return Err(Error::InvalidStructure(format!(
                        "cluster_edges not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        // Floor solver round-off to exact zeros, symmetrically.
        for i in 0..n_z {
            for j in (i + 1)..n_z {
                let v = 0.5 * (edges[(i, j)] + edges[(j, i)]);
                let v = if v < EDGE_FLOOR { 0.0 } else { v };
                edges[(i, j)] = v;
                edges[(j, i)] = v;
            }
        }
        for (x, w) in attach_weights.iter().enumerate() {
            if !(*w > 0.0) {
                return Err(Error::InvalidStructure(format!(
                    "attachment weight of object {x} must be positive, got {w}"
                )));
            }
        }
        if !(sigma2 > 0.0) {
            return Err(Error::InvalidStructure(format!("sigma2 must be positive, got {sigma2}")));
        }
        Ok(Structure {
            assignment,
            cluster_edges: edges,
            attach_weights,
            sigma2,
        })
    }

    pub fn n_objects(&self) -> usize {
        self.assignment.len()
    }

    pub fn n_clusters(&self) -> usize {
        self.cluster_edges.nrows()
    }

    /// Total node count `n_t = n_x + n_z`.
    pub fn n_nodes(&self) -> usize {
        self.n_objects() + self.n_clusters()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_edges(&self) -> &DMatrix<f64> {
        &self.cluster_edges
    }

    pub fn attach_weights(&self) -> &DVector<f64> {
        &self.attach_weights
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Objects assigned to cluster `z`, in index order.
    pub fn members(&self, z: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(x, &c)| (c == z).then_some(x))
            .collect()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.n_clusters()];
        for &z in &self.assignment {
            sizes[z] += 1;
        }
        sizes
    }

    /// Nonzero cluster-cluster edges `(i, j, strength)` with `i < j`.
    pub fn cluster_edge_list(&self) -> Vec<(usize, usize, f64)> {
        let n_z = self.n_clusters();
        let mut out = Vec::new();
        for i in 0..n_z {
            for j in (i + 1)..n_z {
                let s = self.cluster_edges[(i, j)];
                if s > 0.0 {
                    out.push((i, j, s));
                }
            }
        }
        out
    }

    /// Edge total `#S` under the given counting convention.
    pub fn edge_count(&self, convention: EdgeCount) -> usize {
        let cluster = self.cluster_edge_list().len();
        match convention {
            EdgeCount::WithAttachments => cluster + self.n_objects(),
            EdgeCount::ClusterEdgesOnly => cluster,
        }
    }

    /// Rebuilds the structure with cluster indices permuted by `perm`
    /// (cluster `z` becomes `perm[z]`).
    pub fn relabeled(&self, perm: &[usize]) -> Structure {
        let n_z = self.n_clusters();
        assert_eq!(perm.len(), n_z);
        let mut edges = DMatrix::zeros(n_z, n_z);
        for i in 0..n_z {
            for j in 0..n_z {
                edges[(perm[i], perm[j])] = self.cluster_edges[(i, j)];
            }
        }
        Structure {
            assignment: self.assignment.iter().map(|&z| perm[z]).collect(),
            cluster_edges: edges,
            attach_weights: self.attach_weights.clone(),
            sigma2: self.sigma2,
        }
    }

    /// Canonical form: clusters relabeled in order of their minimum object
    /// index (object 0's cluster becomes 0, and so on).
    pub fn canonical(&self) -> Structure {
        let canon = canonical_assignment(&self.assignment);
        let mut perm = vec![usize::MAX; self.n_clusters()];
        for (x, &z) in self.assignment.iter().enumerate() {
            perm[z] = canon[x];
        }
        self.relabeled(&perm)
    }
}

/// Relabels an assignment vector so cluster ids appear in first-use order.
pub fn canonical_assignment(assignment: &[usize]) -> Vec<usize> {
    let mut map: Vec<Option<usize>> = vec![None; assignment.len()];
    let mut next = 0usize;
    assignment
        .iter()
        .map(|&z| {
            *map[z].get_or_insert_with(|| {
                let id = next;
                next += 1;
                id
            })
        })
        .collect()
}

/// Observed data: `n_x` objects by `m` features with a missingness mask.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    mask: DMatrix<bool>,
    object_names: Vec<String>,
    feature_names: Option<Vec<String>>,
}

impl DataMatrix {
    /// `mask[(i, k)]` is true when object `i`'s value for feature `k` was
    /// observed. Unobserved cells are stored as 0 and never read.
    pub fn new(
        values: DMatrix<f64>,
        mask: DMatrix<bool>,
        object_names: Vec<String>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let (n, m) = values.shape();
        if mask.shape() != (n, m) {
            return Err(Error::DimensionMismatch(format!(
                "mask shape {:?} != values shape {:?}",
                mask.shape(),
                values.shape()
            )));
        }
        if object_names.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} object names for {n} rows",
                object_names.len()
            )));
        }
        if let Some(f) = &feature_names {
            if f.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "{} feature names for {m} columns",
                    f.len()
                )));
            }
        }
        for i in 0..n {
            if !(0..m).any(|k| mask[(i, k)]) {
                return Err(Error::DegenerateData(format!(
                    "object {} ({}) has no observed entries",
                    i, object_names[i]
                )));
            }
        }
        let mut values = values;
        for i in 0..n {
            for k in 0..m {
                if !mask[(i, k)] {
                    values[(i, k)] = 0.0;
                } else if !values[(i, k)].is_finite() {
                    return Err(Error::DegenerateData(format!(
                        "non-finite value at object {i}, feature {k}"
                    )));
                }
            }
        }
        Ok(DataMatrix {
            values,
            mask,
            object_names,
            feature_names,
        })
    }

    /// Fully observed data.
    pub fn complete(values: DMatrix<f64>, object_names: Vec<String>) -> Result<Self> {
        let mask = DMatrix::from_element(values.nrows(), values.ncols(), true);
        DataMatrix::new(values, mask, object_names, None)
    }

    pub fn n_objects(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn mask(&self) -> &DMatrix<bool> {
        &self.mask
    }

    pub fn object_names(&self) -> &[String] {
        &self.object_names
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn is_complete(&self) -> bool {
        self.mask.iter().all(|&b| b)
    }

    pub fn column_mask(&self, k: usize) -> Vec<bool> {
        (0..self.n_objects()).map(|i| self.mask[(i, k)]).collect()
    }

    /// Groups feature columns by identical missingness pattern, in order of
    /// each pattern's first occurrence. Returned patterns are row masks.
    pub fn column_mask_groups(&self) -> Vec<(Vec<bool>, Vec<usize>)> {
        let mut groups: Vec<(Vec<bool>, Vec<usize>)> = Vec::new();
        let mut index: std::collections::HashMap<Vec<bool>, usize> = std::collections::HashMap::new();
        for k in 0..self.n_features() {
            let pat = self.column_mask(k);
            match index.get(&pat) {
                Some(&g) => groups[g].1.push(k),
                None => {
                    index.insert(pat.clone(), groups.len());
                    groups.push((pat, vec![k]));
                }
            }
        }
        groups
    }

    /// Row of observed-or-zero values for object `i` (used for feature-space
    /// distances during search).
    pub fn row_filled(&self, i: usize) -> DVector<f64> {
        DVector::from_fn(self.n_features(), |k, _| {
            if self.mask[(i, k)] {
                self.values[(i, k)]
            } else {
                0.0
            }
        })
    }
}

/// Symmetric positive-definite precision matrix over all `n_t` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionMatrix {
    j: DMatrix<f64>,
}

impl PrecisionMatrix {
    pub fn from_matrix(j: DMatrix<f64>) -> Result<Self> {
        if j.nrows() != j.ncols() {
            return Err(Error::DimensionMismatch("precision matrix not square".into()));
        }
        Ok(PrecisionMatrix { j })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn dim(&self) -> usize {
        self.j.nrows()
    }

    pub fn cholesky(&self) -> Result<Cholesky<f64, Dyn>> {
        Cholesky::new(self.j.clone()).ok_or_else(|| Error::not_pd("precision matrix"))
    }

    /// `log |J|` via Cholesky; non-PD input is a hard error.
    pub fn log_det(&self) -> Result<f64> {
        let chol = self.cholesky()?;
        Ok(2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
    }

    /// Dense covariance `J⁻¹` via Cholesky inversion.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        Ok(self.cholesky()?.inverse())
    }
}

/// Decomposed log-posterior of a structure: `total = loglik − penalty`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureScore {
    pub loglik: f64,
    pub penalty: f64,
    pub total: f64,
}

impl StructureScore {
    pub fn new(loglik: f64, penalty: f64) -> Self {
        StructureScore {
            loglik,
            penalty,
            total: loglik - penalty,
        }
    }
}

/// Full weighted adjacency over all nodes: object attachments plus
/// cluster-cluster edges.
pub fn weighted_adjacency(s: &Structure) -> DMatrix<f64> {
    let n_x = s.n_objects();
    let n_t = s.n_nodes();
    let mut w = DMatrix::zeros(n_t, n_t);
    for (x, &z) in s.assignment().iter().enumerate() {
        let weight = s.attach_weights()[x];
        w[(x, n_x + z)] = weight;
        w[(n_x + z, x)] = weight;
    }
    for (i, j, strength) in s.cluster_edge_list() {
        w[(n_x + i, n_x + j)] = strength;
        w[(n_x + j, n_x + i)] = strength;
    }
    w
}

/// Graph Laplacian of a symmetric non-negative weight matrix: off-diagonals
/// `−w_ij`, diagonal `Σ_j w_ij`. Row sums are exactly zero by construction.
pub fn laplacian_from_adjacency(w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = w.nrows();
    let mut lap = -w.clone();
    for i in 0..n {
        lap[(i, i)] = 0.0;
        let mut row = 0.0;
        for j in 0..n {
            if j != i {
                row += w[(i, j)];
            }
        }
        lap[(i, i)] = row;
    }
    lap
}

/// Laplacian of the structure's full weighted graph.
pub fn build_laplacian(s: &Structure) -> DMatrix<f64> {
    laplacian_from_adjacency(&weighted_adjacency(s))
}

/// Precision matrix `J = Δ + (1/σ²)·I`; positive definite for any valid
/// structure since the Laplacian is PSD and the shift is positive.
pub fn build_precision(s: &Structure) -> PrecisionMatrix {
    let mut j = build_laplacian(s);
    let shift = 1.0 / s.sigma2();
    for i in 0..j.nrows() {
        j[(i, i)] += shift;
    }
    PrecisionMatrix { j }
}

/// Log-density of complete feature columns under `N(0, J⁻¹)`, summed over
/// columns: `Σ_k [ −(n_t/2)·ln 2π + ½·ln|J| − ½·fᵀJf ]`.
pub fn full_loglik(j: &PrecisionMatrix, features: &DMatrix<f64>) -> Result<f64> {
    let n_t = j.dim();
    if features.nrows() != n_t {
        return Err(Error::DimensionMismatch(format!(
            "feature rows {} != precision dim {n_t}",
            features.nrows()
        )));
    }
    let log_det = j.log_det()?;
    let m = features.ncols();
    let mut quad = 0.0;
    for k in 0..m {
        let f = features.column(k);
        quad += (j.matrix() * f).dot(&f);
    }
    Ok(m as f64 * 0.5 * (log_det - n_t as f64 * LN_2PI) - 0.5 * quad)
}

/// Marginal log-likelihood of the observed entries: for each feature column
/// the latent cluster values and masked entries are integrated out by
/// selecting the observed sub-block of the covariance `J⁻¹`. Columns sharing
/// a missingness pattern are batched on one factorization.
pub fn marginal_loglik(s: &Structure, data: &DataMatrix) -> Result<f64> {
    if data.n_objects() != s.n_objects() {
        return Err(Error::DimensionMismatch(format!(
            "data has {} objects, structure has {}",
            data.n_objects(),
            s.n_objects()
        )));
    }
    let sigma = build_precision(s).covariance()?;
    let mut total = 0.0;
    for (pattern, cols) in data.column_mask_groups() {
        let observed: Vec<usize> = pattern
            .iter()
            .enumerate()
            .filter_map(|(i, &o)| o.then_some(i))
            .collect();
        if observed.is_empty() {
            return Err(Error::EmptyFeatureColumn { column: cols[0] });
        }
        let k = observed.len();
        let sub = DMatrix::from_fn(k, k, |r, c| sigma[(observed[r], observed[c])]);
        let chol = Cholesky::new(sub).ok_or_else(|| Error::not_pd("observed covariance block"))?;
        let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let base = -0.5 * (k as f64 * LN_2PI + log_det);
        for &col in &cols {
            let v = DVector::from_fn(k, |r, _| data.values()[(observed[r], col)]);
            let solved = chol.solve(&v);
            total += base - 0.5 * v.dot(&solved);
        }
    }
    Ok(total)
}

/// Sparsity-penalized posterior score `loglik − β·#S` (attachments counted).
pub fn posterior_score(s: &Structure, data: &DataMatrix, beta: f64) -> Result<StructureScore> {
    posterior_score_with(s, data, beta, EdgeCount::WithAttachments)
}

/// Posterior score under an explicit edge-counting convention.
pub fn posterior_score_with(
    s: &Structure,
    data: &DataMatrix,
    beta: f64,
    convention: EdgeCount,
) -> Result<StructureScore> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be non-negative, got {beta}")));
    }
    let loglik = marginal_loglik(s, data)?;
    let penalty = beta * s.edge_count(convention) as f64;
    Ok(StructureScore::new(loglik, penalty))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node_structure(sigma2: f64) -> Structure {
        Structure::new(
            vec![0],
            DMatrix::zeros(1, 1),
            DVector::from_element(1, 1.0),
            sigma2,
        )
        .unwrap()
    }

    #[test]
    fn laplacian_of_single_attachment_is_two_node_path() {
        let s = two_node_structure(1.0);
        let lap = build_laplacian(&s);
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert_eq!(lap, expected);
    }

    #[test]
    fn laplacian_of_unit_ring_adjacency() {
        // Ring of 4 nodes with unit edges, fed through the adjacency helper.
        let mut w = DMatrix::zeros(4, 4);
        for i in 0..4 {
            let j = (i + 1) % 4;
            w[(i, j)] = 1.0;
            w[(j, i)] = 1.0;
        }
        let lap = laplacian_from_adjacency(&w);
        for i in 0..4 {
            assert_eq!(lap[(i, i)], 2.0);
            for j in 0..4 {
                if i != j {
                    let adjacent = (i + 1) % 4 == j || (j + 1) % 4 == i;
                    assert_eq!(lap[(i, j)], if adjacent { -1.0 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn precision_of_unit_attachment_unit_sigma() {
        let s = two_node_structure(1.0);
        let j = build_precision(&s);
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        assert_eq!(j.matrix(), &expected);
    }

    #[test]
    fn tiny_sigma2_shifts_spectrum() {
        let s = Structure::new(
            vec![0, 0, 1],
            {
                let mut e = DMatrix::zeros(2, 2);
                e[(0, 1)] = 0.7;
                e[(1, 0)] = 0.7;
                e
            },
            DVector::from_vec(vec![1.0, 2.0, 0.5]),
            1e-6,
        )
        .unwrap();
        let j = build_precision(&s);
        let eig = j.matrix().clone().symmetric_eigenvalues();
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min >= 1e6 * (1.0 - 1e-6), "min eigenvalue {min}");
    }

    #[test]
    fn full_loglik_of_zeros_is_normalizer() {
        let s = two_node_structure(1.0);
        let j = build_precision(&s);
        let f = DMatrix::zeros(2, 1);
        let got = full_loglik(&j, &f).unwrap();
        let expected = -(2.0 / 2.0) * LN_2PI + 0.5 * j.log_det().unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn doubling_a_feature_quadruples_its_quadratic_term() {
        let s = two_node_structure(0.5);
        let j = build_precision(&s);
        let f1 = DMatrix::from_column_slice(2, 1, &[0.3, -1.1]);
        let f2 = &f1 * 2.0;
        let norm = full_loglik(&j, &DMatrix::zeros(2, 1)).unwrap();
        let q1 = norm - full_loglik(&j, &f1).unwrap();
        let q2 = norm - full_loglik(&j, &f2).unwrap();
        assert!((q2 - 4.0 * q1).abs() < 1e-10);
    }

    #[test]
    fn single_object_marginal_is_univariate_normal() {
        let s = two_node_structure(1.0);
        // J = [[2,-1],[-1,2]], covariance = 1/3 [[2,1],[1,2]], object variance 2/3.
        let v = 0.5;
        let data = DataMatrix::complete(
            DMatrix::from_element(1, 1, v),
            vec!["a".into()],
        )
        .unwrap();
        let got = marginal_loglik(&s, &data).unwrap();
        let c: f64 = 2.0 / 3.0;
        let expected = -0.5 * ((c * 2.0 * std::f64::consts::PI).ln() + v * v / c);
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn masked_row_values_do_not_affect_score() {
        let s = Structure::new(
            vec![0, 0],
            DMatrix::zeros(1, 1),
            DVector::from_vec(vec![1.0, 1.5]),
            0.7,
        )
        .unwrap();
        let mask = DMatrix::from_row_slice(2, 2, &[true, true, true, false]);
        let a = DataMatrix::new(
            DMatrix::from_row_slice(2, 2, &[0.4, -0.2, 1.0, 99.0]),
            mask.clone(),
            vec!["a".into(), "b".into()],
            None,
        )
        .unwrap();
        let b = DataMatrix::new(
            DMatrix::from_row_slice(2, 2, &[0.4, -0.2, 1.0, -7.0]),
            mask,
            vec!["a".into(), "b".into()],
            None,
        )
        .unwrap();
        let la = marginal_loglik(&s, &a).unwrap();
        let lb = marginal_loglik(&s, &b).unwrap();
        assert_eq!(la, lb);
    }

    #[test]
    fn zero_observation_column_is_an_error_for_scoring() {
        let mask = DMatrix::from_row_slice(2, 2, &[true, false, true, false]);
        let data = DataMatrix::new(
            DMatrix::from_row_slice(2, 2, &[0.4, 0.0, 1.0, 0.0]),
            mask,
            vec!["a".into(), "b".into()],
            None,
        )
        .unwrap();
        let s = Structure::new(
            vec![0, 0],
            DMatrix::zeros(1, 1),
            DVector::from_vec(vec![1.0, 1.0]),
            1.0,
        )
        .unwrap();
        assert!(matches!(
            marginal_loglik(&s, &data),
            Err(Error::EmptyFeatureColumn { column: 1 })
        ));
    }

    #[test]
    fn spurious_epsilon_edge_costs_exactly_beta() {
        let s = Structure::new(
            vec![0, 1],
            DMatrix::zeros(2, 2),
            DVector::from_vec(vec![1.0, 1.0]),
            0.5,
        )
        .unwrap();
        let mut edges = DMatrix::zeros(2, 2);
        edges[(0, 1)] = 1e-10;
        edges[(1, 0)] = 1e-10;
        let s_extra = Structure::new(
            s.assignment().to_vec(),
            edges,
            s.attach_weights().clone(),
            s.sigma2(),
        )
        .unwrap();
        let data = DataMatrix::complete(
            DMatrix::from_row_slice(2, 3, &[0.1, -0.7, 0.3, 0.9, 0.2, -0.4]),
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let beta = 6.0;
        let base = posterior_score(&s, &data, beta).unwrap();
        let extra = posterior_score(&s_extra, &data, beta).unwrap();
        assert!((extra.loglik - base.loglik).abs() < 1e-6);
        assert!(((base.total - extra.total) - beta).abs() < 1e-6);
    }

    #[test]
    fn beta_zero_total_equals_loglik() {
        let s = two_node_structure(1.0);
        let data = DataMatrix::complete(
            DMatrix::from_row_slice(1, 4, &[0.1, -0.3, 0.8, 0.0]),
            vec!["a".into()],
        )
        .unwrap();
        let sc = posterior_score(&s, &data, 0.0).unwrap();
        assert_eq!(sc.total, sc.loglik);
        assert_eq!(sc.penalty, 0.0);
    }

    #[test]
    fn sub_floor_edges_are_treated_as_zero() {
        let mut edges = DMatrix::zeros(2, 2);
        edges[(0, 1)] = 1e-13;
        edges[(1, 0)] = 1e-13;
        let s = Structure::new(
            vec![0, 1],
            edges,
            DVector::from_vec(vec![1.0, 1.0]),
            1.0,
        )
        .unwrap();
        assert_eq!(s.cluster_edge_list().len(), 0);
        assert_eq!(s.edge_count(EdgeCount::WithAttachments), 2);
        assert_eq!(s.edge_count(EdgeCount::ClusterEdgesOnly), 0);
    }

    #[test]
    fn smoothness_constant_feature_beats_sign_flip() {
        // Two singleton clusters joined by an edge: a constant feature is at
        // least as likely as the same-norm feature with opposite signs.
        let mut edges = DMatrix::zeros(2, 2);
        edges[(0, 1)] = 1.5;
        edges[(1, 0)] = 1.5;
        let s = Structure::new(
            vec![0, 1],
            edges,
            DVector::from_vec(vec![1.0, 1.0]),
            0.8,
        )
        .unwrap();
        let names = vec!["a".into(), "b".into()];
        let smooth = DataMatrix::complete(DMatrix::from_column_slice(2, 1, &[0.7, 0.7]), names.clone()).unwrap();
        let rough = DataMatrix::complete(DMatrix::from_column_slice(2, 1, &[0.7, -0.7]), names).unwrap();
        let ls = marginal_loglik(&s, &smooth).unwrap();
        let lr = marginal_loglik(&s, &rough).unwrap();
        assert!(ls >= lr, "smooth {ls} < rough {lr}");
    }

    #[test]
    fn structure_invariants_rejected() {
        // Empty cluster.
        assert!(Structure::new(
            vec![0, 0],
            DMatrix::zeros(2, 2),
            DVector::from_vec(vec![1.0, 1.0]),
            1.0
        )
        .is_err());
        // Non-positive attachment.
        assert!(Structure::new(
            vec![0],
            DMatrix::zeros(1, 1),
            DVector::from_vec(vec![0.0]),
            1.0
        )
        .is_err());
        // Negative edge.
        let mut e = DMatrix::zeros(2, 2);
        e[(0, 1)] = -0.1;
        e[(1, 0)] = -0.1;
        assert!(Structure::new(
            vec![0, 1],
            e,
            DVector::from_vec(vec![1.0, 1.0]),
            1.0
        )
        .is_err());
        // Bad sigma2.
        assert!(Structure::new(
            vec![0],
            DMatrix::zeros(1, 1),
            DVector::from_vec(vec![1.0]),
            0.0
        )
        .is_err());
    }

    #[test]
    fn canonical_assignment_first_use_order() {
        assert_eq!(canonical_assignment(&[2, 2, 0, 1, 0]), vec![0, 0, 1, 2, 1]);
    }
}
