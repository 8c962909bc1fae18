//! Data ingestion and preprocessing: CSV/TSV loading, the global rescaling
//! applied before structure search, and conversion of similarity matrices to
//! sampled feature matrices.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::model::DataMatrix;

/// Symmetric similarity matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    values: DMatrix<f64>,
    names: Vec<String>,
}

impl SimilarityMatrix {
    /// Validates symmetry (worst deviation ≤ 1e-6) and a unit diagonal, then
    /// stores the exactly symmetrized matrix.
    pub fn new(values: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "similarity matrix is {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if names.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} names for {n} rows",
                names.len()
            )));
        }
        let mut worst = (0usize, 0usize, 0.0f64);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (values[(i, j)] - values[(j, i)]).abs();
                if d > worst.2 {
                    worst = (i, j, d);
                }
            }
        }
        if worst.2 > 1e-6 {
            return Err(Error::DegenerateData(format!(
                "similarity matrix asymmetric: worst pair ({}, {}) = ({}, {}) differs by {:.3e}",
                names[worst.0], names[worst.1], worst.0, worst.1, worst.2
            )));
        }
        for i in 0..n {
            if (values[(i, i)] - 1.0).abs() > 1e-6 {
                return Err(Error::DegenerateData(format!(
                    "similarity diagonal entry {} ({}) is {}, expected 1",
                    i,
                    names[i],
                    values[(i, i)]
                )));
            }
        }
        let mut sym = values;
        for i in 0..n {
            sym[(i, i)] = 1.0;
            for j in (i + 1)..n {
                let v = 0.5 * (sym[(i, j)] + sym[(j, i)]);
                sym[(i, j)] = v;
                sym[(j, i)] = v;
            }
        }
        Ok(SimilarityMatrix { values: sym, names })
    }

    pub fn n_objects(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Record of the linear transform applied by [`rescale`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaleReport {
    /// Scalar subtracted from every observed entry.
    pub shift: f64,
    /// Positive multiplier applied after the shift.
    pub scale: f64,
    /// When data has missing entries: the most common column missingness
    /// pattern, on whose complete sub-matrix the transform was computed.
    pub reference_mask_pattern: Option<Vec<bool>>,
}

/// Linearly transforms the data so the observed mean is 0 and the largest
/// element of `(1/m)·D·Dᵀ` is 1.
///
/// With missing values, the features sharing the most common missingness
/// pattern are grouped; the transform is computed on that sub-matrix
/// (restricted to its observed rows) and then applied to every observed
/// entry of the full matrix.
pub fn rescale(data: &DataMatrix) -> Result<(DataMatrix, RescaleReport)> {
    let complete = data.is_complete();
    let (rows, cols, pattern): (Vec<usize>, Vec<usize>, Option<Vec<bool>>) = if complete {
        (
            (0..data.n_objects()).collect(),
            (0..data.n_features()).collect(),
            None,
        )
    } else {
        let groups = data.column_mask_groups();
        let (pattern, cols) = groups
            .iter()
            .max_by_key(|(_, cols)| (cols.len(), std::cmp::Reverse(cols[0])))
            .expect("data has at least one column")
            .clone();
        let rows: Vec<usize> = pattern
            .iter()
            .enumerate()
            .filter_map(|(i, &o)| o.then_some(i))
            .collect();
        if rows.is_empty() {
            return Err(Error::DegenerateData(
                "most common missingness pattern observes no objects".into(),
            ));
        }
        (rows, cols, Some(pattern))
    };

    let sub = DMatrix::from_fn(rows.len(), cols.len(), |r, c| {
        data.values()[(rows[r], cols[c])]
    });
    let shift = sub.iter().sum::<f64>() / (sub.nrows() * sub.ncols()) as f64;
    let centered = sub.map(|v| v - shift);
    let gram = &centered * centered.transpose() / cols.len() as f64;
    let max_entry = gram.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max_entry <= 0.0 {
        return Err(Error::DegenerateData(
            "all observed entries equal after centering; scale undefined".into(),
        ));
    }
    let scale = 1.0 / max_entry.sqrt();

    let mut values = data.values().clone();
    for i in 0..data.n_objects() {
        for k in 0..data.n_features() {
            if data.mask()[(i, k)] {
                values[(i, k)] = (values[(i, k)] - shift) * scale;
            }
        }
    }
    let rescaled = DataMatrix::new(
        values,
        data.mask().clone(),
        data.object_names().to_vec(),
        data.feature_names().map(|f| f.to_vec()),
    )?;
    Ok((
        rescaled,
        RescaleReport {
            shift,
            scale,
            reference_mask_pattern: pattern,
        },
    ))
}

/// How much of a similarity spectrum was clipped to make it PSD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumClipReport {
    pub clipped_eigenvalues: usize,
    /// Total magnitude of the negative eigenvalues that were clipped.
    pub clipped_mass: f64,
}

/// Treats the similarity matrix as a Gaussian covariance and samples `m`
/// i.i.d. feature columns from it. Eigenvalues below zero (possible in
/// human-averaged similarities) are clipped to 1e-8 first. Deterministic per
/// seed, independent of thread count.
pub fn similarity_to_features(
    sim: &SimilarityMatrix,
    m: usize,
    seed: u64,
) -> Result<(DataMatrix, SpectrumClipReport)> {
    if m == 0 {
        return Err(Error::InvalidArgument("feature count m must be positive".into()));
    }
    let n = sim.n_objects();
    let eig = sim.values().clone().symmetric_eigen();
    let mut clipped = 0usize;
    let mut mass = 0.0f64;
    let mut root = DVector::zeros(n);
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        let adjusted = if lambda < 0.0 {
            clipped += 1;
            mass += -lambda;
            1e-8
        } else {
            lambda
        };
        root[i] = adjusted.sqrt();
    }
    // Columns are generated from per-column derived seeds so parallel and
    // sequential generation agree bit for bit.
    let columns = exec::map_range(m, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, k as u64));
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        &eig.eigenvectors * z.component_mul(&root)
    });
    let values = DMatrix::from_fn(n, m, |i, k| columns[k][i]);
    let data = DataMatrix::complete(values, sim.names().to_vec())?;
    Ok((
        data,
        SpectrumClipReport {
            clipped_eigenvalues: clipped,
            clipped_mass: mass,
        },
    ))
}

/// SplitMix64 step used to derive independent stream seeds.
pub(crate) fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e3779b97f4a7c15);
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Declared kind of an input matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Features,
    Similarity,
}

/// A loaded input matrix.
#[derive(Debug, Clone)]
pub enum LoadedMatrix {
    Features(DataMatrix),
    Similarity(SimilarityMatrix),
}

#[derive(Debug, Deserialize)]
struct Sidecar {
    kind: MatrixKind,
}

/// Loads a CSV/TSV matrix with a header row of feature names and an
/// object-name first column. Blank or `NA` cells become missing entries.
///
/// The kind is decided by, in order: the explicit `kind` argument, a sidecar
/// file `<path>.json` containing `{"kind": "similarity"|"features"}`, else
/// features. Similarity input is validated for symmetry and unit diagonal.
pub fn load_matrix(path: &Path, kind: Option<MatrixKind>) -> Result<LoadedMatrix> {
    let kind = match kind {
        Some(k) => k,
        None => sidecar_kind(path)?.unwrap_or(MatrixKind::Features),
    };
    let (values, mask, object_names, feature_names) = parse_table(path)?;
    match kind {
        MatrixKind::Features => Ok(LoadedMatrix::Features(DataMatrix::new(
            values,
            mask,
            object_names,
            Some(feature_names),
        )?)),
        MatrixKind::Similarity => {
            if mask.iter().any(|&b| !b) {
                return Err(Error::DegenerateData(
                    "similarity matrix may not contain missing entries".into(),
                ));
            }
            Ok(LoadedMatrix::Similarity(SimilarityMatrix::new(
                values,
                object_names,
            )?))
        }
    }
}

fn sidecar_kind(path: &Path) -> Result<Option<MatrixKind>> {
    let mut sidecar = path.as_os_str().to_owned();
    sidecar.push(".json");
    let sidecar = Path::new(&sidecar);
    if !sidecar.exists() {
        return Ok(None);
    }
    let raw = std::fs::read_to_string(sidecar)?;
    let parsed: Sidecar = serde_json::from_str(&raw).map_err(|e| Error::Parse {
        path: sidecar.display().to_string(),
        row: 1,
        column: 1,
        message: e.to_string(),
    })?;
    Ok(Some(parsed.kind))
}

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan")
}

#[allow(clippy::type_complexity)]
fn parse_table(path: &Path) -> Result<(DMatrix<f64>, DMatrix<bool>, Vec<String>, Vec<String>)> {
    let display = path.display().to_string();
    let delimiter = match path.extension().and_then(|e| e.to_str()) {
        Some("tsv") => b'\t',
        _ => b',',
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Parse {
            path: display.clone(),
            row: 0,
            column: 0,
            message: e.to_string(),
        })?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            path: display.clone(),
            row: idx + 1,
            column: 1,
            message: e.to_string(),
        })?;
        rows.push(record.iter().map(|s| s.to_string()).collect());
    }
    if rows.len() < 2 {
        return Err(Error::Parse {
            path: display,
            row: rows.len(),
            column: 1,
            message: "need a header row and at least one data row".into(),
        });
    }
    let header = &rows[0];
    if header.len() < 2 {
        return Err(Error::Parse {
            path: display,
            row: 1,
            column: header.len(),
            message: "need an object-name column and at least one feature column".into(),
        });
    }
    let feature_names: Vec<String> = header[1..].iter().map(|s| s.trim().to_string()).collect();
    let m = feature_names.len();
    let n = rows.len() - 1;
    let mut values = DMatrix::zeros(n, m);
    let mut mask = DMatrix::from_element(n, m, false);
    let mut object_names = Vec::with_capacity(n);
    for (i, row) in rows[1..].iter().enumerate() {
        if row.len() != m + 1 {
            return Err(Error::Parse {
                path: display,
                row: i + 2,
                column: row.len(),
                message: format!("ragged row: expected {} cells, found {}", m + 1, row.len()),
            });
        }
        object_names.push(row[0].trim().to_string());
        for (k, cell) in row[1..].iter().enumerate() {
            if is_missing(cell) {
                continue;
            }
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                path: display.clone(),
                row: i + 2,
                column: k + 2,
                message: format!("non-numeric cell {:?}", cell),
            })?;
            values[(i, k)] = v;
            mask[(i, k)] = true;
        }
    }
    Ok((values, mask, object_names, feature_names))
}
