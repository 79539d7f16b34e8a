//! Distance-geometry kernel: EDM/Gram conversions, low-rank projection
//! leakage, the seesaw-leakage closed form and its Monte-Carlo oracle.
//!
//! Convention: an [`Edm`] stores **squared** distances; plain distances only
//! appear in the embedding force law over in [`crate::selection`].

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::derive;

/// Squared-distance matrix with per-entry validity flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Edm {
    size: usize,
    entries: Vec<f64>,
    valid: Vec<bool>,
}

impl Edm {
    /// A complete matrix from raw squared distances (row-major, `size²`).
    pub fn from_entries(size: usize, entries: Vec<f64>) -> Self {
        assert_eq!(entries.len(), size * size);
        Edm { size, valid: vec![true; entries.len()], entries }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.entries[i * self.size + j] = value;
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.valid[i * self.size + j]
    }

    /// Flags only ever transition valid → invalid.
    pub fn invalidate(&mut self, i: usize, j: usize) {
        self.valid[i * self.size + j] = false;
    }

    pub fn is_complete(&self) -> bool {
        self.valid.iter().all(|&v| v)
    }

    pub fn invalid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| !v).count()
    }

    /// Submatrix over `keep` (indices in ascending order).
    pub fn restricted(&self, keep: &[usize]) -> Edm {
        let n = keep.len();
        let mut entries = Vec::with_capacity(n * n);
        let mut valid = Vec::with_capacity(n * n);
        for &i in keep {
            for &j in keep {
                entries.push(self.get(i, j));
                valid.push(self.is_valid(i, j));
            }
        }
        Edm { size: n, entries, valid }
    }
}

/// A planar embedding with the per-candidate local fit error tracked
/// alongside it.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateSet {
    pub points: Vec<[f64; 2]>,
    /// Non-negative relative-error level per candidate; the seesaw test
    /// evicts on this.
    pub local_error: Vec<f64>,
}

impl CoordinateSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Squared-distance matrix of a planar point set.
pub fn edm_from_coords(points: &[[f64; 2]]) -> Edm {
    let n = points.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let dx = points[i][0] - points[j][0];
            let dy = points[i][1] - points[j][1];
            entries[i * n + j] = dx * dx + dy * dy;
        }
    }
    Edm::from_entries(n, entries)
}

/// Gram matrix of the point set realizing a complete EDM, with `anchor`
/// translated to the origin: `G_ij = −½(D_ij − D_{anchor,j} − D_{i,anchor})`.
///
/// The anchor row and column of the result are zero; for a genuine planar
/// EDM the result is positive semidefinite with rank ≤ 2.
pub fn gram_from_edm(edm: &Edm, anchor: usize) -> Result<DMatrix<f64>> {
    let n = edm.size();
    assert!(anchor < n, "anchor out of range");
    for i in 0..n {
        for j in 0..n {
            if !edm.is_valid(i, j) {
                return Err(Error::IncompleteMatrix(i, j));
            }
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (edm.get(i, j) - edm.get(anchor, j) - edm.get(i, anchor))
    }))
}

/// Eigenvalues of a symmetric matrix, sorted by descending magnitude.
fn eigenvalues_by_magnitude(m: &DMatrix<f64>) -> Vec<f64> {
    let mut eigs: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    eigs.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap());
    eigs
}

/// Power left outside the best rank-`r` approximation of a symmetric Gram
/// matrix: the total magnitude of eigenvalues past the top `r`.
///
/// Zero exactly when the matrix has rank ≤ `r`; for the tampered Gram of a
/// location forger this is the coordinate power leaked beyond the plane.
pub fn low_rank_leakage(gram: &DMatrix<f64>, r: usize) -> f64 {
    let eigs = eigenvalues_by_magnitude(gram);
    eigs.iter().skip(r).map(|e| e.abs()).sum()
}

/// Parameters of the seesaw-leakage law: one forger at the origin against
/// `m_good` good nodes with i.i.d. Gaussian(0, σ²) coordinates per axis, the
/// forger spending attack power `ς²` per tampered entry, in `dim`-space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageParams {
    pub m_good: usize,
    pub sigma2: f64,
    pub varsigma2: f64,
    pub dim: usize,
}

impl LeakageParams {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::Domain("leakage: dim must be at least 2".into()));
        }
        if self.m_good < self.dim + 1 {
            return Err(Error::Domain(format!(
                "leakage: need m_good >= dim+1, got {} < {}",
                self.m_good,
                self.dim + 1
            )));
        }
        if !(self.sigma2 > 0.0) || self.varsigma2 < 0.0 {
            return Err(Error::Domain("leakage: variances must be positive".into()));
        }
        Ok(())
    }
}

/// Closed-form expected leakage `min{(M−L+1)σ², (M−L)ς²}`.
///
/// Scales with the attack strength until it saturates at the coordinate
/// power itself; the factor ~M is what makes lying to many nodes hard.
pub fn seesaw_leakage_theory(p: &LeakageParams) -> f64 {
    let m = p.m_good as f64;
    let l = p.dim as f64;
    ((m - l + 1.0) * p.sigma2).min((m - l) * p.varsigma2)
}

/// Monte-Carlo leakage estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageEstimate {
    /// `min_i` of the empirical mean squared norms of the orthogonalized
    /// basis {axis vectors, attack vector}.
    pub gram_schmidt: f64,
    /// Standard error of the selected component's mean.
    pub gram_schmidt_se: f64,
    /// Mean leakage of the tampered Gram `X̄X̄ᵀ + ς²·11ᵀ` past rank `dim`.
    pub eigen: f64,
    pub eigen_se: f64,
}

/// Monte-Carlo oracle for the seesaw leakage.
///
/// Per trial: draw the `dim` coordinate axes of the good nodes as
/// i.i.d. Gaussian(0, σ²) vectors in R^M, orthogonalize them together with
/// the attack direction `w = √(ς²·M)·e₁` (same power as the optimal
/// all-ones attack, direction irrelevant by symmetry), and record each basis
/// vector's squared norm. The Gram–Schmidt estimate takes the minimum of the
/// per-vector empirical means; the eigen estimate instead measures the
/// operational leakage of the tampered Gram directly.
pub fn seesaw_leakage_mc(p: &LeakageParams, trials: usize, seed: u64) -> Result<LeakageEstimate> {
    p.validate()?;
    assert!(trials >= 1);
    let m = p.m_good;
    let l = p.dim;
    let sigma = p.sigma2.sqrt();

    // One row of component norms plus one eigen leakage per trial; trials are
    // independent streams merged in index order.
    let per_trial: Vec<(Vec<f64>, f64)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = derive(seed, trial as u64);
            let mut basis: Vec<Vec<f64>> = Vec::with_capacity(l + 1);
            let mut norms = Vec::with_capacity(l + 1);
            let mut axes: Vec<Vec<f64>> = Vec::with_capacity(l);
            for _ in 0..l {
                let v: Vec<f64> =
                    (0..m).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect();
                axes.push(v.clone());
                let u = orthogonalize(v, &basis);
                norms.push(dot(&u, &u));
                basis.push(u);
            }
            let mut w = vec![0.0; m];
            w[0] = (p.varsigma2 * m as f64).sqrt();
            let u = orthogonalize(w, &basis);
            norms.push(dot(&u, &u));

            // Tampered Gram: X̄X̄ᵀ + ς²·11ᵀ.
            let gram = DMatrix::from_fn(m, m, |i, j| {
                let mut g = p.varsigma2;
                for axis in &axes {
                    g += axis[i] * axis[j];
                }
                g
            });
            (norms, low_rank_leakage(&gram, l))
        })
        .collect();

    let tn = trials as f64;
    let mut component_means = vec![0.0; l + 1];
    for (norms, _) in &per_trial {
        for (acc, &v) in component_means.iter_mut().zip(norms) {
            *acc += v;
        }
    }
    for acc in &mut component_means {
        *acc /= tn;
    }
    let argmin = component_means
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let gs_var = per_trial
        .iter()
        .map(|(norms, _)| (norms[argmin] - component_means[argmin]).powi(2))
        .sum::<f64>()
        / tn.max(2.0);
    let eigen_mean = per_trial.iter().map(|(_, e)| e).sum::<f64>() / tn;
    let eigen_var =
        per_trial.iter().map(|(_, e)| (e - eigen_mean).powi(2)).sum::<f64>() / tn.max(2.0);

    Ok(LeakageEstimate {
        gram_schmidt: component_means[argmin],
        gram_schmidt_se: (gs_var / tn).sqrt(),
        eigen: eigen_mean,
        eigen_se: (eigen_var / tn).sqrt(),
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Remove the components of `v` along an orthogonal (not normalized) basis.
fn orthogonalize(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Vec<f64> {
    for u in basis {
        let uu = dot(u, u);
        if uu <= f64::EPSILON {
            continue;
        }
        let coef = dot(u, &v) / uu;
        for (vi, ui) in v.iter_mut().zip(u) {
            *vi -= coef * ui;
        }
    }
    v
}

/// Coordinates realized from a Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// One row per point, `dim` columns.
    pub points: Vec<Vec<f64>>,
    /// Set when the spectrum has a negative eigenvalue beyond tolerance —
    /// the matrix is not a Gram matrix of any real point set (some triangle
    /// inequality fails), which is the signature of a whisper forgery.
    pub non_embeddable: bool,
}

/// Classical multidimensional scaling: top-`dim` eigenpairs as coordinates.
///
/// When the Gram has rank ≤ `dim`, the embedding reproduces its EDM exactly
/// (up to floating point).
pub fn classical_mds(gram: &DMatrix<f64>, dim: usize) -> Embedding {
    let n = gram.nrows();
    let eig = gram.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

    let trace_scale: f64 = eig.eigenvalues.iter().map(|e| e.abs()).sum();
    let tol = 1e-9 * trace_scale.max(f64::MIN_POSITIVE);
    let non_embeddable = eig.eigenvalues.iter().any(|&e| e < -tol);

    let mut points = vec![vec![0.0; dim]; n];
    for (col, &k) in order.iter().take(dim).enumerate() {
        let scale = eig.eigenvalues[k].max(0.0).sqrt();
        for i in 0..n {
            points[i][col] = scale * eig.eigenvectors[(i, k)];
        }
    }
    Embedding { points, non_embeddable }
}
