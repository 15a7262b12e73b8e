//! Finite indexed families of Gaussian vectors with prescribed
//! cross-covariance blocks, sampled jointly through a Cholesky factor.
//!
//! Families whose blocks are all scalar multiples of the identity (the sphere
//! and scaled families below, and every scalar family) are stored through
//! their `N x N` scalar Gram matrix; the factor of the block covariance is
//! then the Kronecker product `chol(Gram) (x) Id_d`, which this module
//! applies without ever materializing the `(N d)^2` matrix. The draws agree
//! bit for bit with the generic path.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::mc::{self, MCEstimate};
use crate::rng::SeedStream;

/// Relative diagonal jitter: the factorization runs on `cov + eps^2 I` with
/// `eps^2 = JITTER_REL * max(diag)`. Sphere families on collinear points are
/// exactly singular, so some stabilization is always needed.
const JITTER_REL: f64 = 1e-10;
/// Relative pivot tolerance: pivots in `[-tol, tol]` are treated as exact
/// rank deficiency, pivots below `-tol` fail as not PSD.
const PIVOT_REL: f64 = 1e-9;

/// Mean-zero Gaussian vector with identity covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CanonicalGaussian {
    pub dim: usize,
}

impl CanonicalGaussian {
    pub fn new(dim: usize) -> Self {
        CanonicalGaussian { dim }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        DVector::from_fn(self.dim, |_, _| rng.sample(StandardNormal))
    }
}

/// One joint draw of a family: one `R^d` vector per index point, in index
/// order.
pub type FamilyDraw = Vec<DVector<f64>>;

#[derive(Debug, Clone)]
enum Covariance {
    /// Blocks are `gram[t,s] * Id_d`; `factor` is the pivoted Cholesky of
    /// the jittered Gram matrix.
    ScalarBlocks { gram: DMatrix<f64>, factor: DMatrix<f64> },
    /// Full `(N d) x (N d)` block covariance and its factor.
    General { cov: DMatrix<f64>, factor: DMatrix<f64> },
}

/// A finite family of `R^d`-valued centered Gaussian vectors given by its
/// cross-covariance blocks `E[X_t (x) X_s]`.
#[derive(Debug, Clone)]
pub struct IndexedGaussianFamily {
    labels: Vec<String>,
    value_dim: usize,
    covariance: Covariance,
}

/// Lower-triangular pivoted Cholesky for PSD matrices. `sigma` is assumed
/// symmetric; columns with pivots inside the tolerance band are zeroed
/// (rank deficiency), and a pivot below `-tol` is an error.
fn psd_cholesky(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = sigma.nrows();
    let max_diag = (0..n).map(|i| sigma[(i, i)]).fold(0.0f64, f64::max);
    let scale = if max_diag > 0.0 { max_diag } else { 1.0 };
    let jitter = JITTER_REL * scale;
    let tol = PIVOT_REL * scale;

    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = sigma[(j, j)] + jitter;
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d < -tol {
            return Err(Error::NotPsd {
                index: j,
                pivot: d,
                tolerance: tol,
            });
        }
        if d <= tol {
            continue; // exactly degenerate direction
        }
        let root = d.sqrt();
        l[(j, j)] = root;
        for i in (j + 1)..n {
            let mut s = sigma[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / root;
        }
    }
    Ok(l)
}

fn check_symmetric(m: &DMatrix<f64>, context: &'static str) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteEntries);
    }
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::IndexMismatch { context });
            }
        }
    }
    Ok(())
}

impl IndexedGaussianFamily {
    /// Family with blocks `gram[t,s] * Id_d`.
    pub fn from_scalar_gram(
        labels: Vec<String>,
        value_dim: usize,
        gram: DMatrix<f64>,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyIndexSet);
        }
        if gram.nrows() != labels.len() || gram.ncols() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                got: gram.nrows(),
                context: "scalar gram matrix",
            });
        }
        if value_dim == 0 {
            return Err(Error::InvalidValue {
                field: "value_dim",
                message: "value dimension must be positive".into(),
            });
        }
        check_symmetric(&gram, "scalar gram symmetry")?;
        let factor = psd_cholesky(&gram)?;
        Ok(IndexedGaussianFamily {
            labels,
            value_dim,
            covariance: Covariance::ScalarBlocks { gram, factor },
        })
    }

    /// Family from explicit `d x d` cross-covariance blocks.
    pub fn from_blocks<F>(labels: Vec<String>, value_dim: usize, block: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> DMatrix<f64>,
    {
        if labels.is_empty() {
            return Err(Error::EmptyIndexSet);
        }
        if value_dim == 0 {
            return Err(Error::InvalidValue {
                field: "value_dim",
                message: "value dimension must be positive".into(),
            });
        }
        let n = labels.len();
        let d = value_dim;
        let mut cov = DMatrix::zeros(n * d, n * d);
        for t in 0..n {
            for s in 0..n {
                let b = block(t, s);
                if b.nrows() != d || b.ncols() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: b.nrows(),
                        context: "cross-covariance block",
                    });
                }
                cov.view_mut((t * d, s * d), (d, d)).copy_from(&b);
            }
        }
        check_symmetric(&cov, "block covariance symmetry")?;
        let factor = psd_cholesky(&cov)?;
        Ok(IndexedGaussianFamily {
            labels,
            value_dim,
            covariance: Covariance::General { cov, factor },
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn value_dim(&self) -> usize {
        self.value_dim
    }

    /// The block `E[X_t (x) X_s]`.
    pub fn cross_cov(&self, t: usize, s: usize) -> DMatrix<f64> {
        let d = self.value_dim;
        match &self.covariance {
            Covariance::ScalarBlocks { gram, .. } => {
                DMatrix::identity(d, d) * gram[(t, s)]
            }
            Covariance::General { cov, .. } => cov.view((t * d, s * d), (d, d)).into(),
        }
    }

    pub fn shares_index_set(&self, other: &IndexedGaussianFamily) -> bool {
        self.labels == other.labels
    }

    /// One joint draw consuming `len * value_dim` normals from `rng`.
    pub fn sample_with(&self, rng: &mut ChaCha8Rng) -> FamilyDraw {
        let n = self.len();
        let d = self.value_dim;
        let z: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
        let mut out = vec![0.0; n * d];
        match &self.covariance {
            Covariance::ScalarBlocks { factor, .. } => {
                for i in 0..n {
                    for j in 0..=i {
                        let c = factor[(i, j)];
                        if c != 0.0 {
                            for a in 0..d {
                                out[i * d + a] += c * z[j * d + a];
                            }
                        }
                    }
                }
            }
            Covariance::General { factor, .. } => {
                for i in 0..n * d {
                    let mut acc = 0.0;
                    for j in 0..=i {
                        acc += factor[(i, j)] * z[j];
                    }
                    out[i] = acc;
                }
            }
        }
        (0..n)
            .map(|i| DVector::from_column_slice(&out[i * d..(i + 1) * d]))
            .collect()
    }
}

fn validate_points(points: &[Vec<f64>]) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    let n = points[0].len();
    for (i, p) in points.iter().enumerate() {
        if p.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p.len(),
                context: "index point coordinates",
            });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidValue {
                field: "points",
                message: format!("point {i} has non-finite coordinates"),
            });
        }
    }
    Ok(n)
}

fn point_labels(points: &[Vec<f64>]) -> Vec<String> {
    (0..points.len()).map(|i| format!("a{i}")).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn euclidean_norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Family `X_x = sum_i x^i X_i` over the given points: blocks `<x,y> Id_d`.
/// With `d = 1` this is the companion scalar family `g_x`.
pub fn build_sphere_family(points: &[Vec<f64>], d: usize) -> Result<IndexedGaussianFamily> {
    validate_points(points)?;
    let n = points.len();
    let gram = DMatrix::from_fn(n, n, |i, j| dot(&points[i], &points[j]));
    IndexedGaussianFamily::from_scalar_gram(point_labels(points), d, gram)
}

/// Family `Y_x = ||x||_2 X` with one shared canonical vector: blocks
/// `||x||_2 ||y||_2 Id_d`.
pub fn build_scaled_family(points: &[Vec<f64>], d: usize) -> Result<IndexedGaussianFamily> {
    validate_points(points)?;
    let n = points.len();
    let norms: Vec<f64> = points.iter().map(|p| euclidean_norm(p)).collect();
    let gram = DMatrix::from_fn(n, n, |i, j| norms[i] * norms[j]);
    IndexedGaussianFamily::from_scalar_gram(point_labels(points), d, gram)
}

/// One joint draw of the family on the stream's current counter.
pub fn sample_family(family: &IndexedGaussianFamily, stream: &SeedStream) -> FamilyDraw {
    family.sample_with(&mut stream.rng())
}

/// Monte Carlo mean of `functional` over joint draws of the family.
pub fn mc_estimate<F>(
    functional: F,
    family: &IndexedGaussianFamily,
    samples: usize,
    confidence: f64,
    stream: &SeedStream,
) -> Result<MCEstimate>
where
    F: Fn(&FamilyDraw) -> f64 + Sync,
{
    mc::mc_run(samples, confidence, stream, |rng| {
        functional(&family.sample_with(rng))
    })
}

/// Estimate of `E max_{x in A} <x, g>` for a canonical Gaussian `g`.
pub fn expected_max_g(
    points: &[Vec<f64>],
    samples: usize,
    confidence: f64,
    stream: &SeedStream,
) -> Result<MCEstimate> {
    let n = validate_points(points)?;
    mc::mc_run(samples, confidence, stream, |rng| {
        let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        points
            .iter()
            .map(|p| dot(p, &g))
            .fold(f64::NEG_INFINITY, f64::max)
    })
}
