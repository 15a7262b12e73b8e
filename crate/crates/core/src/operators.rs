//! Gaussian random operators `x -> u G^T v x` between normed spaces, their
//! Euclidean operator norms, and extremization of `x -> ||T x||` over the
//! domain unit sphere.
//!
//! Extremization comes in three tiers. Euclidean-to-Euclidean problems are
//! solved exactly through the spectrum of `T^T T`. Polyhedral domains
//! (`l1` / `linf`, weighted or not) admit exact answers too: a maximum of a
//! convex function over the sphere is attained at a vertex, and a minimum is
//! found by enumerating faces and solving one tiny equality- or
//! box-constrained quadratic program per face. Everything else falls back to
//! a face-parametrized net oracle (domain dimension <= 3) or a multi-start
//! projected subgradient heuristic, which is the only tier that is not
//! certified.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::norms::{LpKind, NormSpec};
use crate::rng::SeedStream;

/// Vertex enumeration bound for exact `linf` computations (`2^20` points).
const MAX_EXACT_SIGN_DIM: usize = 20;
/// Face-QP enumeration bound for exact polyhedral minima (`3^12` patterns).
const MAX_EXACT_FACE_DIM: usize = 12;
/// Mesh of the net oracle, in face parameters.
pub const NET_MESH: f64 = 1e-3;
/// Fixed stream feeding the heuristic's randomized starts.
const HEURISTIC_SEED: u64 = 0x657874_7231;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremeMode {
    Min,
    Max,
}

/// Extremum of `x -> range_norm(T x)` over `{ domain_norm(x) = 1 }`.
#[derive(Debug, Clone)]
pub struct ExtremizationResult {
    pub value: f64,
    pub argpoint: DVector<f64>,
    pub mode: ExtremeMode,
    /// True when an exact oracle produced the value.
    pub certified: bool,
}

/// The random operator `T = u G^T v` with `G` an `n x d` standard Gaussian
/// core: `v` carries the domain functionals as rows, `u` the range vectors
/// as columns.
#[derive(Debug, Clone)]
pub struct RandomOperatorSpec {
    pub v_matrix: DMatrix<f64>,
    pub u_matrix: DMatrix<f64>,
    pub domain_norm: NormSpec,
    pub range_norm: NormSpec,
}

impl RandomOperatorSpec {
    pub fn validate(&self) -> Result<()> {
        self.domain_norm.validate()?;
        self.range_norm.validate()?;
        if self.v_matrix.iter().any(|x| !x.is_finite())
            || self.u_matrix.iter().any(|x| !x.is_finite())
        {
            return Err(Error::NonFiniteEntries);
        }
        self.domain_norm.check_dim(self.v_matrix.ncols())?;
        self.range_norm.check_dim(self.u_matrix.nrows())?;
        Ok(())
    }

    pub fn functionals(&self) -> usize {
        self.v_matrix.nrows()
    }

    pub fn core_dim(&self) -> usize {
        self.u_matrix.ncols()
    }

    pub fn domain_dim(&self) -> usize {
        self.v_matrix.ncols()
    }

    pub fn range_dim(&self) -> usize {
        self.u_matrix.nrows()
    }

    pub fn realize_with(&self, rng: &mut rand_chacha::ChaCha8Rng) -> DMatrix<f64> {
        let n = self.functionals();
        let d = self.core_dim();
        let core = DMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal));
        &self.u_matrix * core.transpose() * &self.v_matrix
    }
}

/// One realization `u G^T v` on the stream's counter.
pub fn realize(spec: &RandomOperatorSpec, stream: &SeedStream) -> Result<DMatrix<f64>> {
    spec.validate()?;
    Ok(spec.realize_with(&mut stream.rng()))
}

/// Largest singular value (not symmetrized).
pub fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteEntries);
    }
    if m.is_empty() {
        return Ok(0.0);
    }
    Ok(m.clone().svd(false, false).singular_values.max())
}

/// Splits a norm into a diagonal change of variables plus a plain `lp` base:
/// `spec.eval(x) = base_lp(diag(scale) x)`. `x = diag(1/scale) y` maps base
/// unit vectors back to the original sphere.
fn diagonal_reduction(spec: &NormSpec) -> (LpKind, Option<Vec<f64>>) {
    match spec {
        NormSpec::Lp { p, .. } => (*p, None),
        NormSpec::WeightedLp { p, weights } => (*p, Some(weights.clone())),
        NormSpec::ScaledEuclidean { scale, dim } => (LpKind::Two, Some(vec![*scale; *dim])),
    }
}

fn scale_columns(m: &DMatrix<f64>, inv_scale: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (j, s) in inv_scale.iter().enumerate() {
        out.column_mut(j).scale_mut(1.0 / s);
    }
    out
}

fn scale_rows(m: &DMatrix<f64>, scale: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (i, s) in scale.iter().enumerate() {
        out.row_mut(i).scale_mut(*s);
    }
    out
}

fn max_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

fn signed_vertices(dim: usize) -> impl Iterator<Item = Vec<f64>> {
    // Half of {-1,1}^dim: the last coordinate is fixed to +1, which is
    // enough for any sign-symmetric objective.
    (0..1usize << (dim - 1)).map(move |bits| {
        (0..dim)
            .map(|i| {
                if i + 1 == dim {
                    1.0
                } else if bits >> i & 1 == 1 {
                    -1.0
                } else {
                    1.0
                }
            })
            .collect()
    })
}

/// `sup { ||v x||_2 : domain_norm(x) <= 1 }`, the Euclidean operator norm
/// of `v : E -> l2` (exact).
pub fn epsilon2_domain(v: &DMatrix<f64>, domain_norm: &NormSpec) -> Result<f64> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteEntries);
    }
    domain_norm.check_dim(v.ncols())?;
    let (p, scale) = diagonal_reduction(domain_norm);
    let reduced = match &scale {
        Some(s) => scale_columns(v, s),
        None => v.clone(),
    };
    let m = reduced.ncols();
    match p {
        LpKind::Two => Ok(max_singular_value(&reduced)),
        LpKind::One => Ok((0..m)
            .map(|j| reduced.column(j).norm())
            .fold(0.0, f64::max)),
        LpKind::Inf => {
            if m > MAX_EXACT_SIGN_DIM {
                return Err(Error::DimensionTooLargeForExact {
                    operation: "epsilon2 over an linf ball",
                    max: MAX_EXACT_SIGN_DIM,
                    got: m,
                });
            }
            Ok(signed_vertices(m)
                .map(|s| (&reduced * DVector::from_vec(s)).norm())
                .fold(0.0, f64::max))
        }
    }
}

/// `sup { range_norm(u h) : ||h||_2 <= 1 }`, the operator norm of
/// `u : l2 -> F` (exact).
pub fn epsilon2_range(u: &DMatrix<f64>, range_norm: &NormSpec) -> Result<f64> {
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteEntries);
    }
    range_norm.check_dim(u.nrows())?;
    let (p, scale) = diagonal_reduction(range_norm);
    let reduced = match &scale {
        Some(s) => scale_rows(u, s),
        None => u.clone(),
    };
    let rows = reduced.nrows();
    match p {
        LpKind::Two => Ok(max_singular_value(&reduced)),
        // ||u h||_inf maximizes one row at a time.
        LpKind::Inf => Ok((0..rows)
            .map(|i| reduced.row(i).norm())
            .fold(0.0, f64::max)),
        // ||u h||_1 = max over sign vectors s of <s, u h> = ||u^T s||_2.
        LpKind::One => {
            if rows > MAX_EXACT_SIGN_DIM {
                return Err(Error::DimensionTooLargeForExact {
                    operation: "epsilon2 into an l1 space",
                    max: MAX_EXACT_SIGN_DIM,
                    got: rows,
                });
            }
            Ok(signed_vertices(rows)
                .map(|s| (reduced.transpose() * DVector::from_vec(s)).norm())
                .fold(0.0, f64::max))
        }
    }
}

/// Flips the sign so the vector is the lexicographically smaller of `{v,-v}`;
/// the deterministic tie-break among equal-value argpoints.
fn lex_canonical(mut v: DVector<f64>) -> DVector<f64> {
    v.iter_mut().for_each(|x| {
        if *x == 0.0 {
            *x = 0.0; // normalize -0.0
        }
    });
    for i in 0..v.len() {
        if v[i] != 0.0 {
            if v[i] > 0.0 {
                v.neg_mut();
            }
            break;
        }
    }
    v
}

fn better(mode: ExtremeMode, candidate: f64, incumbent: f64) -> bool {
    match mode {
        ExtremeMode::Min => candidate < incumbent,
        ExtremeMode::Max => candidate > incumbent,
    }
}

fn lex_less(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Candidate tracker with the lexicographic tie-break.
struct Best {
    value: f64,
    point: Option<DVector<f64>>,
    mode: ExtremeMode,
}

impl Best {
    fn new(mode: ExtremeMode) -> Self {
        Best {
            value: match mode {
                ExtremeMode::Min => f64::INFINITY,
                ExtremeMode::Max => f64::NEG_INFINITY,
            },
            point: None,
            mode,
        }
    }

    fn offer(&mut self, value: f64, point: DVector<f64>) {
        if better(self.mode, value, self.value) || self.point.is_none() {
            self.value = value;
            self.point = Some(point);
        } else if value == self.value {
            let canon = lex_canonical(point);
            if let Some(p) = &self.point {
                if lex_less(&canon, p) {
                    self.point = Some(canon);
                }
            }
        }
    }

    fn merge(mut self, other: Best) -> Best {
        if let Some(p) = other.point {
            self.offer(other.value, p);
        }
        self
    }
}

/// Exact extremes of `||B xi||_2` over the Euclidean unit sphere via the
/// spectrum of `B^T B`; returns the unit eigenvector as well.
fn euclidean_extreme(b: &DMatrix<f64>, mode: ExtremeMode) -> DVector<f64> {
    let m = b.ncols();
    let gram = b.transpose() * b;
    let eig = nalgebra::SymmetricEigen::new(gram);
    let mut idx = 0;
    for i in 1..m {
        if better(mode, eig.eigenvalues[i], eig.eigenvalues[idx]) {
            idx = i;
        }
    }
    let mut v: DVector<f64> = eig.eigenvectors.column(idx).into();
    let norm = v.norm();
    if norm > 0.0 {
        v /= norm;
    } else {
        v[0] = 1.0;
    }
    v
}

/// Minimizes `|| sum_j lambda_j cols_j ||_2` over the simplex
/// `sum lambda = 1, lambda >= 0` by the KKT system of the current support.
fn simplex_qp_min(cols: &[DVector<f64>]) -> Option<(f64, Vec<f64>)> {
    let k = cols.len();
    let mut kkt = DMatrix::zeros(k + 1, k + 1);
    for i in 0..k {
        for j in 0..k {
            kkt[(i, j)] = 2.0 * cols[i].dot(&cols[j]);
        }
        kkt[(i, k)] = 1.0;
        kkt[(k, i)] = 1.0;
    }
    let mut rhs = DVector::zeros(k + 1);
    rhs[k] = 1.0;
    let lu = kkt.full_piv_lu();
    if !lu.is_invertible() {
        return None;
    }
    let sol = lu.solve(&rhs)?;
    let lambda: Vec<f64> = (0..k).map(|i| sol[i]).collect();
    if lambda.iter().any(|&l| l < -1e-10) {
        return None;
    }
    let total: f64 = lambda.iter().map(|l| l.max(0.0)).sum();
    if total <= 0.0 {
        return None;
    }
    let lambda: Vec<f64> = lambda.iter().map(|l| l.max(0.0) / total).collect();
    let mut image = DVector::zeros(cols[0].len());
    for (c, &l) in cols.iter().zip(&lambda) {
        image += c * l;
    }
    Some((image.norm(), lambda))
}

/// Exact minimum of `||B x||_2` over the l1 unit sphere: enumerates every
/// support set and sign pattern (one facet simplex each).
fn l1_sphere_min(b: &DMatrix<f64>) -> DVector<f64> {
    let m = b.ncols();
    let columns: Vec<DVector<f64>> = (0..m).map(|j| b.column(j).into()).collect();
    let mut best = Best::new(ExtremeMode::Min);
    for mask in 1usize..(1 << m) {
        let support: Vec<usize> = (0..m).filter(|j| mask >> j & 1 == 1).collect();
        let k = support.len();
        // Global sign flip is free: pin the first supported coordinate to +.
        for signs in 0..1usize << (k - 1) {
            let sigma: Vec<f64> = (0..k)
                .map(|i| {
                    if i > 0 && signs >> (i - 1) & 1 == 1 {
                        -1.0
                    } else {
                        1.0
                    }
                })
                .collect();
            let cols: Vec<DVector<f64>> = support
                .iter()
                .zip(&sigma)
                .map(|(&j, &s)| &columns[j] * s)
                .collect();
            if k == 1 {
                let mut x = DVector::zeros(m);
                x[support[0]] = sigma[0];
                best.offer(cols[0].norm(), x);
                continue;
            }
            if let Some((value, lambda)) = simplex_qp_min(&cols) {
                let mut x = DVector::zeros(m);
                for i in 0..k {
                    x[support[i]] = sigma[i] * lambda[i];
                }
                best.offer(value, x);
            }
        }
    }
    best.point.expect("vertices always feasible")
}

/// Exact minimum of `||B x||_2` over the linf unit sphere: fixes one
/// coordinate to 1 per facet and enumerates clamp patterns of the rest.
fn linf_sphere_min(b: &DMatrix<f64>) -> DVector<f64> {
    let m = b.ncols();
    let hess = b.transpose() * b;
    let mut best = Best::new(ExtremeMode::Min);
    for fixed in 0..m {
        let free_all: Vec<usize> = (0..m).filter(|&j| j != fixed).collect();
        // Each remaining coordinate is interior (0), clamped +1 (1) or -1 (2).
        let patterns = 3usize.pow(free_all.len() as u32);
        for code in 0..patterns {
            let mut c = code;
            let mut x = DVector::zeros(m);
            x[fixed] = 1.0;
            let mut free: Vec<usize> = Vec::new();
            for &j in &free_all {
                match c % 3 {
                    0 => free.push(j),
                    1 => x[j] = 1.0,
                    _ => x[j] = -1.0,
                }
                c /= 3;
            }
            if !free.is_empty() {
                let k = free.len();
                let hff = DMatrix::from_fn(k, k, |a, bb| hess[(free[a], free[bb])]);
                let mut rhs = DVector::zeros(k);
                for a in 0..k {
                    let mut acc = 0.0;
                    for j in 0..m {
                        if !free.contains(&j) {
                            acc += hess[(free[a], j)] * x[j];
                        }
                    }
                    rhs[a] = -acc;
                }
                let lu = hff.full_piv_lu();
                if !lu.is_invertible() {
                    continue; // singular reduced Hessian: a coarser face covers it
                }
                match lu.solve(&rhs) {
                    Some(sol) => {
                        if (0..k).any(|a| sol[a].abs() > 1.0 + 1e-10) {
                            continue; // interior critical point escapes the box
                        }
                        for a in 0..k {
                            x[free[a]] = sol[a].clamp(-1.0, 1.0);
                        }
                    }
                    None => continue,
                }
            }
            best.offer((b * &x).norm(), x);
        }
    }
    best.point.expect("corners always feasible")
}

/// Builds the net points on the unit sphere of a plain `lp` norm, as face
/// grids with the given parameter mesh. Faces carry vertices and edges
/// exactly, so net error is second order at smooth extrema and zero at
/// polyhedral vertices.
fn lp_sphere_net(p: LpKind, dim: usize, mesh: f64) -> Vec<DVector<f64>> {
    let mut points = Vec::new();
    match (p, dim) {
        (_, 1) => {
            points.push(DVector::from_vec(vec![1.0]));
            points.push(DVector::from_vec(vec![-1.0]));
        }
        (LpKind::Two, 2) => {
            let steps = (2.0 * std::f64::consts::PI / mesh).ceil() as usize;
            for i in 0..steps {
                let t = 2.0 * std::f64::consts::PI * i as f64 / steps as f64;
                points.push(DVector::from_vec(vec![t.cos(), t.sin()]));
            }
        }
        (LpKind::Two, 3) => {
            let polar = (std::f64::consts::PI / mesh).ceil() as usize;
            let azimuth = (2.0 * std::f64::consts::PI / mesh).ceil() as usize;
            for i in 0..=polar {
                let theta = std::f64::consts::PI * i as f64 / polar as f64;
                let (st, ct) = theta.sin_cos();
                for j in 0..azimuth {
                    let phi = 2.0 * std::f64::consts::PI * j as f64 / azimuth as f64;
                    points.push(DVector::from_vec(vec![st * phi.cos(), st * phi.sin(), ct]));
                    if i == 0 || i == polar {
                        break; // poles once
                    }
                }
            }
        }
        (LpKind::One, 2) => {
            let steps = (1.0 / mesh).ceil() as usize;
            for s in signed_vertices(2) {
                for k in 0..=steps {
                    let l = k as f64 / steps as f64;
                    let v = vec![s[0] * l, s[1] * (1.0 - l)];
                    points.push(DVector::from_vec(v.iter().map(|x| -x).collect()));
                    points.push(DVector::from_vec(v));
                }
            }
        }
        (LpKind::One, 3) => {
            let steps = (1.0 / mesh).ceil() as usize;
            for s in signed_vertices(3) {
                for k1 in 0..=steps {
                    for k2 in 0..=(steps - k1) {
                        let l1 = k1 as f64 / steps as f64;
                        let l2 = k2 as f64 / steps as f64;
                        let l3 = 1.0 - l1 - l2;
                        let v = vec![s[0] * l1, s[1] * l2, s[2] * l3];
                        points.push(DVector::from_vec(v.iter().map(|x| -x).collect()));
                        points.push(DVector::from_vec(v));
                    }
                }
            }
        }
        (LpKind::Inf, 2) => {
            let steps = (2.0 / mesh).ceil() as usize;
            for fixed in 0..2 {
                for k in 0..=steps {
                    let t = -1.0 + 2.0 * k as f64 / steps as f64;
                    let mut v = vec![0.0; 2];
                    v[fixed] = 1.0;
                    v[1 - fixed] = t;
                    points.push(DVector::from_vec(v.iter().map(|x| -x).collect()));
                    points.push(DVector::from_vec(v));
                }
            }
        }
        (LpKind::Inf, 3) => {
            let steps = (2.0 / mesh).ceil() as usize;
            for fixed in 0..3 {
                for k1 in 0..=steps {
                    for k2 in 0..=steps {
                        let a = -1.0 + 2.0 * k1 as f64 / steps as f64;
                        let b = -1.0 + 2.0 * k2 as f64 / steps as f64;
                        let mut v = vec![0.0; 3];
                        v[fixed] = 1.0;
                        let mut rest = (0..3).filter(|&j| j != fixed);
                        v[rest.next().unwrap()] = a;
                        v[rest.next().unwrap()] = b;
                        points.push(DVector::from_vec(v.iter().map(|x| -x).collect()));
                        points.push(DVector::from_vec(v));
                    }
                }
            }
        }
        _ => unreachable!("net oracle requested beyond dimension 3"),
    }
    points
}

/// Coordinate pattern search with radial reprojection and shrinking radius.
/// Only ever accepts improvements, so it can sharpen but never worsen a
/// candidate; used to refine both net and subgradient results down to the
/// kink scale.
fn compass_polish<O, P>(
    objective: &O,
    project: &P,
    mode: ExtremeMode,
    mut center: DVector<f64>,
    mut radius: f64,
) -> (f64, DVector<f64>)
where
    O: Fn(&DVector<f64>) -> f64,
    P: Fn(&DVector<f64>) -> Option<DVector<f64>>,
{
    let m = center.len();
    let mut center_value = objective(&center);
    while radius > 1e-9 {
        let mut improved = false;
        for i in 0..m {
            for sign in [1.0, -1.0] {
                let mut cand = center.clone();
                cand[i] += sign * radius;
                if let Some(p) = project(&cand) {
                    let v = objective(&p);
                    if better(mode, v, center_value) {
                        center = p;
                        center_value = v;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            radius *= 0.35;
        }
    }
    (center_value, center)
}

fn check_extremize_inputs(
    t_matrix: &DMatrix<f64>,
    domain_norm: &NormSpec,
    range_norm: &NormSpec,
) -> Result<()> {
    if t_matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteEntries);
    }
    domain_norm.validate()?;
    range_norm.validate()?;
    domain_norm.check_dim(t_matrix.ncols())?;
    range_norm.check_dim(t_matrix.nrows())?;
    Ok(())
}

/// Recomputes the value from the argpoint so the reported pair is always
/// self-consistent, and canonicalizes the argpoint sign.
fn finish_result(
    t_matrix: &DMatrix<f64>,
    domain_norm: &NormSpec,
    range_norm: &NormSpec,
    mode: ExtremeMode,
    argpoint: DVector<f64>,
    certified: bool,
) -> Result<ExtremizationResult> {
    let norm = domain_norm.eval(argpoint.as_slice());
    if norm <= 0.0 || !norm.is_finite() {
        return Err(Error::InvalidValue {
            field: "argpoint",
            message: "extremizer left the unit sphere".into(),
        });
    }
    let x = lex_canonical(argpoint / norm);
    let value = range_norm.eval((t_matrix * &x).as_slice());
    Ok(ExtremizationResult {
        value,
        argpoint: x,
        mode,
        certified,
    })
}

/// Net-oracle extremization at the given mesh; exact face parametrization,
/// domain dimension <= 3 only.
pub fn extremize_net(
    t_matrix: &DMatrix<f64>,
    domain_norm: &NormSpec,
    range_norm: &NormSpec,
    mode: ExtremeMode,
    mesh: f64,
) -> Result<ExtremizationResult> {
    check_extremize_inputs(t_matrix, domain_norm, range_norm)?;
    let m = t_matrix.ncols();
    if m > 3 {
        return Err(Error::DimensionTooLargeForExact {
            operation: "net-oracle extremization",
            max: 3,
            got: m,
        });
    }
    let (p, scale) = diagonal_reduction(domain_norm);
    // spec(x) = lp(diag(scale) x): net y on the lp sphere maps back through
    // x = diag(1/scale) y, and T x = (T diag(1/scale)) y.
    let a = match &scale {
        Some(s) => scale_columns(t_matrix, s),
        None => t_matrix.clone(),
    };
    let net = lp_sphere_net(p, m, mesh);
    let best = net
        .par_chunks(8192)
        .map(|chunk| {
            let mut local = Best::new(mode);
            for y in chunk {
                local.offer(range_norm.eval((&a * y).as_slice()), y.clone());
            }
            local
        })
        .reduce(|| Best::new(mode), Best::merge);
    let y = best.point.expect("net is nonempty");
    let x = match &scale {
        Some(s) => DVector::from_fn(m, |i, _| y[i] / s[i]),
        None => y,
    };
    // Refine inside the winning cell: the coarse net localizes the global
    // basin, the polish removes the O(mesh) error at range-norm kinks.
    let objective = |x: &DVector<f64>| range_norm.eval((t_matrix * x).as_slice());
    let project = |x: &DVector<f64>| -> Option<DVector<f64>> {
        let n = domain_norm.eval(x.as_slice());
        if n > 0.0 {
            Some(x / n)
        } else {
            None
        }
    };
    let start = project(&x).expect("net points are on the sphere");
    let (_, refined) = compass_polish(&objective, &project, mode, start, mesh);
    finish_result(t_matrix, domain_norm, range_norm, mode, refined, true)
}

/// Multi-start projected subgradient (32 starts, 500 iterations, step
/// `1/sqrt(iter)`) followed by a compass polish around the best iterate.
/// Never certified.
pub fn extremize_heuristic(
    t_matrix: &DMatrix<f64>,
    domain_norm: &NormSpec,
    range_norm: &NormSpec,
    mode: ExtremeMode,
) -> Result<ExtremizationResult> {
    check_extremize_inputs(t_matrix, domain_norm, range_norm)?;
    let m = t_matrix.ncols();
    let objective = |x: &DVector<f64>| range_norm.eval((t_matrix * x).as_slice());
    let project = |x: &DVector<f64>| -> Option<DVector<f64>> {
        let n = domain_norm.eval(x.as_slice());
        if n > 0.0 {
            Some(x / n)
        } else {
            None
        }
    };

    // Deterministic well-spread starts: axes, a few sign vertices, then
    // fixed-stream Gaussian directions up to 32.
    let mut starts: Vec<DVector<f64>> = Vec::with_capacity(32);
    for i in 0..m.min(8) {
        let mut e = DVector::zeros(m);
        e[i] = 1.0;
        starts.push(e);
    }
    for s in signed_vertices(m.min(4)).take(8) {
        let mut v = DVector::zeros(m);
        for (i, si) in s.iter().enumerate() {
            v[i] = *si;
        }
        starts.push(v);
    }
    let mut rng = SeedStream::new(HEURISTIC_SEED).rng();
    while starts.len() < 32 {
        starts.push(DVector::from_fn(m, |_, _| rng.sample(StandardNormal)));
    }

    let runs: Vec<Best> = starts
        .into_par_iter()
        .map(|start| {
            let mut best = Best::new(mode);
            let Some(mut x) = project(&start) else {
                return best;
            };
            best.offer(objective(&x), x.clone());
            for iter in 1..=500usize {
                let image = t_matrix * &x;
                let g_range = range_norm.subgradient(image.as_slice());
                let mut g = t_matrix.transpose() * DVector::from_vec(g_range);
                let g_norm = g.norm();
                if g_norm == 0.0 {
                    break;
                }
                g /= g_norm;
                let step = 1.0 / (iter as f64).sqrt();
                let stepped = match mode {
                    ExtremeMode::Max => &x + &g * step,
                    ExtremeMode::Min => &x - &g * step,
                };
                match project(&stepped) {
                    Some(next) => {
                        x = next;
                        best.offer(objective(&x), x.clone());
                    }
                    None => break,
                }
            }
            let center = best.point.clone().expect("start was feasible");
            let (value, point) = compass_polish(&objective, &project, mode, center, 5e-2);
            best.offer(value, point);
            best
        })
        .collect();
    let best = runs.into_iter().fold(Best::new(mode), Best::merge);
    let point = best.point.ok_or(Error::InvalidValue {
        field: "t_matrix",
        message: "no feasible start for extremization".into(),
    })?;
    finish_result(t_matrix, domain_norm, range_norm, mode, point, false)
}

/// Extremizes `x -> range_norm(T x)` over the domain unit sphere, picking
/// the sharpest available tier: exact spectra for Euclidean pairs, exact
/// vertex/face programs for polyhedral domains with Euclidean-type ranges,
/// the net oracle up to dimension 3, and the heuristic beyond.
pub fn sphere_extremize(
    t_matrix: &DMatrix<f64>,
    domain_norm: &NormSpec,
    range_norm: &NormSpec,
    mode: ExtremeMode,
) -> Result<ExtremizationResult> {
    check_extremize_inputs(t_matrix, domain_norm, range_norm)?;
    let m = t_matrix.ncols();
    let (dp, dscale) = diagonal_reduction(domain_norm);
    let (rp, rscale) = diagonal_reduction(range_norm);

    // T x with x = diag(1/s) y: the lp base sphere in y coordinates.
    let a = match &dscale {
        Some(s) => scale_columns(t_matrix, s),
        None => t_matrix.clone(),
    };
    let back_map = |y: DVector<f64>| -> DVector<f64> {
        match &dscale {
            Some(s) => DVector::from_fn(m, |i, _| y[i] / s[i]),
            None => y,
        }
    };

    if dp == LpKind::Two && rp == LpKind::Two {
        let b = match &rscale {
            Some(s) => scale_rows(&a, s),
            None => a.clone(),
        };
        let y = euclidean_extreme(&b, mode);
        return finish_result(t_matrix, domain_norm, range_norm, mode, back_map(y), true);
    }

    if dp != LpKind::Two {
        match mode {
            ExtremeMode::Max => match dp {
                // Convex objective: the maximum sits at a vertex of the ball.
                LpKind::One => {
                    let mut best = Best::new(mode);
                    for j in 0..m {
                        let mut y = DVector::zeros(m);
                        y[j] = 1.0;
                        best.offer(range_norm.eval(a.column(j).as_slice()), y);
                    }
                    let y = best.point.expect("columns exist");
                    return finish_result(
                        t_matrix,
                        domain_norm,
                        range_norm,
                        mode,
                        back_map(y),
                        true,
                    );
                }
                LpKind::Inf if m <= MAX_EXACT_SIGN_DIM => {
                    let mut best = Best::new(mode);
                    for s in signed_vertices(m) {
                        let y = DVector::from_vec(s);
                        best.offer(range_norm.eval((&a * &y).as_slice()), y);
                    }
                    let y = best.point.expect("vertices exist");
                    return finish_result(
                        t_matrix,
                        domain_norm,
                        range_norm,
                        mode,
                        back_map(y),
                        true,
                    );
                }
                _ => {}
            },
            ExtremeMode::Min if rp == LpKind::Two && m <= MAX_EXACT_FACE_DIM => {
                let b = match &rscale {
                    Some(s) => scale_rows(&a, s),
                    None => a.clone(),
                };
                let y = match dp {
                    LpKind::One => l1_sphere_min(&b),
                    LpKind::Inf => linf_sphere_min(&b),
                    LpKind::Two => unreachable!(),
                };
                return finish_result(
                    t_matrix,
                    domain_norm,
                    range_norm,
                    mode,
                    back_map(y),
                    true,
                );
            }
            _ => {}
        }
    }

    if m <= 3 {
        return extremize_net(t_matrix, domain_norm, range_norm, mode, NET_MESH);
    }
    extremize_heuristic(t_matrix, domain_norm, range_norm, mode)
}
