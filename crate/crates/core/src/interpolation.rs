//! The interpolation path between two comparable Gaussian families and the
//! monotone curve it induces.
//!
//! For families `{X_i}`, `{Y_i}` and scalars `{g_i}` the path is
//! `Z(theta) = (cos(theta) X_i + sin(theta) Y_i, sin(theta) g_i)_i` on
//! `[0, pi/2]`, and the curve is `h(theta) = E phi(Z(theta))` with
//! `phi = G(F_1(y_1) + z_1, ..., F_N(y_N) + z_N)`. The smoothing `G` is the
//! inverse-temperature log-sum-exp: it is 1-Lipschitz for the max norm,
//! shifts by `t` under `alpha + t 1`, has nonpositive off-diagonal Hessian
//! entries and zero Hessian row sums in closed form, and envelopes the true
//! maximum within `log(N) / beta`. Under the comparison hypotheses `h` is
//! nondecreasing, which the Monte Carlo curve resolves sharply because all
//! grid points share each sample's draws.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gaussian::{FamilyDraw, IndexedGaussianFamily};
use crate::inequalities::{verify_slepian_conditions, SlepianConditionReport};
use crate::mc::{self, MCEstimate};
use crate::norms::LipschitzFnSpec;
use crate::rng::SeedStream;

/// Interpolation setup: the three independent families, per-index Lipschitz
/// functions, the theta grid and the smoothing temperature.
#[derive(Debug, Clone)]
pub struct InterpolationConfig {
    pub fam_x: IndexedGaussianFamily,
    pub fam_y: IndexedGaussianFamily,
    pub fam_g: IndexedGaussianFamily,
    /// One function per index point; a single entry broadcasts.
    pub f_specs: Vec<LipschitzFnSpec>,
    /// Increasing grid from 0 to pi/2.
    pub theta_grid: Vec<f64>,
    pub beta: f64,
}

impl InterpolationConfig {
    /// Structural validation plus the exact comparison-hypothesis check;
    /// an unsatisfied hypothesis is reported, not fatal.
    pub fn validate(&self) -> Result<SlepianConditionReport> {
        if !self.fam_x.shares_index_set(&self.fam_y)
            || !self.fam_x.shares_index_set(&self.fam_g)
        {
            return Err(Error::IndexMismatch {
                context: "interpolation families must share the index set",
            });
        }
        if self.fam_x.value_dim() != self.fam_y.value_dim() {
            return Err(Error::IndexMismatch {
                context: "interpolation families must share the value dimension",
            });
        }
        if self.fam_g.value_dim() != 1 {
            return Err(Error::IndexMismatch {
                context: "scalar family must have value dimension 1",
            });
        }
        let d = self.fam_x.value_dim();
        let n = self.fam_x.len();
        if self.f_specs.len() != 1 && self.f_specs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.f_specs.len(),
                context: "one Lipschitz function per index point",
            });
        }
        for spec in &self.f_specs {
            spec.check_dim(d)?;
        }
        if !self.beta.is_finite() || self.beta <= 0.0 {
            return Err(Error::InvalidValue {
                field: "beta",
                message: "smoothing temperature must be finite and positive".into(),
            });
        }
        let grid = &self.theta_grid;
        let half_pi = std::f64::consts::FRAC_PI_2;
        let ok = grid.len() >= 2
            && grid[0].abs() <= 1e-12
            && (grid[grid.len() - 1] - half_pi).abs() <= 1e-12
            && grid.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::InvalidValue {
                field: "theta_grid",
                message: "grid must increase from 0 to pi/2".into(),
            });
        }
        verify_slepian_conditions(&self.fam_x, &self.fam_y, &self.fam_g)
    }
}

/// Uniform grid of `points` values from 0 to pi/2 inclusive.
pub fn uniform_theta_grid(points: usize) -> Vec<f64> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    (0..points)
        .map(|i| half_pi * i as f64 / (points - 1) as f64)
        .collect()
}

/// The path value at `theta` for one joint draw of the three families:
/// per-index pairs `(cos(theta) X_i + sin(theta) Y_i, sin(theta) g_i)`.
pub fn interpolate_sample(
    theta: f64,
    x_draw: &FamilyDraw,
    y_draw: &FamilyDraw,
    g_draw: &FamilyDraw,
) -> Result<Vec<(nalgebra::DVector<f64>, f64)>> {
    if x_draw.len() != y_draw.len() || x_draw.len() != g_draw.len() {
        return Err(Error::DimensionMismatch {
            expected: x_draw.len(),
            got: y_draw.len().min(g_draw.len()),
            context: "interpolation draws",
        });
    }
    let (sin, cos) = theta.sin_cos();
    x_draw
        .iter()
        .zip(y_draw)
        .zip(g_draw)
        .map(|((x, y), g)| {
            if x.len() != y.len() {
                return Err(Error::DimensionMismatch {
                    expected: x.len(),
                    got: y.len(),
                    context: "interpolation draw coordinates",
                });
            }
            Ok((x * cos + y * sin, sin * g[0]))
        })
        .collect()
}

/// `log-sum-exp(alpha; beta) = max(alpha) + log sum exp(beta (alpha - max))
/// / beta`, the smooth stand-in for the coordinate maximum.
pub fn smoothed_max(alpha: &[f64], beta: f64) -> f64 {
    debug_assert!(beta > 0.0);
    let m = alpha.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = alpha.iter().map(|a| (beta * (a - m)).exp()).sum();
    m + sum.ln() / beta
}

/// The gradient `softmax(beta  alpha)`; entries are positive and sum to 1.
pub fn smoothed_max_gradient(alpha: &[f64], beta: f64) -> Vec<f64> {
    let m = alpha.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = alpha.iter().map(|a| (beta * (a - m)).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

/// Closed-form Hessian `beta (diag(p) - p p^T)` with `p = softmax(beta
/// alpha)`: off-diagonal entries are nonpositive and every row sums to zero.
pub fn smoothed_max_hessian(alpha: &[f64], beta: f64) -> DMatrix<f64> {
    let p = smoothed_max_gradient(alpha, beta);
    let n = p.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            beta * (p[i] - p[i] * p[j])
        } else {
            -beta * p[i] * p[j]
        }
    })
}

/// The Monte Carlo curve: one estimate per grid point, sharing draws across
/// the grid, plus the paired increment estimates.
#[derive(Debug, Clone)]
pub struct HCurve {
    pub points: Vec<(f64, MCEstimate)>,
    /// `h(theta_{k+1}) - h(theta_k)` from the same draws.
    pub increments: Vec<MCEstimate>,
    /// Set when the comparison hypotheses did not verify; the curve is then
    /// not expected to be monotone.
    pub slepian_warning: bool,
}

/// Estimates `h` on the configured grid with common random numbers: each
/// sample draws the three families once and evaluates every grid point on
/// those draws.
pub fn h_curve(
    config: &InterpolationConfig,
    samples: usize,
    confidence: f64,
    stream: &SeedStream,
) -> Result<HCurve> {
    let slepian = config.validate()?;
    let n = config.fam_x.len();
    let specs: Vec<&LipschitzFnSpec> = match config.f_specs.len() {
        1 => vec![&config.f_specs[0]; n],
        _ => config.f_specs.iter().collect(),
    };
    let grid = &config.theta_grid;
    let trig: Vec<(f64, f64)> = grid.iter().map(|t| t.sin_cos()).collect();

    let run = mc::mc_run_vec(samples, grid.len(), confidence, stream, |rng| {
        let x = config.fam_x.sample_with(rng);
        let y = config.fam_y.sample_with(rng);
        let g = config.fam_g.sample_with(rng);
        let mut alpha = vec![0.0; n];
        trig.iter()
            .map(|&(sin, cos)| {
                for i in 0..n {
                    let z = &x[i] * cos + &y[i] * sin;
                    alpha[i] = specs[i].eval(z.as_slice()) + sin * g[i][0];
                }
                smoothed_max(&alpha, config.beta)
            })
            .collect()
    })?;

    Ok(HCurve {
        points: grid.iter().cloned().zip(run.components).collect(),
        increments: run.increments,
        slepian_warning: !slepian.satisfied,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{build_scaled_family, build_sphere_family};
    use crate::mc::mc_run;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn unit(n: usize, i: usize) -> Vec<f64> {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    }

    fn triple_config(points: &[Vec<f64>], d: usize, beta: f64, grid: usize) -> InterpolationConfig {
        InterpolationConfig {
            fam_x: build_sphere_family(points, d).unwrap(),
            fam_y: build_scaled_family(points, d).unwrap(),
            fam_g: build_sphere_family(points, 1).unwrap(),
            f_specs: vec![LipschitzFnSpec::euclidean_norm(d)],
            theta_grid: uniform_theta_grid(grid),
            beta,
        }
    }

    #[test]
    fn smoothed_max_analytic_values() {
        assert_abs_diff_eq!(smoothed_max(&[0.0, 0.0], 1.0), 2f64.ln(), epsilon = 1e-15);
        let h = smoothed_max_hessian(&[0.0, 0.0], 1.0);
        assert_abs_diff_eq!(h[(0, 0)], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(h[(0, 1)], -0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(h[(1, 1)], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn shift_property_and_envelope() {
        let mut rng = SeedStream::new(7).rng();
        for _ in 0..1000 {
            let n = 1 + (rng.gen::<u64>() % 6) as usize;
            let alpha: Vec<f64> = (0..n).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
            let beta = 0.5 + 10.0 * rng.gen::<f64>();
            let t = 2.0 * rng.sample::<f64, _>(StandardNormal);
            let shifted: Vec<f64> = alpha.iter().map(|a| a + t).collect();
            let lhs = smoothed_max(&shifted, beta);
            let rhs = smoothed_max(&alpha, beta) + t;
            assert!((lhs - rhs).abs() <= 1e-12, "{lhs} vs {rhs}");

            let max = alpha.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sm = smoothed_max(&alpha, beta);
            assert!(sm >= max - 1e-12);
            assert!(sm <= max + (n as f64).ln() / beta + 1e-12);
        }
    }

    #[test]
    fn hessian_identities_hold_in_closed_form() {
        let mut rng = SeedStream::new(8).rng();
        for _ in 0..200 {
            let n = 1 + (rng.gen::<u64>() % 5) as usize;
            let alpha: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let beta = 0.2 + 20.0 * rng.gen::<f64>();
            let h = smoothed_max_hessian(&alpha, beta);
            for i in 0..n {
                let row_sum: f64 = (0..n).map(|j| h[(i, j)]).sum();
                assert!(row_sum.abs() <= 1e-12, "row sum {row_sum}");
                for j in 0..n {
                    if i != j {
                        assert!(h[(i, j)] <= 0.0);
                    }
                }
            }
            let p = smoothed_max_gradient(&alpha, beta);
            let total: f64 = p.iter().sum();
            assert!((total - 1.0).abs() <= 1e-12);
        }
        // single index: the zero 1x1 matrix
        let h = smoothed_max_hessian(&[1.7], 3.0);
        assert_abs_diff_eq!(h[(0, 0)], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let alpha = [0.3, -1.1, 0.8];
        let beta = 2.5;
        let h = smoothed_max_hessian(&alpha, beta);
        let step = 1e-4;
        for i in 0..3 {
            for j in 0..3 {
                let mut probe = |di: f64, dj: f64| {
                    let mut a = alpha;
                    a[i] += di;
                    a[j] += dj;
                    smoothed_max(&a, beta)
                };
                let fd = (probe(step, step) - probe(step, -step) - probe(-step, step)
                    + probe(-step, -step))
                    / (4.0 * step * step);
                assert!((fd - h[(i, j)]).abs() < 1e-6, "({i},{j}): {fd} vs {}", h[(i, j)]);
            }
        }
    }

    #[test]
    fn smoothed_max_is_lipschitz_and_monotone() {
        let mut rng = SeedStream::new(9).rng();
        for _ in 0..2000 {
            let n = 1 + (rng.gen::<u64>() % 5) as usize;
            let a: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let beta = 0.5 + 5.0 * rng.gen::<f64>();
            let linf: f64 = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(
                (smoothed_max(&a, beta) - smoothed_max(&b, beta)).abs() <= linf + 1e-9
            );
            let bumped: Vec<f64> = a.iter().enumerate().map(|(i, x)| if i == 0 { x + 0.3 } else { *x }).collect();
            assert!(smoothed_max(&bumped, beta) >= smoothed_max(&a, beta) - 1e-12);
        }
    }

    #[test]
    fn interpolate_endpoints() {
        let points = vec![unit(2, 0), unit(2, 1)];
        let fam_x = build_sphere_family(&points, 2).unwrap();
        let fam_y = build_scaled_family(&points, 2).unwrap();
        let fam_g = build_sphere_family(&points, 1).unwrap();
        let stream = SeedStream::new(10);
        let mut rng = stream.rng();
        let x = fam_x.sample_with(&mut rng);
        let y = fam_y.sample_with(&mut rng);
        let g = fam_g.sample_with(&mut rng);

        let at0 = interpolate_sample(0.0, &x, &y, &g).unwrap();
        for (i, (yi, zi)) in at0.iter().enumerate() {
            assert_abs_diff_eq!((yi - &x[i]).norm(), 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(*zi, 0.0);
        }
        let at_end = interpolate_sample(std::f64::consts::FRAC_PI_2, &x, &y, &g).unwrap();
        for (i, (yi, zi)) in at_end.iter().enumerate() {
            assert!((yi - &y[i]).norm() < 1e-15);
            assert_abs_diff_eq!(*zi, g[i][0], epsilon = 1e-15);
        }
        let mid = interpolate_sample(std::f64::consts::FRAC_PI_4, &x, &y, &g).unwrap();
        let root_half = 0.5f64.sqrt();
        for (i, (yi, _)) in mid.iter().enumerate() {
            let want = (&x[i] + &y[i]) * root_half;
            assert!((yi - want).norm() < 1e-12);
        }
    }

    #[test]
    fn config_validation_catches_bad_grids() {
        let mut config = triple_config(&[unit(2, 0)], 2, 5.0, 5);
        config.theta_grid = vec![0.1, 1.0];
        assert!(matches!(
            config.validate(),
            Err(Error::InvalidValue { field: "theta_grid", .. })
        ));
        let mut config = triple_config(&[unit(2, 0)], 2, 5.0, 5);
        config.beta = 0.0;
        assert!(matches!(
            config.validate(),
            Err(Error::InvalidValue { field: "beta", .. })
        ));
    }

    #[test]
    fn single_index_curve_is_flat() {
        let config = triple_config(&[unit(2, 0)], 2, 10.0, 5);
        let curve = h_curve(&config, 40_000, 0.95, &SeedStream::new(11).substream(1)).unwrap();
        assert!(!curve.slepian_warning);
        for inc in &curve.increments {
            assert!(
                inc.mean.abs() <= 4.0 * inc.std_error + 1e-9,
                "increment {inc:?}"
            );
        }
    }

    #[test]
    fn two_point_curve_is_monotone() {
        let config = triple_config(&[unit(2, 0), unit(2, 1)], 2, 20.0, 9);
        let curve = h_curve(&config, 50_000, 0.95, &SeedStream::new(12).substream(2)).unwrap();
        assert!(!curve.slepian_warning);
        for inc in &curve.increments {
            assert!(
                inc.mean >= -4.0 * inc.std_error,
                "negative increment {inc:?}"
            );
        }
    }

    #[test]
    fn endpoints_match_direct_estimates() {
        let points = vec![unit(2, 0), unit(2, 1)];
        let d = 2;
        let beta = 20.0;
        let config = triple_config(&points, d, beta, 9);
        let curve = h_curve(&config, 50_000, 0.95, &SeedStream::new(13).substream(0)).unwrap();

        // h(0) against a fresh-stream direct estimate of E lse(F(X)).
        let fam_x = build_sphere_family(&points, d).unwrap();
        let f = LipschitzFnSpec::euclidean_norm(d);
        let direct0 = mc_run(50_000, 0.95, &SeedStream::new(14).substream(5), |rng| {
            let x = fam_x.sample_with(rng);
            let alpha: Vec<f64> = x.iter().map(|xi| f.eval(xi.as_slice())).collect();
            smoothed_max(&alpha, beta)
        })
        .unwrap();
        let h0 = curve.points[0].1;
        assert!(
            (h0.mean - direct0.mean).abs() <= 4.0 * (h0.std_error + direct0.std_error),
            "{h0:?} vs {direct0:?}"
        );

        // h(pi/2) against E lse(F(Y) + g).
        let fam_y = build_scaled_family(&points, d).unwrap();
        let fam_g = build_sphere_family(&points, 1).unwrap();
        let direct1 = mc_run(50_000, 0.95, &SeedStream::new(15).substream(6), |rng| {
            let y = fam_y.sample_with(rng);
            let g = fam_g.sample_with(rng);
            let alpha: Vec<f64> = (0..points.len())
                .map(|i| f.eval(y[i].as_slice()) + g[i][0])
                .collect();
            smoothed_max(&alpha, beta)
        })
        .unwrap();
        let h1 = curve.points.last().unwrap().1;
        assert!(
            (h1.mean - direct1.mean).abs() <= 4.0 * (h1.std_error + direct1.std_error),
            "{h1:?} vs {direct1:?}"
        );
    }

    #[test]
    fn endpoint_brackets_unsmoothed_maximum() {
        // As beta grows, |h(pi/2) - E max(F_i(Y_i) + g_i)| <= log N / beta
        // plus noise.
        let points = vec![unit(2, 0), unit(2, 1)];
        let d = 2;
        let fam_y = build_scaled_family(&points, d).unwrap();
        let fam_g = build_sphere_family(&points, 1).unwrap();
        let f = LipschitzFnSpec::euclidean_norm(d);
        let raw_max = mc_run(50_000, 0.95, &SeedStream::new(16).substream(7), |rng| {
            let y = fam_y.sample_with(rng);
            let g = fam_g.sample_with(rng);
            (0..points.len())
                .map(|i| f.eval(y[i].as_slice()) + g[i][0])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .unwrap();
        for beta in [5.0, 20.0, 80.0] {
            let config = triple_config(&points, d, beta, 3);
            let curve = h_curve(&config, 50_000, 0.95, &SeedStream::new(17).substream(8)).unwrap();
            let h_end = curve.points.last().unwrap().1;
            let gap = (h_end.mean - raw_max.mean).abs();
            let allowance =
                (points.len() as f64).ln() / beta + 4.0 * (h_end.std_error + raw_max.std_error);
            assert!(gap <= allowance, "beta {beta}: gap {gap} > {allowance}");
        }
    }
}
