//! Almost-spherical sections: for a Lipschitz `f : R^N -> R` with Gaussian
//! mean `mu`, find an operator `T : l2^n -> R^N` whose sphere image keeps
//! `f` within `epsilon * mu` of `mu`.
//!
//! The admissible section dimension is `n = floor(t (t - 2))` with
//! `t = epsilon * mu / L`, chosen exactly so that the one-attempt failure
//! probability bound `(L / (epsilon mu)) (1 + sqrt(n))` stays below one;
//! rejection sampling over independent Gaussian operators then succeeds
//! with positive probability per attempt. Verification of a candidate
//! combines uniform sphere sampling, subgradient ascent on the deviation,
//! and (for Euclidean-norm functionals) exact singular-value bounds.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mc::{self, MCEstimate};
use crate::norms::LipschitzFnSpec;
use crate::rng::SeedStream;

/// Sphere samples per verification attempt.
const VERIFY_SPHERE_SAMPLES: usize = 10_000;
/// Multi-start budget of the deviation maximizer.
const VERIFY_ASCENT_STARTS: usize = 8;
const VERIFY_ASCENT_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerificationTier {
    /// Exact: the functional is a Euclidean-type norm, so the sphere image
    /// of `f` is the interval between the extreme singular values.
    SvdExact,
    /// Sampling plus subgradient ascent; a lower bound on the supremum.
    SamplingAndAscent,
}

impl VerificationTier {
    pub fn as_str(&self) -> &'static str {
        match self {
            VerificationTier::SvdExact => "svd_exact",
            VerificationTier::SamplingAndAscent => "sampling+ascent",
        }
    }
}

/// A realized section together with everything needed to re-check it.
#[derive(Debug, Clone)]
pub struct SectionCertificate {
    pub ambient_dim: usize,
    pub section_dim: usize,
    pub epsilon: f64,
    pub mu: MCEstimate,
    pub lipschitz: f64,
    /// `(L / (epsilon mu)) (1 + sqrt(n))`, the one-attempt failure bound.
    pub failure_bound: f64,
    /// The `ambient_dim x section_dim` operator of the returned attempt.
    pub operator: DMatrix<f64>,
    /// Largest observed (or exactly computed) `|f(T x) - mu|` on the sphere.
    pub worst_deviation: f64,
    pub verified: bool,
    pub attempts_used: usize,
    pub tier: VerificationTier,
}

/// `n = floor(t (t - 2))` with `t = epsilon mu / L`; the regime is
/// degenerate unless `t > 2` and the result is at least 1.
pub fn dvoretzky_dimension(epsilon: f64, mu: f64, lipschitz: f64) -> Result<usize> {
    if !(epsilon > 0.0 && mu > 0.0 && lipschitz > 0.0)
        || !(epsilon.is_finite() && mu.is_finite() && lipschitz.is_finite())
    {
        let t = epsilon * mu / lipschitz;
        return Err(Error::DegenerateRegime { t, n: 0 });
    }
    let t = epsilon * mu / lipschitz;
    let n = (t * (t - 2.0)).floor() as i64;
    if t <= 2.0 || n < 1 {
        return Err(Error::DegenerateRegime { t, n });
    }
    Ok(n as usize)
}

/// `(L / (epsilon mu)) (1 + sqrt(n))`.
pub fn failure_bound(epsilon: f64, mu: f64, lipschitz: f64, n: usize) -> f64 {
    lipschitz / (epsilon * mu) * (1.0 + (n as f64).sqrt())
}

fn draw_operator(rng: &mut ChaCha8Rng, ambient: usize, section: usize) -> DMatrix<f64> {
    // Column by column: each column is one N-dimensional standard normal.
    let mut t = DMatrix::zeros(ambient, section);
    for j in 0..section {
        for i in 0..ambient {
            t[(i, j)] = rng.sample(StandardNormal);
        }
    }
    t
}

struct AttemptOutcome {
    operator: DMatrix<f64>,
    worst_deviation: f64,
    verified: bool,
    tier: VerificationTier,
}

fn exact_norm_range(f: &LipschitzFnSpec, t: &DMatrix<f64>) -> Option<(f64, f64)> {
    // f(T x) = c || W T x ||_2 sweeps [c s_min, c s_max] over the sphere.
    let LipschitzFnSpec::Norm { spec, constant } = f else {
        return None;
    };
    if !spec.is_euclidean_kind() {
        return None;
    }
    let c = constant / spec.lipschitz_l2();
    let weighted = match spec {
        crate::norms::NormSpec::WeightedLp { weights, .. } => {
            let mut m = t.clone();
            for (i, w) in weights.iter().enumerate() {
                m.row_mut(i).scale_mut(*w);
            }
            m
        }
        crate::norms::NormSpec::ScaledEuclidean { scale, .. } => t * *scale,
        _ => t.clone(),
    };
    let svd = weighted.svd(false, false);
    let smax = svd.singular_values.max();
    let smin = if t.ncols() <= t.nrows() {
        svd.singular_values.min()
    } else {
        0.0
    };
    Some((c * smin, c * smax))
}

fn verify_attempt(
    f: &LipschitzFnSpec,
    t: &DMatrix<f64>,
    mu_hat: f64,
    threshold: f64,
    rng: &mut ChaCha8Rng,
) -> AttemptOutcome {
    let section = t.ncols();
    let deviation = |x: &DVector<f64>| (f.eval((t * x).as_slice()) - mu_hat).abs();

    let mut worst: f64 = 0.0;
    let mut worst_point = DVector::zeros(section);

    // Tier (a): uniform sphere samples.
    for _ in 0..VERIFY_SPHERE_SAMPLES {
        let mut x = DVector::from_fn(section, |_, _| rng.sample(StandardNormal));
        let norm = x.norm();
        if norm == 0.0 {
            continue;
        }
        x /= norm;
        let dev = deviation(&x);
        if dev > worst {
            worst = dev;
            worst_point = x;
        }
    }

    // Tier (b): subgradient ascent on the deviation from the best sampled
    // point plus fresh starts.
    let mut starts = vec![worst_point];
    for _ in 1..VERIFY_ASCENT_STARTS {
        let mut x = DVector::from_fn(section, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = x.norm();
        if norm > 0.0 {
            x /= norm;
            starts.push(x);
        }
    }
    for mut x in starts {
        for iter in 1..=VERIFY_ASCENT_ITERS {
            let image = t * &x;
            let sign = if f.eval(image.as_slice()) >= mu_hat {
                1.0
            } else {
                -1.0
            };
            let Some(grad_f) = f.gradient(image.as_slice()) else {
                break;
            };
            let mut g = t.transpose() * DVector::from_vec(grad_f) * sign;
            let g_norm = g.norm();
            if g_norm == 0.0 {
                break;
            }
            g /= g_norm;
            x += g * (1.0 / (iter as f64).sqrt());
            let norm = x.norm();
            if norm == 0.0 {
                break;
            }
            x /= norm;
            worst = worst.max(deviation(&x));
        }
    }

    // Exact tier for Euclidean-type norms overrides the heuristics.
    let tier = match exact_norm_range(f, t) {
        Some((lo, hi)) => {
            worst = worst.max((hi - mu_hat).abs()).max((mu_hat - lo).abs());
            VerificationTier::SvdExact
        }
        None => VerificationTier::SamplingAndAscent,
    };

    AttemptOutcome {
        operator: t.clone(),
        worst_deviation: worst,
        verified: worst <= threshold,
        tier,
    }
}

/// Estimates `mu`, sizes the section, and rejection-samples Gaussian
/// operators until one verifies; returns the lowest-index verified
/// certificate, or the best unverified candidate when attempts run out.
pub fn find_section(
    f: &LipschitzFnSpec,
    epsilon: f64,
    samples: usize,
    max_attempts: usize,
    confidence: f64,
    stream: &SeedStream,
) -> Result<SectionCertificate> {
    f.validate_lipschitz()?;
    let ambient = f.dim();
    let lipschitz = f.lipschitz_constant();
    if max_attempts == 0 {
        return Err(Error::InvalidValue {
            field: "max_attempts",
            message: "need at least one attempt".into(),
        });
    }

    let mu = mc::mc_run(samples, confidence, &stream.substream(0), |rng| {
        let x: Vec<f64> = (0..ambient).map(|_| rng.sample(StandardNormal)).collect();
        f.eval(&x)
    })?;
    let section = dvoretzky_dimension(epsilon, mu.mean, lipschitz)?;
    let bound = failure_bound(epsilon, mu.mean, lipschitz, section);
    // The acceptance threshold carries the 4-sigma band of the estimated mu.
    let threshold = epsilon * mu.mean + 4.0 * mu.std_error;

    let attempt_stream = stream.substream(1);
    let outcomes: Vec<AttemptOutcome> = (0..max_attempts)
        .into_par_iter()
        .map(|k| {
            let mut rng = attempt_stream.with_counter(k as u64).rng();
            let t = draw_operator(&mut rng, ambient, section);
            verify_attempt(f, &t, mu.mean, threshold, &mut rng)
        })
        .collect();

    let chosen = outcomes.iter().position(|o| o.verified);
    let (index, outcome) = match chosen {
        Some(i) => (i, &outcomes[i]),
        None => {
            // Attempts exhausted: report the best candidate, unverified.
            let best = outcomes
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    a.worst_deviation
                        .partial_cmp(&b.worst_deviation)
                        .expect("deviations are finite")
                })
                .expect("at least one attempt");
            (best.0, best.1)
        }
    };

    Ok(SectionCertificate {
        ambient_dim: ambient,
        section_dim: section,
        epsilon,
        mu,
        lipschitz,
        failure_bound: bound,
        operator: outcome.operator.clone(),
        worst_deviation: outcome.worst_deviation,
        verified: outcome.verified,
        attempts_used: index + 1,
        tier: outcome.tier,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn dimension_formula_examples() {
        // t = 10: n = 80
        assert_eq!(dvoretzky_dimension(0.5, 20.0, 1.0).unwrap(), 80);
        // t = 3: n = 3
        assert_eq!(dvoretzky_dimension(0.3, 10.0, 1.0).unwrap(), 3);
        // t = 2: degenerate
        assert!(matches!(
            dvoretzky_dimension(0.2, 10.0, 1.0),
            Err(Error::DegenerateRegime { .. })
        ));
        // mu = 0 (a centered functional): degenerate
        assert!(matches!(
            dvoretzky_dimension(0.5, 0.0, 1.0),
            Err(Error::DegenerateRegime { .. })
        ));
    }

    #[test]
    fn failure_bound_examples() {
        assert_abs_diff_eq!(
            failure_bound(0.5, 20.0, 1.0, 80),
            (1.0 + 80f64.sqrt()) / 10.0,
            epsilon = 1e-15
        );
        assert!(failure_bound(0.5, 20.0, 1.0, 80) < 1.0);
        assert_abs_diff_eq!(
            failure_bound(0.4, 10.0, 1.0, 8),
            (1.0 + 8f64.sqrt()) / 4.0,
            epsilon = 1e-15
        );
        // n = 0 reduces to the plain first-moment bound 1/t.
        assert_abs_diff_eq!(failure_bound(0.5, 8.0, 1.0, 0), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn dimension_monotonicity() {
        let mut prev = 0;
        for k in 0..40 {
            let eps = 0.25 + 0.02 * k as f64;
            let n = dvoretzky_dimension(eps, 40.0, 1.0).unwrap();
            assert!(n >= prev, "eps {eps}");
            prev = n;
        }
        let mut prev = usize::MAX;
        for k in 0..20 {
            let l = 1.0 + 0.1 * k as f64;
            let n = dvoretzky_dimension(0.5, 40.0, l).unwrap();
            assert!(n <= prev, "L {l}");
            prev = n;
        }
    }

    #[test]
    fn failure_bound_below_one_across_the_regime() {
        // Sweep t in (2 + 1e-6, 100]: wherever the dimension formula
        // certifies n >= 1 the bound is < 1, and the degenerate band near
        // t = 2 still has 1/t < 1.
        let delta = 1e-6;
        let steps = 20_000;
        for k in 0..=steps {
            let t = 2.0 + delta + (100.0 - 2.0 - delta) * k as f64 / steps as f64;
            match dvoretzky_dimension(t, 1.0, 1.0) {
                Ok(n) => {
                    let bound = failure_bound(t, 1.0, 1.0, n);
                    assert!(bound < 1.0, "t {t} n {n} bound {bound}");
                }
                Err(Error::DegenerateRegime { .. }) => {
                    assert!(t < 1.0 + 2f64.sqrt() + 1e-9, "unexpected degenerate t {t}");
                    assert!(failure_bound(t, 1.0, 1.0, 0) < 1.0);
                }
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn find_section_euclidean_norm() {
        let f = LipschitzFnSpec::euclidean_norm(100);
        let cert = find_section(&f, 0.5, 20_000, 50, 0.95, &SeedStream::new(200)).unwrap();
        assert!(cert.verified, "{cert:?}");
        assert_eq!(cert.tier, VerificationTier::SvdExact);
        assert_eq!(cert.ambient_dim, 100);
        assert!(cert.failure_bound < 1.0);
        assert_eq!(cert.operator.nrows(), 100);
        assert_eq!(cert.operator.ncols(), cert.section_dim);
        assert!(cert.worst_deviation <= cert.epsilon * cert.mu.mean + 4.0 * cert.mu.std_error);
    }

    #[test]
    fn find_section_rejects_centered_functionals() {
        let f = LipschitzFnSpec::Linear {
            a: vec![1.0, 0.0, 0.0],
        };
        let err = find_section(&f, 0.5, 5_000, 5, 0.95, &SeedStream::new(201)).unwrap_err();
        assert!(matches!(err, Error::DegenerateRegime { .. }));
    }

    #[test]
    fn empirical_failure_rate_respects_the_bound() {
        // 200 independent attempts at a fixed section dimension; the
        // fraction that fail verification stays within bound + 0.1.
        let f = LipschitzFnSpec::euclidean_norm(100);
        let stream = SeedStream::new(202);
        let mu = mc::mc_run(20_000, 0.95, &stream.substream(0), |rng| {
            let x: Vec<f64> = (0..100).map(|_| rng.sample(StandardNormal)).collect();
            f.eval(&x)
        })
        .unwrap();
        let epsilon = 0.5;
        let n = dvoretzky_dimension(epsilon, mu.mean, 1.0).unwrap();
        let bound = failure_bound(epsilon, mu.mean, 1.0, n);
        let threshold = epsilon * mu.mean + 4.0 * mu.std_error;
        let attempts = 200;
        let failures: usize = (0..attempts)
            .map(|k| {
                let mut rng = stream.substream(9).with_counter(k as u64).rng();
                let t = draw_operator(&mut rng, 100, n);
                let outcome = verify_attempt(&f, &t, mu.mean, threshold, &mut rng);
                usize::from(!outcome.verified)
            })
            .sum();
        let rate = failures as f64 / attempts as f64;
        assert!(rate <= bound + 0.1, "rate {rate} bound {bound}");
    }

    #[test]
    fn verification_is_deterministic_across_runs() {
        let f = LipschitzFnSpec::euclidean_norm(50);
        let a = find_section(&f, 0.6, 10_000, 10, 0.95, &SeedStream::new(203)).unwrap();
        let b = find_section(&f, 0.6, 10_000, 10, 0.95, &SeedStream::new(203)).unwrap();
        assert_eq!(a.worst_deviation.to_bits(), b.worst_deviation.to_bits());
        assert_eq!(a.attempts_used, b.attempts_used);
        assert_eq!(a.operator, b.operator);
    }
}
