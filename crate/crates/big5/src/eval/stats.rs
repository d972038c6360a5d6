//! Correlation and error statistics.
//!
//! The Pearson p-value is the two-sided t-test evaluated through the
//! regularized incomplete beta function: `p = I_{v/(v+t^2)}(v/2, 1/2)` with
//! `v = N - 2` degrees of freedom. The special functions are implemented
//! here (Lanczos log-gamma, Lentz continued fraction) rather than pulled
//! from a stats crate; tests pin them against an independent quadrature of
//! the t density.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("{0} series has zero variance")]
    ZeroVariance(&'static str),
    #[error("series are empty")]
    Empty,
}

/// Pearson correlation with its two-sided significance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub p_value: f64,
    pub sample_count: usize,
}

/// Natural log of the gamma function (Lanczos approximation), for z > 0.
pub fn ln_gamma(z: f64) -> f64 {
    const COEFFS: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut sum = 1.000000000190015;
    for (i, c) in COEFFS.iter().enumerate() {
        sum += c / (z + i as f64 + 1.0);
    }
    let tmp = z + 5.5;
    (z + 0.5) * tmp.ln() - tmp + (2.5066282746310005 * sum / z).ln()
}

/// Continued-fraction factor of the incomplete beta (modified Lentz).
fn betacf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn inc_beta(x: f64, a: f64, b: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) || a <= 0.0 || b <= 0.0 {
        return f64::NAN;
    }
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let ln_front =
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * betacf(a, b, x) / a
    } else {
        1.0 - front * betacf(b, a, 1.0 - x) / b
    }
}

/// Two-sided tail probability of Student's t with `dof` degrees of freedom.
pub fn t_two_sided_p(t: f64, dof: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    inc_beta(dof / (dof + t * t), dof / 2.0, 0.5).clamp(0.0, 1.0)
}

/// Product-moment correlation of two equal-length series, with the
/// two-sided p-value of the t statistic `t = r * sqrt((N-2)/(1-r^2))`.
/// Perfect correlation maps to `p = 0`.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<CorrelationResult, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 3 {
        return Err(StatsError::TooFewPoints { needed: 3, got: n });
    }
    let mean_x = xs.iter().sum::<f64>() / n as f64;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::ZeroVariance("x"));
    }
    if syy == 0.0 {
        return Err(StatsError::ZeroVariance("y"));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let dof = (n - 2) as f64;
    let p_value = if r.abs() >= 1.0 {
        0.0
    } else {
        let t = r * (dof / (1.0 - r * r)).sqrt();
        t_two_sided_p(t, dof)
    };
    Ok(CorrelationResult { r, p_value, sample_count: n })
}

/// Root mean squared error between two equal-length series.
pub fn rmse(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.is_empty() {
        return Err(StatsError::Empty);
    }
    let sum_sq: f64 = xs.iter().zip(ys).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sum_sq / xs.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent oracle: two-sided t tail by numeric quadrature, with no
    /// gamma functions. Substituting x = sqrt(v) tan(theta) turns the tail
    /// into a ratio of finite integrals of cos^(v-1):
    ///   p = int_{atan(t/sqrt(v))}^{pi/2} cos^(v-1) / int_0^{pi/2} cos^(v-1)
    fn t_two_sided_p_by_quadrature(t: f64, dof: f64) -> f64 {
        fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, steps: usize) -> f64 {
            let steps = steps + steps % 2;
            let h = (b - a) / steps as f64;
            let mut acc = f(a) + f(b);
            for i in 1..steps {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * f(a + h * i as f64);
            }
            acc * h / 3.0
        }
        let integrand = |theta: f64| theta.cos().powf(dof - 1.0);
        let theta0 = (t.abs() / dof.sqrt()).atan();
        let half_pi = std::f64::consts::FRAC_PI_2;
        let tail = simpson(integrand, theta0, half_pi, 100_000);
        let total = simpson(integrand, 0.0, half_pi, 100_000);
        tail / total
    }

    #[test]
    fn perfect_linearity_gives_exact_r_one_and_p_zero() {
        let xs: Vec<f64> = (0..10).map(|i| (i * 10) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let c = pearson(&xs, &ys).unwrap();
        assert_eq!(c.r, 1.0);
        assert_eq!(c.p_value, 0.0);

        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert_eq!(pearson(&xs, &neg).unwrap().r, -1.0);
    }

    #[test]
    fn known_five_point_example() {
        // ys = (2,1,4,3,5): cov = 8, sxx = syy = 10, so r = 0.8 exactly
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ys = [2.0, 1.0, 4.0, 3.0, 5.0];
        let c = pearson(&xs, &ys).unwrap();
        assert!((c.r - 0.8).abs() < 1e-9, "r = {}", c.r);
        let t = 0.8 * (3.0f64 / (1.0 - 0.64)).sqrt();
        let expected_p = t_two_sided_p_by_quadrature(t, 3.0);
        assert!(
            (c.p_value - expected_p).abs() < 1e-6,
            "p = {} vs quadrature {expected_p}",
            c.p_value
        );
        // the quadrature itself should land near the textbook 0.104
        assert!((expected_p - 0.104).abs() < 5e-4);
    }

    #[test]
    fn error_cases() {
        assert_eq!(
            pearson(&[1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap_err(),
            StatsError::LengthMismatch(2, 3)
        );
        assert_eq!(
            pearson(&[1.0, 2.0], &[1.0, 2.0]).unwrap_err(),
            StatsError::TooFewPoints { needed: 3, got: 2 }
        );
        assert_eq!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap_err(),
            StatsError::ZeroVariance("x")
        );
        assert_eq!(
            pearson(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]).unwrap_err(),
            StatsError::ZeroVariance("y")
        );
    }

    #[test]
    fn p_values_track_the_quadrature_oracle() {
        for &(t, dof) in &[
            (0.5, 1.0),
            (1.0, 3.0),
            (2.309401076758503, 3.0),
            (2.0, 8.0),
            (3.5, 8.0),
            (16.0, 8.0),
            (0.1, 30.0),
            (4.2, 60.0),
        ] {
            let ours = t_two_sided_p(t, dof);
            let oracle = t_two_sided_p_by_quadrature(t, dof);
            assert!(
                (ours - oracle).abs() < 1e-9,
                "t = {t}, dof = {dof}: {ours} vs {oracle}"
            );
        }
    }

    #[test]
    fn ln_gamma_matches_known_values() {
        // gamma(5) = 24, gamma(0.5) = sqrt(pi)
        assert!((ln_gamma(5.0) - 24.0f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-12);
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[1.0, 1.0], &[3.0, 3.0]).unwrap(), 2.0);
        let r = rmse(&[0.0, 0.0, 0.0], &[1.0, 2.0, 2.0]).unwrap();
        assert!((r - 3.0f64.sqrt()).abs() < 1e-12);
        assert!(matches!(rmse(&[], &[]), Err(StatsError::Empty)));
        assert!(matches!(rmse(&[1.0], &[]), Err(StatsError::LengthMismatch(1, 0))));
    }

    proptest! {
        #[test]
        fn pearson_is_symmetric_and_affine_invariant(
            pairs in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 4..20),
            a in 0.1f64..5.0,
            b in -10.0f64..10.0,
        ) {
            let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let (Ok(fwd), Ok(rev)) = (pearson(&xs, &ys), pearson(&ys, &xs)) else {
                return Ok(()); // zero-variance draw
            };
            prop_assert!((fwd.r - rev.r).abs() < 1e-12);
            prop_assert!(fwd.r.abs() <= 1.0);
            prop_assert!((0.0..=1.0).contains(&fwd.p_value));

            let scaled: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let aff = pearson(&scaled, &ys).unwrap();
            prop_assert!((aff.r - fwd.r).abs() < 1e-9);
        }

        #[test]
        fn rmse_is_symmetric_and_zero_iff_equal(
            xs in proptest::collection::vec(-100.0f64..100.0, 1..20),
        ) {
            let ys: Vec<f64> = xs.iter().map(|x| x + 1.0).collect();
            prop_assert_eq!(rmse(&xs, &ys).unwrap(), rmse(&ys, &xs).unwrap());
            prop_assert_eq!(rmse(&xs, &xs).unwrap(), 0.0);
            prop_assert!(rmse(&xs, &ys).unwrap() > 0.0);
        }
    }
}
