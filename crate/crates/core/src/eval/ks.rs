use serde::Serialize;

use crate::error::{Error, Result};

/// Two-sample Kolmogorov-Smirnov statistic with its asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub d: f64,
    pub p: f64,
    pub n1: usize,
    pub n2: usize,
}

/// Largest gap between the two empirical CDFs over the pooled points.
pub fn ks_statistic(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySample);
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::data("KS samples must not contain NaN"));
    }
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n1, n2) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] == v {
            i += 1;
        }
        while j < ys.len() && ys[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    Ok(d)
}

/// Two-sample test. The p-value is the Kolmogorov tail `Q(lambda)` with
/// `lambda = (sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) * D`, `ne = n1 n2 / (n1 + n2)`.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsResult> {
    let d = ks_statistic(x, y)?;
    let (n1, n2) = (x.len(), y.len());
    let ne = (n1 as f64 * n2 as f64) / (n1 + n2) as f64;
    let sq = ne.sqrt();
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    Ok(KsResult {
        d,
        p: kolmogorov_q(lambda),
        n1,
        n2,
    })
}

const TERM_EPS: f64 = 1e-12;

/// Kolmogorov survival function `Q(l) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 l^2)`.
///
/// Below `l = 1.18` the alternating series converges slowly, so the
/// equivalent Jacobi-theta form `1 - sqrt(2 pi)/l sum exp(-(2j-1)^2 pi^2 / (8 l^2))`
/// is summed instead. Both stop once a term falls below 1e-12. Values
/// under 1e-300 are reported as 0.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    let p = if lambda <= 0.0 {
        1.0
    } else if lambda < 1.18 {
        1.0 - kolmogorov_cdf_theta(lambda)
    } else {
        kolmogorov_q_series(lambda)
    };
    let p = p.clamp(0.0, 1.0);
    if p < 1e-300 {
        0.0
    } else {
        p
    }
}

pub(crate) fn kolmogorov_q_series(lambda: f64) -> f64 {
    let a = -2.0 * lambda * lambda;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100_000u32 {
        let term = (a * f64::from(j) * f64::from(j)).exp();
        sum += sign * term;
        if term < TERM_EPS {
            break;
        }
        sign = -sign;
    }
    2.0 * sum
}

pub(crate) fn kolmogorov_cdf_theta(lambda: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let c = -pi * pi / (8.0 * lambda * lambda);
    let mut sum = 0.0;
    for j in 1..=100_000u32 {
        let k = f64::from(2 * j - 1);
        let term = (c * k * k).exp();
        sum += term;
        if term < TERM_EPS {
            break;
        }
    }
    (2.0 * pi).sqrt() / lambda * sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Double loop over pooled points, counting directly.
    fn brute_d(x: &[f64], y: &[f64]) -> f64 {
        let cdf = |s: &[f64], t: f64| s.iter().filter(|&&v| v <= t).count() as f64 / s.len() as f64;
        x.iter()
            .chain(y)
            .map(|&t| (cdf(x, t) - cdf(y, t)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn examples() {
        let r = ks_two_sample(&[1.0, 2.0, 2.0, 5.0], &[5.0, 2.0, 1.0, 2.0]).unwrap();
        assert_eq!((r.d, r.p), (0.0, 1.0));
        assert_eq!(ks_statistic(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 1.0);
        assert_eq!(ks_statistic(&[1.0, 3.0], &[2.0, 4.0]).unwrap(), 0.5);
        assert!(matches!(ks_two_sample(&[], &[1.0]), Err(Error::EmptySample)));
    }

    #[test]
    fn both_series_agree_where_both_converge() {
        for &l in &[0.6, 0.8, 1.0, 1.18, 1.3, 1.6] {
            let a = kolmogorov_q_series(l);
            let b = 1.0 - kolmogorov_cdf_theta(l);
            assert!((a - b).abs() < 1e-10, "lambda {l}: {a} vs {b}");
        }
    }

    #[test]
    fn reference_tail_values() {
        // Q(1.0) = 0.26999967167735..., Q(1.3581) ~ 0.05 (the 5% critical value).
        assert!((kolmogorov_q(1.0) - 0.269_999_671_677_354_6).abs() < 1e-10);
        assert!((kolmogorov_q(1.358_1) - 0.05).abs() < 1e-4);
        assert_eq!(kolmogorov_q(0.0), 1.0);
        assert!((kolmogorov_q(1e-3) - 1.0).abs() < 1e-15);
        assert_eq!(kolmogorov_q(40.0), 0.0);
        let mut prev = 1.0;
        for i in 1..400 {
            let q = kolmogorov_q(i as f64 * 0.01);
            assert!(q <= prev + 1e-15);
            prev = q;
        }
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            x in prop::collection::vec(0u8..30, 1..50),
            y in prop::collection::vec(0u8..30, 1..50),
        ) {
            let x: Vec<f64> = x.into_iter().map(f64::from).collect();
            let y: Vec<f64> = y.into_iter().map(f64::from).collect();
            let d = ks_statistic(&x, &y).unwrap();
            prop_assert!((d - brute_d(&x, &y)).abs() <= 1e-12);
        }

        #[test]
        fn symmetric_and_transform_invariant(
            x in prop::collection::vec(0u32..10_000, 1..40),
            y in prop::collection::vec(0u32..10_000, 1..40),
        ) {
            let x: Vec<f64> = x.into_iter().map(|v| f64::from(v) / 100.0).collect();
            let y: Vec<f64> = y.into_iter().map(|v| f64::from(v) / 100.0).collect();
            let a = ks_two_sample(&x, &y).unwrap();
            let b = ks_two_sample(&y, &x).unwrap();
            prop_assert_eq!(a.d, b.d);
            prop_assert_eq!(a.p, b.p);
            let f = |v: &f64| (v + 1.0).ln() * 3.0 + 7.0;
            let tx: Vec<f64> = x.iter().map(f).collect();
            let ty: Vec<f64> = y.iter().map(f).collect();
            prop_assert_eq!(ks_statistic(&tx, &ty).unwrap(), a.d);
        }
    }
}
