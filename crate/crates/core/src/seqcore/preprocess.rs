use crate::error::{Error, Result};

use super::{ContinuousSeries, IntervalSequence, StateAlphabet, StateId};

/// Trailing-window moving average over full windows only: the output has
/// `len - window + 1` entries and entry `i` averages `values[i..i + window]`.
pub fn smooth_rolling(series: &ContinuousSeries, window: usize) -> Result<ContinuousSeries> {
    if window == 0 {
        return Err(Error::config("smoothing window must be positive"));
    }
    let length = series.values.len();
    if window > length {
        return Err(Error::WindowExceedsSeries { window, length });
    }
    let values = series
        .values
        .windows(window)
        .map(|w| {
            let (lo, hi) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
            (w.iter().sum::<f64>() / window as f64).clamp(lo, hi)
        })
        .collect();
    Ok(ContinuousSeries {
        id: series.id.clone(),
        values,
    })
}

/// Normalizes a cut-point list: an optional leading zero is dropped (zero is
/// always its own category) and the remainder must be positive and strictly
/// ascending.
fn positive_cuts(thresholds: &[f64]) -> Result<&[f64]> {
    let cuts = match thresholds.first() {
        Some(0.0) => &thresholds[1..],
        _ => thresholds,
    };
    if cuts.iter().any(|t| !t.is_finite() || *t <= 0.0) {
        return Err(Error::config("thresholds must be finite and positive"));
    }
    if cuts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("thresholds must be strictly ascending"));
    }
    Ok(cuts)
}

/// Alphabet produced by [`discretize`]: labels `"1"` (exactly zero) through
/// `"t+2"` (above the highest of `t` positive cut points).
pub fn discretized_alphabet(thresholds: &[f64]) -> Result<StateAlphabet> {
    let cuts = positive_cuts(thresholds)?;
    StateAlphabet::new((1..=cuts.len() + 2).map(|i| i.to_string()))
}

/// Maps each value to a category: zero is state 0, and a positive value `v`
/// falls in the first bin whose upper cut point satisfies `v <= cut`
/// (left-open, right-closed), with everything above the last cut in the top
/// state.
pub fn discretize(series: &ContinuousSeries, thresholds: &[f64]) -> Result<IntervalSequence> {
    let cuts = positive_cuts(thresholds)?;
    let states = series
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v.is_nan() || v < 0.0 {
                return Err(Error::data(format!(
                    "series {:?} has invalid value {v} at position {}",
                    series.id,
                    i + 1
                )));
            }
            if v == 0.0 {
                return Ok(0);
            }
            let bin = cuts.partition_point(|&c| c < v);
            Ok((bin + 1) as StateId)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IntervalSequence::new(series.id.clone(), states))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(values: Vec<f64>) -> ContinuousSeries {
        ContinuousSeries { id: "x".into(), values }
    }

    #[test]
    fn full_windows_only() {
        let s = series(vec![1.0; 1440]);
        assert_eq!(smooth_rolling(&s, 5).unwrap().values.len(), 1436);
        let s = series(vec![0.0, 5.0, 10.0, 0.0, 0.0]);
        assert_eq!(smooth_rolling(&s, 5).unwrap().values, vec![3.0]);
    }

    #[test]
    fn constant_series_stays_constant() {
        let s = series(vec![3.7; 50]);
        for w in [1, 2, 5, 50] {
            assert!(smooth_rolling(&s, w).unwrap().values.iter().all(|&v| v == 3.7));
        }
    }

    #[test]
    fn window_too_long() {
        let err = smooth_rolling(&series(vec![1.0, 2.0]), 3).unwrap_err();
        assert!(err.to_string().contains("window exceeds series"));
        assert!(smooth_rolling(&series(vec![1.0]), 0).is_err());
    }

    #[test]
    fn cut_points() {
        let s = series(vec![0.0, 1.0, 760.0, 761.0, 2020.0, 2021.0, 3000.0]);
        let d = discretize(&s, &[760.0, 2020.0]).unwrap();
        assert_eq!(d.states, vec![0, 1, 1, 2, 2, 3, 3]);
        // A leading zero is accepted and means the same thing.
        let d0 = discretize(&s, &[0.0, 760.0, 2020.0]).unwrap();
        assert_eq!(d0.states, d.states);
        let ab = discretized_alphabet(&[760.0, 2020.0]).unwrap();
        assert_eq!(ab.labels(), ["1", "2", "3", "4"]);
    }

    #[test]
    fn rejects_negative_and_bad_thresholds() {
        assert!(discretize(&series(vec![-1.0]), &[760.0]).is_err());
        assert!(discretize(&series(vec![1.0]), &[760.0, 760.0]).is_err());
        assert!(discretize(&series(vec![1.0]), &[2020.0, 760.0]).is_err());
    }

    proptest! {
        #[test]
        fn smoothing_bounded_by_input(values in prop::collection::vec(0.0f64..5000.0, 1..200), w in 1usize..20) {
            prop_assume!(w <= values.len());
            let out = smooth_rolling(&series(values.clone()), w).unwrap();
            prop_assert_eq!(out.values.len(), values.len() - w + 1);
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(out.values.iter().all(|&v| v >= lo && v <= hi));
        }

        #[test]
        fn discretize_is_monotone(a in 0.0f64..5000.0, b in 0.0f64..5000.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let d = discretize(&series(vec![lo, hi]), &[760.0, 2020.0]).unwrap();
            prop_assert!(d.states[0] <= d.states[1]);
        }
    }
}
