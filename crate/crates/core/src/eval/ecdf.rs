use serde::Serialize;

/// Empirical CDF of `sample` at each point of an ascending `grid`.
pub fn ecdf_on_grid(sample: &[f64], grid: &[f64]) -> Vec<f64> {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    grid.iter()
        .map(|&g| {
            if sorted.is_empty() {
                0.0
            } else {
                sorted.partition_point(|&v| v <= g) as f64 / n
            }
        })
        .collect()
}

/// Sorted distinct values across all samples.
pub fn shared_grid<'a, I: IntoIterator<Item = &'a [f64]>>(samples: I) -> Vec<f64> {
    let mut grid: Vec<f64> = samples.into_iter().flatten().copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodCurve {
    pub method: String,
    pub ecdf: Vec<f64>,
    /// Original ECDF minus this method's ECDF, pointwise.
    pub difference: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveSet {
    pub grid: Vec<f64>,
    pub original: Vec<f64>,
    pub methods: Vec<MethodCurve>,
}

/// ECDFs of the original and every method on one grid, plus the
/// percentile-difference series against the original.
pub fn ecdf_curves(original: &[f64], methods: &[(String, Vec<f64>)]) -> CurveSet {
    let grid = shared_grid(std::iter::once(original).chain(methods.iter().map(|(_, v)| v.as_slice())));
    let base = ecdf_on_grid(original, &grid);
    let methods = methods
        .iter()
        .map(|(name, sample)| {
            let ecdf = ecdf_on_grid(sample, &grid);
            let difference = base.iter().zip(&ecdf).map(|(a, b)| a - b).collect();
            MethodCurve {
                method: name.clone(),
                ecdf,
                difference,
            }
        })
        .collect();
    CurveSet {
        grid,
        original: base,
        methods,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sample_has_zero_difference() {
        let x = vec![3.0, 1.0, 4.0, 1.0, 5.0];
        let c = ecdf_curves(&x, &[("same".into(), x.clone())]);
        assert_eq!(c.grid, vec![1.0, 3.0, 4.0, 5.0]);
        assert!(c.methods[0].difference.iter().all(|&d| d == 0.0));
        assert_eq!(c.original, vec![0.4, 0.6, 0.8, 1.0]);
    }

    #[test]
    fn monotone_and_bounded() {
        let x = vec![10.0, 20.0, 20.0, 35.0];
        let y = vec![1.0, 50.0, 22.0];
        let c = ecdf_curves(&x, &[("m".into(), y)]);
        for curve in [&c.original, &c.methods[0].ecdf] {
            assert!(curve.windows(2).all(|w| w[0] <= w[1]));
            assert!(curve.iter().all(|&v| (0.0..=1.0).contains(&v)));
            assert_eq!(*curve.last().unwrap(), 1.0);
        }
        assert!(c.methods[0].difference.iter().all(|&d| (-1.0..=1.0).contains(&d)));
    }
}
