use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::seqcore::StateId;

use super::config::{BandwidthRule, SamplerConfig};

/// Draws a duration from a set of observed durations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DurationSampler {
    config: SamplerConfig,
}

impl DurationSampler {
    pub fn new(config: SamplerConfig) -> Self {
        DurationSampler { config }
    }

    pub fn direct() -> Self {
        DurationSampler::new(SamplerConfig::Direct)
    }

    /// `observed` must be non-empty.
    pub fn sample<R: Rng + ?Sized>(&self, observed: &[u32], rng: &mut R) -> u32 {
        let picked = observed[rng.random_range(0..observed.len())];
        match self.config {
            SamplerConfig::Direct => picked,
            SamplerConfig::Kde { bandwidth_rule } => {
                let h = match bandwidth_rule {
                    BandwidthRule::Fixed(h) => h,
                    BandwidthRule::Rule(_) => silverman_bandwidth(observed),
                };
                if h == 0.0 {
                    return picked;
                }
                let noise: f64 = StandardNormal.sample(rng);
                (picked as f64 + h * noise).round().max(1.0) as u32
            }
        }
    }
}

/// Silverman's rule of thumb, `0.9 * min(sd, IQR / 1.34) * n^(-1/5)`.
/// Falls back to the standard deviation alone when the IQR is zero, and
/// returns 0 for a sample without spread.
pub fn silverman_bandwidth(values: &[u32]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
    let var = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let mut sorted: Vec<f64> = values.iter().map(|&v| v as f64).collect();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * (n as f64).powf(-0.2)
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Picks a state with probability proportional to its multiplicity among
/// `candidates`.
pub fn sample_state<R: Rng + ?Sized>(candidates: &[(StateId, u32)], rng: &mut R) -> Result<StateId> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    Ok(candidates[rng.random_range(0..candidates.len())].0)
}

/// Two-stage draw: a state by its frequency among the candidates, then a
/// duration from the candidates carrying that state.
pub fn sample_transition<R: Rng + ?Sized>(
    candidates: &[(StateId, u32)],
    sampler: &DurationSampler,
    rng: &mut R,
) -> Result<(StateId, u32)> {
    let state = sample_state(candidates, rng)?;
    let durations: Vec<u32> = candidates.iter().filter(|c| c.0 == state).map(|c| c.1).collect();
    Ok((state, sampler.sample(&durations, rng)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::config::RuleName;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn singleton_candidate() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            sample_transition(&[(2, 30)], &DurationSampler::direct(), &mut rng).unwrap(),
            (2, 30)
        );
        let err = sample_transition(&[], &DurationSampler::direct(), &mut rng).unwrap_err();
        assert_eq!(err.to_string(), "no candidates");
    }

    #[test]
    fn two_stage_frequencies() {
        let cands = [(0, 10), (0, 20), (1, 5)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws = 60_000;
        let (mut c, mut c10) = (0, 0);
        for _ in 0..draws {
            let (s, d) = sample_transition(&cands, &DurationSampler::direct(), &mut rng).unwrap();
            match s {
                0 => {
                    c += 1;
                    assert!(d == 10 || d == 20);
                    if d == 10 {
                        c10 += 1;
                    }
                }
                _ => assert_eq!(d, 5),
            }
        }
        let p_c = c as f64 / draws as f64;
        assert!((p_c - 2.0 / 3.0).abs() < 0.01, "{p_c}");
        let p_10 = c10 as f64 / c as f64;
        assert!((p_10 - 0.5).abs() < 0.015, "{p_10}");
    }

    #[test]
    fn direct_draws_are_observed_values() {
        let obs = [3, 17, 17, 240, 61];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = DurationSampler::direct();
        for _ in 0..10_000 {
            assert!(obs.contains(&s.sample(&obs, &mut rng)));
        }
    }

    #[test]
    fn kde_draws_are_positive_integers_near_data() {
        let obs = [1, 2, 2, 3, 40];
        let s = DurationSampler::new(SamplerConfig::Kde {
            bandwidth_rule: BandwidthRule::Rule(RuleName::Silverman),
        });
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut distinct = std::collections::BTreeSet::new();
        for _ in 0..5_000 {
            let d = s.sample(&obs, &mut rng);
            assert!(d >= 1);
            distinct.insert(d);
        }
        assert!(distinct.len() > obs.len());
        // No spread, no noise.
        assert_eq!(s.sample(&[7, 7, 7], &mut rng), 7);
    }

    #[test]
    fn silverman_reference_value() {
        // sd = sqrt(2.5), IQR = 2 => min(1.5811, 1.4925) = 1.4925; 0.9 * 1.4925 * 5^-0.2.
        let h = silverman_bandwidth(&[1, 2, 3, 4, 5]);
        let expected = 0.9 * (2.0 / 1.34) * 5f64.powf(-0.2);
        assert!((h - expected).abs() < 1e-12, "{h} vs {expected}");
        assert_eq!(silverman_bandwidth(&[4]), 0.0);
    }
}
