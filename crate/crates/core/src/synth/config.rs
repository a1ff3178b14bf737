use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest supported context order.
pub const MAX_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Episode-level paired state/duration chain.
    #[default]
    PairedMc,
    /// Interval-level time-varying Markov chain baseline.
    Tvmc,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::PairedMc => "paired-mc",
            Engine::Tvmc => "tvmc",
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paired-mc" => Ok(Engine::PairedMc),
            "tvmc" => Ok(Engine::Tvmc),
            other => Err(Error::config(format!("unknown engine {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleName {
    Silverman,
}

/// Kernel bandwidth: a named rule of thumb or a fixed value in intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BandwidthRule {
    Rule(RuleName),
    Fixed(f64),
}

impl Default for BandwidthRule {
    fn default() -> Self {
        BandwidthRule::Rule(RuleName::Silverman)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SamplerConfig {
    /// Resample observed durations.
    #[default]
    Direct,
    /// Observed duration plus Gaussian kernel noise, rounded and clamped to >= 1.
    Kde {
        #[serde(default)]
        bandwidth_rule: BandwidthRule,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BufferStrategy {
    /// Extend sources by `delta` intervals of time-varying chain steps and
    /// synthesize to `n + delta` before truncating.
    #[default]
    Tvmc,
    /// Synthesize directly to `n` from the raw corpus.
    None,
}

/// Where a drawn state's duration comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DurationScope {
    /// Durations of the windowed candidates with the drawn state.
    #[default]
    Window,
    /// Every observed duration of the drawn state, at any time of day.
    AllDay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisConfig {
    /// Half-width of the candidate time window, in intervals.
    pub delta: u32,
    pub order: usize,
    /// Output length; `None` means the source sequence length.
    pub target_length: Option<usize>,
    pub sampler: SamplerConfig,
    pub buffer: BufferStrategy,
    pub duration_scope: DurationScope,
    /// Take a single time-varying chain step when every candidate query
    /// comes back empty; otherwise such a stall is an error.
    pub tvmc_fallback: bool,
    pub seed: u64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            delta: 60,
            order: 1,
            target_length: None,
            sampler: SamplerConfig::Direct,
            buffer: BufferStrategy::Tvmc,
            duration_scope: DurationScope::Window,
            tvmc_fallback: true,
            seed: 0,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || self.order > MAX_ORDER {
            return Err(Error::config(format!(
                "order must be in 1..={MAX_ORDER}, got {}",
                self.order
            )));
        }
        if self.target_length == Some(0) {
            return Err(Error::config("target_length must be at least 1"));
        }
        if let SamplerConfig::Kde {
            bandwidth_rule: BandwidthRule::Fixed(h),
        } = self.sampler
        {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::config("kde bandwidth must be positive"));
            }
        }
        Ok(())
    }

    /// Output length for a corpus whose sequences have `source_length` intervals.
    pub fn resolve_length(&self, source_length: usize) -> Result<usize> {
        let n = self.target_length.unwrap_or(source_length);
        if n > source_length {
            return Err(Error::config(format!(
                "target_length {n} exceeds the source sequence length {source_length}"
            )));
        }
        Ok(n)
    }

    pub fn buffer_length(&self) -> u32 {
        match self.buffer {
            BufferStrategy::Tvmc => self.delta,
            BufferStrategy::None => 0,
        }
    }
}
