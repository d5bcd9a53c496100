//! Engine-wide configuration: per-layer knobs plus the ablation toggles.

use serde::{Deserialize, Serialize};

use crate::channels::{ActivationParams, Bm25Params, TemporalParams};
use crate::infogeo::SimilarityConfig;
use crate::langevin::{LifecycleThresholds, PotentialParams, STATE_DIM};
use crate::sheaf::DEFAULT_TAU;

/// Ingestion gate on token-distribution entropy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntropyGateParams {
    pub threshold_bits: f64,
    pub min_tokens: usize,
}

impl Default for EntropyGateParams {
    fn default() -> Self {
        Self {
            threshold_bits: 1.5,
            min_tokens: 3,
        }
    }
}

/// Component kill-switches. `all_math_off` implies the three math layers
/// off; `normalize` enforces that at parse time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationToggles {
    pub fisher_off: bool,
    pub sheaf_off: bool,
    pub langevin_off: bool,
    pub bm25_off: bool,
    pub entity_off: bool,
    pub temporal_off: bool,
    pub cross_encoder_off: bool,
    pub all_math_off: bool,
}

impl AblationToggles {
    pub fn normalize(mut self) -> Self {
        if self.all_math_off {
            self.fisher_off = true;
            self.sheaf_off = true;
            self.langevin_off = true;
        }
        self
    }

    /// Parses one toggle by its canonical name.
    pub fn set(&mut self, name: &str) -> bool {
        match name {
            "fisher_off" | "fisher" => self.fisher_off = true,
            "sheaf_off" | "sheaf" => self.sheaf_off = true,
            "langevin_off" | "langevin" => self.langevin_off = true,
            "bm25_off" | "bm25" => self.bm25_off = true,
            "entity_off" | "entity" => self.entity_off = true,
            "temporal_off" | "temporal" => self.temporal_off = true,
            "cross_encoder_off" | "cross_encoder" => self.cross_encoder_off = true,
            "all_math_off" | "all_math" => self.all_math_off = true,
            _ => return false,
        }
        true
    }
}

/// Everything tunable, with the defaults used throughout the tests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EngineConfig {
    pub similarity: SimilarityConfig,
    pub potential: PotentialParams,
    pub lifecycle: LifecycleThresholds,
    pub bm25: Bm25Params,
    pub activation: ActivationParams,
    pub temporal: TemporalParams,
    pub entropy_gate: EntropyGateParams,
    pub sheaf_tau: f64,
    pub access_boost_strength: f64,
    pub scene_window_secs: i64,
    pub state_dim: usize,
}

impl EngineConfig {
    /// Defaults for an embedder of dimension `d`.
    pub fn for_dim(d: usize) -> Self {
        Self {
            similarity: SimilarityConfig::for_dim(d),
            potential: PotentialParams::default(),
            lifecycle: LifecycleThresholds::default(),
            bm25: Bm25Params::default(),
            activation: ActivationParams::default(),
            temporal: TemporalParams::default(),
            entropy_gate: EntropyGateParams::default(),
            sheaf_tau: DEFAULT_TAU,
            access_boost_strength: 0.3,
            scene_window_secs: 600,
            state_dim: STATE_DIM,
        }
    }
}
