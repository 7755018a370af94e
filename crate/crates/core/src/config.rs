//! Experiment configuration: one JSON document drives every CLI command.
//!
//! Unknown fields are rejected so typos surface as schema errors rather
//! than silently ignored settings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifolds::GrowthBudget;
use crate::modelock::TongueScanSettings;
use crate::normal_form::{NormalFormParams, SkewTentParams};
use crate::pws::{MapSpecJson, PwsMapSpec};

fn default_escape() -> f64 {
    1e6
}

fn default_steps() -> usize {
    10_000
}

fn default_transient() -> usize {
    1_000
}

/// Orbit iteration settings (also the base of `portrait`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterateConfig {
    #[serde(default)]
    pub start: (f64, f64),
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Leading points dropped from the emitted orbit.
    #[serde(default = "default_transient")]
    pub transient: usize,
    #[serde(default = "default_escape")]
    pub escape_radius: f64,
}

impl Default for IterateConfig {
    fn default() -> Self {
        IterateConfig {
            start: (0.0, 0.0),
            steps: default_steps(),
            transient: default_transient(),
            escape_radius: default_escape(),
        }
    }
}

/// Phase-portrait settings: orbit cloud plus invariant manifolds and
/// optional marked single-round periodic orbits.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PortraitConfig {
    #[serde(default)]
    pub orbit: IterateConfig,
    #[serde(default)]
    pub budget: GrowthBudget,
    /// Itineraries (strings over L/R) of periodic orbits to mark.
    #[serde(default)]
    pub mark_orbits: Vec<String>,
}

/// Bifurcation-diagram settings: single-round BCBs over a period range.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BifdiagConfig {
    pub n_range: (usize, usize),
    /// Corner value of delta_R; located by bisection when absent.
    #[serde(default)]
    pub corner_delta: Option<f64>,
    #[serde(default)]
    pub corner_bracket: Option<(f64, f64)>,
}

/// One corner-curve continuation request.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub tau_range: (f64, f64),
    pub steps: usize,
    pub delta_guess: f64,
    #[serde(default)]
    pub kink_index: usize,
}

/// Corner location settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CornerConfig {
    pub bracket: (f64, f64),
    #[serde(default)]
    pub kink_index: usize,
    #[serde(default)]
    pub curves: Vec<CurveSpec>,
}

/// Sweep settings: the Fig.-1-style composite of tongues and corner curves.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub tongues: TongueScanSettings,
    #[serde(default)]
    pub curves: Vec<CurveSpec>,
}

/// Unfolding validation settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default = "default_k_range")]
    pub k_range: (usize, usize),
    /// Also exercise maps with quadratic remainder terms.
    #[serde(default)]
    pub quadratic: bool,
}

fn default_draws() -> usize {
    100
}

fn default_k_range() -> (usize, usize) {
    (6, 14)
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            draws: default_draws(),
            k_range: default_k_range(),
            quadratic: false,
        }
    }
}

/// Skew-tent reduction settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TentConfig {
    pub params: SkewTentParams,
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

/// Top-level experiment configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub map: MapSpecJson,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub iterate: Option<IterateConfig>,
    #[serde(default)]
    pub portrait: Option<PortraitConfig>,
    #[serde(default)]
    pub bifdiag: Option<BifdiagConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub corner: Option<CornerConfig>,
    #[serde(default)]
    pub validate: Option<ValidateConfig>,
    #[serde(default)]
    pub tongues: Option<TongueScanSettings>,
    #[serde(default)]
    pub tent: Option<TentConfig>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap()
    }

    pub fn map_spec(&self) -> Result<PwsMapSpec> {
        PwsMapSpec::from_json(&self.map)
    }

    /// Border-collision normal-form parameters, when the map is one.
    pub fn normal_form(&self) -> Result<NormalFormParams> {
        match &self.map {
            MapSpecJson::Bcnf {
                tau_l,
                delta_l,
                tau_r,
                delta_r,
                mu,
            } => Ok(NormalFormParams::new(*tau_l, *delta_l, *tau_r, *delta_r, *mu)),
            MapSpecJson::Polynomial { .. } => Err(Error::Config(
                "this command needs a \"bcnf\" map".to_string(),
            )),
        }
    }

    /// Effective seed: the `CORNER_UNFOLD_SEED` environment variable
    /// overrides the config value.
    pub fn effective_seed(&self) -> u64 {
        if let Ok(v) = std::env::var("CORNER_UNFOLD_SEED") {
            if let Ok(n) = v.trim().parse() {
                return n;
            }
        }
        self.seed.unwrap_or(0)
    }
}
