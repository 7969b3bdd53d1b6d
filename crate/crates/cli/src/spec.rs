//! Declarative experiment specification. One TOML file plus a master seed
//! fully determines a run; a serialized copy is written beside the outputs.

use agent::ModelConfig;
use anyhow::{bail, Context, Result};
use navsim::EnvConfig;
use serde::{Deserialize, Serialize};
use trainer::TrainConfig;

/// The four component variants of the ablation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Baseline,
    RegretOnly,
    MarkerOnly,
    Full,
}

impl Variant {
    pub const ALL: [Variant; 4] =
        [Variant::Baseline, Variant::RegretOnly, Variant::MarkerOnly, Variant::Full];

    pub fn flags(self) -> (bool, bool) {
        match self {
            Variant::Baseline => (false, false),
            Variant::RegretOnly => (true, false),
            Variant::MarkerOnly => (false, true),
            Variant::Full => (true, true),
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::RegretOnly => "regret-only",
            Variant::MarkerOnly => "marker-only",
            Variant::Full => "full",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "baseline" => Variant::Baseline,
            "regret-only" => Variant::RegretOnly,
            "marker-only" => Variant::MarkerOnly,
            "full" => Variant::Full,
            other => bail!("unknown variant {other:?} (expected baseline, regret-only, marker-only, or full)"),
        })
    }
}

/// Model preset plus the switches that define a variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSpec {
    /// "desk" or "full-fidelity"
    pub preset: String,
    pub regret: bool,
    pub marker: bool,
    pub rollback_block: bool,
    /// optional dimension overrides on top of the preset
    pub hidden: Option<usize>,
    pub proj: Option<usize>,
    pub embed_dim: Option<usize>,
    pub marker_tile: Option<usize>,
    pub max_steps: Option<usize>,
    pub dropout: Option<f64>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            preset: "desk".into(),
            regret: true,
            marker: true,
            rollback_block: false,
            hidden: None,
            proj: None,
            embed_dim: None,
            marker_tile: None,
            max_steps: None,
            dropout: None,
        }
    }
}

impl ModelSpec {
    pub fn build(&self, feature_dim: usize) -> Result<ModelConfig> {
        let mut cfg = match self.preset.as_str() {
            "desk" => ModelConfig::desk(feature_dim),
            "full-fidelity" => {
                let cfg = ModelConfig::full_fidelity();
                if cfg.feature_dim != feature_dim {
                    bail!(
                        "full-fidelity preset expects {}-d features, environment provides {}",
                        cfg.feature_dim,
                        feature_dim
                    );
                }
                cfg
            }
            other => bail!("unknown preset {other:?} (expected \"desk\" or \"full-fidelity\")"),
        };
        cfg.regret = self.regret;
        cfg.marker = self.marker;
        cfg.rollback_block = self.rollback_block;
        if let Some(v) = self.hidden {
            cfg.hidden = v;
        }
        if let Some(v) = self.proj {
            cfg.proj = v;
        }
        if let Some(v) = self.embed_dim {
            cfg.embed_dim = v;
        }
        if let Some(v) = self.marker_tile {
            cfg.marker_tile = v;
        }
        if let Some(v) = self.max_steps {
            cfg.max_steps = v;
        }
        if let Some(v) = self.dropout {
            cfg.dropout = v;
        }
        Ok(cfg)
    }

    pub fn with_variant(&self, variant: Variant) -> ModelSpec {
        let (regret, marker) = variant.flags();
        ModelSpec { regret, marker, ..self.clone() }
    }
}

/// Settings for the consolidated ablation table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationSpec {
    /// master seeds; medians are taken across them
    pub seeds: Vec<u64>,
    /// instruction-noise level for the noisy evaluation regime
    pub eval_noise: f64,
    /// instruction-noise level for the noisy training regime
    pub train_noise: f64,
    /// also train the clean-vs-noisy regime rows (doubles baseline/full runs)
    pub noisy_regime: bool,
}

impl Default for AblationSpec {
    fn default() -> Self {
        AblationSpec { seeds: vec![0, 1, 2, 3, 4], eval_noise: 0.6, train_noise: 0.6, noisy_regime: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    /// run name; outputs live under `<output root>/<name>/`
    pub name: String,
    /// master seed fanned out to environment, initialization, and rollouts
    pub seed: u64,
    pub env: EnvConfig,
    pub model: ModelSpec,
    pub train: TrainConfig,
    pub ablation: AblationSpec,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            name: "default".into(),
            seed: 0,
            env: EnvConfig::default(),
            model: ModelSpec::default(),
            train: TrainConfig::default(),
            ablation: AblationSpec::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading spec {}", path.display()))?;
        let spec: ExperimentSpec =
            toml::from_str(&text).with_context(|| format!("parsing spec {}", path.display()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || self.name.contains(std::path::is_separator)
            || self.name.starts_with('.')
        {
            bail!("spec name {:?} is not a plain directory name", self.name);
        }
        if !(0.0..=1.0).contains(&self.ablation.eval_noise)
            || !(0.0..=1.0).contains(&self.ablation.train_noise)
        {
            bail!("ablation noise levels must be in [0, 1]");
        }
        if self.ablation.seeds.is_empty() {
            bail!("ablation needs at least one seed");
        }
        self.env.graph.validate().map_err(anyhow::Error::new)?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("spec serialization cannot fail")
    }
}
