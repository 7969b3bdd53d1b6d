//! Parameter construction and checkpointing for the policy network.

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tapegrad::{BnState, Data, Param, ParameterSet};

use crate::config::ModelConfig;

/// Running statistics of the two standardization layers in the candidate
/// projection network. Mutated during training forwards, frozen at eval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BnStats {
    pub input: BnSnapshot,
    pub output: BnSnapshot,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BnSnapshot {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl BnSnapshot {
    fn new(dim: usize) -> Self {
        BnSnapshot { mean: vec![0.0; dim], var: vec![1.0; dim] }
    }

    pub fn to_state(&self) -> BnState {
        BnState {
            running_mean: self.mean.clone(),
            running_var: self.var.clone(),
            ..BnState::new(self.mean.len())
        }
    }

    pub fn store(&mut self, state: &BnState) {
        self.mean.clone_from(&state.running_mean);
        self.var.clone_from(&state.running_var);
    }
}

/// One agent variant: its configuration, weights, and standardization
/// statistics.
#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ParameterSet,
    pub bn: BnStats,
}

/// Expected name/shape layout for a configuration, in insertion order.
fn layout(cfg: &ModelConfig) -> Vec<(&'static str, Vec<usize>)> {
    let h = cfg.hidden;
    let mut out = vec![
        ("embed", vec![cfg.vocab_size, cfg.embed_dim]),
        ("enc.w", vec![4 * h, cfg.embed_dim + h]),
        ("enc.b", vec![4 * h]),
        ("g.bn_in.gamma", vec![cfg.feature_dim]),
        ("g.bn_in.beta", vec![cfg.feature_dim]),
        ("g.fc.w", vec![cfg.proj, cfg.feature_dim]),
        ("g.fc.b", vec![cfg.proj]),
        ("g.bn_out.gamma", vec![cfg.proj]),
        ("g.bn_out.beta", vec![cfg.proj]),
        ("w_x", vec![h, h]),
        ("w_v", vec![cfg.proj, h]),
        // decoder input: [grounded text (h), grounded visual (proj),
        // previous action embedding (proj)]
        ("dec.w", vec![4 * h, h + 2 * cfg.proj + h]),
        ("dec.b", vec![4 * h]),
        ("w_h", vec![h, h + cfg.proj]),
        ("w_pm", vec![1, cfg.l_max + h]),
        ("w_a", vec![cfg.proj, 2 * h]),
    ];
    if cfg.regret {
        out.push(("w_r.w", vec![2, 1]));
        out.push(("w_r.b", vec![2]));
    }
    if cfg.uses_fused_projection() {
        out.push(("w_fr", vec![cfg.scored_feature_dim(), cfg.proj]));
    }
    out
}

impl Model {
    pub fn new(config: ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParameterSet::new();
        for (name, shape) in layout(&config) {
            let param = if name.ends_with(".b") || name.ends_with(".beta") {
                Param::zeros(&shape)
            } else if name.ends_with(".gamma") {
                Param::new(
                    Data { shape: shape.clone(), values: vec![1.0; shape[0]] },
                    true,
                )
            } else {
                let fan_in = *shape.last().unwrap();
                Param::uniform(&shape, fan_in, &mut rng)
            };
            params.insert(name, param);
        }
        // positive forget-gate bias (gate order: input, forget, cell, output)
        for name in ["enc.b", "dec.b"] {
            let b = params.get_mut(name);
            let h = b.data.len() / 4;
            for v in &mut b.data.values[h..2 * h] {
                *v = 1.0;
            }
        }
        // the gate starts strongly forward so the untrained monitor cannot
        // trigger spurious rollbacks; training opens it up where it pays
        if config.regret {
            params.get_mut("w_r.b").data.values = vec![2.0, -2.0];
        }
        // the fused projection starts as the identity on the embedding block
        // (marker rows zero), so every variant begins with the same scoring
        // rule and learns its deviations from there
        if config.uses_fused_projection() {
            let w = params.get_mut("w_fr");
            w.data.values.fill(0.0);
            for i in 0..config.proj {
                w.data.values[i * config.proj + i] = 1.0;
            }
        }
        let bn = BnStats {
            input: BnSnapshot::new(config.feature_dim),
            output: BnSnapshot::new(config.proj),
        };
        Model { config, params, bn }
    }
}

// ── checkpoint format ───────────────────────────────────────────────

#[derive(Serialize, Deserialize)]
struct CheckpointEntry {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
    trainable: bool,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    config: ModelConfig,
    entries: Vec<CheckpointEntry>,
    bn: BnStats,
}

const CHECKPOINT_VERSION: u32 = 1;

impl Model {
    pub fn to_json(&self) -> String {
        let entries = self
            .params
            .iter()
            .map(|(name, p)| CheckpointEntry {
                name: name.to_string(),
                shape: p.data.shape.clone(),
                values: p.data.values.clone(),
                trainable: p.trainable,
            })
            .collect();
        let ckpt = Checkpoint {
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            entries,
            bn: self.bn.clone(),
        };
        serde_json::to_string(&ckpt).expect("checkpoint serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text).context("malformed checkpoint")?;
        if ckpt.version != CHECKPOINT_VERSION {
            bail!("unsupported checkpoint version {}", ckpt.version);
        }
        let expected = layout(&ckpt.config);
        if ckpt.entries.len() != expected.len() {
            bail!(
                "checkpoint has {} parameters, config requires {}",
                ckpt.entries.len(),
                expected.len()
            );
        }
        let mut params = ParameterSet::new();
        for (entry, (name, shape)) in ckpt.entries.iter().zip(&expected) {
            if entry.name != *name {
                bail!("unexpected parameter {:?}, wanted {name:?}", entry.name);
            }
            if entry.shape != *shape {
                bail!(
                    "parameter {name:?} has shape {:?}, config requires {shape:?}",
                    entry.shape
                );
            }
            if entry.values.len() != shape.iter().product::<usize>() {
                bail!("parameter {name:?} value count does not match its shape");
            }
            params.insert(
                name,
                Param::new(
                    Data { shape: shape.clone(), values: entry.values.clone() },
                    entry.trainable,
                ),
            );
        }
        if ckpt.bn.input.mean.len() != ckpt.config.feature_dim
            || ckpt.bn.output.mean.len() != ckpt.config.proj
        {
            bail!("standardization statistics do not match the config dims");
        }
        Ok(Model { config: ckpt.config, params, bn: ckpt.bn })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json())
            .with_context(|| format!("writing checkpoint {}", path.display()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading checkpoint {}", path.display()))?;
        Self::from_json(&text)
    }
}
