use serde::{Deserialize, Serialize};

/// Network dimensions and component switches for one agent variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    /// LSTM hidden size, shared by encoder and decoder
    pub hidden: usize,
    /// projected candidate-feature dimension (output of the g-network)
    pub proj: usize,
    /// raw candidate feature dimension from the environment
    pub feature_dim: usize,
    /// fixed width the textual attention is padded to before the
    /// progress head
    pub l_max: usize,
    /// times the marker difference scalar is tiled when appended to a
    /// projected feature
    pub marker_tile: usize,
    pub max_steps: usize,
    pub dropout: f64,
    /// learned forward/rollback gate on the action embedding
    pub regret: bool,
    /// visit-memory markers appended to candidate features
    pub marker: bool,
    /// ablation: mask the direction back to the previous viewpoint
    /// (except when it is the only navigable direction)
    pub rollback_block: bool,
    /// oscillation blocking variant: keep the block while the agent stays
    /// at the rolled-back-to viewpoint instead of lifting it after one step
    #[serde(default)]
    pub pair_block: bool,
}

impl ModelConfig {
    /// Small dimensions for fast experiments and tests.
    pub fn desk(feature_dim: usize) -> Self {
        ModelConfig {
            vocab_size: navsim::vocab::VOCAB_SIZE,
            embed_dim: 32,
            hidden: 32,
            proj: 48,
            feature_dim,
            l_max: 40,
            marker_tile: 16,
            max_steps: 12,
            dropout: 0.0,
            regret: true,
            marker: true,
            rollback_block: false,
            pair_block: false,
        }
    }

    /// Full-size dimensions (2176-d candidate features projected to 1024,
    /// 512-d hidden states, marker difference tiled 32 times).
    pub fn full_fidelity() -> Self {
        ModelConfig {
            vocab_size: navsim::vocab::VOCAB_SIZE,
            embed_dim: 256,
            hidden: 512,
            proj: 1024,
            feature_dim: 2176,
            l_max: 40,
            marker_tile: 32,
            max_steps: 20,
            dropout: 0.5,
            regret: true,
            marker: true,
            rollback_block: false,
            pair_block: false,
        }
    }

    /// Whether action scoring goes through the fused-embedding projection.
    /// With both components disabled the score is the plain inner product
    /// of the forward embedding with each projected candidate.
    pub fn uses_fused_projection(&self) -> bool {
        self.regret || self.marker
    }

    /// Width of the candidate vector at the scoring stage.
    pub fn scored_feature_dim(&self) -> usize {
        self.proj + if self.marker { self.marker_tile } else { 0 }
    }
}
