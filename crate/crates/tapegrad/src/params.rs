//! Named parameter storage with gradient accumulators.
//!
//! Parameters live outside any tape. A rollout clones each parameter onto
//! its tape as a leaf ([`TapeBinding::bind`]); after `backward`, the leaf
//! gradients are reduced back into the accumulators. Multiple tapes may be
//! reduced into the same set before an optimizer step.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Data;
use crate::tape::{Grads, Tape, Var};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Param {
    pub data: Data,
    #[serde(skip)]
    pub grad: Vec<f64>,
    pub trainable: bool,
}

impl Param {
    pub fn new(data: Data, trainable: bool) -> Self {
        let grad = vec![0.0; data.len()];
        Param { data, grad, trainable }
    }

    /// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))
    pub fn uniform<R: Rng + ?Sized>(shape: &[usize], fan_in: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let n: usize = shape.iter().product();
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(-bound..bound)).collect();
        Param::new(Data { shape: shape.to_vec(), values }, true)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Param::new(Data::zeros(shape), true)
    }
}

/// Ordered map of named parameters. Iteration order is insertion order, so
/// checkpoints and gradient reductions are deterministic.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ParameterSet {
    names: Vec<String>,
    entries: BTreeMap<String, Param>,
}

impl ParameterSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, param: Param) {
        assert!(
            !self.entries.contains_key(name),
            "duplicate parameter name {name:?}"
        );
        self.names.push(name.to_string());
        self.entries.insert(name.to_string(), param);
    }

    pub fn get(&self, name: &str) -> &Param {
        self.entries
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name:?}"))
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Param {
        self.entries
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown parameter {name:?}"))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param)> {
        self.names.iter().map(|n| (n.as_str(), &self.entries[n]))
    }

    pub fn zero_grads(&mut self) {
        for p in self.entries.values_mut() {
            p.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    pub fn num_scalars(&self) -> usize {
        self.entries.values().map(|p| p.data.len()).sum()
    }
}

/// Parameter-name ↔ tape-leaf correspondence for one rollout.
pub struct TapeBinding {
    pairs: Vec<(String, Var)>,
    lookup: BTreeMap<String, Var>,
}

impl TapeBinding {
    /// Loads every parameter onto `tape` as a leaf.
    pub fn bind(tape: &mut Tape, params: &ParameterSet) -> Self {
        let mut pairs = Vec::new();
        let mut lookup = BTreeMap::new();
        for (name, p) in params.iter() {
            let v = tape.leaf(p.data.clone());
            pairs.push((name.to_string(), v));
            lookup.insert(name.to_string(), v);
        }
        TapeBinding { pairs, lookup }
    }

    pub fn var(&self, name: &str) -> Var {
        *self
            .lookup
            .get(name)
            .unwrap_or_else(|| panic!("parameter {name:?} not bound on tape"))
    }

    /// Reduces this tape's leaf gradients into the accumulators of
    /// trainable parameters.
    pub fn accumulate(&self, grads: &Grads, params: &mut ParameterSet) {
        for (name, var) in &self.pairs {
            let p = params.get_mut(name);
            if !p.trainable {
                continue;
            }
            for (acc, g) in p.grad.iter_mut().zip(grads.get(*var)) {
                *acc += g;
            }
        }
    }
}
