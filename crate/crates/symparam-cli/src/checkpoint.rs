//! Checkpoint persistence: a structured JSON document with named flat
//! parameter arrays, optimizer moments and captured RNG stream positions, so
//! a resumed run continues bit-identically.

use std::path::Path;

use serde::{Deserialize, Serialize};

use symparam_core::adam::AdamState;
use symparam_core::rng::RngState;
use symparam_core::sym::SymParameter;
use symparam_core::toy::{DenseParam, ToyModel};
use symparam_core::train::{Mode, Trainer};
use symparam_core::{Error, Tensor};

use crate::config::parse_mode;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamSnapshot {
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamState {
    pub seed: Vec<u8>,
    pub word_pos: u128,
}

impl StreamState {
    fn capture(state: &RngState) -> Self {
        StreamState {
            seed: state.seed.to_vec(),
            word_pos: state.word_pos,
        }
    }

    fn restore(&self) -> symparam_core::Result<RngState> {
        let seed: [u8; 32] = self
            .seed
            .as_slice()
            .try_into()
            .map_err(|_| Error::ShapeMismatch("rng seed must be 32 bytes".into()))?;
        Ok(RngState {
            seed,
            word_pos: self.word_pos,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngSnapshot {
    pub shuffle: StreamState,
    pub dirichlet: StreamState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub mode: String,
    pub k: usize,
    pub width: usize,
    pub epoch: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fixed_weights: Option<Vec<f64>>,
    pub params: Vec<ParamEntry>,
    pub adam: AdamSnapshot,
    pub rng: RngSnapshot,
}

impl Checkpoint {
    pub fn from_trainer(trainer: &Trainer<ToyModel>) -> Self {
        let model = trainer.model();
        let params = model
            .layers()
            .iter()
            .enumerate()
            .flat_map(|(i, layer)| {
                [
                    ParamEntry {
                        name: format!("layer{i}.w"),
                        shape: layer.w.shape().to_vec(),
                        data: layer.w.data().to_vec(),
                    },
                    ParamEntry {
                        name: format!("layer{i}.b"),
                        shape: layer.b.shape().to_vec(),
                        data: layer.b.data().to_vec(),
                    },
                ]
            })
            .collect();
        let adam = trainer.adam_state();
        let (shuffle, dirichlet) = trainer.rng_states();
        Checkpoint {
            format_version: FORMAT_VERSION,
            mode: model.mode().as_str().to_string(),
            k: model.k(),
            width: model.width(),
            epoch: trainer.epoch(),
            fixed_weights: trainer
                .config()
                .fixed_weights
                .as_ref()
                .map(|w| w.values().to_vec()),
            params,
            adam: AdamSnapshot {
                step: adam.step,
                m: adam.m.clone(),
                v: adam.v.clone(),
            },
            rng: RngSnapshot {
                shuffle: StreamState::capture(&shuffle),
                dirichlet: StreamState::capture(&dirichlet),
            },
        }
    }

    pub fn mode(&self) -> symparam_core::Result<Mode> {
        parse_mode(&self.mode)
    }

    pub fn fixed_weights(&self) -> symparam_core::Result<Option<SymParameter>> {
        match &self.fixed_weights {
            Some(w) => Ok(Some(SymParameter::new(w)?)),
            None => Ok(None),
        }
    }

    /// Rebuild the model; fails if stored shapes contradict the architecture
    /// descriptor.
    pub fn to_model(&self) -> symparam_core::Result<ToyModel> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::ShapeMismatch(format!(
                "unsupported checkpoint format_version {}",
                self.format_version
            )));
        }
        if self.params.len() % 2 != 0 {
            return Err(Error::ShapeMismatch(
                "checkpoint parameters must come in w/b pairs".into(),
            ));
        }
        let mut layers = Vec::with_capacity(self.params.len() / 2);
        for (i, pair) in self.params.chunks(2).enumerate() {
            let expect = [format!("layer{i}.w"), format!("layer{i}.b")];
            if pair[0].name != expect[0] || pair[1].name != expect[1] {
                return Err(Error::ShapeMismatch(format!(
                    "unexpected parameter names {:?}/{:?}",
                    pair[0].name, pair[1].name
                )));
            }
            layers.push(DenseParam {
                w: Tensor::from_vec(&pair[0].shape, pair[0].data.clone())?,
                b: Tensor::from_vec(&pair[1].shape, pair[1].data.clone())?,
            });
        }
        ToyModel::from_layers(self.mode()?, self.k, self.width, layers)
    }

    pub fn adam_state(&self) -> AdamState {
        AdamState {
            m: self.adam.m.clone(),
            v: self.adam.v.clone(),
            step: self.adam.step,
        }
    }

    pub fn rng_states(&self) -> symparam_core::Result<(RngState, RngState)> {
        Ok((self.rng.shuffle.restore()?, self.rng.dirichlet.restore()?))
    }

    /// Push the stored progress into a freshly constructed trainer.
    pub fn restore_into(&self, trainer: &mut Trainer<ToyModel>) -> symparam_core::Result<()> {
        let (shuffle, dirichlet) = self.rng_states()?;
        trainer.restore_state(self.epoch, self.adam_state(), &shuffle, &dirichlet)
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn to_json(&self) -> anyhow::Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let ckpt: Checkpoint = serde_json::from_str(&text)
            .map_err(|e| Error::ShapeMismatch(format!("corrupt checkpoint: {e}")))?;
        ckpt.to_model()?; // shape validation happens on load, not first use
        Ok(ckpt)
    }
}
