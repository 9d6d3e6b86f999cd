//! Training loop that resamples the sym-parameter per batch.
//!
//! Three modes share one loop:
//!   - `sym`:   draw S ~ Dirichlet(alpha) per batch, feed S to the model AND
//!              weight the losses by S;
//!   - `hyper`: no S input, losses weighted by a fixed simplex point;
//!   - `s_in`:  feed a freshly drawn S to the model, but weight the losses
//!              by the fixed weights (the input-synchronization ablation).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::adam::{adam_step, AdamParams, AdamState};
use crate::error::{Error, Result};
use crate::objective::WeightedObjective;
use crate::rng::{self, RngState};
use crate::sym::{sample_dirichlet, Concentration, SymParameter};
use crate::tensor::{Tape, Tensor, TensorId};

/// How the condition vector relates to the loss weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Sym,
    Hyper,
    SIn,
}

impl Mode {
    pub fn takes_sym_input(self) -> bool {
        !matches!(self, Mode::Hyper)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Sym => "sym",
            Mode::Hyper => "hyper",
            Mode::SIn => "s_in",
        }
    }
}

/// Training sample: a flat input vector plus one scalar target per loss term.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub targets: Vec<f64>,
}

/// A model that can be trained against a weighted objective. `forward` must
/// register every parameter on the tape and return the ids in the same order
/// as `params`/`params_mut`.
pub trait Model {
    /// Input width excluding the appended sym-parameter columns.
    fn base_input_dim(&self) -> usize;
    /// Whether the model consumes S as extra input columns.
    fn takes_sym_input(&self) -> bool;
    fn forward(&self, tape: &mut Tape, input: &Tensor) -> Result<(TensorId, Vec<TensorId>)>;
    fn params(&self) -> Vec<&Tensor>;
    fn params_mut(&mut self) -> Vec<&mut Tensor>;
}

/// Full training configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Piecewise-constant schedule: (number of epochs, learning rate).
    pub epoch_schedule: Vec<(usize, f64)>,
    pub adam: AdamParams,
    pub alpha: Concentration,
    pub seed: u64,
    pub mode: Mode,
    /// Required for `hyper` and `s_in` modes; must be a valid simplex point.
    pub fixed_weights: Option<SymParameter>,
}

impl TrainConfig {
    pub fn validate(&self, k: usize) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Usage("batch_size must be >= 1".into()));
        }
        if self.epoch_schedule.iter().any(|&(_, lr)| !(lr > 0.0)) {
            return Err(Error::Usage("learning rates must be > 0".into()));
        }
        if self.alpha.k() != k {
            return Err(Error::Usage(format!(
                "alpha has k={}, objective has k={k}",
                self.alpha.k()
            )));
        }
        match self.mode {
            Mode::Hyper | Mode::SIn => match &self.fixed_weights {
                None => {
                    return Err(Error::Usage(format!(
                        "mode {} requires fixed_weights",
                        self.mode.as_str()
                    )))
                }
                Some(w) => {
                    if w.k() != k {
                        return Err(Error::Usage(format!(
                            "fixed_weights has k={}, objective has k={k}",
                            w.k()
                        )));
                    }
                    if !w.is_valid_simplex() {
                        return Err(Error::Usage(
                            "fixed_weights must be a valid simplex point".into(),
                        ));
                    }
                }
            },
            Mode::Sym => {}
        }
        Ok(())
    }

    pub fn total_epochs(&self) -> usize {
        self.epoch_schedule.iter().map(|&(e, _)| e).sum()
    }

    pub fn lr_for_epoch(&self, epoch: usize) -> Option<f64> {
        let mut acc = 0;
        for &(n, lr) in &self.epoch_schedule {
            acc += n;
            if epoch < acc {
                return Some(lr);
            }
        }
        None
    }
}

/// One history row per batch.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub epoch: usize,
    pub batch: usize,
    /// The S fed to the loss combinator (fixed weights in hyper/s_in modes).
    pub weights: Vec<f64>,
    pub total_loss: f64,
    pub term_losses: Vec<f64>,
}

/// Stateful trainer; epoch-granular so callers can checkpoint between epochs.
pub struct Trainer<M: Model> {
    model: M,
    objective: WeightedObjective,
    dataset: Vec<Sample>,
    cfg: TrainConfig,
    adam: AdamState,
    shuffle_rng: ChaCha8Rng,
    dirichlet_rng: ChaCha8Rng,
    epoch: usize,
}

impl<M: Model> Trainer<M> {
    pub fn new(
        model: M,
        objective: WeightedObjective,
        dataset: Vec<Sample>,
        cfg: TrainConfig,
    ) -> Result<Self> {
        cfg.validate(objective.k())?;
        if dataset.is_empty() {
            return Err(Error::Usage("dataset must be nonempty".into()));
        }
        let k = objective.k();
        for (i, s) in dataset.iter().enumerate() {
            if s.targets.len() != k {
                return Err(Error::Usage(format!(
                    "sample {i} has {} targets, objective has k={k}",
                    s.targets.len()
                )));
            }
            if s.input.len() != model.base_input_dim() {
                return Err(Error::Usage(format!(
                    "sample {i} input width {} != model input width {}",
                    s.input.len(),
                    model.base_input_dim()
                )));
            }
        }
        // A model without an S input may still train in sym mode (S then only
        // weights the losses); the converse is an error.
        if model.takes_sym_input() && !cfg.mode.takes_sym_input() {
            return Err(Error::Usage(format!(
                "model expects a sym input but mode {} never feeds one",
                cfg.mode.as_str()
            )));
        }
        let adam = AdamState::new(&model.params());
        let shuffle_rng = rng::substream(cfg.seed, "shuffle");
        let dirichlet_rng = rng::substream(cfg.seed, "dirichlet");
        Ok(Trainer {
            model,
            objective,
            dataset,
            cfg,
            adam,
            shuffle_rng,
            dirichlet_rng,
            epoch: 0,
        })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn into_model(self) -> M {
        self.model
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn is_finished(&self) -> bool {
        self.epoch >= self.cfg.total_epochs()
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn adam_state(&self) -> &AdamState {
        &self.adam
    }

    pub fn rng_states(&self) -> (RngState, RngState) {
        (rng::capture(&self.shuffle_rng), rng::capture(&self.dirichlet_rng))
    }

    /// Restore mid-schedule training state captured from a checkpoint.
    pub fn restore_state(
        &mut self,
        epoch: usize,
        adam: AdamState,
        shuffle: &RngState,
        dirichlet: &RngState,
    ) -> Result<()> {
        let shapes_ok = adam.m.len() == self.model.params().len()
            && adam
                .m
                .iter()
                .zip(self.model.params())
                .all(|(m, p)| m.len() == p.len());
        if !shapes_ok {
            return Err(Error::Usage(
                "restored Adam state does not match model parameters".into(),
            ));
        }
        self.epoch = epoch;
        self.adam = adam;
        self.shuffle_rng = rng::restore(shuffle);
        self.dirichlet_rng = rng::restore(dirichlet);
        Ok(())
    }

    /// Run one epoch; returns the per-batch history. No-op after the
    /// schedule is exhausted.
    pub fn run_epoch(&mut self) -> Result<Vec<HistoryRow>> {
        let lr = match self.cfg.lr_for_epoch(self.epoch) {
            Some(lr) => lr,
            None => return Ok(Vec::new()),
        };
        let order = rng::permutation(&mut self.shuffle_rng, self.dataset.len());
        let mut history = Vec::new();
        let k = self.objective.k();

        for (batch_idx, batch) in order.chunks(self.cfg.batch_size).enumerate() {
            // one S draw per batch, shared across the batch
            let drawn = if self.cfg.mode.takes_sym_input() {
                Some(sample_dirichlet(&self.cfg.alpha, &mut self.dirichlet_rng)?)
            } else {
                None
            };
            let loss_weights = match self.cfg.mode {
                Mode::Sym => drawn.clone().unwrap(),
                Mode::Hyper | Mode::SIn => self.cfg.fixed_weights.clone().unwrap(),
            };
            let model_input_s = if self.model.takes_sym_input() {
                drawn.as_ref()
            } else {
                None
            };

            let b = batch.len();
            let input = build_batch_input(&self.dataset, batch, model_input_s)?;
            let mut targets = Vec::with_capacity(k);
            for ti in 0..k {
                let col: Vec<f64> = batch.iter().map(|&i| self.dataset[i].targets[ti]).collect();
                targets.push(Tensor::from_vec(&[b, 1], col)?);
            }

            let mut tape = Tape::new();
            let input_id_targets: Vec<TensorId> =
                targets.iter().map(|t| tape.constant(t)).collect();
            let (pred, param_ids) = self.model.forward(&mut tape, &input)?;
            let (total, term_ids) = self.objective.combine(
                &mut tape,
                &loss_weights,
                pred,
                &input_id_targets,
            )?;

            let total_val = tape.value(total)[0];
            if !total_val.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite loss at epoch {} batch {batch_idx}",
                    self.epoch
                )));
            }
            let term_vals: Vec<f64> = term_ids.iter().map(|&id| tape.value(id)[0]).collect();

            tape.backward(total)?;
            let grads: Vec<Vec<f64>> = param_ids
                .iter()
                .map(|&id| {
                    tape.grad(id)
                        .map(|g| g.to_vec())
                        .unwrap_or_else(|| alloc::vec![0.0; tape.value(id).len()])
                })
                .collect();
            let mut params = self.model.params_mut();
            adam_step(&mut params, &grads, &mut self.adam, lr, &self.cfg.adam)?;

            history.push(HistoryRow {
                epoch: self.epoch,
                batch: batch_idx,
                weights: loss_weights.values().to_vec(),
                total_loss: total_val,
                term_losses: term_vals,
            });
        }
        self.epoch += 1;
        Ok(history)
    }

    /// Run the remaining schedule to completion.
    pub fn run(&mut self) -> Result<Vec<HistoryRow>> {
        let mut history = Vec::new();
        while !self.is_finished() {
            history.extend(self.run_epoch()?);
        }
        Ok(history)
    }
}

/// Assemble a `[b, base+k]` input tensor, appending the S columns when given.
fn build_batch_input(
    dataset: &[Sample],
    batch: &[usize],
    s: Option<&SymParameter>,
) -> Result<Tensor> {
    let base = dataset[batch[0]].input.len();
    let extra = s.map_or(0, |s| s.k());
    let mut data = Vec::with_capacity(batch.len() * (base + extra));
    for &i in batch {
        data.extend_from_slice(&dataset[i].input);
        if let Some(s) = s {
            data.extend_from_slice(s.values());
        }
    }
    Tensor::from_vec(&[batch.len(), base + extra], data)
}

/// Convenience wrapper: train to completion, returning model and history.
pub fn train<M: Model>(
    model: M,
    objective: WeightedObjective,
    dataset: Vec<Sample>,
    cfg: TrainConfig,
) -> Result<(M, Vec<HistoryRow>)> {
    let mut trainer = Trainer::new(model, objective, dataset, cfg)?;
    let history = trainer.run()?;
    Ok((trainer.into_model(), history))
}

/// CSV export of a loss history: `epoch,batch,s_1..s_k,total_loss,<names>`.
pub fn history_csv(history: &[HistoryRow], term_names: &[&str]) -> String {
    use core::fmt::Write;
    let mut out = String::from("epoch,batch");
    let k = term_names.len();
    for i in 1..=k {
        let _ = write!(out, ",s_{i}");
    }
    out.push_str(",total_loss");
    for name in term_names {
        let _ = write!(out, ",{name}");
    }
    out.push('\n');
    for row in history {
        let _ = write!(out, "{},{}", row.epoch, row.batch);
        for w in &row.weights {
            let _ = write!(out, ",{w}");
        }
        let _ = write!(out, ",{}", row.total_loss);
        for l in &row.term_losses {
            let _ = write!(out, ",{l}");
        }
        out.push('\n');
    }
    out
}
