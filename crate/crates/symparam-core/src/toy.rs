//! 1-D regression + classification toy experiment with a single network.
//!
//! The dataset is built from `g(x) = x(x-0.8)(x+0.9) + 0.5` (regression
//! target) and `h(x) = -0.1x + 0.5` (class boundary: label 1 iff
//! `g(x) < h(x)`). One MLP `f(x, S)` learns both tasks under the weighted
//! objective `L = s_1 * MSE + s_2 * 0.2 * BCE`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::objective::{LossTerm, WeightedObjective};
use crate::rng;
use crate::sym::SymParameter;
use crate::tensor::{Tape, Tensor, TensorId};
use crate::train::{Mode, Model, Sample};

/// Classification loss scale: the BCE term is scaled down to 20% to balance
/// the two losses.
pub const BCE_SCALE: f64 = 0.2;
/// Clamp applied to the raw model output before the BCE logs.
pub const BCE_CLAMP_EPS: f64 = 1e-6;

/// Regression target polynomial.
pub fn g(x: f64) -> f64 {
    x * (x - 0.8) * (x + 0.9) + 0.5
}

/// Class boundary line.
pub fn h(x: f64) -> f64 {
    -0.1 * x + 0.5
}

/// Class label: 1 iff `g(x) < h(x)` (strict; ties get 0).
pub fn class_label(x: f64) -> f64 {
    if g(x) < h(x) {
        1.0
    } else {
        0.0
    }
}

/// One dataset row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToySample {
    pub x: f64,
    pub y_r: f64,
    pub y_c: f64,
}

impl ToySample {
    pub fn at(x: f64) -> Self {
        ToySample {
            x,
            y_r: g(x),
            y_c: class_label(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingScheme {
    /// Evenly spaced over [-1, 1], endpoints included.
    UniformGrid,
    /// Independent uniform draws in [-1, 1].
    UniformRandom,
}

/// Build the (x, y_r, y_c) dataset.
pub fn make_dataset(n: usize, sampling: SamplingScheme, seed: u64) -> Result<Vec<ToySample>> {
    if n < 2 {
        return Err(Error::Usage(format!("dataset needs n >= 2, got {n}")));
    }
    let mut out = Vec::with_capacity(n);
    match sampling {
        SamplingScheme::UniformGrid => {
            for i in 0..n {
                let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
                out.push(ToySample::at(x));
            }
        }
        SamplingScheme::UniformRandom => {
            let mut rng = rng::substream(seed, "data");
            for _ in 0..n {
                out.push(ToySample::at(rng::uniform(&mut rng, -1.0, 1.0)));
            }
        }
    }
    Ok(out)
}

/// Convert toy samples into generic training samples (targets: y_r, y_c).
pub fn to_train_samples(data: &[ToySample]) -> Vec<Sample> {
    data.iter()
        .map(|s| Sample {
            input: alloc::vec![s.x],
            targets: alloc::vec![s.y_r, s.y_c],
        })
        .collect()
}

/// The toy objective: `L_r = MSE`, `L_c = 0.2 * BCE(clamped output)`.
pub fn toy_objective() -> WeightedObjective {
    let reg = LossTerm::new("L_r", |tape, pred, target| tape.mse_loss(pred, target));
    let cls = LossTerm::new("L_c", |tape, pred, target| {
        let bce = tape.bce_loss(pred, target, BCE_CLAMP_EPS)?;
        tape.scale(bce, BCE_SCALE)
    });
    WeightedObjective::new(alloc::vec![reg, cls]).expect("static objective is valid")
}

/// Dense layer parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParam {
    pub w: Tensor,
    pub b: Tensor,
}

impl DenseParam {
    /// Uniform init in +-1/sqrt(fan_in); biases zero.
    pub fn init(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / libm::sqrt(fan_in as f64);
        let data: Vec<f64> = (0..fan_in * fan_out)
            .map(|_| rng::uniform(rng, -bound, bound))
            .collect();
        DenseParam {
            w: Tensor::from_vec(&[fan_in, fan_out], data).unwrap(),
            b: Tensor::zeros(&[fan_out]).unwrap(),
        }
    }
}

/// The conditioned MLP `f(x, S)`: input (1 or 1+k) -> three hidden ReLU
/// layers of `width` -> 1 raw output used for both tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    mode: Mode,
    k: usize,
    width: usize,
    layers: Vec<DenseParam>,
}

impl ToyModel {
    pub fn new(mode: Mode, k: usize, width: usize, seed: u64) -> Self {
        let mut rng = rng::substream(seed, "init");
        let input_dim = if mode.takes_sym_input() { 1 + k } else { 1 };
        let dims = [input_dim, width, width, width, 1];
        let layers = dims
            .windows(2)
            .map(|d| DenseParam::init(d[0], d[1], &mut rng))
            .collect();
        ToyModel {
            mode,
            k,
            width,
            layers,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn layers(&self) -> &[DenseParam] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut Vec<DenseParam> {
        &mut self.layers
    }

    pub fn from_layers(mode: Mode, k: usize, width: usize, layers: Vec<DenseParam>) -> Result<Self> {
        let input_dim = if mode.takes_sym_input() { 1 + k } else { 1 };
        let dims = [input_dim, width, width, width, 1];
        if layers.len() != 4 {
            return Err(Error::Usage(format!("expected 4 layers, got {}", layers.len())));
        }
        for (layer, d) in layers.iter().zip(dims.windows(2)) {
            if layer.w.shape() != [d[0], d[1]] || layer.b.shape() != [d[1]] {
                return Err(Error::ShapeMismatch(format!(
                    "layer shape {:?}/{:?} does not match architecture {:?}",
                    layer.w.shape(),
                    layer.b.shape(),
                    d
                )));
            }
        }
        Ok(ToyModel {
            mode,
            k,
            width,
            layers,
        })
    }

    /// Batched prediction outside any tape context, for evaluation. `s` is
    /// appended to every row when the model takes a sym input.
    pub fn predict(&self, xs: &[f64], s: Option<&SymParameter>) -> Result<Vec<f64>> {
        let dim = if self.mode.takes_sym_input() { 1 + self.k } else { 1 };
        let mut data = Vec::with_capacity(xs.len() * dim);
        for &x in xs {
            data.push(x);
            match (self.mode.takes_sym_input(), s) {
                (true, Some(s)) => data.extend_from_slice(s.values()),
                (true, None) => {
                    return Err(Error::Usage("model requires a sym-parameter input".into()))
                }
                (false, _) => {}
            }
        }
        let input = Tensor::from_vec(&[xs.len(), dim], data)?;
        let mut tape = Tape::new();
        let (out, _) = self.forward(&mut tape, &input)?;
        Ok(tape.value(out).to_vec())
    }
}

impl Model for ToyModel {
    fn base_input_dim(&self) -> usize {
        1
    }

    fn takes_sym_input(&self) -> bool {
        self.mode.takes_sym_input()
    }

    fn forward(&self, tape: &mut Tape, input: &Tensor) -> Result<(TensorId, Vec<TensorId>)> {
        let mut param_ids = Vec::with_capacity(self.layers.len() * 2);
        let mut cur = tape.constant(input);
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let w = tape.leaf(&layer.w, true);
            let b = tape.leaf(&layer.b, true);
            param_ids.push(w);
            param_ids.push(b);
            cur = tape.dense(cur, w, b)?;
            if i < last {
                cur = tape.relu(cur)?;
            }
        }
        Ok((cur, param_ids))
    }

    fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|l| [&l.w, &l.b]).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.w, &mut l.b])
            .collect()
    }
}

/// One row of a Table-1-style report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub weights: Vec<f64>,
    pub total: f64,
    pub term_losses: Vec<f64>,
}

/// Weighted-loss evaluation over a weight grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub mode: Mode,
    pub rows: Vec<ReportRow>,
}

/// The five canonical comparison rows.
pub fn default_weight_grid() -> Vec<SymParameter> {
    [
        [1.0, 0.0],
        [0.75, 0.25],
        [0.5, 0.5],
        [0.25, 0.75],
        [0.0, 1.0],
    ]
    .iter()
    .map(|w| SymParameter::new(w).unwrap())
    .collect()
}

/// Mean regression and (scaled) classification losses of a model over a
/// dataset, at a given input condition.
pub fn measure_losses(
    model: &ToyModel,
    data: &[ToySample],
    s: Option<&SymParameter>,
) -> Result<(f64, f64)> {
    let xs: Vec<f64> = data.iter().map(|t| t.x).collect();
    let preds = model.predict(&xs, s)?;
    if preds.iter().any(|p| !p.is_finite()) {
        return Err(Error::Numerical("model emitted a non-finite prediction".into()));
    }
    let n = data.len() as f64;
    let mut mse = 0.0;
    let mut bce = 0.0;
    for (p, t) in preds.iter().zip(data) {
        mse += (p - t.y_r) * (p - t.y_r);
        let pc = p.clamp(BCE_CLAMP_EPS, 1.0 - BCE_CLAMP_EPS);
        bce -= t.y_c * libm::log(pc) + (1.0 - t.y_c) * libm::log(1.0 - pc);
    }
    Ok((mse / n, BCE_SCALE * bce / n))
}

/// Table-1-style evaluation. For sym/s_in models each row's weights are fed
/// as the input condition; a hyper model has no S input, so every row
/// reweights the same two measured losses.
pub fn evaluate_grid(
    model: &ToyModel,
    data: &[ToySample],
    grid: &[SymParameter],
) -> Result<EvaluationReport> {
    if data.is_empty() || grid.is_empty() {
        return Err(Error::Usage("evaluate_grid needs data and a nonempty grid".into()));
    }
    let mut rows = Vec::with_capacity(grid.len());
    let hyper_losses = if model.takes_sym_input() {
        None
    } else {
        Some(measure_losses(model, data, None)?)
    };
    for s in grid {
        let (lr, lc) = match hyper_losses {
            Some(pair) => pair,
            None => measure_losses(model, data, Some(s))?,
        };
        let w = s.values();
        rows.push(ReportRow {
            weights: w.to_vec(),
            total: w[0] * lr + w[1] * lc,
            term_losses: alloc::vec![lr, lc],
        });
    }
    Ok(EvaluationReport {
        mode: model.mode(),
        rows,
    })
}

/// Loss surface over (x, y) for a fixed S, with optional model overlay.
#[derive(Debug, Clone, PartialEq)]
pub struct LossLandscape {
    pub s: SymParameter,
    pub x_grid: Vec<f64>,
    pub y_grid: Vec<f64>,
    /// `values[i][j] = L(y_grid[j]; x_grid[i], S)`, indexed `[x][y]`.
    pub values: Vec<Vec<f64>>,
    /// Model outputs `f(x, S)` per x-grid point, when a model was given.
    pub overlay: Option<Vec<f64>>,
}

/// Pointwise weighted loss `s_1 (y - g(x))^2 + s_2 * 0.2 * BCE(y, y_c(x))`.
pub fn pointwise_loss(s: &SymParameter, x: f64, y: f64) -> f64 {
    let w = s.values();
    let reg = (y - g(x)) * (y - g(x));
    let t = class_label(x);
    let yc = y.clamp(BCE_CLAMP_EPS, 1.0 - BCE_CLAMP_EPS);
    let bce = -(t * libm::log(yc) + (1.0 - t) * libm::log(1.0 - yc));
    w[0] * reg + w[1] * BCE_SCALE * bce
}

pub fn evenly_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Compute the loss landscape for S over the grids, overlaying the trained
/// model's outputs when one is provided.
pub fn loss_landscape(
    s: &SymParameter,
    x_grid: &[f64],
    y_grid: &[f64],
    model: Option<&ToyModel>,
) -> Result<LossLandscape> {
    if s.k() != 2 {
        return Err(Error::Usage("landscape requires a 2-dimensional S".into()));
    }
    if x_grid.is_empty() || y_grid.is_empty() {
        return Err(Error::Usage("landscape grids must be nonempty".into()));
    }
    let values: Vec<Vec<f64>> = x_grid
        .iter()
        .map(|&x| y_grid.iter().map(|&y| pointwise_loss(s, x, y)).collect())
        .collect();
    let overlay = match model {
        Some(m) => {
            let cond = if m.takes_sym_input() { Some(s) } else { None };
            Some(m.predict(x_grid, cond)?)
        }
        None => None,
    };
    Ok(LossLandscape {
        s: s.clone(),
        x_grid: x_grid.to_vec(),
        y_grid: y_grid.to_vec(),
        values,
        overlay,
    })
}

/// Per-width comparison of one sym model against one hyper model per grid
/// row, evaluated on the same dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub width: usize,
    pub sym: EvaluationReport,
    /// One report per grid row, each from a hyper model trained at that row.
    pub hyper: Vec<EvaluationReport>,
}

/// Train a sym model and one hyper model per grid row for each width, and
/// evaluate everything on `eval_data`.
pub fn size_sweep(
    widths: &[usize],
    cfg: &crate::train::TrainConfig,
    train_data: &[ToySample],
    eval_data: &[ToySample],
    grid: &[SymParameter],
) -> Result<Vec<SweepEntry>> {
    if widths.is_empty() {
        return Err(Error::Usage("size_sweep needs at least one width".into()));
    }
    if widths.iter().any(|&w| w == 0) {
        return Err(Error::Usage("widths must be >= 1".into()));
    }
    let samples = to_train_samples(train_data);
    let mut out = Vec::with_capacity(widths.len());
    for &width in widths {
        let mut sym_cfg = cfg.clone();
        sym_cfg.mode = Mode::Sym;
        sym_cfg.fixed_weights = None;
        let model = ToyModel::new(Mode::Sym, 2, width, cfg.seed);
        let (model, _) =
            crate::train::train(model, toy_objective(), samples.clone(), sym_cfg)?;
        let sym = evaluate_grid(&model, eval_data, grid)?;

        let mut hyper = Vec::with_capacity(grid.len());
        for (row, s) in grid.iter().enumerate() {
            let mut hyper_cfg = cfg.clone();
            hyper_cfg.mode = Mode::Hyper;
            hyper_cfg.fixed_weights = Some(s.clone());
            // distinct init per row so the hyper models are independent
            let seed = cfg.seed.wrapping_add(1 + row as u64);
            hyper_cfg.seed = seed;
            let model = ToyModel::new(Mode::Hyper, 2, width, seed);
            let (model, _) =
                crate::train::train(model, toy_objective(), samples.clone(), hyper_cfg)?;
            hyper.push(evaluate_grid(&model, eval_data, grid)?);
        }
        out.push(SweepEntry { width, sym, hyper });
    }
    Ok(out)
}

/// CSV for an evaluation report: `w_r,w_c,L_total,L_r,L_c`.
pub fn report_csv(report: &EvaluationReport) -> String {
    use core::fmt::Write;
    let mut out = String::from("w_r,w_c,L_total,L_r,L_c\n");
    for row in &report.rows {
        let _ = write!(
            out,
            "{},{},{},{},{}\n",
            row.weights[0], row.weights[1], row.total, row.term_losses[0], row.term_losses[1]
        );
    }
    out
}
