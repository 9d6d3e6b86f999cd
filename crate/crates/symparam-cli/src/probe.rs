//! Desk-scale conditioning probe: can a channel-attention layer learn an
//! S-dependent per-channel gate that a depth-wise concatenation baseline
//! cannot represent?
//!
//! The synthetic task fixes a ground-truth gate `m(S) = sigmoid(G S)` and
//! asks each candidate to map `(X, S)` to `X * m(S)`. The attention layer can
//! realize the multiplicative interaction; the concat baseline feeds the same
//! linear head, which is affine in `(X, S)` and cannot.

use rand_chacha::ChaCha8Rng;

use symparam_core::adam::{adam_step, AdamParams, AdamState};
use symparam_core::ccam::{ccam_sensitivity, concat_inject, CcamLayer, SensitivityTable};
use symparam_core::rng;
use symparam_core::sym::{sample_dirichlet, Concentration, SymParameter};
use symparam_core::toy::DenseParam;
use symparam_core::{Result, Tape, Tensor};

const H: usize = 3;
const W: usize = 3;
const CHANNELS: usize = 8;
const K: usize = 2;
const REDUCTION: usize = 4;
const TRAIN_N: usize = 128;
const EVAL_N: usize = 64;
const EPOCHS: usize = 8;
const LR: f64 = 0.01;

pub struct ProbeResult {
    pub ccam_mse: f64,
    pub concat_mse: f64,
    pub grad_trials: usize,
    pub grad_max_rel_err: f64,
    pub sensitivity: SensitivityTable,
}

impl ProbeResult {
    pub fn mse_ratio(&self) -> f64 {
        self.concat_mse / self.ccam_mse
    }

    pub fn summary(&self) -> String {
        format!(
            "ccam_mse={}\nconcat_mse={}\nmse_ratio={}\ngrad_trials={}\ngrad_max_rel_err={}\ngrad_check={}\n",
            self.ccam_mse,
            self.concat_mse,
            self.mse_ratio(),
            self.grad_trials,
            self.grad_max_rel_err,
            if self.grad_max_rel_err < 1e-6 { "pass" } else { "fail" },
        )
    }
}

struct Example {
    x: Tensor,
    s: SymParameter,
    y: Tensor,
}

/// Ground-truth gate matrix: one strongly S-sensitive row per channel.
fn gate_matrix(rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..CHANNELS)
        .map(|_| (0..K).map(|_| rng::uniform(rng, -3.0, 3.0)).collect())
        .collect()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn make_example(g: &[Vec<f64>], rng: &mut ChaCha8Rng, alpha: &Concentration) -> Result<Example> {
    let s = sample_dirichlet(alpha, rng)?;
    let n = H * W * CHANNELS;
    let xdata: Vec<f64> = (0..n).map(|_| rng::uniform(rng, -2.0, 2.0)).collect();
    let gates: Vec<f64> = g
        .iter()
        .map(|row| sigmoid(row.iter().zip(s.values()).map(|(a, b)| a * b).sum()))
        .collect();
    let ydata: Vec<f64> = xdata
        .iter()
        .enumerate()
        .map(|(i, &x)| x * gates[i % CHANNELS])
        .collect();
    Ok(Example {
        x: Tensor::from_vec(&[H, W, CHANNELS], xdata)?,
        s,
        y: Tensor::from_vec(&[H * W, CHANNELS], ydata)?,
    })
}

fn make_examples(seed: u64, label: &str, n: usize) -> Result<Vec<Example>> {
    let mut grng = rng::substream(seed, "data");
    let g = gate_matrix(&mut grng);
    let mut rng = rng::substream(seed, label);
    let alpha = Concentration::new(&vec![0.5; K])?;
    (0..n).map(|_| make_example(&g, &mut rng, &alpha)).collect()
}

/// Forward the attention path plus shared linear head; returns the loss node
/// and the trainable ids (layer params then head).
fn ccam_loss(
    tape: &mut Tape,
    layer: &CcamLayer,
    head: &DenseParam,
    ex: &Example,
) -> Result<(symparam_core::TensorId, Vec<symparam_core::TensorId>)> {
    let x = tape.constant(&ex.x);
    let s = tape.constant(&Tensor::from_vec(&[K], ex.s.values().to_vec())?);
    let (gated, _, mut ids) = layer.forward(tape, x, s)?;
    let flat = tape.reshape(gated, &[H * W, CHANNELS])?;
    let hw = tape.leaf(&head.w, true);
    let hb = tape.leaf(&head.b, true);
    ids.push(hw);
    ids.push(hb);
    let out = tape.dense(flat, hw, hb)?;
    let target = tape.constant(&ex.y);
    let loss = tape.mse_loss(out, target)?;
    Ok((loss, ids))
}

fn concat_loss(
    tape: &mut Tape,
    head: &DenseParam,
    ex: &Example,
) -> Result<(symparam_core::TensorId, Vec<symparam_core::TensorId>)> {
    let x = tape.constant(&ex.x);
    let joined = concat_inject(tape, x, &ex.s)?;
    let flat = tape.reshape(joined, &[H * W, CHANNELS + K])?;
    let hw = tape.leaf(&head.w, true);
    let hb = tape.leaf(&head.b, true);
    let out = tape.dense(flat, hw, hb)?;
    let target = tape.constant(&ex.y);
    let loss = tape.mse_loss(out, target)?;
    Ok((loss, vec![hw, hb]))
}

fn train_ccam(examples: &[Example], seed: u64) -> Result<(CcamLayer, DenseParam)> {
    let mut layer = CcamLayer::new(CHANNELS, K, REDUCTION, seed)?;
    let mut head = DenseParam::init(CHANNELS, CHANNELS, &mut rng::substream(seed, "init-head"));
    let mut state = {
        let mut params = layer.params();
        params.push(&head.w);
        params.push(&head.b);
        AdamState::new(&params)
    };
    let hp = AdamParams::default();
    let mut order_rng = rng::substream(seed, "shuffle");
    for _ in 0..EPOCHS {
        for &i in &rng::permutation(&mut order_rng, examples.len()) {
            let mut tape = Tape::new();
            let (loss, ids) = ccam_loss(&mut tape, &layer, &head, &examples[i])?;
            tape.backward(loss)?;
            let grads: Vec<Vec<f64>> = ids
                .iter()
                .map(|&id| tape.grad(id).expect("trainable leaf").to_vec())
                .collect();
            let mut params = layer.params_mut();
            params.push(&mut head.w);
            params.push(&mut head.b);
            adam_step(&mut params, &grads, &mut state, LR, &hp)?;
        }
    }
    Ok((layer, head))
}

fn train_concat(examples: &[Example], seed: u64) -> Result<DenseParam> {
    let mut head = DenseParam::init(
        CHANNELS + K,
        CHANNELS,
        &mut rng::substream(seed, "init-head"),
    );
    let mut state = AdamState::new(&[&head.w, &head.b]);
    let hp = AdamParams::default();
    let mut order_rng = rng::substream(seed, "shuffle");
    for _ in 0..EPOCHS {
        for &i in &rng::permutation(&mut order_rng, examples.len()) {
            let mut tape = Tape::new();
            let (loss, ids) = concat_loss(&mut tape, &head, &examples[i])?;
            tape.backward(loss)?;
            let grads: Vec<Vec<f64>> = ids
                .iter()
                .map(|&id| tape.grad(id).expect("trainable leaf").to_vec())
                .collect();
            adam_step(&mut [&mut head.w, &mut head.b], &grads, &mut state, LR, &hp)?;
        }
    }
    Ok(head)
}

fn eval_mse(examples: &[Example], mut f: impl FnMut(&Example) -> Result<f64>) -> Result<f64> {
    let mut total = 0.0;
    for ex in examples {
        total += f(ex)?;
    }
    Ok(total / examples.len() as f64)
}

/// Central finite differences over every trainable tensor of the attention
/// path, compared against the tape's gradients.
fn gradient_check(seed: u64, trials: usize) -> Result<f64> {
    const STEP: f64 = 1e-5;
    let examples = make_examples(seed, "gradcheck", trials)?;
    let mut worst: f64 = 0.0;
    for (t, ex) in examples.iter().enumerate() {
        let layer = CcamLayer::new(CHANNELS, K, REDUCTION, seed.wrapping_add(t as u64))?;
        let head = DenseParam::init(
            CHANNELS,
            CHANNELS,
            &mut rng::substream(seed.wrapping_add(t as u64), "init-head"),
        );
        let eval = |layer: &CcamLayer, head: &DenseParam| -> Result<f64> {
            let mut tape = Tape::new();
            let (loss, _) = ccam_loss(&mut tape, layer, head, ex)?;
            Ok(tape.value(loss)[0])
        };
        let mut tape = Tape::new();
        let (loss, ids) = ccam_loss(&mut tape, &layer, &head, ex)?;
        tape.backward(loss)?;
        let analytic: Vec<Vec<f64>> = ids
            .iter()
            .map(|&id| tape.grad(id).expect("trainable leaf").to_vec())
            .collect();

        let n_params = analytic.len();
        for pi in 0..n_params {
            for j in 0..analytic[pi].len() {
                let nudge = |delta: f64| -> Result<f64> {
                    let mut l = layer.clone();
                    let mut h = head.clone();
                    {
                        let mut params = l.params_mut();
                        params.push(&mut h.w);
                        params.push(&mut h.b);
                        params[pi].data_mut()[j] += delta;
                    }
                    eval(&l, &h)
                };
                let numeric = (nudge(STEP)? - nudge(-STEP)?) / (2.0 * STEP);
                let a = analytic[pi][j];
                let denom = a.abs().max(numeric.abs()).max(1e-4);
                worst = worst.max((a - numeric).abs() / denom);
            }
        }
    }
    Ok(worst)
}

pub fn run_probe(seed: u64) -> Result<ProbeResult> {
    let train = make_examples(seed, "train", TRAIN_N)?;
    let eval = make_examples(seed, "eval", EVAL_N)?;

    let (layer, ccam_head) = train_ccam(&train, seed)?;
    let concat_head = train_concat(&train, seed)?;

    let ccam_mse = eval_mse(&eval, |ex| {
        let mut tape = Tape::new();
        let (loss, _) = ccam_loss(&mut tape, &layer, &ccam_head, ex)?;
        Ok(tape.value(loss)[0])
    })?;
    let concat_mse = eval_mse(&eval, |ex| {
        let mut tape = Tape::new();
        let (loss, _) = concat_loss(&mut tape, &concat_head, ex)?;
        Ok(tape.value(loss)[0])
    })?;

    let grad_trials = 3;
    let grad_max_rel_err = gradient_check(seed, grad_trials)?;

    let probe_x = {
        let mut rng = rng::substream(seed, "probe-x");
        let n = H * W * CHANNELS;
        let data: Vec<f64> = (0..n).map(|_| rng::uniform(&mut rng, -2.0, 2.0)).collect();
        Tensor::from_vec(&[H, W, CHANNELS], data)?
    };
    let s_grid = vec![
        SymParameter::new(&[1.0, 0.0]).unwrap(),
        SymParameter::new(&[0.75, 0.25]).unwrap(),
        SymParameter::new(&[0.5, 0.5]).unwrap(),
        SymParameter::new(&[0.25, 0.75]).unwrap(),
        SymParameter::new(&[0.0, 1.0]).unwrap(),
    ];
    let sensitivity = ccam_sensitivity(&layer, &probe_x, &s_grid)?;

    Ok(ProbeResult {
        ccam_mse,
        concat_mse,
        grad_trials,
        grad_max_rel_err,
        sensitivity,
    })
}
