//! Conditional channel attention: gate feature channels by a sigmoid map
//! computed from the pooled features and the sym-parameter,
//! `out = X * sigma(MLP_m([MLP_e(S), AvgPool(X)]))`, plus the depth-wise
//! CONCAT injection baseline.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng;
use crate::sym::SymParameter;
use crate::tensor::{Tape, Tensor, TensorId};
use crate::toy::DenseParam;

/// Per-channel gate values, all strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap {
    pub gates: Vec<f64>,
}

/// Parameters of the conditioning layer over `[h,w,c]` feature maps.
///
/// `MLP_e` embeds S to the pooled-feature size (single affine layer k -> C,
/// ReLU). `MLP_m` maps the concatenation 2C -> ceil(C/r) -> C with a ReLU
/// bottleneck; the sigmoid at its output produces the attention map.
#[derive(Debug, Clone, PartialEq)]
pub struct CcamLayer {
    channels: usize,
    k: usize,
    reduction: usize,
    pub embed: DenseParam,
    pub mix_hidden: DenseParam,
    pub mix_out: DenseParam,
}

impl CcamLayer {
    pub fn new(channels: usize, k: usize, reduction: usize, seed: u64) -> Result<Self> {
        if channels == 0 || k == 0 || reduction == 0 {
            return Err(Error::Usage(
                "channels, k and reduction must all be >= 1".into(),
            ));
        }
        let bottleneck = channels.div_ceil(reduction);
        let mut rng = rng::substream(seed, "init");
        Ok(CcamLayer {
            channels,
            k,
            reduction,
            embed: DenseParam::init(k, channels, &mut rng),
            mix_hidden: DenseParam::init(2 * channels, bottleneck, &mut rng),
            mix_out: DenseParam::init(bottleneck, channels, &mut rng),
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn reduction(&self) -> usize {
        self.reduction
    }

    pub fn bottleneck(&self) -> usize {
        self.channels.div_ceil(self.reduction)
    }

    pub fn params(&self) -> Vec<&Tensor> {
        [&self.embed, &self.mix_hidden, &self.mix_out]
            .into_iter()
            .flat_map(|l| [&l.w, &l.b])
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        [&mut self.embed, &mut self.mix_hidden, &mut self.mix_out]
            .into_iter()
            .flat_map(|l| [&mut l.w, &mut l.b])
            .collect()
    }

    /// Forward pass on the tape. `x` must be a `[h,w,c]` node and `s` a node
    /// holding the k sym-parameter entries. Returns the gated features, the
    /// attention map node, and the parameter ids (in `params` order).
    pub fn forward(
        &self,
        tape: &mut Tape,
        x: TensorId,
        s: TensorId,
    ) -> Result<(TensorId, TensorId, Vec<TensorId>)> {
        let sx = tape.shape(x).to_vec();
        if sx.len() != 3 || sx[2] != self.channels {
            return Err(Error::Usage(format!(
                "ccam expects [h,w,{}] features, got {sx:?}",
                self.channels
            )));
        }
        if tape.value(s).len() != self.k {
            return Err(Error::Usage(format!(
                "ccam expects a {}-dimensional sym-parameter, got {}",
                self.k,
                tape.value(s).len()
            )));
        }
        let ew = tape.leaf(&self.embed.w, true);
        let eb = tape.leaf(&self.embed.b, true);
        let hw = tape.leaf(&self.mix_hidden.w, true);
        let hb = tape.leaf(&self.mix_hidden.b, true);
        let ow = tape.leaf(&self.mix_out.w, true);
        let ob = tape.leaf(&self.mix_out.b, true);
        let param_ids = alloc::vec![ew, eb, hw, hb, ow, ob];

        let s_row = tape.reshape(s, &[1, self.k])?;
        let embedded = tape.dense(s_row, ew, eb)?;
        let embedded = tape.relu(embedded)?;

        let pooled = tape.global_avg_pool(x)?;
        let pooled = tape.reshape(pooled, &[1, self.channels])?;

        let joint = tape.concat_last(embedded, pooled)?;
        let hidden = tape.dense(joint, hw, hb)?;
        let hidden = tape.relu(hidden)?;
        let logits = tape.dense(hidden, ow, ob)?;
        let gates = tape.sigmoid(logits)?;

        let out = tape.channel_scale(x, gates)?;
        Ok((out, gates, param_ids))
    }

    /// Evaluate the attention map alone, outside any training context.
    pub fn attention(&self, x: &Tensor, s: &SymParameter) -> Result<AttentionMap> {
        if s.k() != self.k {
            return Err(Error::Usage(format!(
                "expected k={}, got k={}",
                self.k,
                s.k()
            )));
        }
        let mut tape = Tape::new();
        let x_id = tape.constant(x);
        let s_t = Tensor::from_vec(&[s.k()], s.values().to_vec())?;
        let s_id = tape.constant(&s_t);
        let (_, gates, _) = self.forward(&mut tape, x_id, s_id)?;
        Ok(AttentionMap {
            gates: tape.value(gates).to_vec(),
        })
    }
}

/// Depth-wise CONCAT injection baseline: append one constant plane per
/// sym-parameter entry to the feature map.
pub fn concat_inject(tape: &mut Tape, x: TensorId, s: &SymParameter) -> Result<TensorId> {
    let sx = tape.shape(x).to_vec();
    if sx.len() != 3 {
        return Err(Error::Usage(format!(
            "concat_inject expects [h,w,c] features, got {sx:?}"
        )));
    }
    let (h, w) = (sx[0], sx[1]);
    let mut planes = Vec::with_capacity(h * w * s.k());
    for _ in 0..h * w {
        planes.extend_from_slice(s.values());
    }
    let planes = Tensor::from_vec(&[h, w, s.k()], planes)?;
    let planes_id = tape.constant(&planes);
    tape.concat_last(x, planes_id)
}

/// Attention table: one row of gate values per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityTable {
    pub s_grid: Vec<SymParameter>,
    pub rows: Vec<Vec<f64>>,
    /// Per-channel (min, max) of the gate across the grid.
    pub channel_range: Vec<(f64, f64)>,
}

impl SensitivityTable {
    /// Largest per-channel spread of the gate across the S grid.
    pub fn max_spread(&self) -> f64 {
        self.channel_range
            .iter()
            .map(|(lo, hi)| hi - lo)
            .fold(0.0, f64::max)
    }
}

/// Tabulate the attention map of a layer over a grid of sym-parameters for a
/// fixed feature map.
pub fn ccam_sensitivity(
    layer: &CcamLayer,
    x: &Tensor,
    s_grid: &[SymParameter],
) -> Result<SensitivityTable> {
    if s_grid.is_empty() {
        return Err(Error::Usage("sensitivity grid must be nonempty".into()));
    }
    let mut rows = Vec::with_capacity(s_grid.len());
    for s in s_grid {
        rows.push(layer.attention(x, s)?.gates);
    }
    let c = layer.channels();
    let mut channel_range = Vec::with_capacity(c);
    for ch in 0..c {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in &rows {
            lo = lo.min(row[ch]);
            hi = hi.max(row[ch]);
        }
        channel_range.push((lo, hi));
    }
    Ok(SensitivityTable {
        s_grid: s_grid.to_vec(),
        rows,
        channel_range,
    })
}

/// CSV for a sensitivity table: `s_1..s_k,M_1..M_C`.
pub fn sensitivity_csv(table: &SensitivityTable, k: usize) -> alloc::string::String {
    use core::fmt::Write;
    let mut out = alloc::string::String::new();
    for i in 1..=k {
        if i > 1 {
            out.push(',');
        }
        let _ = write!(out, "s_{i}");
    }
    let c = table.rows.first().map_or(0, |r| r.len());
    for i in 1..=c {
        let _ = write!(out, ",M_{i}");
    }
    out.push('\n');
    for (s, row) in table.s_grid.iter().zip(&table.rows) {
        for (i, v) in s.values().iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}
