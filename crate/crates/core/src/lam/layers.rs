//! Point-feature kernels with hand-written backward passes.
//!
//! Reductions over the point axis start at the query point and walk the
//! cycle (`i, i+1, ..., i-1`), so every stage commutes exactly with cyclic
//! relabeling of the points, not just up to rounding.

use std::f64::consts::PI;

use super::tensor::{matmul, matmul_nt, matmul_tn_acc, Mat};
use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::image::FrameImage;

/// Point features, one row per point.
pub type PointFeatures = Mat;

/// Cyclic sinusoidal encoding `[sin(2 pi i / n), cos(2 pi i / n)]`.
pub fn cyclic_positional_encoding(i: usize, n: usize) -> [f64; 2] {
    assert!(n >= 1, "encoding period must be positive");
    let phase = 2.0 * PI * (i % n) as f64 / n as f64;
    [phase.sin(), phase.cos()]
}

/// Owned circular-convolution kernel: weight `[width, c_out, c_in]`, bias `[c_out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircularKernel {
    pub width: usize,
    pub c_in: usize,
    pub c_out: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl CircularKernel {
    /// Single-channel kernel from taps `W_{-h}..W_{h}`.
    pub fn scalar(taps: &[f64]) -> Self {
        Self {
            width: taps.len(),
            c_in: 1,
            c_out: 1,
            weight: taps.to_vec(),
            bias: vec![0.0],
        }
    }
}

/// `out_i = sum_d W_d x_{(i+d) mod N} + bias` for `d` in `-(k-1)/2 ..= (k-1)/2`.
pub fn circular_conv(x: &PointFeatures, kernel: &CircularKernel) -> Result<PointFeatures> {
    if kernel.width % 2 == 0 {
        return Err(Error::ShapeMismatch(format!(
            "kernel width {} must be odd",
            kernel.width
        )));
    }
    if x.cols() != kernel.c_in
        || kernel.weight.len() != kernel.width * kernel.c_in * kernel.c_out
        || kernel.bias.len() != kernel.c_out
    {
        return Err(Error::ShapeMismatch(format!(
            "{}-channel input against {}x{}x{} kernel",
            x.cols(),
            kernel.width,
            kernel.c_out,
            kernel.c_in
        )));
    }
    Ok(conv_forward(x, &kernel.weight, &kernel.bias, kernel.width, kernel.c_out))
}

pub(crate) fn conv_forward(x: &Mat, w: &[f64], b: &[f64], k: usize, c_out: usize) -> Mat {
    let n = x.rows();
    let c_in = x.cols();
    let half = (k / 2) as isize;
    let mut out = Mat::zeros(n, c_out);
    for i in 0..n {
        let orow = out.row_mut(i);
        orow.copy_from_slice(b);
        for d in 0..k {
            let src = (i as isize + d as isize - half).rem_euclid(n as isize) as usize;
            let xrow = x.row(src);
            let wd = &w[d * c_out * c_in..(d + 1) * c_out * c_in];
            for (o, ov) in orow.iter_mut().enumerate() {
                let wrow = &wd[o * c_in..(o + 1) * c_in];
                *ov += wrow.iter().zip(xrow).map(|(a, b)| a * b).sum::<f64>();
            }
        }
    }
    out
}

/// Backward of [`conv_forward`]: accumulates weight and bias gradients and
/// returns the input gradient.
pub(crate) fn conv_backward(
    x: &Mat,
    w: &[f64],
    k: usize,
    dout: &Mat,
    dw: &mut [f64],
    db: &mut [f64],
) -> Mat {
    let n = x.rows();
    let c_in = x.cols();
    let c_out = dout.cols();
    let half = (k / 2) as isize;
    let mut dx = Mat::zeros(n, c_in);
    for i in 0..n {
        let grow = dout.row(i);
        for (bv, g) in db.iter_mut().zip(grow) {
            *bv += g;
        }
        for d in 0..k {
            let src = (i as isize + d as isize - half).rem_euclid(n as isize) as usize;
            let off = d * c_out * c_in;
            for (o, &g) in grow.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let base = off + o * c_in;
                let xrow = x.row(src);
                for c in 0..c_in {
                    dw[base + c] += g * xrow[c];
                }
                let dxrow = dx.row_mut(src);
                for c in 0..c_in {
                    dxrow[c] += g * w[base + c];
                }
            }
        }
    }
    dx
}

/// Owned attention projections; all matrices are `C x C` (`[in, out]`).
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights {
    pub wq: Vec<f64>,
    pub bq: Vec<f64>,
    pub wk: Vec<f64>,
    pub bk: Vec<f64>,
    pub wv: Vec<f64>,
    pub bv: Vec<f64>,
    pub wo: Vec<f64>,
    pub bo: Vec<f64>,
}

impl AttentionWeights {
    /// Identity projections with zero biases.
    pub fn identity(c: usize) -> Self {
        let eye: Vec<f64> = (0..c * c)
            .map(|i| if i / c == i % c { 1.0 } else { 0.0 })
            .collect();
        Self {
            wq: eye.clone(),
            bq: vec![0.0; c],
            wk: eye.clone(),
            bk: vec![0.0; c],
            wv: eye.clone(),
            bv: vec![0.0; c],
            wo: eye,
            bo: vec![0.0; c],
        }
    }

    fn as_slices(&self) -> AttnRef<'_> {
        AttnRef {
            wq: &self.wq,
            bq: &self.bq,
            wk: &self.wk,
            bk: &self.bk,
            wv: &self.wv,
            bv: &self.bv,
            wo: &self.wo,
            bo: &self.bo,
        }
    }
}

#[derive(Clone, Copy)]
pub(crate) struct AttnRef<'a> {
    pub wq: &'a [f64],
    pub bq: &'a [f64],
    pub wk: &'a [f64],
    pub bk: &'a [f64],
    pub wv: &'a [f64],
    pub bv: &'a [f64],
    pub wo: &'a [f64],
    pub bo: &'a [f64],
}

pub(crate) struct AttnCache {
    q: Mat,
    k: Mat,
    v: Mat,
    /// Softmax weights per head, `N x N`.
    probs: Vec<Mat>,
    /// Concatenated head outputs before the output projection.
    heads_out: Mat,
}

fn check_attention(x: &Mat, heads: usize, w: &AttnRef<'_>) -> Result<()> {
    let c = x.cols();
    if heads == 0 || c % heads != 0 {
        return Err(Error::ShapeMismatch(format!(
            "{c} channels not divisible by {heads} heads"
        )));
    }
    let square = [w.wq, w.wk, w.wv, w.wo];
    let bias = [w.bq, w.bk, w.bv, w.bo];
    if square.iter().any(|m| m.len() != c * c) || bias.iter().any(|b| b.len() != c) {
        return Err(Error::ShapeMismatch(format!(
            "attention projections must be {c}x{c}"
        )));
    }
    Ok(())
}

/// Multi-head scaled dot-product self-attention over the points with a
/// residual connection: `x + concat_h(softmax(Q_h K_h^T / sqrt(d)) V_h) W_o + b_o`.
pub fn multi_head_attention(
    x: &PointFeatures,
    heads: usize,
    weights: &AttentionWeights,
) -> Result<PointFeatures> {
    let w = weights.as_slices();
    check_attention(x, heads, &w)?;
    Ok(attention_forward(x, heads, w).0)
}

/// Output projection of the attention heads, without the residual term.
pub fn attention_heads(
    x: &PointFeatures,
    heads: usize,
    weights: &AttentionWeights,
) -> Result<PointFeatures> {
    let w = weights.as_slices();
    check_attention(x, heads, &w)?;
    let (out, _) = attention_forward(x, heads, w);
    let mut pre = out;
    for r in 0..x.rows() {
        for (p, v) in pre.row_mut(r).iter_mut().zip(x.row(r)) {
            *p -= v;
        }
    }
    Ok(pre)
}

pub(crate) fn attention_forward(x: &Mat, heads: usize, w: AttnRef<'_>) -> (Mat, AttnCache) {
    let n = x.rows();
    let c = x.cols();
    let dh = c / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let mut q = matmul(x, w.wq, c);
    q.add_row_vector(w.bq);
    let mut k = matmul(x, w.wk, c);
    k.add_row_vector(w.bk);
    let mut v = matmul(x, w.wv, c);
    v.add_row_vector(w.bv);

    let mut probs = Vec::with_capacity(heads);
    let mut heads_out = Mat::zeros(n, c);
    let mut logits = vec![0.0; n];
    for h in 0..heads {
        let cols = h * dh..(h + 1) * dh;
        let mut p = Mat::zeros(n, n);
        for i in 0..n {
            let qi = &q.row(i)[cols.clone()];
            for (j, l) in logits.iter_mut().enumerate() {
                let kj = &k.row(j)[cols.clone()];
                *l = qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() * scale;
            }
            let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let prow = p.row_mut(i);
            let mut denom = 0.0;
            for s in 0..n {
                let j = (i + s) % n;
                let e = (logits[j] - m).exp();
                prow[j] = e;
                denom += e;
            }
            let inv = 1.0 / denom;
            for pv in prow.iter_mut() {
                *pv *= inv;
            }
            let orow = &mut heads_out.row_mut(i)[cols.clone()];
            for s in 0..n {
                let j = (i + s) % n;
                let pij = p[(i, j)];
                for (o, vv) in orow.iter_mut().zip(&v.row(j)[cols.clone()]) {
                    *o += pij * vv;
                }
            }
        }
        probs.push(p);
    }
    let mut out = matmul(&heads_out, w.wo, c);
    out.add_row_vector(w.bo);
    out.add_assign(x);
    (
        out,
        AttnCache {
            q,
            k,
            v,
            probs,
            heads_out,
        },
    )
}

/// Gradient sinks for one attention layer, in the order of [`AttnRef`].
pub(crate) struct AttnGrads<'a> {
    pub wq: &'a mut [f64],
    pub bq: &'a mut [f64],
    pub wk: &'a mut [f64],
    pub bk: &'a mut [f64],
    pub wv: &'a mut [f64],
    pub bv: &'a mut [f64],
    pub wo: &'a mut [f64],
    pub bo: &'a mut [f64],
}

/// Backward of [`attention_forward`]; returns the input gradient including
/// the residual path.
pub(crate) fn attention_backward(
    x: &Mat,
    heads: usize,
    w: AttnRef<'_>,
    cache: &AttnCache,
    dout: &Mat,
    g: AttnGrads<'_>,
) -> Mat {
    let n = x.rows();
    let c = x.cols();
    let dh = c / heads;
    let scale = 1.0 / (dh as f64).sqrt();

    matmul_tn_acc(&cache.heads_out, dout, g.wo);
    for (b, s) in g.bo.iter_mut().zip(dout.col_sums()) {
        *b += s;
    }
    let d_heads = matmul_nt(dout, w.wo, c);

    let mut dq = Mat::zeros(n, c);
    let mut dk = Mat::zeros(n, c);
    let mut dv = Mat::zeros(n, c);
    let mut dp_row = vec![0.0; n];
    for h in 0..heads {
        let cols = h * dh..(h + 1) * dh;
        let p = &cache.probs[h];
        for i in 0..n {
            let dhi = &d_heads.row(i)[cols.clone()];
            for (j, dp) in dp_row.iter_mut().enumerate() {
                let vj = &cache.v.row(j)[cols.clone()];
                *dp = dhi.iter().zip(vj).map(|(a, b)| a * b).sum();
                let pij = p[(i, j)];
                for (dvv, d) in dv.row_mut(j)[cols.clone()].iter_mut().zip(dhi) {
                    *dvv += pij * d;
                }
            }
            let dot: f64 = (0..n).map(|j| p[(i, j)] * dp_row[j]).sum();
            for j in 0..n {
                let ds = p[(i, j)] * (dp_row[j] - dot) * scale;
                if ds == 0.0 {
                    continue;
                }
                for t in cols.clone() {
                    dq[(i, t)] += ds * cache.k[(j, t)];
                    dk[(j, t)] += ds * cache.q[(i, t)];
                }
            }
        }
    }

    let mut dx = dout.clone();
    for (d, wmat, gw, gb) in [
        (&dq, w.wq, g.wq, g.bq),
        (&dk, w.wk, g.wk, g.bk),
        (&dv, w.wv, g.wv, g.bv),
    ] {
        matmul_tn_acc(x, d, gw);
        for (b, s) in gb.iter_mut().zip(d.col_sums()) {
            *b += s;
        }
        dx.add_assign(&matmul_nt(d, wmat, c));
    }
    dx
}

/// Per-point recurrent state (`N x C_h` hidden and cell values).
#[derive(Debug, Clone, PartialEq)]
pub struct LamState {
    pub hidden: Mat,
    pub cell: Mat,
}

impl LamState {
    pub fn zeros(n: usize, hidden: usize) -> Self {
        Self {
            hidden: Mat::zeros(n, hidden),
            cell: Mat::zeros(n, hidden),
        }
    }

    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        Self {
            hidden: self.hidden.permute_rows(perm),
            cell: self.cell.permute_rows(perm),
        }
    }
}

/// Owned LSTM weights: `wx` is `[in, 4H]`, `wh` is `[H, 4H]`, gate order
/// input, forget, candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmWeights {
    pub wx: Vec<f64>,
    pub wh: Vec<f64>,
    pub bias: Vec<f64>,
}

pub(crate) struct LstmCache {
    /// Gate activations `[i | f | g | o]`, `N x 4H`.
    gates: Mat,
    tanh_cell: Mat,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One LSTM step applied independently to every point with shared weights.
/// Returns the new hidden values as features together with the new state.
pub fn lstm_step(
    x: &PointFeatures,
    state: &LamState,
    weights: &LstmWeights,
) -> Result<(PointFeatures, LamState)> {
    let h = state.hidden.cols();
    let n = x.rows();
    if state.hidden.rows() != n
        || state.cell.rows() != n
        || state.cell.cols() != h
        || weights.wx.len() != x.cols() * 4 * h
        || weights.wh.len() != h * 4 * h
        || weights.bias.len() != 4 * h
    {
        return Err(Error::ShapeMismatch(format!(
            "LSTM with {n} points, {} inputs, hidden {h}",
            x.cols()
        )));
    }
    let (next, _) = lstm_forward(x, state, &weights.wx, &weights.wh, &weights.bias);
    Ok((next.hidden.clone(), next))
}

pub(crate) fn lstm_forward(
    x: &Mat,
    state: &LamState,
    wx: &[f64],
    wh: &[f64],
    bias: &[f64],
) -> (LamState, LstmCache) {
    let h = state.hidden.cols();
    let n = x.rows();
    let mut gates = matmul(x, wx, 4 * h);
    gates.add_assign(&matmul(&state.hidden, wh, 4 * h));
    gates.add_row_vector(bias);
    let mut cell = Mat::zeros(n, h);
    let mut hidden = Mat::zeros(n, h);
    let mut tanh_cell = Mat::zeros(n, h);
    for r in 0..n {
        let g = gates.row_mut(r);
        for j in 0..h {
            g[j] = sigmoid(g[j]);
            g[h + j] = sigmoid(g[h + j]);
            g[2 * h + j] = g[2 * h + j].tanh();
            g[3 * h + j] = sigmoid(g[3 * h + j]);
        }
        for j in 0..h {
            let c = g[h + j] * state.cell[(r, j)] + g[j] * g[2 * h + j];
            let tc = c.tanh();
            cell[(r, j)] = c;
            tanh_cell[(r, j)] = tc;
            hidden[(r, j)] = g[3 * h + j] * tc;
        }
    }
    (LamState { hidden, cell }, LstmCache { gates, tanh_cell })
}

/// Backward of [`lstm_forward`] with the incoming state held constant.
/// Returns the input gradient.
#[allow(clippy::too_many_arguments)]
pub(crate) fn lstm_backward(
    x: &Mat,
    state: &LamState,
    wx: &[f64],
    cache: &LstmCache,
    dhidden: &Mat,
    dwx: &mut [f64],
    dwh: &mut [f64],
    dbias: &mut [f64],
) -> Mat {
    let h = state.hidden.cols();
    let n = x.rows();
    let mut dgates = Mat::zeros(n, 4 * h);
    for r in 0..n {
        let g = cache.gates.row(r);
        let dg = dgates.row_mut(r);
        for j in 0..h {
            let (i, f, cand, o) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
            let tc = cache.tanh_cell[(r, j)];
            let dh = dhidden[(r, j)];
            let dc = dh * o * (1.0 - tc * tc);
            dg[j] = dc * cand * i * (1.0 - i);
            dg[h + j] = dc * state.cell[(r, j)] * f * (1.0 - f);
            dg[2 * h + j] = dc * i * (1.0 - cand * cand);
            dg[3 * h + j] = dh * tc * o * (1.0 - o);
        }
    }
    matmul_tn_acc(x, &dgates, dwx);
    matmul_tn_acc(&state.hidden, &dgates, dwh);
    for (b, s) in dbias.iter_mut().zip(dgates.col_sums()) {
        *b += s;
    }
    matmul_nt(&dgates, wx, x.cols())
}

/// One pyramid level: stride relative to the input frame and its plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PyramidLevel {
    pub stride: usize,
    pub plane: FrameImage,
}

/// Feature planes ordered coarse to fine.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePyramid {
    levels: Vec<PyramidLevel>,
}

impl FeaturePyramid {
    /// Strides must strictly decrease, except that the finest may repeat.
    pub fn new(levels: Vec<PyramidLevel>) -> Result<Self> {
        let Some(first) = levels.first() else {
            return Err(Error::Config("pyramid needs at least one level".into()));
        };
        let channels = first.plane.channels();
        let finest = levels.iter().map(|l| l.stride).min().unwrap_or(1);
        for pair in levels.windows(2) {
            let (a, b) = (pair[0].stride, pair[1].stride);
            if !(b < a || (a == b && b == finest)) {
                return Err(Error::Config(format!(
                    "pyramid strides must decrease (got {a} then {b})"
                )));
            }
        }
        if levels.iter().any(|l| l.stride == 0 || l.plane.channels() != channels) {
            return Err(Error::Config("pyramid levels must share channels and have positive stride".into()));
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[PyramidLevel] {
        &self.levels
    }

    pub fn channels(&self) -> usize {
        self.levels[0].plane.channels()
    }
}

/// Bilinear feature lookup at `(x / stride, y / stride)`, clamped to the plane.
pub fn sample_point_features(level: &PyramidLevel, ps: &PointSet) -> PointFeatures {
    let c = level.plane.channels();
    let inv = 1.0 / level.stride as f64;
    let mut out = Mat::zeros(ps.len(), c);
    for (i, p) in ps.points().iter().enumerate() {
        level
            .plane
            .sample_clamped(p.x * inv, p.y * inv, out.row_mut(i));
    }
    out
}
