//! The assembled local alignment network and its parameter gradients.
//!
//! Forward pass per call:
//! 1. input = `[features | centered coordinates | cyclic encoding]`;
//! 2. blocks of two ReLU circular convolutions (residual where widths match)
//!    followed by residual multi-head attention;
//! 3. block outputs concatenated and mixed by a 1x1 fusion layer, then the
//!    per-channel max over points is broadcast back onto every point;
//! 4. one LSTM step per point carries temporal state;
//! 5. a linear head emits `(dx, dy)` per point.

use super::layers::{
    attention_backward, attention_forward, conv_backward, conv_forward, cyclic_positional_encoding,
    lstm_backward, lstm_forward, AttnCache, AttnGrads, AttnRef, LamState, LstmCache, PointFeatures,
};
use super::params::{slot, LamParams};
use super::tensor::{matmul, matmul_nt, matmul_tn_acc, Mat};
use crate::error::{Error, Result};
use crate::geometry::{Point, PointSet};

struct BlockCache {
    input: Mat,
    pre1: Mat,
    act1: Mat,
    pre2: Mat,
    act2: Mat,
    attn: AttnCache,
}

/// Intermediate values retained for [`lam_backward`].
pub struct ForwardCache {
    blocks: Vec<BlockCache>,
    concat: Mat,
    argmax: Vec<usize>,
    lstm_in: Mat,
    state_in: LamState,
    lstm: LstmCache,
    hidden: Mat,
    pool_gap: f64,
}

impl ForwardCache {
    /// Distance to the nearest non-differentiable point: the smallest ReLU
    /// pre-activation magnitude or gap between the two largest fused values
    /// of a channel.
    pub fn kink_margin(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.pre1.data().iter().chain(b.pre2.data()))
            .fold(self.pool_gap, |m, v| m.min(v.abs()))
    }
}

/// Network input: sampled features, optional bounding-box-normalized
/// coordinates, and the two cyclic encoding channels (zero when disabled).
pub fn build_input(feats: &PointFeatures, ps: &PointSet, params: &LamParams) -> Result<Mat> {
    let cfg = params.config();
    let n = ps.len();
    if feats.rows() != n || feats.cols() != cfg.in_channels {
        return Err(Error::ShapeMismatch(format!(
            "features are {}x{}, expected {}x{}",
            feats.rows(),
            feats.cols(),
            n,
            cfg.in_channels
        )));
    }
    let (lo, hi) = ps.bounds().ok_or(Error::EmptySet)?;
    let center = Point::new(0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y));
    let half = 0.5 * (hi.x - lo.x).max(hi.y - lo.y);
    let inv = if half > 0.0 { 1.0 / half } else { 1.0 };
    let width = cfg.input_width();
    let mut x = Mat::zeros(n, width);
    for i in 0..n {
        let row = x.row_mut(i);
        row[..cfg.in_channels].copy_from_slice(feats.row(i));
        let mut off = cfg.in_channels;
        if cfg.coord_features {
            let p = ps.points()[i];
            row[off] = (p.x - center.x) * inv;
            row[off + 1] = (p.y - center.y) * inv;
            off += 2;
        }
        if cfg.positional_encoding {
            let e = cyclic_positional_encoding(i, n);
            row[off] = e[0];
            row[off + 1] = e[1];
        }
    }
    Ok(x)
}

fn attn_ref(params: &LamParams, b: usize) -> AttnRef<'_> {
    AttnRef {
        wq: params.block(b, slot::WQ),
        bq: params.block(b, slot::BQ),
        wk: params.block(b, slot::WK),
        bk: params.block(b, slot::BK),
        wv: params.block(b, slot::WV),
        bv: params.block(b, slot::BV),
        wo: params.block(b, slot::WO),
        bo: params.block(b, slot::BO),
    }
}

fn relu(m: &Mat) -> Mat {
    Mat::from_vec(
        m.rows(),
        m.cols(),
        m.data().iter().map(|&v| v.max(0.0)).collect(),
    )
}

/// Per-point offsets and the updated recurrent state.
pub fn lam_forward(
    feats: &PointFeatures,
    ps: &PointSet,
    state: &LamState,
    params: &LamParams,
) -> Result<(Vec<Point>, LamState)> {
    let (offsets, next, _) = lam_forward_cached(feats, ps, state, params)?;
    Ok((offsets, next))
}

/// [`lam_forward`] that also returns the values needed for backpropagation.
pub fn lam_forward_cached(
    feats: &PointFeatures,
    ps: &PointSet,
    state: &LamState,
    params: &LamParams,
) -> Result<(Vec<Point>, LamState, ForwardCache)> {
    let cfg = params.config();
    let n = ps.len();
    let h = cfg.hidden;
    if state.hidden.rows() != n
        || state.hidden.cols() != h
        || state.cell.rows() != n
        || state.cell.cols() != h
    {
        return Err(Error::ShapeMismatch(format!(
            "state is {}x{}, expected {n}x{h}",
            state.hidden.rows(),
            state.hidden.cols()
        )));
    }
    let mut x = build_input(feats, ps, params)?;
    let mut blocks = Vec::with_capacity(cfg.blocks);
    let mut outputs = Vec::with_capacity(cfg.blocks);
    for b in 0..cfg.blocks {
        let pre1 = conv_forward(
            &x,
            params.block(b, slot::CONV1_W),
            params.block(b, slot::CONV1_B),
            cfg.kernel,
            h,
        );
        let mut act1 = relu(&pre1);
        if x.cols() == h {
            act1.add_assign(&x);
        }
        let pre2 = conv_forward(
            &act1,
            params.block(b, slot::CONV2_W),
            params.block(b, slot::CONV2_B),
            cfg.kernel,
            h,
        );
        let mut act2 = relu(&pre2);
        act2.add_assign(&act1);
        let (y, attn) = attention_forward(&act2, cfg.heads, attn_ref(params, b));
        blocks.push(BlockCache {
            input: std::mem::replace(&mut x, y.clone()),
            pre1,
            act1,
            pre2,
            act2,
            attn,
        });
        outputs.push(y);
    }
    let concat = Mat::hcat(&outputs.iter().collect::<Vec<_>>());
    let mut fused = matmul(&concat, params.tail(slot::FUSION_W), h);
    fused.add_row_vector(params.tail(slot::FUSION_B));

    let mut argmax = vec![0usize; h];
    let mut pool_gap = f64::INFINITY;
    for (c, am) in argmax.iter_mut().enumerate() {
        for i in 1..n {
            if fused[(i, c)] > fused[(*am, c)] {
                *am = i;
            }
        }
        for i in 0..n {
            if i != *am {
                pool_gap = pool_gap.min(fused[(*am, c)] - fused[(i, c)]);
            }
        }
    }
    let lstm_in = Mat::from_fn(n, 2 * h, |r, c| {
        if c < h {
            fused[(r, c)]
        } else {
            fused[(argmax[c - h], c - h)]
        }
    });
    let (next, lstm) = lstm_forward(
        &lstm_in,
        state,
        params.tail(slot::LSTM_WX),
        params.tail(slot::LSTM_WH),
        params.tail(slot::LSTM_B),
    );
    let mut out = matmul(&next.hidden, params.tail(slot::HEAD_W), 2);
    out.add_row_vector(params.tail(slot::HEAD_B));
    let offsets = (0..n).map(|i| Point::new(out[(i, 0)], out[(i, 1)])).collect();
    let cache = ForwardCache {
        blocks,
        concat,
        argmax,
        lstm_in,
        state_in: state.clone(),
        lstm,
        hidden: next.hidden.clone(),
        pool_gap,
    };
    Ok((offsets, next, cache))
}

/// Gradient of `sum_i <d_offsets[i], offsets[i]>` with respect to every
/// parameter, holding the input features and incoming state fixed.
pub fn lam_backward(params: &LamParams, cache: &ForwardCache, d_offsets: &[Point]) -> LamParams {
    let cfg = params.config();
    let h = cfg.hidden;
    let n = cache.hidden.rows();
    let mut grads = params.zeros_like();
    let dout = Mat::from_fn(n, 2, |r, c| if c == 0 { d_offsets[r].x } else { d_offsets[r].y });

    matmul_tn_acc(&cache.hidden, &dout, grads.tail_mut(slot::HEAD_W));
    for (b, s) in grads.tail_mut(slot::HEAD_B).iter_mut().zip(dout.col_sums()) {
        *b += s;
    }
    let dhidden = matmul_nt(&dout, params.tail(slot::HEAD_W), h);

    let mut dwx = vec![0.0; 2 * h * 4 * h];
    let mut dwh = vec![0.0; h * 4 * h];
    let mut dbl = vec![0.0; 4 * h];
    let dz = lstm_backward(
        &cache.lstm_in,
        &cache.state_in,
        params.tail(slot::LSTM_WX),
        &cache.lstm,
        &dhidden,
        &mut dwx,
        &mut dwh,
        &mut dbl,
    );
    grads.tail_mut(slot::LSTM_WX).copy_from_slice(&dwx);
    grads.tail_mut(slot::LSTM_WH).copy_from_slice(&dwh);
    grads.tail_mut(slot::LSTM_B).copy_from_slice(&dbl);

    let mut dfused = dz.col_slice(0, h);
    for c in 0..h {
        let g: f64 = (0..n).map(|r| dz[(r, h + c)]).sum();
        dfused[(cache.argmax[c], c)] += g;
    }
    matmul_tn_acc(&cache.concat, &dfused, grads.tail_mut(slot::FUSION_W));
    for (b, s) in grads.tail_mut(slot::FUSION_B).iter_mut().zip(dfused.col_sums()) {
        *b += s;
    }
    let dconcat = matmul_nt(&dfused, params.tail(slot::FUSION_W), cfg.blocks * h);

    let mut carry: Option<Mat> = None;
    for b in (0..cfg.blocks).rev() {
        let bc = &cache.blocks[b];
        let mut dy = dconcat.col_slice(b * h, h);
        if let Some(c) = carry.take() {
            dy.add_assign(&c);
        }
        let dact2 = {
            let [wq, bq, wk, bk, wv, bv, wo, bo] = block_slots_mut(&mut grads, b);
            attention_backward(
                &bc.act2,
                cfg.heads,
                attn_ref(params, b),
                &bc.attn,
                &dy,
                AttnGrads {
                    wq,
                    bq,
                    wk,
                    bk,
                    wv,
                    bv,
                    wo,
                    bo,
                },
            )
        };
        let dpre2 = relu_backward(&bc.pre2, &dact2);
        let (dw2, db2) = split_conv_grads(&mut grads, b, slot::CONV2_W, slot::CONV2_B);
        let mut dact1 = conv_backward(&bc.act1, params.block(b, slot::CONV2_W), cfg.kernel, &dpre2, dw2, db2);
        dact1.add_assign(&dact2);
        let dpre1 = relu_backward(&bc.pre1, &dact1);
        let (dw1, db1) = split_conv_grads(&mut grads, b, slot::CONV1_W, slot::CONV1_B);
        let mut dx = conv_backward(&bc.input, params.block(b, slot::CONV1_W), cfg.kernel, &dpre1, dw1, db1);
        if bc.input.cols() == h {
            dx.add_assign(&dact1);
        }
        carry = Some(dx);
    }
    grads
}

fn relu_backward(pre: &Mat, dact: &Mat) -> Mat {
    Mat::from_vec(
        pre.rows(),
        pre.cols(),
        pre.data()
            .iter()
            .zip(dact.data())
            .map(|(&p, &d)| if p > 0.0 { d } else { 0.0 })
            .collect(),
    )
}

fn split_conv_grads(g: &mut LamParams, b: usize, w: usize, bias: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert_eq!(bias, w + 1);
    let base = b * super::params::PER_BLOCK + w;
    let (left, right) = g.tensors_mut().split_at_mut(base + 1);
    (&mut left[base].data, &mut right[0].data)
}

fn block_slots_mut(g: &mut LamParams, b: usize) -> [&mut [f64]; 8] {
    let base = b * super::params::PER_BLOCK + slot::WQ;
    let tensors = &mut g.tensors_mut()[base..base + 8];
    let mut it = tensors.iter_mut().map(|t| t.data.as_mut_slice());
    std::array::from_fn(|_| it.next().expect("eight attention tensors"))
}
